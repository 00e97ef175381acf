"""Definition-language parsers (frame libraries; shared grammar for scenarios)."""
from .library import parse_frame_library, serialize_frame_library

__all__ = ["parse_frame_library", "serialize_frame_library"]
