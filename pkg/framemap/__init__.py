"""framemap: semantic frame localization in partially observed maps."""

__version__ = "0.1.0"

from framemap.frames import FrameLibrary, parse_command, parse_frame_library
from framemap.inference import BeliefState
from framemap.planner import execute_frame
from framemap.world import World, load_scenario

__all__ = [
    "__version__",
    "BeliefState",
    "FrameLibrary",
    "World",
    "execute_frame",
    "load_scenario",
    "parse_command",
    "parse_frame_library",
]
