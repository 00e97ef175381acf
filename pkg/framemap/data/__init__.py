"""Packaged frame library, scenarios and suite definitions."""
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent


def frames_path(name: str = "household.frames") -> Path:
    return DATA_DIR / "frames" / name


def scenario_path(name: str) -> Path:
    return DATA_DIR / "scenarios" / name


def suite_path(name: str = "household.yaml") -> Path:
    return DATA_DIR / "suites" / name
