"""Procedural Sokoban and DoorKey environments with pixel rendering."""

from . import objects
from .doorkey import ROTATIONS, generate_doorkey
from .dynamics import SPARSE, RewardScheme, StepOutcome, step
from .level import (Level, find_agent, from_text, rotate_action, rotate_level,
                    to_text)
from .render import load_ppm, render, save_ppm
from .sokoban import generate_sokoban
from .solver import is_solvable, reachable_states, solve

__all__ = [
    "objects", "Level", "StepOutcome", "RewardScheme", "SPARSE", "step",
    "generate_sokoban", "generate_doorkey", "ROTATIONS", "render",
    "save_ppm", "load_ppm", "to_text", "from_text", "rotate_level",
    "rotate_action", "find_agent", "solve", "is_solvable", "reachable_states",
]


def generate(kind: str, seed: int, size: int, n_boxes: int = 1, rotation: int = 0) -> Level:
    """Dispatching generator used by the harness and server."""
    if kind == objects.SOKOBAN:
        return generate_sokoban(seed, size, n_boxes)
    if kind == objects.DOORKEY:
        return generate_doorkey(seed, size, rotation)
    raise ValueError(f"unknown game kind {kind!r}")
