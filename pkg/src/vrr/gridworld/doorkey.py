"""Procedural DoorKey levels: a dividing wall with one locked door, one key,
and a goal, in the canonical orientation or rotated whole-board."""

from __future__ import annotations

import random

import numpy as np

from ..errors import GenerationError
from . import objects as obj
from .level import Level, rotate_level

ROTATIONS = (0, 90, 180, 270)


def generate_doorkey(seed: int, size: int, rotation: int = 0) -> Level:
    """Canonical layout: vertical wall, key and agent on the left, goal at
    bottom-right. `rotation` rotates the whole board and the initial heading."""
    if size < 5:
        raise GenerationError(f"size {size} < 5")
    if rotation not in ROTATIONS:
        raise GenerationError(f"rotation must be one of {ROTATIONS}")

    rng = random.Random(f"doorkey:{seed}:{size}")
    cells = np.full((size, size), obj.FLOOR, dtype=np.uint8)
    cells[0, :] = cells[-1, :] = obj.WALL
    cells[:, 0] = cells[:, -1] = obj.WALL

    wall_col = rng.randrange(2, size - 2)
    cells[:, wall_col] = obj.WALL
    door_row = rng.randrange(1, size - 1)
    cells[door_row, wall_col] = obj.DOOR_CLOSED
    cells[size - 2, size - 2] = obj.GOAL

    left = [(r, c) for r in range(1, size - 1) for c in range(1, wall_col)]
    key_pos, agent_pos = rng.sample(left, 2)
    cells[key_pos] = obj.KEY
    direction = rng.randrange(4)
    cells[agent_pos] = obj.agent_sprite(direction, False)

    level = Level(kind=obj.DOORKEY, cells=cells, agent_pos=agent_pos,
                  agent_dir=direction, seed=seed)
    if rotation:
        level = rotate_level(level, rotation // 90)
    return level
