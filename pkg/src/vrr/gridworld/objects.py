"""Object ids, action sets, sprites, and text glyphs for the two grid games.

Ids are small dense integers so grids fit in uint8 arrays. Each object id owns
a fixed sprite bitmap; sprites are deterministic pseudo-random textures so that
any slicing other than the true sprite grid multiplies the number of distinct
tiles instead of collapsing it (solid-colour sprites would defeat cell-size
inference).
"""

from __future__ import annotations

import numpy as np

SOKOBAN = "sokoban"
DOORKEY = "doorkey"

# --- Sokoban cells ---
WALL = 0
FLOOR = 1
TARGET = 2
BOX = 3
BOX_ON_TARGET = 4
AGENT = 5
AGENT_ON_TARGET = 6

SOKOBAN_IDS = (WALL, FLOOR, TARGET, BOX, BOX_ON_TARGET, AGENT, AGENT_ON_TARGET)

# --- DoorKey cells (WALL/FLOOR shared) ---
KEY = 2
DOOR_CLOSED = 3
DOOR_OPEN = 4
GOAL = 5
AGENT_N, AGENT_E, AGENT_S, AGENT_W = 6, 7, 8, 9
AGENT_KEY_N, AGENT_KEY_E, AGENT_KEY_S, AGENT_KEY_W = 10, 11, 12, 13

DOORKEY_IDS = tuple(range(14))

AGENT_SPRITES = (AGENT_N, AGENT_E, AGENT_S, AGENT_W)
AGENT_KEY_SPRITES = (AGENT_KEY_N, AGENT_KEY_E, AGENT_KEY_S, AGENT_KEY_W)

# --- Actions (enumeration order is part of the contract; ids are stable) ---
SOKOBAN_ACTIONS = ("up", "down", "left", "right")
UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3
SOKOBAN_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1))

DOORKEY_ACTIONS = ("turn_left", "turn_right", "forward", "pickup", "toggle")
TURN_LEFT, TURN_RIGHT, FORWARD, PICKUP, TOGGLE = 0, 1, 2, 3, 4

# Headings: N, E, S, W in turn-right order.
N, E, S, W = 0, 1, 2, 3
DIR_DELTAS = ((-1, 0), (0, 1), (1, 0), (0, -1))
DIR_NAMES = ("N", "E", "S", "W")

# Sentinel heading for games without one.
NO_DIR = -1


def action_names(kind: str) -> tuple[str, ...]:
    return SOKOBAN_ACTIONS if kind == SOKOBAN else DOORKEY_ACTIONS


def n_actions(kind: str) -> int:
    return len(action_names(kind))


def object_ids(kind: str) -> tuple[int, ...]:
    return SOKOBAN_IDS if kind == SOKOBAN else DOORKEY_IDS


def agent_sprite(direction: int, carrying: bool) -> int:
    return (AGENT_KEY_SPRITES if carrying else AGENT_SPRITES)[direction]


def sprite_direction(obj_id: int) -> int | None:
    """Heading encoded in a DoorKey agent sprite id, if any."""
    if obj_id in AGENT_SPRITES:
        return AGENT_SPRITES.index(obj_id)
    if obj_id in AGENT_KEY_SPRITES:
        return AGENT_KEY_SPRITES.index(obj_id)
    return None


# Text glyphs for level files (one char per cell).
SOKOBAN_CHARS = {
    WALL: "#", FLOOR: " ", TARGET: ".", BOX: "$",
    BOX_ON_TARGET: "*", AGENT: "@", AGENT_ON_TARGET: "+",
}
DOORKEY_CHARS = {
    WALL: "#", FLOOR: " ", KEY: "K", DOOR_CLOSED: "D", DOOR_OPEN: "O",
    GOAL: "G", AGENT_N: "^", AGENT_E: ">", AGENT_S: "v", AGENT_W: "<",
    AGENT_KEY_N: "n", AGENT_KEY_E: "e", AGENT_KEY_S: "s", AGENT_KEY_W: "w",
}


def char_table(kind: str) -> dict[int, str]:
    return SOKOBAN_CHARS if kind == SOKOBAN else DOORKEY_CHARS


# Base colours make sprites recognisable to humans; the textured remainder is
# what makes cell-size inference well-posed.
_BASE_COLORS = {
    (SOKOBAN, WALL): (90, 90, 90), (SOKOBAN, FLOOR): (210, 210, 210),
    (SOKOBAN, TARGET): (240, 120, 120), (SOKOBAN, BOX): (180, 130, 50),
    (SOKOBAN, BOX_ON_TARGET): (220, 170, 40), (SOKOBAN, AGENT): (60, 180, 60),
    (SOKOBAN, AGENT_ON_TARGET): (30, 140, 90),
    (DOORKEY, WALL): (90, 90, 90), (DOORKEY, FLOOR): (210, 210, 210),
    (DOORKEY, KEY): (230, 210, 50), (DOORKEY, DOOR_CLOSED): (150, 90, 30),
    (DOORKEY, DOOR_OPEN): (200, 170, 120), (DOORKEY, GOAL): (70, 200, 70),
    (DOORKEY, AGENT_N): (200, 40, 40), (DOORKEY, AGENT_E): (40, 40, 200),
    (DOORKEY, AGENT_S): (200, 40, 200), (DOORKEY, AGENT_W): (40, 160, 200),
    (DOORKEY, AGENT_KEY_N): (240, 110, 40), (DOORKEY, AGENT_KEY_E): (110, 110, 240),
    (DOORKEY, AGENT_KEY_S): (240, 110, 240), (DOORKEY, AGENT_KEY_W): (110, 200, 240),
}

_GAME_CODE = {SOKOBAN: 1, DOORKEY: 2}
_sprite_cache: dict[tuple[str, int, int], np.ndarray] = {}


def sprite(kind: str, obj_id: int, px: int) -> np.ndarray:
    """Fixed (px, px, 3) uint8 bitmap for one object type."""
    key = (kind, obj_id, px)
    cached = _sprite_cache.get(key)
    if cached is None:
        rng = np.random.default_rng((_GAME_CODE[kind] * 1009 + obj_id) * 7919 + px)
        base = np.array(_BASE_COLORS[(kind, obj_id)], dtype=np.int16)
        noise = rng.integers(-70, 71, size=(px, px, 3), dtype=np.int16)
        tile = np.clip(base[None, None, :] + noise, 0, 255).astype(np.uint8)
        # Pin one pixel to the pure base colour so even 1px sprites stay distinct.
        tile[0, 0] = np.clip(base, 0, 255).astype(np.uint8)
        cached = _sprite_cache[key] = tile
    return cached


def sprite_table(kind: str, px: int) -> np.ndarray:
    """Stacked sprites indexed by object id, shape (n_ids, px, px, 3)."""
    tiles = np.stack([sprite(kind, i, px) for i in object_ids(kind)])
    flat = {t.tobytes() for t in tiles}
    if len(flat) != len(tiles):
        raise ValueError(f"sprite collision for {kind} at {px}px")
    return tiles
