"""Level value type, board rotation, and the plain-text level format."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import FormatError, LocateError
from . import objects as obj


@dataclass(frozen=True)
class Level:
    """Immutable snapshot of one game board.

    `cells` is a (height, width) uint8 grid of object ids. The grid alone
    determines agent position and heading; `agent_pos`/`agent_dir` are caches
    kept consistent by the step functions. `agent_dir` is `objects.NO_DIR`
    for Sokoban.
    """

    kind: str
    cells: np.ndarray
    agent_pos: tuple[int, int]
    agent_dir: int
    seed: int
    n_boxes: int = 0
    rotation: int = 0
    steps: int = 0
    done: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def step_cap(self) -> int:
        return 10 * self.width * self.height

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Level)
            and self.kind == other.kind
            and self.agent_pos == other.agent_pos
            and self.agent_dir == other.agent_dir
            and np.array_equal(self.cells, other.cells)
        )

    def __hash__(self) -> int:
        return hash((self.kind, self.cells.tobytes(), self.agent_dir))

    def with_steps(self, steps: int, done: bool = False) -> "Level":
        return replace(self, steps=steps, done=done)


def find_agent(kind: str, cells: np.ndarray) -> tuple[tuple[int, int], int]:
    """Locate the unique agent cell, returning ((row, col), heading)."""
    if kind == obj.SOKOBAN:
        mask = (cells == obj.AGENT) | (cells == obj.AGENT_ON_TARGET)
    else:
        mask = (cells >= obj.AGENT_N) & (cells <= obj.AGENT_KEY_W)
    rows, cols = np.nonzero(mask)
    if len(rows) != 1:
        raise LocateError(f"expected exactly one agent cell, found {len(rows)}")
    r, c = int(rows[0]), int(cols[0])
    if kind == obj.SOKOBAN:
        return (r, c), obj.NO_DIR
    return (r, c), obj.sprite_direction(int(cells[r, c]))


# np.rot90 is counter-clockwise; headings rotate N -> W -> S -> E.
_CCW_DIR = {obj.N: obj.W, obj.W: obj.S, obj.S: obj.E, obj.E: obj.N}


def rotate_cells_ccw(kind: str, cells: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(np.rot90(cells))
    if kind == obj.DOORKEY:
        remap = out.copy()
        for sprites in (obj.AGENT_SPRITES, obj.AGENT_KEY_SPRITES):
            for d, sid in enumerate(sprites):
                remap[out == sid] = sprites[_CCW_DIR[d]]
        out = remap
    return out


def rotate_level(level: Level, quarter_turns: int) -> Level:
    """Rotate the whole board (and heading) by 90° CCW `quarter_turns` times."""
    cells = level.cells
    for _ in range(quarter_turns % 4):
        cells = rotate_cells_ccw(level.kind, cells)
    pos, d = find_agent(level.kind, cells)
    return replace(level, cells=cells, agent_pos=pos, agent_dir=d,
                   rotation=(level.rotation + 90 * quarter_turns) % 360)


def rotate_action(kind: str, action: int, quarter_turns: int) -> int:
    """Action that corresponds to `action` after the board rotates CCW.

    DoorKey actions are body-relative and unchanged; Sokoban moves follow the
    board: up -> left -> down -> right.
    """
    if kind == obj.DOORKEY:
        return action
    cycle = (obj.UP, obj.LEFT, obj.DOWN, obj.RIGHT)
    return cycle[(cycle.index(action) + quarter_turns) % 4]


def to_text(level: Level) -> str:
    """Serialize as `kind seed width height` header plus one char per cell."""
    table = obj.char_table(level.kind)
    lines = [f"{level.kind} {level.seed} {level.width} {level.height}"]
    for row in level.cells:
        lines.append("".join(table[int(v)] for v in row))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Level:
    lines = text.rstrip("\n").split("\n")
    try:
        kind, seed, width, height = lines[0].split()
        width, height = int(width), int(height)
        seed = int(seed)
    except (ValueError, IndexError) as e:
        raise FormatError(f"bad level header: {lines[:1]}") from e
    if kind not in (obj.SOKOBAN, obj.DOORKEY):
        raise FormatError(f"unknown game kind {kind!r}")
    if len(lines) != height + 1:
        raise FormatError(f"expected {height} rows, got {len(lines) - 1}")
    inverse = {ch: i for i, ch in obj.char_table(kind).items()}
    cells = np.zeros((height, width), dtype=np.uint8)
    for r, line in enumerate(lines[1:]):
        if len(line) != width:
            raise FormatError(f"row {r} has width {len(line)}, expected {width}")
        for c, ch in enumerate(line):
            if ch not in inverse:
                raise FormatError(f"unknown cell char {ch!r}")
            cells[r, c] = inverse[ch]
    pos, d = find_agent(kind, cells)
    n_boxes = int(np.sum((cells == obj.BOX) | (cells == obj.BOX_ON_TARGET))) if kind == obj.SOKOBAN else 0
    return Level(kind=kind, cells=cells, agent_pos=pos, agent_dir=d, seed=seed, n_boxes=n_boxes)
