"""Pixels to object grids: cell-size inference, tokenization, agent discovery.

Nothing here knows the games' semantics. The sprite grid is recovered by
counting distinct tiles, object ids are assigned first-seen, and the agent is
found as the object whose position tracks every observed change.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, IdentificationError, LocateError


class ObjectVocabulary:
    """First-seen bijection between distinct sprite tiles and dense ids."""

    def __init__(self, cell_size: int):
        self.cell_size = cell_size
        self.tiles: list[bytes] = []
        self._index: dict[bytes, int] = {}

    def __len__(self) -> int:
        return len(self.tiles)

    def id_of(self, tile: bytes, extend: bool = True) -> int:
        idx = self._index.get(tile)
        if idx is None:
            if not extend:
                raise KeyError("tile not in vocabulary")
            idx = len(self.tiles)
            self.tiles.append(tile)
            self._index[tile] = idx
        return idx

    def tile_of(self, obj_id: int) -> bytes:
        return self.tiles[obj_id]

    def tile_sha(self, obj_id: int) -> str:
        return hashlib.sha256(self.tiles[obj_id]).hexdigest()

    def content_hash(self) -> str:
        """Order-sensitive digest of the whole vocabulary."""
        h = hashlib.sha256(str(self.cell_size).encode())
        for t in self.tiles:
            h.update(t)
        return h.hexdigest()

    def dump(self) -> str:
        """One line per id: `id  sha256  width  height`."""
        c = self.cell_size
        lines = [f"{i}  {self.tile_sha(i)}  {c}  {c}" for i in range(len(self.tiles))]
        return "\n".join(lines) + ("\n" if lines else "")


def _tile_bytes(image: np.ndarray, cell: int) -> np.ndarray:
    h, w = image.shape[:2]
    view = image.reshape(h // cell, cell, w // cell, cell, 3).swapaxes(1, 2)
    return np.ascontiguousarray(view)


def infer_cell_size(images: list[np.ndarray]) -> int:
    """Sprite size = the tiling with the fewest distinct tiles pooled over all
    images, among tilings that reuse at least one tile; degenerate tilings
    where every tile is unique only win ties. Ties break to the largest size.
    """
    if not images:
        raise ValueError("need at least one image")
    h, w = images[0].shape[:2]
    for img in images:
        if img.shape[:2] != (h, w):
            raise ValueError("images must share dimensions")
    candidates = [c for c in range(4, min(h, w) + 1) if h % c == 0 and w % c == 0]
    if not candidates:
        raise FormatError(f"no divisor >= 4 for image of {h}x{w}")

    stats: dict[int, tuple[int, int]] = {}  # c -> (distinct, slots)
    for c in candidates:
        seen: set[bytes] = set()
        slots = 0
        for img in images:
            tiles = _tile_bytes(img, c)
            slots += tiles.shape[0] * tiles.shape[1]
            for row in tiles:
                for t in row:
                    seen.add(t.tobytes())
        stats[c] = (len(seen), slots)

    compressive = [c for c in candidates if stats[c][0] < stats[c][1]]
    pool = compressive if compressive else candidates
    best = min(stats[c][0] for c in pool)
    return max(c for c in candidates if stats[c][0] == best)


def count_tile_types(images: list[np.ndarray], cell: int,
                     offset: tuple[int, int] = (0, 0)) -> int:
    """Distinct tiles under a (possibly shifted) slicing. The shifted form
    exists to demonstrate that misaligned grids explode the type count; the
    inference loop itself only considers aligned divisors."""
    seen: set[bytes] = set()
    for img in images:
        h, w = img.shape[:2]
        for r in range(offset[0], h - cell + 1, cell):
            for c in range(offset[1], w - cell + 1, cell):
                seen.add(img[r : r + cell, c : c + cell].tobytes())
    return len(seen)


def tokenize(image: np.ndarray, cell_size: int, vocab: ObjectVocabulary) -> np.ndarray:
    """Map an image to a grid of vocabulary ids, extending the vocabulary on
    first sight of a tile."""
    h, w = image.shape[:2]
    if h % cell_size or w % cell_size:
        raise ValueError(f"cell size {cell_size} does not divide {h}x{w}")
    tiles = _tile_bytes(image, cell_size)
    gh, gw = tiles.shape[:2]
    grid = np.zeros((gh, gw), dtype=np.uint8)
    for r in range(gh):
        for c in range(gw):
            grid[r, c] = vocab.id_of(tiles[r, c].tobytes())
    return grid


@dataclass(frozen=True)
class AgentIdentity:
    """The controllable object: possibly several sprite ids (one per heading
    or carried-item variant) grouped into one identity."""

    ids: frozenset[int]
    primary: int
    # sprite id -> its consistent displacement per action step, when one exists
    facings: dict[int, tuple[int, int]] = field(default_factory=dict, compare=False)

    def __contains__(self, obj_id: int) -> bool:
        return obj_id in self.ids


def identify_agent(transitions: list[tuple[np.ndarray, np.ndarray]]) -> AgentIdentity:
    """Find the object (or orientation-variant group) present in the changed
    region of every multi-cell change.

    Single-cell changes are in-place transformations; their before/after ids
    are merged into one identity (this is what groups a turning agent's
    sprites). Ties break toward the object that moves in the most transitions,
    then toward the fewest occupied cells, then the smallest id.
    """
    diffs = []
    for s, s2 in transitions:
        if s.shape != s2.shape:
            raise ValueError("transition grids must share dimensions")
        mask = s != s2
        if mask.any():
            diffs.append((s, s2, mask))
    if not diffs:
        raise IdentificationError("no transition with a non-empty change mask")

    parent: dict[int, int] = {}

    def find(x: int) -> int:
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        parent[find(a)] = find(b)

    # Frame bitmasks per id: sprites of one entity never share a frame, which
    # rules out merging the agent with e.g. the floor tile when its sprite
    # changes while moving.
    frames_of: dict[int, int] = {}
    frame_idx = 0
    for s, s2, _ in diffs:
        for grid in (s, s2):
            for v in np.unique(grid):
                frames_of[int(v)] = frames_of.get(int(v), 0) | (1 << frame_idx)
            frame_idx += 1

    all_ids: set[int] = set()
    infos = []
    for s, s2, mask in diffs:
        before = {int(v) for v in s[mask]}
        after = {int(v) for v in s2[mask]}
        present = before | after
        all_ids |= present
        rows, cols = np.nonzero(mask)
        for r, c in zip(rows, cols):
            a, b = int(s[r, c]), int(s2[r, c])
            # In-place transform: neither id has a movement explanation, and
            # the two sprites never appear in one frame together.
            if a not in after and b not in before:
                if not (frames_of.get(a, 0) & frames_of.get(b, 0)):
                    union(a, b)
        infos.append((s, s2, mask, present))

    groups: dict[int, set[int]] = {}
    for i in sorted(all_ids):
        groups.setdefault(find(i), set()).add(i)

    multi = [t for t in infos if int(t[2].sum()) >= 2]
    universe = multi if multi else infos
    covering = [g for g in groups.values()
                if all(g & present for _, _, _, present in universe)]
    if not covering:
        raise IdentificationError("no object occurs in every changed region")

    def moves(group: set[int]) -> int:
        n = 0
        for s, s2, _, _ in infos:
            for i in group:
                if not np.array_equal(s == i, s2 == i):
                    n += 1
                    break
        return n

    def occupancy(group: set[int]) -> float:
        total = sum(int((s == i).sum()) for s, _, _, _ in infos for i in group)
        return total / len(infos)

    best = sorted(covering, key=lambda g: (-moves(g), occupancy(g), min(g)))[0]
    facings = _displacements(infos, best)
    return AgentIdentity(ids=frozenset(best), primary=min(best), facings=facings)


def _displacements(infos, group: set[int]) -> dict[int, tuple[int, int]]:
    """Per sprite id, the unique single-cell displacement it exhibits, if any."""
    seen: dict[int, set[tuple[int, int]]] = {i: set() for i in group}
    for s, s2, mask, _ in infos:
        for i in group:
            src = np.argwhere((s == i) & mask)
            dst = np.argwhere((s2 == i) & mask)
            if len(src) == 1 and len(dst) == 1:
                d = tuple(int(v) for v in (dst[0] - src[0]))
                if d != (0, 0):
                    seen[i].add(d)
    return {i: next(iter(ds)) for i, ds in seen.items() if len(ds) == 1}


def locate_agent(grid: np.ndarray, agent: AgentIdentity) -> tuple[int, int, int]:
    """Position of the unique agent cell, returning (row, col, sprite id)."""
    mask = np.isin(grid, list(agent.ids))
    rows, cols = np.nonzero(mask)
    if len(rows) != 1:
        raise LocateError(f"expected one agent cell, found {len(rows)}")
    r, c = int(rows[0]), int(cols[0])
    return r, c, int(grid[r, c])
