"""Procedural Sokoban levels via reverse play.

Boxes start on their targets and are pulled off by a random walk; replaying
the walk backwards is a valid push solution, so every emitted level is
solvable by construction.
"""

from __future__ import annotations

import random

import numpy as np

from ..errors import GenerationError
from . import objects as obj
from .level import Level

_ATTEMPTS = 60


def generate_sokoban(seed: int, size: int, n_boxes: int) -> Level:
    if size < 5:
        raise GenerationError(f"size {size} < 5")
    if not 1 <= n_boxes <= (size - 2) ** 2 // 4:
        raise GenerationError(f"n_boxes {n_boxes} out of range for size {size}")

    rng = random.Random(f"sokoban:{seed}:{size}:{n_boxes}")
    fallback = None
    for _ in range(_ATTEMPTS):
        result = _attempt(rng, size, n_boxes)
        if result is None:
            continue
        cells, agent, pulls, all_off = result
        level = Level(kind=obj.SOKOBAN, cells=cells, agent_pos=agent,
                      agent_dir=obj.NO_DIR, seed=seed, n_boxes=n_boxes,
                      meta={"pulls": pulls})
        if all_off:
            return level
        fallback = fallback or level
    if fallback is not None:
        return fallback
    raise GenerationError(f"no solvable layout for seed={seed} size={size} boxes={n_boxes}")


def _attempt(rng: random.Random, size: int, n_boxes: int):
    cells = np.full((size, size), obj.FLOOR, dtype=np.uint8)
    cells[0, :] = cells[-1, :] = obj.WALL
    cells[:, 0] = cells[:, -1] = obj.WALL

    interior = [(r, c) for r in range(1, size - 1) for c in range(1, size - 1)]

    # Sprinkle interior walls on larger boards, keeping the floor connected.
    if size >= 7:
        for _ in range(rng.randrange(0, size - 4)):
            r, c = rng.choice(interior)
            old = cells[r, c]
            cells[r, c] = obj.WALL
            if not _floor_connected(cells):
                cells[r, c] = old

    floor = [(r, c) for r, c in interior if cells[r, c] == obj.FLOOR]
    if len(floor) < 2 * n_boxes + 1:
        return None

    targets = rng.sample(floor, n_boxes)
    for t in targets:
        cells[t] = obj.BOX_ON_TARGET
    target_set = set(targets)

    starts = [p for p in floor if p not in target_set]
    agent = rng.choice(starts)
    boxes = set(targets)

    # Random pull walk: the agent wanders; stepping away from an adjacent box
    # usually drags it along. Each pull is recorded as (box row, box col,
    # pull direction index) for constructive solvability replay: pushing the
    # boxes back in reverse order undoes the walk.
    pulls: list[tuple[int, int, int]] = []
    for _ in range(8 * size * size):
        d = rng.randrange(4)
        dr, dc = obj.SOKOBAN_DELTAS[d]
        nr, nc = agent[0] + dr, agent[1] + dc
        if cells[nr, nc] != obj.FLOOR and (nr, nc) not in target_set:
            continue
        if (nr, nc) in boxes:
            continue
        behind = (agent[0] - dr, agent[1] - dc)
        if behind in boxes and rng.random() < 0.75:
            boxes.discard(behind)
            boxes.add(agent)
            pulls.append((agent[0], agent[1], d))
        agent = (nr, nc)

    if not pulls:
        return None

    out = cells.copy()
    out[out == obj.BOX_ON_TARGET] = obj.TARGET
    for t in target_set:
        out[t] = obj.TARGET
    for b in boxes:
        out[b] = obj.BOX_ON_TARGET if b in target_set else obj.BOX
    if agent in boxes or agent in target_set:
        # Starting on a target would open the episode with an agent sprite a
        # fresh perceiver has no transition to adopt from.
        return None
    out[agent] = obj.AGENT

    n_plain = int(np.sum(out == obj.BOX))
    if n_plain == 0:
        return None  # already solved
    return out, agent, pulls, n_plain == n_boxes


def _floor_connected(cells: np.ndarray) -> bool:
    free = list(zip(*np.nonzero(cells != obj.WALL)))
    if not free:
        return False
    seen = {free[0]}
    stack = [free[0]]
    while stack:
        r, c = stack.pop()
        for dr, dc in obj.SOKOBAN_DELTAS:
            n = (r + dr, c + dc)
            if n not in seen and cells[n] != obj.WALL:
                seen.add(n)
                stack.append(n)
    return len(seen) == len(free)
