"""Ground-truth breadth-first search over the real simulator.

This is the independent oracle used by level generation checks, demonstration
scripting, and the tests that pin the learned world model against reality.
It knows nothing about rewrite rules.
"""

from __future__ import annotations

from collections import deque
from typing import Callable

from .dynamics import step
from .level import Level
from . import objects as obj


def solve(level: Level, goal: Callable[[Level, float], bool] | None = None,
          max_nodes: int = 2_000_000,
          actions: tuple[int, ...] | None = None) -> list[int] | None:
    """Shortest action sequence reaching `goal` (default: a winning step).

    Returns None when the goal is unreachable within `max_nodes` expansions.
    `actions` restricts the search to a subset of the action set. The search
    treats step-capped copies of one board as the same state, so results
    reflect reachability, not the episode clock.
    """
    if goal is None:
        goal = lambda lvl, reward: reward > 0 and lvl.done
    base = level.with_steps(0)
    seen = {_key(base)}
    queue = deque([(base, [])])
    if actions is None:
        actions = tuple(range(obj.n_actions(level.kind)))
    expanded = 0
    while queue:
        cur, path = queue.popleft()
        expanded += 1
        if expanded > max_nodes:
            return None
        for a in actions:
            out = step(cur, a)
            if goal(out.next_state, out.reward):
                return path + [a]
            nxt = out.next_state.with_steps(0)
            k = _key(nxt)
            if k not in seen:
                seen.add(k)
                queue.append((nxt, path + [a]))
    return None


def is_solvable(level: Level, max_nodes: int = 2_000_000) -> bool:
    return solve(level, max_nodes=max_nodes) is not None


def reachable_states(level: Level, max_nodes: int = 500_000) -> list[Level]:
    """All states reachable from `level` under the true dynamics (clock reset),
    terminal states excluded from expansion."""
    base = level.with_steps(0)
    seen = {_key(base): base}
    queue = deque([base])
    while queue and len(seen) <= max_nodes:
        cur = queue.popleft()
        for a in range(obj.n_actions(level.kind)):
            out = step(cur, a)
            if out.done:
                continue
            nxt = out.next_state.with_steps(0)
            k = _key(nxt)
            if k not in seen:
                seen[k] = nxt
                queue.append(nxt)
    return list(seen.values())


def _key(level: Level) -> bytes:
    return level.cells.tobytes()


_OPPOSITE = {obj.UP: obj.DOWN, obj.DOWN: obj.UP, obj.LEFT: obj.RIGHT, obj.RIGHT: obj.LEFT}


def pull_replay_solution(level: Level) -> list[int] | None:
    """Build a push solution from the generator's recorded pull walk.

    Processing the pulls in reverse, each becomes a push of the box currently
    at the recorded cell; the agent travels between pushes by plain moves.
    Succeeds for any level carrying a faithful pull record, which makes it a
    cheap solvability witness for boards too large to enumerate.
    """
    pulls = level.meta.get("pulls")
    if pulls is None:
        return None
    cur = level.with_steps(0)
    actions: list[int] = []
    for br, bc, d in reversed(pulls):
        push = _OPPOSITE[d]
        dr, dc = obj.SOKOBAN_DELTAS[d]
        stand = (br + dr, bc + dc)  # agent cell the pull ended on
        walk = _walk_to(cur, stand)
        if walk is None:
            return None
        for a in walk:
            cur = step(cur, a).next_state.with_steps(0)
        out = step(cur, push)
        cur = out.next_state.with_steps(0)
        actions.extend(walk)
        actions.append(push)
    return actions if cur.done or not (cur.cells == obj.BOX).any() else None


def _walk_to(level: Level, goal: tuple[int, int]) -> list[int] | None:
    """Plain-move path (no pushes) from the agent cell to `goal`."""
    if level.agent_pos == goal:
        return []
    blocked = {obj.WALL, obj.BOX, obj.BOX_ON_TARGET}
    cells = level.cells
    seen = {level.agent_pos}
    queue = deque([(level.agent_pos, [])])
    while queue:
        (r, c), path = queue.popleft()
        for a, (dr, dc) in enumerate(obj.SOKOBAN_DELTAS):
            n = (r + dr, c + dc)
            if n in seen or int(cells[n]) in blocked:
                continue
            if n == goal:
                return path + [a]
            seen.add(n)
            queue.append((n, path + [a]))
    return None
