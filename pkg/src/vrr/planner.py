"""Breadth-first planning over the rewrite-rule world model.

The search expands states in FIFO order using table lookups as the transition
function. It returns the shortest action sequence to a positive-reward
transition when one is reachable under known rules; otherwise the shortest
sequence ending in a transition the table cannot predict; otherwise a proof
that the known-dynamics graph is exhausted (the give-up case).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import SearchBudgetExceeded
from .rules import KNOWN, Prediction, RuleSet, UNKNOWN

DEFAULT_BUDGET = 500_000

WIN = "win"
EXPLORE = "explore"
EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class PlanResult:
    kind: str
    actions: list[int]
    predicted_reward: float
    nodes_expanded: int


def bfs_plan(rules: RuleSet, start: np.ndarray, agent_pos: tuple[int, int],
             budget: int = DEFAULT_BUDGET, trace=None) -> PlanResult:
    """Plan from `start`; see module docstring for the outcome ladder.

    Unknown transitions are frontier leaves (their successors are unknowable).
    Exceeding `budget` expansions raises SearchBudgetExceeded: truncation is
    not proof of unwinnability, so it is never reported as `exhausted`.
    `trace`, when given, receives one `depth hash action` line per expansion.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")

    # parents[i] = (parent index, action); states[i] = (grid, agent_pos, path reward)
    states = [(start, agent_pos, 0.0)]
    parents: list[tuple[int, int]] = [(-1, -1)]
    depths = [0]
    seen = {start.tobytes()}
    queue = deque([0])
    explore_target: tuple[int, int] | None = None  # (node index, action)
    expanded = 0

    while queue:
        idx = queue.popleft()
        expanded += 1
        if expanded > budget:
            raise SearchBudgetExceeded(f"no verdict within {budget} expansions")
        grid, pos, acc = states[idx]
        if trace is not None:
            trace.write(f"{depths[idx]} {hash(grid.tobytes()):x} "
                        f"{parents[idx][1]}\n")
        for action in range(rules.n_actions):
            pred = rules.apply(grid, action, pos)
            if pred.status == UNKNOWN:
                if explore_target is None:
                    explore_target = (idx, action)
                continue
            if acc + pred.reward > 0:
                return PlanResult(WIN, _path(parents, idx) + [action],
                                  acc + pred.reward, expanded)
            nxt = pred.next_state
            key = nxt.tobytes()
            if key in seen:
                continue
            seen.add(key)
            shift = pred.rule.agent_shift(rules.agent_ids)
            states.append((nxt, (pos[0] + shift[0], pos[1] + shift[1]),
                           acc + pred.reward))
            parents.append((idx, action))
            depths.append(depths[idx] + 1)
            queue.append(len(states) - 1)

    if explore_target is not None:
        idx, action = explore_target
        return PlanResult(EXPLORE, _path(parents, idx) + [action], 0.0, expanded)
    return PlanResult(EXHAUSTED, [], 0.0, expanded)


def _path(parents: list[tuple[int, int]], idx: int) -> list[int]:
    actions = []
    while parents[idx][0] != -1:
        idx, action = parents[idx][0], parents[idx][1]
        actions.append(action)
    actions.reverse()
    return actions


def replay_plan(rules: RuleSet, start: np.ndarray, agent_pos: tuple[int, int],
                actions: list[int]) -> list[Prediction]:
    """Predictions along an action sequence, stopping at the first unknown."""
    if not actions:
        raise ValueError("actions must be non-empty")
    out: list[Prediction] = []
    grid, pos = start, agent_pos
    for action in actions:
        pred = rules.apply(grid, action, pos)
        out.append(pred)
        if pred.status == UNKNOWN:
            break
        shift = pred.rule.agent_shift(rules.agent_ids)
        grid, pos = pred.next_state, (pos[0] + shift[0], pos[1] + shift[1])
    return out
