"""Deterministic step functions for Sokoban and DoorKey.

Both games share the contract: stepping is a pure function of (level, action),
blocked moves return a cell-identical board, and the default reward is sparse
(+1.0 on the winning transition, 0 otherwise). Episodes are cut off at
10 * width * height steps.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import InvalidActionError, TerminalStateError
from . import objects as obj
from .level import Level


@dataclass(frozen=True)
class StepOutcome:
    next_state: Level
    reward: float
    done: bool
    info: dict


# Shaped-reward knobs, off by default (see RewardScheme).
@dataclass(frozen=True)
class RewardScheme:
    win: float = 1.0
    step_penalty: float = 0.0
    box_on_target: float = 0.0


SPARSE = RewardScheme()


def step(level: Level, action: int, rewards: RewardScheme = SPARSE) -> StepOutcome:
    if level.done:
        raise TerminalStateError("level is terminal")
    if level.kind == obj.SOKOBAN:
        return _step_sokoban(level, action, rewards)
    return _step_doorkey(level, action, rewards)


def _finish(level: Level, cells: np.ndarray, pos, direction, won: bool,
            rewards: RewardScheme, extra: float = 0.0) -> StepOutcome:
    steps = level.steps + 1
    capped = steps >= level.step_cap
    done = won or capped
    reward = (rewards.win if won else 0.0) + extra
    if not won:
        reward += rewards.step_penalty
    nxt = replace(level, cells=cells, agent_pos=pos, agent_dir=direction,
                  steps=steps, done=done)
    return StepOutcome(nxt, reward, done, {"step": steps})


def _step_sokoban(level: Level, action: int, rewards: RewardScheme) -> StepOutcome:
    if not 0 <= action < len(obj.SOKOBAN_ACTIONS):
        raise InvalidActionError(f"sokoban has no action {action}")
    dr, dc = obj.SOKOBAN_DELTAS[action]
    cells = level.cells
    r, c = level.agent_pos
    nr, nc = r + dr, c + dc
    dest = int(cells[nr, nc])

    under = obj.TARGET if cells[r, c] == obj.AGENT_ON_TARGET else obj.FLOOR
    extra = 0.0

    if dest in (obj.FLOOR, obj.TARGET):
        out = cells.copy()
        out[r, c] = under
        out[nr, nc] = obj.AGENT_ON_TARGET if dest == obj.TARGET else obj.AGENT
        return _finish(level, out, (nr, nc), obj.NO_DIR, False, rewards)

    if dest in (obj.BOX, obj.BOX_ON_TARGET):
        br, bc = nr + dr, nc + dc
        beyond = int(cells[br, bc])
        if beyond in (obj.FLOOR, obj.TARGET):
            out = cells.copy()
            out[r, c] = under
            out[nr, nc] = obj.AGENT_ON_TARGET if dest == obj.BOX_ON_TARGET else obj.AGENT
            out[br, bc] = obj.BOX_ON_TARGET if beyond == obj.TARGET else obj.BOX
            if beyond == obj.TARGET:
                extra = rewards.box_on_target
            won = not (out == obj.BOX).any()
            return _finish(level, out, (nr, nc), obj.NO_DIR, won, rewards, extra)

    # Blocked: board unchanged cell-for-cell.
    return _finish(level, cells, (r, c), obj.NO_DIR, False, rewards)


def _step_doorkey(level: Level, action: int, rewards: RewardScheme) -> StepOutcome:
    if not 0 <= action < len(obj.DOORKEY_ACTIONS):
        raise InvalidActionError(f"doorkey has no action {action}")
    cells = level.cells
    r, c = level.agent_pos
    d = level.agent_dir
    carrying = int(cells[r, c]) in obj.AGENT_KEY_SPRITES

    if action in (obj.TURN_LEFT, obj.TURN_RIGHT):
        nd = (d + (1 if action == obj.TURN_RIGHT else -1)) % 4
        out = cells.copy()
        out[r, c] = obj.agent_sprite(nd, carrying)
        return _finish(level, out, (r, c), nd, False, rewards)

    fr, fc = r + obj.DIR_DELTAS[d][0], c + obj.DIR_DELTAS[d][1]
    facing = int(cells[fr, fc])

    if action == obj.FORWARD:
        if facing in (obj.FLOOR, obj.DOOR_OPEN, obj.GOAL):
            out = cells.copy()
            out[r, c] = obj.FLOOR
            out[fr, fc] = obj.agent_sprite(d, carrying)
            return _finish(level, out, (fr, fc), d, facing == obj.GOAL, rewards)
        return _finish(level, cells, (r, c), d, False, rewards)

    if action == obj.PICKUP:
        if facing == obj.KEY and not carrying:
            out = cells.copy()
            out[fr, fc] = obj.FLOOR
            out[r, c] = obj.agent_sprite(d, True)
            return _finish(level, out, (r, c), d, False, rewards)
        return _finish(level, cells, (r, c), d, False, rewards)

    # TOGGLE: opening a door consumes the carried key, so holding it is
    # visible on the board and transitions stay a function of the pixels.
    if facing == obj.DOOR_CLOSED and carrying:
        out = cells.copy()
        out[fr, fc] = obj.DOOR_OPEN
        out[r, c] = obj.agent_sprite(d, False)
        return _finish(level, out, (r, c), d, False, rewards)
    return _finish(level, cells, (r, c), d, False, rewards)
