"""Scripted demonstrations standing in for human play data.

A demonstrator solves a handful of levels optimally (via the ground-truth
searcher, never the rule table) while deliberately exercising the basic moves:
spinning both ways, approaching the key from fresh sides, entering the goal
from both open approaches. The output is an ordinary trajectory log.
"""

from __future__ import annotations

import numpy as np

from . import gridworld as gw
from .agent import ObservationPipeline, TrajectoryRecord, write_trajectory_log
from .gridworld import objects as obj
from .rules import RuleSet

DEMO_STEP_BUDGET = 120


def _record(pipeline: ObservationPipeline, level: gw.Level, actions,
            records: list[TrajectoryRecord], episode: int) -> gw.Level:
    cur = level
    obs = pipeline.observe(cur)
    pos = pipeline.locate(obs)
    for action in actions:
        out = gw.step(cur, action)
        nxt = pipeline.observe(out.next_state)
        records.append(TrajectoryRecord(
            episode=episode, step=len(records), action=action,
            reward=out.reward, done=out.done, agent_pos=pos,
            s=obs, s_next=nxt))
        cur, obs = out.next_state, nxt
        if not out.done:
            pos = pipeline.track(records[-1].s, pos, nxt)
    return cur


def scripted_sokoban_demo(pipeline: ObservationPipeline, size: int = 7,
                          seed_start: int = 900_000,
                          budget: int = DEMO_STEP_BUDGET) -> str:
    """Optimal plays of small levels, keeping only levels whose solution
    shows at least one rewrite not demonstrated yet, until the step budget
    or the candidate stream stops teaching anything new."""
    records: list[TrajectoryRecord] = []
    probe = pipeline.new_ruleset(obj.SOKOBAN)
    episode = 0
    stale = 0
    for seed in range(seed_start, seed_start + 400):
        if stale > 80:
            break
        level = gw.generate_sokoban(seed, size, 1)
        solution = gw.solve(level)
        if solution is None or len(records) + len(solution) > budget:
            stale += 1
            continue
        transitions = _simulate(pipeline, level, solution)
        trial = RuleSet.load(probe.save())
        gained = trial.learn_trajectory(
            [(s, a, s2, r, p) for (s, a, s2, r, p, _d) in transitions],
            until_stable=False)
        if gained == 0:
            stale += 1
            continue
        stale = 0
        _record(pipeline, level, solution, records, episode)
        probe.learn_trajectory(
            [(s, a, s2, r, p) for (s, a, s2, r, p, _d) in transitions],
            until_stable=False)
        episode += 1
    h = w = size
    return write_trajectory_log(records, obj.SOKOBAN, (h, w),
                                pipeline.vocab.content_hash())


def _simulate(pipeline: ObservationPipeline, level: gw.Level, actions):
    """Tokenized transitions of an action sequence, without recording."""
    out = []
    cur = level
    obs = pipeline.observe(cur)
    pos = pipeline.locate(obs)
    for a in actions:
        step = gw.step(cur, a)
        nxt = pipeline.observe(step.next_state)
        out.append((obs, a, nxt, step.reward, pos, step.done))
        if not step.done:
            pos = pipeline.track(obs, pos, nxt)
        cur, obs = step.next_state, nxt
    return out


def _goto(level: gw.Level, pos: tuple[int, int], direction: int):
    """Movement-only action sequence to stand at `pos` facing `direction`.

    Pickup and toggle are excluded so navigation legs cannot preempt the
    interaction the episode means to demonstrate.
    """
    return gw.solve(level, goal=lambda lvl, _r: (
        lvl.agent_pos == pos and lvl.agent_dir == direction),
        actions=(obj.TURN_LEFT, obj.TURN_RIGHT, obj.FORWARD))


def scripted_doorkey_demo(pipeline: ObservationPipeline, size: int = 6,
                          seed_start: int = 910_000,
                          budget: int = DEMO_STEP_BUDGET) -> str:
    """Four short plays: spin both ways, pick the key up from a new side each
    time, walk a lap with it, open the door, and finish through alternating
    goal approaches."""
    records: list[TrajectoryRecord] = []
    pickup_sides = [obj.N, obj.E, obj.S, obj.W]
    goal_entries = [obj.E, obj.S, obj.E, obj.S]
    carry_dirs_needed: set[int] = {obj.N, obj.E, obj.S, obj.W}
    episode = 0
    seed = seed_start
    while episode < 4 and seed < seed_start + 400:
        level = gw.generate_doorkey(seed, size, 0)
        seed += 1
        attempt_dirs = set(carry_dirs_needed)
        script = _doorkey_episode_script(level, pickup_sides[episode],
                                         goal_entries[episode],
                                         spin=(episode == 0),
                                         carry_dirs=attempt_dirs)
        if script is None or len(records) + len(script) > budget:
            continue
        carry_dirs_needed &= attempt_dirs
        final = _record(pipeline, level, script, records, episode)
        assert final.done and not (final.cells == obj.DOOR_CLOSED).any()
        episode += 1
    return write_trajectory_log(records, obj.DOORKEY, (size, size),
                                pipeline.vocab.content_hash())


def _doorkey_episode_script(level: gw.Level, pickup_side: int,
                            goal_entry: int, spin: bool,
                            carry_dirs: set[int] | None = None) -> list[int] | None:
    cells = level.cells
    key = tuple(int(v) for v in np.argwhere(cells == obj.KEY)[0])
    door = tuple(int(v) for v in np.argwhere(cells == obj.DOOR_CLOSED)[0])
    goal = tuple(int(v) for v in np.argwhere(cells == obj.GOAL)[0])

    script: list[int] = []
    cur = level
    if spin:
        script += [obj.TURN_LEFT] * 4 + [obj.TURN_RIGHT] * 4
        cur = _play(cur, script[-8:])

    dr, dc = obj.DIR_DELTAS[pickup_side]
    stand = (key[0] - dr, key[1] - dc)
    if int(cells[stand]) != obj.FLOOR:
        return None
    leg = _goto(cur, stand, pickup_side)
    if leg is None:
        return None
    script += leg + [obj.PICKUP]
    cur = _play(cur, leg + [obj.PICKUP])
    if int(cur.cells[cur.agent_pos]) not in obj.AGENT_KEY_SPRITES:
        return None

    if spin:
        carry_spin = [obj.TURN_LEFT] * 4 + [obj.TURN_RIGHT] * 4
        script += carry_spin
        cur = _play(cur, carry_spin)

    # One out-and-back per axis shows walking with the key both ways.
    if carry_dirs:
        walk, cur = _carry_laps(cur, carry_dirs)
        script += walk

    approach = (door[0], door[1] - 1)  # canonical wall is vertical, faced east
    leg = _goto(cur, approach, obj.E)
    if leg is None:
        return None
    script += leg + [obj.TOGGLE]
    cur = _play(cur, leg + [obj.TOGGLE])
    if int(cur.cells[door]) != obj.DOOR_OPEN:
        return None

    gr, gc = obj.DIR_DELTAS[goal_entry]
    stand = (goal[0] - gr, goal[1] - gc)
    if int(cells[stand]) not in (obj.FLOOR,):
        return None
    leg = _goto(cur, stand, goal_entry)
    if leg is None:
        return None
    script += leg + [obj.FORWARD]
    final = _play(cur, leg + [obj.FORWARD])
    if final.agent_pos != goal:
        return None
    return script


def _play(level: gw.Level, actions) -> gw.Level:
    cur = level
    for a in actions:
        cur = gw.step(cur, a).next_state.with_steps(0)
    return cur


def _turns_to(from_dir: int, to_dir: int) -> list[int]:
    k = (to_dir - from_dir) % 4
    return [obj.TURN_LEFT] * 1 if k == 3 else [obj.TURN_RIGHT] * k


def _carry_laps(cur: gw.Level, needed: set[int]) -> tuple[list[int], gw.Level]:
    """Step out and back along any axis still missing a carried move; the
    return leg covers the opposite direction for free. Mutates `needed`."""
    script: list[int] = []
    for d in (obj.N, obj.E, obj.S, obj.W):
        if d not in needed:
            continue
        r, c = cur.agent_pos
        dr, dc = obj.DIR_DELTAS[d]
        if int(cur.cells[r + dr, c + dc]) != obj.FLOOR:
            continue
        lap = (_turns_to(cur.agent_dir, d) + [obj.FORWARD]
               + [obj.TURN_RIGHT, obj.TURN_RIGHT] + [obj.FORWARD])
        script += lap
        cur = _play(cur, lap)
        needed.discard(d)
        needed.discard((d + 2) % 4)
    return script, cur
