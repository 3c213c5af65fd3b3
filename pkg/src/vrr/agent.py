"""The full agent loop: perceive, plan, execute, learn.

The agent touches the environment only through rendered pixels: every
observation is tokenized through its own vocabulary, and the rule table is
keyed on those first-seen ids. Ground-truth object ids never cross this
boundary.
"""

from __future__ import annotations

import io
import random
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import gridworld as gw
from . import perception as pc
from .errors import FormatError, VocabularyMismatchError
from .gridworld import objects as obj
from .planner import DEFAULT_BUDGET, EXHAUSTED, EXPLORE, WIN, bfs_plan
from .rules import RuleSet

OUTCOME_WIN = "win"
OUTCOME_GAVE_UP = "gave_up"
OUTCOME_STEP_CAP = "step_cap"

WARMUP_STEPS = 50


class ObservationPipeline:
    """Render -> tokenize -> locate, growing the agent identity on sight.

    The warm-up can only group the agent sprites it happened to see; variants
    that first appear mid-play (the agent standing on a target, or carrying an
    item) are adopted by `track`: after a step, a changed cell one move away
    holding an id that is neither a known agent sprite nor present anywhere in
    the previous frame can only be where the agent went.
    """

    def __init__(self, vocab: pc.ObjectVocabulary, identity: pc.AgentIdentity,
                 sprite_px: int):
        self.vocab = vocab
        self.identity = identity
        self.sprite_px = sprite_px

    def observe(self, level: gw.Level) -> np.ndarray:
        image = gw.render(level, self.sprite_px)
        return pc.tokenize(image, self.vocab.cell_size, self.vocab)

    def locate(self, grid: np.ndarray) -> tuple[int, int]:
        r, c, _ = pc.locate_agent(grid, self.identity)
        return (r, c)

    def track(self, prev: np.ndarray, prev_pos: tuple[int, int],
              grid: np.ndarray) -> tuple[int, int]:
        try:
            return self.locate(grid)
        except pc.LocateError:
            pass
        prev_ids = set(int(v) for v in np.unique(prev))
        candidates = []
        for r, c in np.argwhere(prev != grid):
            nid = int(grid[r, c])
            near = abs(int(r) - prev_pos[0]) + abs(int(c) - prev_pos[1]) <= 1
            if near and nid not in self.identity.ids and nid not in prev_ids:
                candidates.append((int(r), int(c), nid))
        if len(candidates) != 1:
            raise pc.LocateError("agent lost: no unique novel sprite to adopt")
        r, c, nid = candidates[0]
        self.identity = replace(self.identity,
                                ids=self.identity.ids | {nid})
        return (r, c)

    def new_ruleset(self, kind: str) -> RuleSet:
        # The vocabulary still grows while this table learns, so the binding
        # hash is stamped at export time, not here.
        return RuleSet(kind, obj.n_actions(kind),
                       agent_ids=self.identity.ids,
                       facings=dict(self.identity.facings))

    # -- persistence (binary: tiles must travel with the ids) -----------

    def save(self) -> bytes:
        out = io.BytesIO()
        head = (f"vrr-vocab 1\ncell {self.vocab.cell_size}\n"
                f"sprite {self.sprite_px}\n"
                f"agents {','.join(map(str, sorted(self.identity.ids)))}\n"
                f"primary {self.identity.primary}\n"
                "facings " + " ".join(
                    f"{i}:{d[0]},{d[1]}"
                    for i, d in sorted(self.identity.facings.items())) + "\n"
                f"tiles {len(self.vocab)}\n").encode()
        out.write(struct.pack("<I", len(head)))
        out.write(head)
        for t in self.vocab.tiles:
            out.write(t)
        return out.getvalue()

    @classmethod
    def load(cls, data: bytes) -> "ObservationPipeline":
        try:
            (hlen,) = struct.unpack_from("<I", data, 0)
            head = data[4 : 4 + hlen].decode()
            fields = dict(line.split(" ", 1) for line in head.splitlines())
            if "vrr-vocab" not in fields:
                raise FormatError("missing vocab header")
            cell = int(fields["cell"])
            vocab = pc.ObjectVocabulary(cell)
            n = int(fields["tiles"])
            size = cell * cell * 3
            body = data[4 + hlen :]
            if len(body) != n * size:
                raise FormatError("truncated tile data")
            for i in range(n):
                vocab.id_of(bytes(body[i * size : (i + 1) * size]))
            facings = {}
            for tok in fields["facings"].split():
                i, d = tok.split(":")
                facings[int(i)] = tuple(int(v) for v in d.split(","))
            identity = pc.AgentIdentity(
                ids=frozenset(int(x) for x in fields["agents"].split(",") if x),
                primary=int(fields["primary"]), facings=facings)
            return cls(vocab, identity, int(fields["sprite"]))
        except FormatError:
            raise
        except Exception as e:
            raise FormatError(f"malformed pipeline bundle: {e}") from e


def perception_warmup(level_source, n_steps: int = WARMUP_STEPS,
                      sprite_px: int = 16, seed: int = 0,
                      extra_frames: int = 12) -> ObservationPipeline:
    """Identify the sprite grid and the agent from uniformly random play.

    `level_source` maps an index to a fresh Level; a new level is drawn
    whenever an episode terminates. The walk's length counts toward reported
    environment steps. A short random walk can revisit so few boards that a
    whole-frame tiling looks compressive, so initial renders of a few extra
    fresh levels (no environment steps) diversify the pool for cell-size
    inference.
    """
    rng = random.Random(f"warmup:{seed}")
    level_idx = 0
    cur = level_source(level_idx)
    frames = [gw.render(cur, sprite_px)]
    raw: list[tuple[gw.Level, int, gw.Level]] = []
    for _ in range(n_steps):
        action = rng.randrange(obj.n_actions(cur.kind))
        out = gw.step(cur, action)
        raw.append((cur, action, out.next_state))
        frames.append(gw.render(out.next_state, sprite_px))
        cur = out.next_state
        if out.done:
            level_idx += 1
            cur = level_source(level_idx)
            frames.append(gw.render(cur, sprite_px))

    pool = frames + [gw.render(level_source(1000 + i), sprite_px)
                     for i in range(extra_frames)]
    cell = pc.infer_cell_size(pool)
    vocab = pc.ObjectVocabulary(cell)
    transitions = []
    for before, _, after in raw:
        s = pc.tokenize(gw.render(before, sprite_px), cell, vocab)
        s2 = pc.tokenize(gw.render(after, sprite_px), cell, vocab)
        transitions.append((s, s2))
    identity = pc.identify_agent(transitions)
    return ObservationPipeline(vocab, identity, sprite_px)


@dataclass(frozen=True)
class TrajectoryRecord:
    episode: int
    step: int
    action: int
    reward: float
    done: bool
    agent_pos: tuple[int, int]
    s: np.ndarray
    s_next: np.ndarray


@dataclass
class EpisodeLog:
    outcome: str
    records: list[TrajectoryRecord] = field(default_factory=list)
    rules_learned: int = 0
    plans: int = 0
    nodes_expanded: int = 0

    @property
    def env_steps(self) -> int:
        return len(self.records)

    @property
    def ret(self) -> float:
        return sum(r.reward for r in self.records)


def run_episode(env: gw.Level, rules: RuleSet, pipeline: ObservationPipeline,
                learn: bool = True, budget: int = DEFAULT_BUDGET,
                episode_idx: int = 0) -> EpisodeLog:
    """Play one level to win, give-up, or the step cap.

    Win plans run to termination without replanning; explore plans run fully
    (learning each executed transition) and then replan. With learning off an
    explore verdict ends the episode as a loss after its known prefix.
    """
    log = EpisodeLog(outcome=OUTCOME_GAVE_UP)
    cur = env
    obs = pipeline.observe(cur)

    while True:
        pos = pipeline.locate(obs)
        plan = bfs_plan(rules, obs, pos, budget)
        log.plans += 1
        log.nodes_expanded += plan.nodes_expanded

        if plan.kind == EXHAUSTED:
            log.outcome = OUTCOME_GAVE_UP
            return log

        actions = plan.actions
        if plan.kind == EXPLORE and not learn:
            actions = actions[:-1]  # known prefix only; episode scored a loss

        finished = None
        for action in actions:
            out = gw.step(cur, action)
            nxt_obs = pipeline.observe(out.next_state)
            log.records.append(TrajectoryRecord(
                episode=episode_idx, step=len(log.records), action=action,
                reward=out.reward, done=out.done, agent_pos=pos,
                s=obs, s_next=nxt_obs))
            if learn:
                if rules.learn(obs, nxt_obs, action, out.reward, pos) is not None:
                    log.rules_learned += 1
            if not out.done:
                pos = pipeline.track(obs, pos, nxt_obs)
                if rules.agent_ids != pipeline.identity.ids:
                    rules.agent_ids = pipeline.identity.ids
            cur, obs = out.next_state, nxt_obs
            if out.done:
                finished = OUTCOME_WIN if out.reward > 0 else OUTCOME_STEP_CAP
                break

        if finished:
            log.outcome = finished
            return log
        if plan.kind == EXPLORE and not learn:
            log.outcome = OUTCOME_GAVE_UP
            return log
        # Win plan that did not terminate the level (optimistic reward on
        # configurations richer than the training family) or a finished
        # explore plan: replan from the new state.


@dataclass
class TrainConfig:
    kind: str = obj.SOKOBAN
    size: int = 7
    n_boxes: int = 1
    rotations: tuple[int, ...] = (0,)
    seed: int = 0
    max_steps: int = 20_000
    window: int = 10
    plateau_episodes: int = 25
    budget: int = DEFAULT_BUDGET
    sprite_px: int = 16
    warmup_steps: int = WARMUP_STEPS


@dataclass
class TrainingRun:
    returns: list[float] = field(default_factory=list)
    steps_at_episode: list[int] = field(default_factory=list)
    rule_counts: list[int] = field(default_factory=list)
    total_steps: int = 0
    converged: bool = False

    @property
    def episodes(self) -> int:
        return len(self.returns)


def _level_stream(cfg: TrainConfig, label: str):
    rng = random.Random(f"{label}:{cfg.seed}")

    def source(_idx: int) -> gw.Level:
        seed = rng.randrange(2**31)
        rotation = cfg.rotations[rng.randrange(len(cfg.rotations))]
        return gw.generate(cfg.kind, seed, cfg.size, cfg.n_boxes, rotation)

    return source


def train_from_scratch(cfg: TrainConfig):
    """Algo-style training: empty table, fresh level per episode, stop at a
    rolling return of 1.0 over `window` episodes (plus an optional rule-count
    plateau), or at the step budget.

    Returns (rules, TrainingRun, pipeline). Warm-up steps count toward totals.
    """
    warm_src = _level_stream(cfg, "warm")
    pipeline = perception_warmup(warm_src, cfg.warmup_steps, cfg.sprite_px, cfg.seed)
    rules = pipeline.new_ruleset(cfg.kind)

    run = TrainingRun(total_steps=cfg.warmup_steps)
    source = _level_stream(cfg, "episodes")
    episode = 0
    last_growth_episode = 0
    while run.total_steps < cfg.max_steps:
        log = run_episode(source(episode), rules, pipeline, learn=True,
                          budget=cfg.budget, episode_idx=episode)
        run.total_steps += log.env_steps
        run.returns.append(log.ret)
        run.steps_at_episode.append(run.total_steps)
        run.rule_counts.append(len(rules))
        if log.rules_learned:
            last_growth_episode = episode
        episode += 1
        window = run.returns[-cfg.window:]
        if (len(window) == cfg.window and all(r >= 1.0 for r in window)
                and episode - last_growth_episode > cfg.plateau_episodes):
            run.converged = True
            break
    rules.vocab_hash = pipeline.vocab.content_hash()
    return rules, run, pipeline


def evaluate(rules: RuleSet, pipeline: ObservationPipeline, levels,
             budget: int = DEFAULT_BUDGET):
    """Zero-shot evaluation: learning disabled, one episode per level.

    Returns (mean return, mean steps, per-episode EpisodeLogs).
    """
    logs = [run_episode(lvl, rules, pipeline, learn=False, budget=budget,
                        episode_idx=i)
            for i, lvl in enumerate(levels)]
    rets = [log.ret for log in logs]
    steps = [log.env_steps for log in logs]
    return float(np.mean(rets)), float(np.mean(steps)), logs


# -- trajectory log format ----------------------------------------------


def _rle(grid: np.ndarray) -> str:
    flat = grid.flatten()
    out = []
    run_val, run_len = int(flat[0]), 1
    for v in flat[1:]:
        v = int(v)
        if v == run_val:
            run_len += 1
        else:
            out.append(f"{run_val}:{run_len}")
            run_val, run_len = v, 1
    out.append(f"{run_val}:{run_len}")
    return ",".join(out)


def _unrle(text: str, shape: tuple[int, int]) -> np.ndarray:
    vals: list[int] = []
    for tok in text.split(","):
        v, n = tok.split(":")
        vals.extend([int(v)] * int(n))
    arr = np.array(vals, dtype=np.uint8)
    if arr.size != shape[0] * shape[1]:
        raise FormatError("run-length payload does not fill the grid")
    return arr.reshape(shape)


def write_trajectory_log(records: list[TrajectoryRecord], kind: str,
                         shape: tuple[int, int], vocab_hash: str) -> str:
    """Line-delimited log shared by scratch replays, demonstrations, and the
    session recorder."""
    lines = [
        "vrr-log 1",
        f"game {kind}",
        f"size {shape[0]} {shape[1]}",
        f"vocab {vocab_hash}",
    ]
    for r in records:
        lines.append(
            f"{r.episode} {r.step} {r.action} {r.reward!r} {int(r.done)} "
            f"{r.agent_pos[0]} {r.agent_pos[1]} {_rle(r.s)} {_rle(r.s_next)}")
    return "\n".join(lines) + "\n"


def read_trajectory_log(text: str):
    """Returns (records, kind, shape, vocab_hash)."""
    lines = text.rstrip("\n").split("\n")
    try:
        if lines[0] != "vrr-log 1":
            raise FormatError(f"bad log header {lines[0]!r}")
        kind = lines[1].split()[1]
        h, w = (int(x) for x in lines[2].split()[1:3])
        vocab_hash = lines[3].split()[1] if len(lines[3].split()) > 1 else ""
        records = []
        for line in lines[4:]:
            ep, st, a, rew, done, ar, ac, rle_s, rle_s2 = line.split(" ")
            records.append(TrajectoryRecord(
                episode=int(ep), step=int(st), action=int(a),
                reward=float(rew), done=bool(int(done)),
                agent_pos=(int(ar), int(ac)),
                s=_unrle(rle_s, (h, w)), s_next=_unrle(rle_s2, (h, w))))
        return records, kind, (h, w), vocab_hash
    except FormatError:
        raise
    except Exception as e:
        raise FormatError(f"malformed trajectory log: {e}") from e


def train_from_demonstrations(log_text: str, rules: RuleSet) -> RuleSet:
    """Learn from a recorded trajectory file; no environment interaction.

    Learning passes repeat until the rule count stabilizes, so the result does
    not depend on how early in the log the demonstrator bumped into things.
    """
    records, _, _, vocab_hash = read_trajectory_log(log_text)
    if vocab_hash and rules.vocab_hash and vocab_hash != rules.vocab_hash:
        raise VocabularyMismatchError(
            f"log vocabulary {vocab_hash[:12]}.. does not match rule set "
            f"{rules.vocab_hash[:12]}..")
    if not rules.vocab_hash:
        rules.vocab_hash = vocab_hash
    rules.learn_trajectory(
        [(r.s, r.action, r.s_next, r.reward, r.agent_pos) for r in records])
    return rules
