"""The visual rewrite rule table: difference masks, rule learning with
expectation correction, and the exact table-lookup world model.

A rule maps (action, before-pattern near the agent) to (after-pattern,
reward). Patterns are stored agent-relative, which makes translation
invariance structural: a rule learned anywhere applies anywhere the same
local neighbourhood recurs.

No-change transitions are explained by identity rules over an expectation
mask: the agent cell, the cell the agent would have affected, and, when that
cell holds an object known to move, the cell beyond it. An identity rule only
matches while its mask still covers everything the transition could depend on
under current knowledge, so early small-mask identities retire themselves
instead of shadowing yet-unlearned rewrites.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConflictError, FormatError, VocabularyMismatchError

KNOWN = "known_rule"
UNKNOWN = "unknown_rule"

_CARDINALS = ((-1, 0), (0, 1), (1, 0), (0, -1))


@dataclass(frozen=True)
class LocalPattern:
    """Values over an agent-relative cell mask; `cells` is sorted (dr, dc, id)."""

    cells: tuple[tuple[int, int, int], ...]
    facing: str | None = None  # unused when sprites encode orientation

    @staticmethod
    def from_grid(grid: np.ndarray, agent_pos: tuple[int, int],
                  offsets) -> "LocalPattern":
        ar, ac = agent_pos
        cells = tuple(sorted(
            (dr, dc, int(grid[ar + dr, ac + dc])) for dr, dc in offsets
        ))
        return LocalPattern(cells)

    @property
    def mask(self) -> frozenset[tuple[int, int]]:
        return frozenset((dr, dc) for dr, dc, _ in self.cells)

    @property
    def values(self) -> dict[tuple[int, int], int]:
        return {(dr, dc): v for dr, dc, v in self.cells}

    def value_at(self, offset: tuple[int, int]) -> int:
        return self.values[offset]

    def __len__(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class RewriteRule:
    action: int
    before: LocalPattern
    after: LocalPattern
    reward: float
    ordinal: int
    identity: bool = False

    def __post_init__(self):
        if self.before.mask != self.after.mask:
            raise ValueError("before and after must share one mask")

    def agent_shift(self, agent_ids: frozenset[int]) -> tuple[int, int]:
        """Where the agent cell lands after stamping this rule."""
        for dr, dc, v in self.after.cells:
            if v in agent_ids:
                return (dr, dc)
        return (0, 0)


@dataclass(frozen=True)
class Prediction:
    next_state: np.ndarray | None
    reward: float
    status: str
    rule: RewriteRule | None = None


def diff_mask(s: np.ndarray, s_next: np.ndarray,
              agent_pos: tuple[int, int]) -> frozenset[tuple[int, int]]:
    """Offsets (relative to the agent in `s`) of every cell that changed."""
    if s.shape != s_next.shape:
        raise ValueError(f"shape mismatch {s.shape} vs {s_next.shape}")
    rows, cols = np.nonzero(s != s_next)
    ar, ac = agent_pos
    return frozenset((int(r) - ar, int(c) - ac) for r, c in zip(rows, cols))


class RuleSet:
    """Per-action associative map from before-pattern to (after, reward)."""

    def __init__(self, kind: str, n_actions: int, vocab_hash: str = "",
                 agent_ids: frozenset[int] = frozenset(),
                 facings: dict[int, tuple[int, int]] | None = None):
        self.kind = kind
        self.n_actions = n_actions
        self.vocab_hash = vocab_hash
        self.agent_ids = frozenset(agent_ids)
        self.facings = dict(facings or {})
        self._by_action: list[dict[LocalPattern, RewriteRule]] = [
            {} for _ in range(n_actions)
        ]
        self.null_actions: set[int] = set()
        self.movable_ids: set[int] = set()
        # (action, sprite at the agent cell) -> observed one-step displacement
        self.displacements: dict[tuple[int, int], tuple[int, int]] = {}
        self._next_ordinal = 0
        self._version = 0
        self._compiled: list | None = None

    # -- introspection -------------------------------------------------

    def __len__(self) -> int:
        return sum(len(d) for d in self._by_action)

    @property
    def rule_count(self) -> int:
        return len(self)

    def rules_for(self, action: int) -> list[RewriteRule]:
        """Match-priority order: larger mask first, then insertion order."""
        rules = self._by_action[action].values()
        return sorted(rules, key=lambda r: (-len(r.before), r.ordinal))

    def all_rules(self) -> list[RewriteRule]:
        out = [r for d in self._by_action for r in d.values()]
        return sorted(out, key=lambda r: r.ordinal)

    # -- learning ------------------------------------------------------

    def learn(self, s: np.ndarray, s_next: np.ndarray, action: int,
              reward: float, agent_pos: tuple[int, int]) -> RewriteRule | None:
        """Record one observed transition; returns the new rule, or None when
        the transition was already explained."""
        offsets = diff_mask(s, s_next, agent_pos)
        if offsets:
            return self._learn_change(s, s_next, action, reward, agent_pos, offsets)
        return self._learn_null(s, action, reward, agent_pos)

    def _learn_change(self, s, s_next, action, reward, agent_pos, offsets):
        ar, ac = agent_pos
        for dr, dc in offsets:
            self.movable_ids.add(int(s[ar + dr, ac + dc]))
            self.movable_ids.add(int(s_next[ar + dr, ac + dc]))
        self.null_actions.discard(action)  # assumption superseded

        sprite = int(s[ar, ac])
        if (0, 0) in offsets and sprite in self.agent_ids:
            landed = [o for o in offsets
                      if o != (0, 0) and int(s_next[ar + o[0], ac + o[1]]) == sprite]
            if len(landed) == 1:
                self.displacements.setdefault((action, sprite), landed[0])

        before = LocalPattern.from_grid(s, agent_pos, offsets)
        after = LocalPattern.from_grid(s_next, agent_pos, offsets)
        return self._insert(action, before, after, reward, identity=False)

    def _learn_null(self, s, action, reward, agent_pos):
        ar, ac = agent_pos
        h, w = s.shape
        if not any(not r.identity for r in self._by_action[action].values()):
            # Never seen this action change anything.
            self.null_actions.add(action)

        offsets = {(0, 0)}
        change_masks = [r.before.mask for r in self._by_action[action].values()
                        if not r.identity]
        if change_masks:
            inter = set(change_masks[0])
            for m in change_masks[1:]:
                inter &= m
            offsets |= inter

        sprite = int(s[ar, ac])
        delta = self.displacement_for(action, sprite)
        probe = [delta] if delta is not None else list(_CARDINALS)
        for dr, dc in probe:
            r1, c1 = ar + dr, ac + dc
            if not (0 <= r1 < h and 0 <= c1 < w):
                continue
            offsets.add((dr, dc))
            if int(s[r1, c1]) in self.movable_ids:
                r2, c2 = ar + 2 * dr, ac + 2 * dc
                if 0 <= r2 < h and 0 <= c2 < w:
                    offsets.add((2 * dr, 2 * dc))

        offsets = {(dr, dc) for dr, dc in offsets
                   if 0 <= ar + dr < h and 0 <= ac + dc < w}
        pattern = LocalPattern.from_grid(s, agent_pos, offsets)
        return self._insert(action, pattern, pattern, reward, identity=True)

    def _insert(self, action, before, after, reward, identity):
        existing = self._by_action[action].get(before)
        if existing is not None:
            if existing.after == after and existing.reward == reward:
                return None  # idempotent re-learning
            raise ConflictError(
                f"action {action}: key relearned with a different value "
                f"(environment nondeterminism?)"
            )
        rule = RewriteRule(action, before, after, reward,
                           ordinal=self._next_ordinal, identity=identity)
        self._by_action[action][before] = rule
        self._next_ordinal += 1
        self._version += 1
        return rule

    def learn_trajectory(self, records, until_stable: bool = True) -> int:
        """Learn from (s, action, s', reward, agent_pos) records in order.

        Passes repeat until no new rule appears, so expectation masks written
        early in the log get refreshed by knowledge from later in it.
        """
        added = 0
        while True:
            new = 0
            for s, action, s_next, reward, agent_pos in records:
                if self.learn(s, s_next, action, reward, agent_pos) is not None:
                    new += 1
            added += new
            if not until_stable or new == 0:
                return added

    def displacement_for(self, action: int, sprite: int) -> tuple[int, int] | None:
        d = self.displacements.get((action, sprite))
        if d is not None:
            return d
        per_action = {v for (a, _), v in self.displacements.items() if a == action}
        if len(per_action) == 1:
            return next(iter(per_action))
        return self.facings.get(sprite)

    # -- prediction ----------------------------------------------------

    def apply(self, s: np.ndarray, action: int,
              agent_pos: tuple[int, int]) -> Prediction:
        """Predict the next state by stamping the first matching rule.

        No match means the local situation is novel (unknown_rule); cells
        outside the matched mask are preserved untouched.
        """
        packed, rules = self._compiled_for(action)
        ar, ac = agent_pos
        idx = _kernels.match_first(s, ar, ac, *packed, self._movable_vec())
        if idx < 0:
            return Prediction(None, 0.0, UNKNOWN)
        rule = rules[idx]
        if rule.identity:
            return Prediction(s, rule.reward, KNOWN, rule)
        out = s.copy()
        for dr, dc, v in rule.after.cells:
            out[ar + dr, ac + dc] = v
        return Prediction(out, rule.reward, KNOWN, rule)

    def match_python(self, s: np.ndarray, action: int,
                     agent_pos: tuple[int, int]) -> RewriteRule | None:
        """Reference matcher (no kernel); used by tests and the benchmark."""
        h, w = s.shape
        ar, ac = agent_pos
        for rule in self.rules_for(action):
            ok = True
            for dr, dc, v in rule.before.cells:
                r, c = ar + dr, ac + dc
                if not (0 <= r < h and 0 <= c < w) or int(s[r, c]) != v:
                    ok = False
                    break
            if not ok:
                continue
            if rule.identity and not self._eligible_python(rule, s, agent_pos):
                continue
            return rule
        return None

    def _eligible_python(self, rule, s, agent_pos):
        h, w = s.shape
        ar, ac = agent_pos
        sprite = rule.before.value_at((0, 0))
        delta = self.displacement_for(rule.action, sprite)
        probe = [delta] if delta is not None else list(_CARDINALS)
        mask = rule.before.mask
        for dr, dc in probe:
            r1, c1 = ar + dr, ac + dc
            if not (0 <= r1 < h and 0 <= c1 < w):
                continue
            if (dr, dc) not in mask:
                return False
            if int(s[r1, c1]) in self.movable_ids:
                r2, c2 = ar + 2 * dr, ac + 2 * dc
                if 0 <= r2 < h and 0 <= c2 < w and (2 * dr, 2 * dc) not in mask:
                    return False
        return True

    def _movable_vec(self) -> np.ndarray:
        cached = getattr(self, "_movable_cache", None)
        if cached is None or cached[0] != self._version:
            vec = np.zeros(256, dtype=np.uint8)
            for i in self.movable_ids:
                vec[i] = 1
            self._movable_cache = (self._version, vec)
            return vec
        return cached[1]

    def _compiled_for(self, action: int):
        if self._compiled is None or self._compiled[0] != self._version:
            self._compiled = [self._version] + [None] * self.n_actions
        slot = self._compiled[action + 1]
        if slot is None:
            rules = self.rules_for(action)
            entries = []
            for r in rules:
                offsets = [(dr, dc) for dr, dc, _ in r.before.cells]
                values = [v for _, _, v in r.before.cells]
                delta = None
                if r.identity:
                    delta = self.displacement_for(action, r.before.value_at((0, 0)))
                entries.append((offsets, values, r.identity, delta))
            slot = (_kernels.pack_rules(entries), rules)
            self._compiled[action + 1] = slot
        return slot

    # -- serialization -------------------------------------------------

    FORMAT_VERSION = 1

    def save(self) -> bytes:
        """Canonical byte serialization; identical tables give identical bytes."""
        out = io.StringIO()
        out.write(f"vrr-rules {self.FORMAT_VERSION}\n")
        out.write(f"game {self.kind} {self.n_actions}\n")
        out.write(f"vocab {self.vocab_hash}\n")
        out.write("agents " + ",".join(map(str, sorted(self.agent_ids))) + "\n")
        out.write("facings " + " ".join(
            f"{i}:{d[0]},{d[1]}" for i, d in sorted(self.facings.items())) + "\n")
        out.write("movable " + ",".join(map(str, sorted(self.movable_ids))) + "\n")
        out.write("null " + ",".join(map(str, sorted(self.null_actions))) + "\n")
        out.write("displacements " + " ".join(
            f"{a}:{sp}:{d[0]},{d[1]}"
            for (a, sp), d in sorted(self.displacements.items())) + "\n")
        for r in self.all_rules():
            cells = ";".join(
                f"{dr},{dc},{bv},{av}"
                for (dr, dc, bv), (_, _, av) in zip(r.before.cells, r.after.cells)
            )
            out.write(f"rule {r.ordinal} {r.action} {r.reward!r} "
                      f"{int(r.identity)} {cells}\n")
        return out.getvalue().encode("utf-8")

    @classmethod
    def load(cls, data: bytes, expect_vocab_hash: str | None = None) -> "RuleSet":
        try:
            lines = data.decode("utf-8").splitlines()
            if not lines or not lines[0].startswith("vrr-rules "):
                raise FormatError("missing rule-file header")
            version = int(lines[0].split()[1])
            if version != cls.FORMAT_VERSION:
                raise FormatError(f"unsupported format version {version}")
            fields = {}
            rule_lines = []
            for line in lines[1:]:
                key, _, rest = line.partition(" ")
                if key == "rule":
                    rule_lines.append(rest)
                else:
                    fields[key] = rest
            kind, n_actions = fields["game"].split()
            rs = cls(kind, int(n_actions), vocab_hash=fields["vocab"])
            if expect_vocab_hash is not None and rs.vocab_hash != expect_vocab_hash:
                raise VocabularyMismatchError(
                    f"rule file vocabulary {rs.vocab_hash[:12]}.. does not match "
                    f"{expect_vocab_hash[:12]}..")
            rs.agent_ids = frozenset(
                int(x) for x in fields["agents"].split(",") if x)
            rs.facings = {
                int(i): tuple(int(v) for v in d.split(","))
                for i, d in (tok.split(":") for tok in fields["facings"].split() if tok)
            }
            rs.movable_ids = {int(x) for x in fields["movable"].split(",") if x}
            rs.null_actions = {int(x) for x in fields["null"].split(",") if x}
            for tok in fields["displacements"].split():
                a, sp, d = tok.split(":")
                rs.displacements[(int(a), int(sp))] = tuple(
                    int(v) for v in d.split(","))
            for rest in rule_lines:
                ordinal, action, reward, identity, cells = rest.split(" ", 4)
                bcells, acells = [], []
                for tok in cells.split(";"):
                    dr, dc, bv, av = tok.split(",")
                    bcells.append((int(dr), int(dc), int(bv)))
                    acells.append((int(dr), int(dc), int(av)))
                rule = RewriteRule(
                    int(action), LocalPattern(tuple(sorted(bcells))),
                    LocalPattern(tuple(sorted(acells))), float(reward),
                    ordinal=int(ordinal), identity=bool(int(identity)))
                rs._by_action[rule.action][rule.before] = rule
                rs._next_ordinal = max(rs._next_ordinal, rule.ordinal + 1)
            rs._version += 1
            return rs
        except (VocabularyMismatchError, FormatError):
            raise
        except Exception as e:
            raise FormatError(f"malformed rule stream: {e}") from e

    def content_equal(self, other: "RuleSet") -> bool:
        return self.save() == other.save()

    def dump_text(self, action_names=None) -> str:
        """Human-readable dump: each rule as two small ASCII pattern grids."""
        out = []
        for r in self.all_rules():
            name = action_names[r.action] if action_names else str(r.action)
            tag = " (identity)" if r.identity else ""
            out.append(f"#{r.ordinal} action={name} reward={r.reward}{tag}")
            out.append(_side_by_side(_ascii_grid(r.before), _ascii_grid(r.after)))
        return "\n".join(out) + ("\n" if out else "")


def _ascii_grid(pattern: LocalPattern) -> list[str]:
    rows = [dr for dr, _, _ in pattern.cells]
    cols = [dc for _, dc, _ in pattern.cells]
    r0, c0 = min(rows), min(cols)
    grid = [["·" for _ in range(max(cols) - c0 + 1)]
            for _ in range(max(rows) - r0 + 1)]
    for dr, dc, v in pattern.cells:
        grid[dr - r0][dc - c0] = _GLYPHS[v % len(_GLYPHS)]
    return ["".join(row) for row in grid]


_GLYPHS = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _side_by_side(left: list[str], right: list[str]) -> str:
    height = max(len(left), len(right))
    width = max(len(s) for s in left)
    lines = []
    for i in range(height):
        l = left[i] if i < len(left) else ""
        r = right[i] if i < len(right) else ""
        sep = " -> " if i == height // 2 else "    "
        lines.append(f"  {l:<{width}}{sep}{r}")
    return "\n".join(lines)


def rules_sha(rules: RuleSet) -> str:
    return hashlib.sha256(rules.save()).hexdigest()


def learn_rule(s: np.ndarray, s_next: np.ndarray, action: int, reward: float,
               rules: RuleSet, agent_pos: tuple[int, int]) -> RuleSet:
    """Functional-style wrapper: learn one transition, return the table."""
    rules.learn(s, s_next, action, reward, agent_pos)
    return rules


def apply(rules: RuleSet, s: np.ndarray, action: int,
          agent_pos: tuple[int, int]) -> Prediction:
    return rules.apply(s, action, agent_pos)
