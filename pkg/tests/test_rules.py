import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vrr import gridworld as gw
from vrr.errors import ConflictError, FormatError, VocabularyMismatchError
from vrr.gridworld import objects as obj
from vrr.rules import (KNOWN, UNKNOWN, LocalPattern, RuleSet, diff_mask,
                       learn_rule)

AGENT_IDS = frozenset({obj.AGENT, obj.AGENT_ON_TARGET})


def _rs():
    return RuleSet("sokoban", 4, agent_ids=AGENT_IDS)


def test_diff_mask_swap():
    s = np.array([[obj.AGENT, obj.FLOOR]], dtype=np.uint8)
    s2 = np.array([[obj.FLOOR, obj.AGENT]], dtype=np.uint8)
    assert diff_mask(s, s2, (0, 0)) == {(0, 0), (0, 1)}


def test_diff_mask_empty_and_errors():
    s = np.array([[1, 2]], dtype=np.uint8)
    assert diff_mask(s, s, (0, 0)) == frozenset()
    with pytest.raises(ValueError):
        diff_mask(s, np.zeros((2, 2), dtype=np.uint8), (0, 0))


def test_diff_mask_is_agent_relative():
    s = np.zeros((5, 5), dtype=np.uint8)
    s2 = s.copy()
    s[2, 2] = obj.AGENT
    s2[2, 3] = obj.AGENT
    assert diff_mask(s, s2, (2, 2)) == {(0, 0), (0, 1)}


grids = st.integers(0, 4).flatmap(lambda _n: st.tuples(
    st.integers(2, 5), st.integers(2, 5)).flatmap(lambda hw: st.lists(
        st.integers(0, 6), min_size=hw[0] * hw[1], max_size=hw[0] * hw[1]
    ).map(lambda vals: np.array(vals, dtype=np.uint8).reshape(hw))))


@given(grids, st.data())
@settings(max_examples=40, deadline=None)
def test_diff_mask_definition_property(s, data):
    s2 = s.copy()
    flips = data.draw(st.lists(st.tuples(
        st.integers(0, s.shape[0] - 1), st.integers(0, s.shape[1] - 1)),
        max_size=4))
    for r, c in flips:
        s2[r, c] = (s2[r, c] + 1) % 7
    pos = (s.shape[0] // 2, s.shape[1] // 2)
    mask = diff_mask(s, s2, pos)
    expected = {(int(r) - pos[0], int(c) - pos[1])
                for r, c in np.argwhere(s != s2)}
    assert mask == frozenset(expected)


def test_pattern_equality_is_order_free():
    a = LocalPattern(((0, 0, 5), (0, 1, 1)))
    b = LocalPattern.from_grid(
        np.array([[5, 1]], dtype=np.uint8), (0, 0), [(0, 1), (0, 0)])
    assert a == b and hash(a) == hash(b)
    assert a.mask == frozenset({(0, 0), (0, 1)})


def _move_transition():
    s = np.array([[0, 0, 0, 0, 0],
                  [0, obj.AGENT, obj.FLOOR, obj.FLOOR, 0],
                  [0, 0, 0, 0, 0]], dtype=np.uint8)
    s2 = s.copy()
    s2[1, 1], s2[1, 2] = obj.FLOOR, obj.AGENT
    return s, s2


def test_learn_rule_and_idempotence():
    rs = _rs()
    s, s2 = _move_transition()
    assert learn_rule(s, s2, obj.RIGHT, 0.0, rs, (1, 1)) is rs
    assert len(rs) == 1
    rs.learn(s, s2, obj.RIGHT, 0.0, (1, 1))
    assert len(rs) == 1  # replaying the identical transition changes nothing


def test_learn_conflicting_value_raises():
    rs = _rs()
    s, s2 = _move_transition()
    rs.learn(s, s2, obj.RIGHT, 0.0, (1, 1))
    with pytest.raises(ConflictError):
        rs.learn(s, s2, obj.RIGHT, 0.5, (1, 1))


def test_blocked_after_move_learns_wall_identity():
    rs = _rs()
    s, s2 = _move_transition()
    rs.learn(s, s2, obj.RIGHT, 0.0, (1, 1))
    blocked = np.array([[0, 0, 0],
                        [0, obj.AGENT, 0],
                        [0, 0, 0]], dtype=np.uint8)
    rule = rs.learn(blocked, blocked, obj.RIGHT, 0.0, (1, 1))
    assert rule.identity
    assert rule.before.cells == ((0, 0, obj.AGENT), (0, 1, obj.WALL))
    assert rule.after == rule.before


def test_translation_invariance():
    rs = _rs()
    s, s2 = _move_transition()
    rs.learn(s, s2, obj.RIGHT, 0.0, (1, 1))
    big = np.zeros((9, 9), dtype=np.uint8)
    big[1:-1, 1:-1] = obj.FLOOR
    big[6, 3] = obj.AGENT
    pred = rs.apply(big, obj.RIGHT, (6, 3))
    assert pred.status == KNOWN
    assert pred.next_state[6, 3] == obj.FLOOR and pred.next_state[6, 4] == obj.AGENT


def test_locality_outside_mask_preserved():
    rs = _rs()
    s, s2 = _move_transition()
    rs.learn(s, s2, obj.RIGHT, 0.0, (1, 1))
    rng = np.random.default_rng(0)
    grid = rng.integers(0, 5, size=(7, 7), dtype=np.uint8)
    grid[3, 3], grid[3, 4] = obj.AGENT, obj.FLOOR
    pred = rs.apply(grid, obj.RIGHT, (3, 3))
    assert pred.status == KNOWN
    touched = {(3, 3), (3, 4)}
    for r in range(7):
        for c in range(7):
            if (r, c) not in touched:
                assert pred.next_state[r, c] == grid[r, c]


def test_apply_empty_ruleset_unknown():
    rs = _rs()
    s, _ = _move_transition()
    pred = rs.apply(s, obj.RIGHT, (1, 1))
    assert pred.status == UNKNOWN and pred.next_state is None


def test_apply_skips_rules_shifted_out_of_bounds():
    rs = _rs()
    s, s2 = _move_transition()
    rs.learn(s, s2, obj.RIGHT, 0.0, (1, 1))
    edge = np.array([[obj.AGENT]], dtype=np.uint8)
    assert rs.apply(edge, obj.RIGHT, (0, 0)).status == UNKNOWN


def test_specificity_push_rule_wins_over_blocked_identity():
    rs = _rs()
    s, s2 = _move_transition()
    rs.learn(s, s2, obj.RIGHT, 0.0, (1, 1))
    # blocked push (box against wall) before any successful push
    row = np.array([[0, 0, 0, 0],
                    [0, obj.AGENT, obj.BOX, 0],
                    [0, 0, 0, 0]], dtype=np.uint8)
    rs.learn(row, row, obj.RIGHT, 0.0, (1, 1))
    # a successful push elsewhere
    ps = np.array([[0, 0, 0, 0, 0],
                   [0, obj.AGENT, obj.BOX, obj.FLOOR, 0],
                   [0, 0, 0, 0, 0]], dtype=np.uint8)
    ps2 = ps.copy()
    ps2[1, 1], ps2[1, 2], ps2[1, 3] = obj.FLOOR, obj.AGENT, obj.BOX
    rs.learn(ps, ps2, obj.RIGHT, 0.0, (1, 1))
    pushable = rs.apply(ps, obj.RIGHT, (1, 1))
    assert pushable.status == KNOWN and not pushable.rule.identity
    blocked_now = rs.apply(row, obj.RIGHT, (1, 1))
    # stale 2-cell identity retired once boxes are known to move
    assert blocked_now.status == UNKNOWN
    rs.learn(row, row, obj.RIGHT, 0.0, (1, 1))
    relearned = rs.apply(row, obj.RIGHT, (1, 1))
    assert relearned.status == KNOWN and relearned.rule.identity
    assert (0, 2) in relearned.rule.before.mask  # blocker now in scope


def test_monotone_rule_count_and_ordinals():
    rs = _rs()
    s, s2 = _move_transition()
    counts = []
    rs.learn(s, s2, obj.RIGHT, 0.0, (1, 1))
    counts.append(len(rs))
    blocked = np.array([[0, 0], [0, obj.AGENT]], dtype=np.uint8)
    rs.learn(blocked, blocked, obj.RIGHT, 0.0, (1, 1))
    counts.append(len(rs))
    assert counts == sorted(counts)
    ordinals = [r.ordinal for r in rs.all_rules()]
    assert ordinals == sorted(ordinals) == list(range(len(rs)))


def test_null_action_bookkeeping():
    rs = _rs()
    blocked = np.array([[0, 0], [0, obj.AGENT]], dtype=np.uint8)
    rs.learn(blocked, blocked, obj.RIGHT, 0.0, (1, 1))
    assert obj.RIGHT in rs.null_actions  # never seen to change anything
    s, s2 = _move_transition()
    rs.learn(s, s2, obj.RIGHT, 0.0, (1, 1))
    assert obj.RIGHT not in rs.null_actions  # superseded by observed change


def test_save_load_round_trip():
    rs = _rs()
    s, s2 = _move_transition()
    rs.learn(s, s2, obj.RIGHT, 0.0, (1, 1))
    blocked = np.array([[0, 0], [0, obj.AGENT]], dtype=np.uint8)
    rs.learn(blocked, blocked, obj.UP, 0.0, (1, 1))
    rs.vocab_hash = "cafe"
    data = rs.save()
    again = RuleSet.load(data)
    assert again.save() == data
    assert again.agent_ids == rs.agent_ids
    assert again.null_actions == rs.null_actions
    assert [r.ordinal for r in again.all_rules()] == [r.ordinal for r in rs.all_rules()]


def test_load_vocab_mismatch_and_malformed():
    rs = _rs()
    rs.vocab_hash = "aaaa"
    data = rs.save()
    with pytest.raises(VocabularyMismatchError):
        RuleSet.load(data, expect_vocab_hash="bbbb")
    with pytest.raises(FormatError):
        RuleSet.load(b"not a rule file")
    with pytest.raises(FormatError):
        RuleSet.load(b"vrr-rules 99\ngame sokoban 4\n")


def test_cross_load_predictions_match(sokoban_trained):
    rules, _run, pipeline = sokoban_trained
    rules.vocab_hash = pipeline.vocab.content_hash()
    again = RuleSet.load(rules.save())
    rng = random.Random(1)
    for _ in range(40):
        lvl = gw.generate_sokoban(rng.randrange(10_000), 7, 1)
        grid = pipeline.observe(lvl)
        pos = pipeline.locate(grid)
        a = rng.randrange(4)
        p1, p2 = rules.apply(grid, a, pos), again.apply(grid, a, pos)
        assert p1.status == p2.status and p1.reward == p2.reward
        if p1.status == KNOWN:
            assert np.array_equal(p1.next_state, p2.next_state)


def test_closure_under_replay(sokoban_pipeline):
    pipeline = sokoban_pipeline
    rng = random.Random(7)
    cur = gw.generate_sokoban(123, 7, 1)
    pos = cur.agent_pos
    records = []
    for _ in range(80):
        a = rng.randrange(4)
        out = gw.step(cur, a)
        s = pipeline.observe(cur)
        s2 = pipeline.observe(out.next_state)
        records.append((s, a, s2, out.reward, pos))
        if out.done:
            cur = gw.generate_sokoban(rng.randrange(10_000), 7, 1)
            pos = cur.agent_pos
        else:
            pos = pipeline.track(s, pos, s2)
            cur = out.next_state.with_steps(0)
    rs = pipeline.new_ruleset("sokoban")
    rs.learn_trajectory(records)
    for s, a, s2, reward, pos in records:
        pred = rs.apply(s, a, pos)
        assert pred.status == KNOWN
        assert pred.reward == reward
        assert np.array_equal(pred.next_state, s2)


def test_prediction_exactness_on_trained_rules(sokoban_trained):
    rules, _run, pipeline = sokoban_trained
    rng = random.Random(42)
    known = total = 0
    for _ in range(25):
        cur = gw.generate_sokoban(200_000 + rng.randrange(10_000), 7, 1)
        for _ in range(12):
            a = rng.randrange(4)
            truth = gw.step(cur, a)
            grid = pipeline.observe(cur)
            pred = rules.apply(grid, a, pipeline.locate(grid))
            total += 1
            if pred.status == KNOWN:
                known += 1
                assert np.array_equal(pred.next_state,
                                      pipeline.observe(truth.next_state))
                assert pred.reward == truth.reward
            if truth.done:
                break
            cur = truth.next_state.with_steps(0)
    assert known > total * 0.5  # unknowns are rare leftovers, never wrong


def test_exhaustive_oracle_equivalence_on_one_level(sokoban_trained):
    """Every (state, action) reachable in one trained-size level: a known
    prediction equals the simulator, state and reward."""
    rules, _run, pipeline = sokoban_trained
    lvl = gw.generate_sokoban(808_080, 7, 1)
    states = gw.reachable_states(lvl)
    assert len(states) > 10
    checked = 0
    for state in states:
        grid = pipeline.observe(state)
        pos = pipeline.locate(grid)
        for action in range(4):
            truth = gw.step(state, action)
            pred = rules.apply(grid, action, pos)
            if pred.status == KNOWN:
                checked += 1
                assert np.array_equal(pred.next_state,
                                      pipeline.observe(truth.next_state))
                assert pred.reward == truth.reward
    assert checked > 3 * len(states)  # near-complete coverage


def test_dump_text_shows_patterns(sokoban_trained):
    rules, _, _ = sokoban_trained
    text = rules.dump_text(obj.SOKOBAN_ACTIONS)
    assert "action=right" in text or "action=up" in text
    assert "->" in text
