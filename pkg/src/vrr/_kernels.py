"""Hot rule-matching kernel: numba-jitted with a plain-Python fallback.

The planner calls the matcher once per (state, action) node expansion, so this
loop dominates training and evaluation runtime. Rules arrive as flat arrays
(offsets, before-values) sorted in match priority order.

Set ``VRR_NUMBA=0`` to force the fallback; the numpy reference matcher lives
in ``rules.py`` and is compared against this path in tests and in
``benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import os

import numpy as np

_CARD_R = np.array([-1, 0, 1, 0], dtype=np.int64)
_CARD_C = np.array([0, 1, 0, -1], dtype=np.int64)
UNKNOWN_DELTA = 127  # sentinel for "displacement not yet known"


def _has_offset(drows, dcols, s0, cnt, dr, dc):
    for j in range(s0, s0 + cnt):
        if drows[j] == dr and dcols[j] == dc:
            return True
    return False


def _identity_eligible(grid, ar, ac, s0, cnt, drows, dcols, ddr, ddc, movable):
    # An identity (no-change) rule may only match when its mask covers every
    # cell the transition could depend on: the displacement cell, plus the
    # cell beyond it when the blocker is a movable object. With an unknown
    # displacement all four neighbours are required. Off-board cells are
    # never required.
    h, w = grid.shape
    if ddr != UNKNOWN_DELTA:
        r1 = ar + ddr
        c1 = ac + ddc
        if 0 <= r1 < h and 0 <= c1 < w:
            if not _has_offset(drows, dcols, s0, cnt, ddr, ddc):
                return False
            if movable[grid[r1, c1]] == 1:
                r2 = ar + 2 * ddr
                c2 = ac + 2 * ddc
                if 0 <= r2 < h and 0 <= c2 < w:
                    if not _has_offset(drows, dcols, s0, cnt, 2 * ddr, 2 * ddc):
                        return False
        return True
    for k in range(4):
        dr = _CARD_R[k]
        dc = _CARD_C[k]
        r1 = ar + dr
        c1 = ac + dc
        if r1 < 0 or r1 >= h or c1 < 0 or c1 >= w:
            continue
        if not _has_offset(drows, dcols, s0, cnt, dr, dc):
            return False
        if movable[grid[r1, c1]] == 1:
            r2 = ar + 2 * dr
            c2 = ac + 2 * dc
            if 0 <= r2 < h and 0 <= c2 < w:
                if not _has_offset(drows, dcols, s0, cnt, 2 * dr, 2 * dc):
                    return False
    return True


def _match_first(grid, ar, ac, starts, counts, drows, dcols, before,
                 identity, delta_r, delta_c, movable):
    """Index of the first rule whose before-pattern matches at the agent, or -1.

    Rules whose mask shifts out of bounds are skipped; identity rules must
    additionally pass the mask-sufficiency check above.
    """
    h, w = grid.shape
    for i in range(starts.shape[0]):
        s0 = starts[i]
        cnt = counts[i]
        ok = True
        for j in range(s0, s0 + cnt):
            r = ar + drows[j]
            c = ac + dcols[j]
            if r < 0 or r >= h or c < 0 or c >= w:
                ok = False
                break
            if grid[r, c] != before[j]:
                ok = False
                break
        if not ok:
            continue
        if identity[i] == 1 and not _identity_eligible(
            grid, ar, ac, s0, cnt, drows, dcols, delta_r[i], delta_c[i], movable
        ):
            continue
        return i
    return -1


ENABLED = os.environ.get("VRR_NUMBA", "1") != "0"
if ENABLED:
    try:
        from numba import njit

        _has_offset = njit(cache=True)(_has_offset)
        _identity_eligible = njit(cache=True)(_identity_eligible)
        match_first = njit(cache=True)(_match_first)
    except ImportError:  # pragma: no cover
        ENABLED = False
        match_first = _match_first
else:
    match_first = _match_first


def pack_rules(entries):
    """Flatten [(offsets, before_vals, identity, delta)] into kernel arrays.

    `offsets` is a sequence of (dr, dc); `delta` is (dr, dc) or None.
    """
    starts = np.zeros(len(entries), dtype=np.int64)
    counts = np.zeros(len(entries), dtype=np.int64)
    identity = np.zeros(len(entries), dtype=np.uint8)
    delta_r = np.full(len(entries), UNKNOWN_DELTA, dtype=np.int64)
    delta_c = np.full(len(entries), UNKNOWN_DELTA, dtype=np.int64)
    drows, dcols, before = [], [], []
    pos = 0
    for i, (offsets, values, is_identity, delta) in enumerate(entries):
        starts[i] = pos
        counts[i] = len(offsets)
        identity[i] = 1 if is_identity else 0
        if delta is not None:
            delta_r[i], delta_c[i] = delta
        for (dr, dc), v in zip(offsets, values):
            drows.append(dr)
            dcols.append(dc)
            before.append(v)
        pos += len(offsets)
    return (starts, counts,
            np.array(drows, dtype=np.int64),
            np.array(dcols, dtype=np.int64),
            np.array(before, dtype=np.uint8),
            identity, delta_r, delta_c)
