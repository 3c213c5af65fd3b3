#!/usr/bin/env python3
"""Throughput of the rule matcher: numba kernel vs plain-Python source vs the
numpy-level reference matcher, plus end-to-end planning time.

Run:  python3 benchmarks/bench_kernels.py
The selected kernel follows VRR_NUMBA (set VRR_NUMBA=0 to force the fallback
everywhere and compare externally with hyperfine or repeated runs).
"""

import random
import time

import vrr._kernels as kernels
from vrr import gridworld as gw
from vrr.agent import TrainConfig, train_from_scratch
from vrr.planner import bfs_plan


def main():
    print(f"numba enabled: {kernels.ENABLED}")
    cfg = TrainConfig(kind="sokoban", size=7, n_boxes=1, seed=0, max_steps=8000)
    t0 = time.time()
    rules, _run, pipeline = train_from_scratch(cfg)
    print(f"trained table: {len(rules)} rules in {time.time()-t0:.1f}s")

    rng = random.Random(0)
    cases = []
    for _ in range(200):
        lvl = gw.generate_sokoban(rng.randrange(100_000), 7, 1)
        grid = pipeline.observe(lvl)
        cases.append((grid, pipeline.locate(grid), rng.randrange(4)))

    movable = rules._movable_vec()
    packed = {a: rules._compiled_for(a)[0] for a in range(4)}

    def timed(label, fn, n_iter):
        fn(*cases[0])  # warm any jit cache
        t = time.time()
        for _ in range(n_iter):
            for grid, pos, action in cases:
                fn(grid, pos, action)
        per = (time.time() - t) / (n_iter * len(cases)) * 1e6
        print(f"{label:<28s} {per:9.2f} us/match")
        return per

    def kernel_path(grid, pos, action):
        return kernels.match_first(grid, pos[0], pos[1], *packed[action], movable)

    def plain_path(grid, pos, action):
        return kernels._match_first(grid, pos[0], pos[1], *packed[action], movable)

    def reference_path(grid, pos, action):
        return rules.match_python(grid, action, pos)

    fast = timed("selected kernel", kernel_path, 50)
    slow = timed("unjitted kernel source", plain_path, 2)
    ref = timed("numpy reference matcher", reference_path, 2)
    print(f"speedup vs unjitted: {slow / fast:.1f}x, vs reference: {ref / fast:.1f}x")

    lvl = gw.generate_sokoban(424_242, 13, 1)
    grid = pipeline.observe(lvl)
    pos = pipeline.locate(grid)
    t = time.time()
    plan = bfs_plan(rules, grid, pos)
    print(f"13x13 plan: kind={plan.kind} len={len(plan.actions)} "
          f"nodes={plan.nodes_expanded} in {(time.time()-t)*1e3:.1f} ms")


if __name__ == "__main__":
    main()
