#!/usr/bin/env python3
"""Benchmark the jitted kernels against the pure-numpy fallback.

Runs the same synchronous portfolio workload in two subprocesses, one per
backend, checks the trajectories agree, and reports wall times.  The inner
projected-gradient loops dominate the runtime, which is exactly where the
JIT pays off.

Usage: python3 benchmarks/bench_backends.py [--iters 26] [--trajectories 8]
"""

import argparse
import json
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path

WORKER = r"""
import json, sys, time
import numpy as np
import nashprox
from nashprox.experiment import ExperimentConfig, build_game, resolve_schedule, resolve_scheme
from nashprox.contraction import analyze
from nashprox.schemes import run_trajectories

params = json.loads(sys.argv[1])
cfg = ExperimentConfig(
    game="portfolio", scheme="synchronous", major_iters=params["iters"],
    trajectories=params["trajectories"], kappa=3.2, seed=2,
    bound_audit=False,
)
game = build_game(cfg)
report = analyze(game.curvature, game.mu)
schedule = resolve_schedule(cfg, game, report)
scheme = resolve_scheme(cfg, game)

t0 = time.time()
run_trajectories(game, scheme, schedule)  # includes one-time jit compilation
warm = time.time() - t0

t0 = time.time()
records = run_trajectories(game, scheme, schedule)
hot = time.time() - t0

total_steps = sum(int(r.sg_cum[-1].sum()) for r in records)
final = records[0].profiles[-1]
json.dump({
    "backend": nashprox.BACKEND,
    "warm_s": warm,
    "hot_s": hot,
    "total_inner_steps": total_steps,
    "final_profile": ["%.17g" % v for v in final],
}, open(sys.argv[2], "w"))
"""


def run_backend(backend: str, params: dict) -> dict:
    env = dict(os.environ, NASHPROX_BACKEND=backend)
    with tempfile.NamedTemporaryFile(suffix=".json", delete=False) as f:
        out_path = f.name
    try:
        proc = subprocess.run(
            [sys.executable, "-c", WORKER, json.dumps(params), out_path],
            env=env, capture_output=True, text=True,
        )
        if proc.returncode != 0:
            raise RuntimeError(f"{backend} worker failed:\n{proc.stderr}")
        return json.loads(Path(out_path).read_text())
    finally:
        os.unlink(out_path)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--iters", type=int, default=42)
    parser.add_argument("--trajectories", type=int, default=8)
    args = parser.parse_args()
    params = {"iters": args.iters, "trajectories": args.trajectories}

    print(f"workload: synchronous portfolio, {args.iters} major iterations, "
          f"{args.trajectories} trajectories")
    results = {}
    for backend in ("numpy", "numba"):
        try:
            results[backend] = run_backend(backend, params)
        except RuntimeError as exc:
            print(f"{backend}: unavailable ({exc})")
    for backend, r in results.items():
        rate = r["total_inner_steps"] / r["hot_s"] / 1e6
        print(f"{backend:>6}: hot {r['hot_s']:.3f}s  (first run incl. any "
              f"compilation {r['warm_s']:.3f}s), {r['total_inner_steps']:,} "
              f"inner steps, {rate:.2f} M steps/s")
    if len(results) == 2:
        same = results["numpy"]["final_profile"] == results["numba"]["final_profile"]
        speedup = results["numpy"]["hot_s"] / results["numba"]["hot_s"]
        print(f"speedup (numba over numpy): {speedup:.1f}x; "
              f"identical trajectories: {same}")
        if not same:
            print("warning: backends disagree")
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
