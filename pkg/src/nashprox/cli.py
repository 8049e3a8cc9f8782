"""Command-line interface.

Subcommands: ``preflight`` (contraction report), ``run`` (full experiment),
``bounds`` (theoretical-bound audit without trajectories), ``fit``
(inverse-square fit of a threshold table), ``compare`` (proximal scheme vs
the plain stochastic-gradient baseline).  Exit codes: 0 success, 1 usage,
2 preflight failure, 3 runtime error.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import metrics as met
from .errors import InvalidArgument, PreflightFailure
from .experiment import (
    ExperimentConfig,
    build_game,
    certified_q,
    preflight,
    resolve_schedule,
    run_comparison,
    run_experiment,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PREFLIGHT = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nashprox",
        description="Inexact proximal best-response solvers for stochastic "
        "Nash games: preflight, benchmark runs, and bound audits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        p.add_argument("--config", type=Path, required=needs_config,
                       help="experiment TOML")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--trajectories", type=int, default=None,
                       help="override trajectory count")
        p.add_argument("--force", action="store_true",
                       help="run despite a failed contraction preflight")

    add_common(sub.add_parser("preflight", help="contraction certification"))
    add_common(sub.add_parser("run", help="run the configured experiment"))
    add_common(sub.add_parser("bounds", help="evaluate theoretical bounds"))
    cmp_p = sub.add_parser("compare", help="proximal scheme vs SG baseline")
    add_common(cmp_p)
    cmp_p.add_argument("--sg-iters", type=int, default=None)
    fit_p = sub.add_parser("fit", help="inverse-square fit of a K(eps) table")
    fit_p.add_argument("--in", dest="infile", type=Path, required=True,
                       help="CSV with epsilon,sg_steps columns")
    return parser


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["out_dir"] = str(args.out)
    if getattr(args, "trajectories", None) is not None:
        updates["trajectories"] = args.trajectories
    if getattr(args, "force", False):
        updates["force"] = True
    return dataclasses.replace(cfg, **updates) if updates else cfg


def cmd_preflight(args) -> int:
    cfg = load_config(args)
    report, ok = preflight(cfg)
    print(report.to_json())
    if args.out is not None:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "preflight.json").write_text(report.to_json() + "\n")
    return EXIT_OK if ok or cfg.force else EXIT_PREFLIGHT


def cmd_run(args) -> int:
    cfg = load_config(args)
    result = run_experiment(cfg)
    last_u = result.metrics.u[-1]
    print(f"wrote {result.out_dir} (final u = {last_u:.6g}, "
          f"iters = {result.metrics.n_iters})")
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = load_config(args)
    game = build_game(cfg)
    report, ok = preflight(cfg, game)
    if not ok and not cfg.force:
        print(report.to_json())
        return EXIT_PREFLIGHT
    schedule = resolve_schedule(cfg, game, report)
    reference = met.reference_equilibrium(game, force=cfg.force, report=report)
    c0 = met.initial_error_constant(game, reference.profile)
    q_cert = certified_q(game)
    eta = schedule.eta
    grid = np.geomspace(max(10 * cfg.eps_floor, 0.5), cfg.eps_floor, 5)

    out = {
        "a2": report.a2, "a_inf": report.a_inf, "rho": report.rho,
        "eta": eta, "c0": c0,
        "q_certified": [float(q) for q in q_cert],
    }
    if cfg.scheme == "synchronous":
        b = met.sync_bound(report.a2, eta, c0, game.n_players)
        out["q"] = b.q
        out["d_const"] = b.d_const
        out["complexity"] = {
            f"{eps:.6g}": met.sync_complexity(float(q_cert.max()), b, eps)
            for eps in grid
        }
    elif cfg.scheme in ("randomized", "poisson"):
        from .experiment import resolve_scheme

        kind = resolve_scheme(cfg, game).kind
        p = kind.p if hasattr(kind, "p") else kind.probabilities()
        b = met.randomized_bound(report.a2, eta, p, c0)
        out.update({"eta_tilde": b.eta_tilde, "eta_zero": b.eta_zero, "q": b.q})
        out["complexity"] = {
            f"{eps:.6g}": met.randomized_complexity(
                float(q_cert.max()), b, eps, float(np.max(p))
            )
            for eps in grid
        }
    else:
        b1 = cfg.b1 if cfg.scheme == "asynchronous" else game.n_players
        b = met.asynchronous_bound(report.a_inf, eta, b1, cfg.b2, c0)
        out.update({"rho_env": b.rho, "n0": b.n0, "q": b.q, "d_const": b.d_const})
        out["complexity"] = {
            f"{eps:.6g}": met.asynchronous_complexity(float(q_cert.max()), b, eps)
            for eps in grid
        }
    text = json.dumps(out, indent=2)
    print(text)
    if args.out is not None:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "bounds.json").write_text(text + "\n")
    return EXIT_OK


def cmd_fit(args) -> int:
    rows = []
    lines = Path(args.infile).read_text().strip().splitlines()
    for line in lines[1:]:
        eps_s, steps_s = line.split(",")[:2]
        rows.append((float(eps_s), float(steps_s) if steps_s else None))
    (coef, intercept), r2 = met.fit_inverse_square(rows)
    print(json.dumps({"coefficient": coef, "intercept": intercept, "r2": r2}))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = load_config(args)
    summary, _, _ = run_comparison(cfg, sg_iters=args.sg_iters)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


COMMANDS = {
    "preflight": cmd_preflight,
    "run": cmd_run,
    "bounds": cmd_bounds,
    "fit": cmd_fit,
    "compare": cmd_compare,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except PreflightFailure as exc:
        print(f"preflight failure: {exc}", file=sys.stderr)
        return EXIT_PREFLIGHT
    except (InvalidArgument, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # runtime failures map to a dedicated code
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
