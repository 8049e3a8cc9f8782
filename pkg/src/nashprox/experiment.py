"""Experiment configuration, orchestration, and artifact emission.

An experiment is fully described by a TOML config: game + overrides, scheme,
inner schedule, trajectory count, seed, and output options.  Runs write a
contraction preflight report, per-trajectory CSVs, aggregate metrics, a
threshold table, an optional bound audit, and a manifest carrying every
number needed to reproduce the run byte for byte.
"""

import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _toml, metrics as met
from ._backend import BACKEND
from .contraction import analyze
from .errors import InvalidArgument, PreflightFailure
from .game import GameSpec, diameter, project
from .games import (
    CapacityConfig,
    PortfolioConfig,
    build_capacity,
    build_portfolio,
)
from .sa import (
    InnerSchedule,
    Variant,
    q_constant_recourse,
    q_constant_smooth,
)
from .schemes import (
    Asynchronous,
    Cyclic,
    PoissonClock,
    Randomized,
    SchemeConfig,
    Synchronous,
    TrajectoryRecord,
    generate_update_sets,
    run_trajectories,
)
from .streams import GRAD, UPDATE_SETS, SampleStream

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PACKAGE_VERSION = "0.1.0"
FLOAT_FMT = "%.17g"

_SCHEME_KINDS = ("synchronous", "randomized", "poisson", "asynchronous", "cyclic")
_GAME_KINDS = ("portfolio", "capacity")


@dataclass(frozen=True)
class ExperimentConfig:
    game: str = "portfolio"
    game_overrides: dict = field(default_factory=dict)
    scheme: str = "synchronous"
    major_iters: int = 40
    trajectories: int = 50
    p: list = None                  # randomized activation probabilities
    rates: list = None              # poisson clock rates
    b1: int = 1
    b2: int = 0
    delay: object = "uniform"
    kappa: float = 2.0
    eta_from: str = "a2"            # a2 | ainf | explicit
    eta: float = None               # used when eta_from == "explicit"
    q_mode: str = "benchmark"       # benchmark | certified
    schedule_variant: str = "auto"  # auto | polynomial | fixed
    exponent: int = 2
    count: int = 1
    seed: int = 0
    out_dir: str = "results"
    eps_floor: float = 2.5e-3
    eps_points: int = 12
    bound_audit: bool = True
    force: bool = False

    def __post_init__(self):
        if self.game not in _GAME_KINDS:
            raise InvalidArgument(f"game must be one of {_GAME_KINDS}")
        if self.scheme not in _SCHEME_KINDS:
            raise InvalidArgument(f"scheme must be one of {_SCHEME_KINDS}")
        if self.eta_from not in ("a2", "ainf", "explicit"):
            raise InvalidArgument("eta_from must be a2, ainf, or explicit")
        if self.eta_from == "explicit" and self.eta is None:
            raise InvalidArgument("explicit eta selected but eta not given")
        if self.q_mode not in ("benchmark", "certified"):
            raise InvalidArgument("q_mode must be benchmark or certified")
        if self.schedule_variant not in ("auto", "polynomial", "fixed"):
            raise InvalidArgument("schedule_variant must be auto/polynomial/fixed")

    # -- TOML round trip ---------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "game": {"kind": self.game, **self.game_overrides},
            "scheme": {
                "kind": self.scheme,
                "major_iters": self.major_iters,
                "trajectories": self.trajectories,
                "b1": self.b1,
                "b2": self.b2,
                "delay": self.delay,
            },
            "schedule": {
                "kappa": self.kappa,
                "eta_from": self.eta_from,
                "q_mode": self.q_mode,
                "variant": self.schedule_variant,
                "exponent": self.exponent,
                "count": self.count,
            },
            "run": {
                "seed": self.seed,
                "out_dir": self.out_dir,
                "eps_floor": self.eps_floor,
                "eps_points": self.eps_points,
                "bound_audit": self.bound_audit,
                "force": self.force,
            },
        }
        if self.p is not None:
            d["scheme"]["p"] = list(self.p)
        if self.rates is not None:
            d["scheme"]["rates"] = list(self.rates)
        if self.eta is not None:
            d["schedule"]["eta"] = self.eta
        return d

    def to_toml(self) -> str:
        return _toml.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        game_tbl = dict(d.pop("game", {}))
        scheme_tbl = dict(d.pop("scheme", {}))
        sched_tbl = dict(d.pop("schedule", {}))
        run_tbl = dict(d.pop("run", {}))
        if d:
            raise InvalidArgument(f"unknown config sections: {sorted(d)}")

        kw = {}
        kw["game"] = game_tbl.pop("kind", "portfolio")
        kw["game_overrides"] = game_tbl

        kw["scheme"] = scheme_tbl.pop("kind", "synchronous")
        for key in ("major_iters", "trajectories", "b1", "b2", "delay", "p", "rates"):
            if key in scheme_tbl:
                kw[key] = scheme_tbl.pop(key)
        if scheme_tbl:
            raise InvalidArgument(f"unknown scheme keys: {sorted(scheme_tbl)}")

        renames = {"variant": "schedule_variant"}
        for key in ("kappa", "eta_from", "eta", "q_mode", "variant", "exponent", "count"):
            if key in sched_tbl:
                kw[renames.get(key, key)] = sched_tbl.pop(key)
        if sched_tbl:
            raise InvalidArgument(f"unknown schedule keys: {sorted(sched_tbl)}")

        for key in ("seed", "out_dir", "eps_floor", "eps_points", "bound_audit", "force"):
            if key in run_tbl:
                kw[key] = run_tbl.pop(key)
        if run_tbl:
            raise InvalidArgument(f"unknown run keys: {sorted(run_tbl)}")
        return cls(**kw)

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(tomllib.loads(text))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_toml(Path(path).read_text())


# ---------------------------------------------------------------------------
# resolution helpers


def build_game(cfg: ExperimentConfig) -> GameSpec:
    if cfg.game == "portfolio":
        base = PortfolioConfig()
        game_cfg = _apply_overrides(base, cfg.game_overrides)
        return build_portfolio(game_cfg)
    base = CapacityConfig()
    game_cfg = _apply_overrides(base, cfg.game_overrides)
    return build_capacity(game_cfg)


def _apply_overrides(base, overrides: dict):
    fields = {f.name for f in dataclasses.fields(base)}
    bad = set(overrides) - fields
    if bad:
        raise InvalidArgument(f"unknown game overrides: {sorted(bad)}")
    coerced = {
        k: tuple(v) if isinstance(v, list) else v for k, v in overrides.items()
    }
    return dataclasses.replace(base, **coerced)


def certified_q(game: GameSpec) -> np.ndarray:
    """Per-player second-moment constants from the analytic bounds."""
    out = []
    for p in game.players:
        if p.recourse is not None:
            out.append(
                q_constant_recourse(
                    p.grad_bound, p.recourse.subgrad_bound,
                    p.recourse.first_stage_bound, game.mu, diameter(p.box),
                )
            )
        else:
            out.append(q_constant_smooth(p.grad_bound, game.mu, diameter(p.box)))
    return np.array(out)


def benchmark_q(variant: Variant, eta: float) -> float:
    """Constants reproducing the benchmark step rules.

    Synchronous/asynchronous runs take ceil(1/eta^(2k)) steps and the
    randomized runs ceil(1/eta^(2(beta+1))); in the schedule's normal form
    those correspond to q = eta^2 and q = 1 respectively.
    """
    if variant in (Variant.SYNCHRONOUS, Variant.ASYNCHRONOUS):
        return eta * eta
    return 1.0


def resolve_schedule(cfg: ExperimentConfig, game: GameSpec, report):
    """Translate config knobs into an InnerSchedule plus derived constants."""
    variant = {
        "synchronous": Variant.SYNCHRONOUS,
        "randomized": Variant.RANDOMIZED,
        "poisson": Variant.RANDOMIZED,
        "asynchronous": Variant.ASYNCHRONOUS,
        "cyclic": Variant.CYCLIC,
    }[cfg.scheme]
    if cfg.schedule_variant == "polynomial":
        variant = Variant.POLYNOMIAL_UNSUMMABLE
    elif cfg.schedule_variant == "fixed":
        variant = Variant.FIXED

    if cfg.eta_from == "explicit":
        eta = float(cfg.eta)
    else:
        base = report.a2 if cfg.eta_from == "a2" else report.a_inf
        eta = float(base ** (cfg.kappa / 2.0))

    if variant in (Variant.POLYNOMIAL_UNSUMMABLE, Variant.FIXED):
        q = 1.0
    elif cfg.q_mode == "certified":
        q = certified_q(game)
    else:
        q = benchmark_q(variant, eta)
    return InnerSchedule(
        variant, eta=eta, q_const=q, n_players=game.n_players,
        exponent=cfg.exponent, count=cfg.count,
    )


def resolve_scheme(cfg: ExperimentConfig, game: GameSpec) -> SchemeConfig:
    n = game.n_players
    if cfg.scheme == "synchronous":
        kind = Synchronous()
    elif cfg.scheme == "randomized":
        p = np.full(n, 1.0 / n) if cfg.p is None else np.asarray(cfg.p, dtype=float)
        kind = Randomized(p=p)
    elif cfg.scheme == "poisson":
        rates = np.ones(n) if cfg.rates is None else np.asarray(cfg.rates, dtype=float)
        kind = PoissonClock(rates=rates)
    elif cfg.scheme == "cyclic":
        kind = Cyclic(b2=cfg.b2, delay=_parse_delay(cfg.delay))
    else:
        # materialize shared update sets once so every trajectory sees the
        # same deterministic activation pattern
        sets = generate_update_sets(
            n, cfg.major_iters, cfg.b1,
            SampleStream(cfg.seed).substream(UPDATE_SETS).generator(),
        )
        kind = Asynchronous(
            b1=cfg.b1, b2=cfg.b2, update_sets=sets, delay=_parse_delay(cfg.delay)
        )
    return SchemeConfig(
        kind=kind, major_iters=cfg.major_iters,
        trajectories=cfg.trajectories, seed=cfg.seed,
    )


def _parse_delay(delay):
    if isinstance(delay, str) and delay != "uniform":
        raise InvalidArgument("delay must be 'uniform' or an integer")
    return delay


def preflight(cfg: ExperimentConfig, game: GameSpec = None):
    game = build_game(cfg) if game is None else game
    report = analyze(game.curvature, game.mu)
    needs_inf = cfg.scheme in ("asynchronous", "cyclic")
    ok = report.ok_infnorm if needs_inf else report.ok_2norm
    return report, ok


# ---------------------------------------------------------------------------
# running and emission


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    report: object
    reference: object
    records: list
    metrics: object
    eps_table: list
    schedule: InnerSchedule
    out_dir: Path = None


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    game = build_game(cfg)
    report, ok = preflight(cfg, game)
    if not ok and not cfg.force:
        raise PreflightFailure(
            "contraction preflight failed for the configured scheme; "
            "set force=true to run anyway"
        )
    schedule = resolve_schedule(cfg, game, report)
    scheme_cfg = resolve_scheme(cfg, game)
    reference = met.reference_equilibrium(game, force=cfg.force, report=report)
    records = run_trajectories(game, scheme_cfg, schedule)
    m = met.compute_metrics(records, reference.profile)

    sg_series = m.sg_cum.mean(axis=1)
    try:
        grid = met.default_eps_grid(m.u[0], cfg.eps_floor, cfg.eps_points)
    except InvalidArgument:
        grid = np.geomspace(max(m.u[0], 1e-6), cfg.eps_floor, cfg.eps_points)
    eps_table = met.k_of_epsilon(m.u, sg_series, grid)

    result = ExperimentResult(
        config=cfg, report=report, reference=reference, records=records,
        metrics=m, eps_table=eps_table, schedule=schedule,
    )
    if write:
        result.out_dir = emit_artifacts(result, game)
    return result


def emit_artifacts(result: ExperimentResult, game: GameSpec) -> Path:
    cfg = result.config
    out = Path(cfg.out_dir)
    (out / "trajectories").mkdir(parents=True, exist_ok=True)

    (out / "preflight.json").write_text(result.report.to_json() + "\n")
    (out / "manifest.json").write_text(
        json.dumps(build_manifest(result, game), indent=2) + "\n"
    )

    xstar = result.reference.profile
    offsets = game.offsets()
    dims = game.dims
    max_dim = max(dims)
    for t, rec in enumerate(result.records):
        path = out / "trajectories" / f"traj_{t:03d}.csv"
        _write_trajectory_csv(path, rec, xstar, offsets, max_dim)

    _write_metrics_csv(out / "metrics.csv", result.metrics, game.n_players)
    _write_eps_csv(out / "k_of_eps.csv", result.eps_table)
    if cfg.bound_audit:
        audit = bound_audit(result, game)
        (out / "bounds_audit.json").write_text(json.dumps(audit, indent=2) + "\n")
    return out


def _fmt(x) -> str:
    return FLOAT_FMT % float(x)


def _write_trajectory_csv(path, rec: TrajectoryRecord, xstar, offsets, max_dim):
    lines = ["k,player,err_2," + ",".join(f"err_b{c}" for c in range(max_dim)) + ",sg_cum"]
    n = len(offsets) - 1
    for k in range(rec.profiles.shape[0]):
        for i in range(n):
            lo, hi = offsets[i], offsets[i + 1]
            err = rec.profiles[k, lo:hi] - xstar.data[lo:hi]
            cols = [str(k), str(i), _fmt(np.linalg.norm(err))]
            cols += [_fmt(e) for e in err]
            cols += [""] * (max_dim - (hi - lo))
            cols.append(str(int(rec.sg_cum[k, i])))
            lines.append(",".join(cols))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_metrics_csv(path, m, n_players):
    header = "k,u_k,inf_metric,variance," + ",".join(
        f"sg_cum_p{i + 1}" for i in range(n_players)
    )
    lines = [header]
    for k in range(len(m.u)):
        cols = [str(k), _fmt(m.u[k]), _fmt(m.inf_metric[k]), _fmt(m.variance[k])]
        cols += [_fmt(m.sg_cum[k, i]) for i in range(n_players)]
        lines.append(",".join(cols))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_eps_csv(path, table):
    lines = ["epsilon,sg_steps"]
    for eps, steps in table:
        lines.append(f"{_fmt(eps)},{'' if steps is None else _fmt(steps)}")
    Path(path).write_text("\n".join(lines) + "\n")


def build_manifest(result: ExperimentResult, game: GameSpec) -> dict:
    import numpy

    cfg = result.config
    sched = result.schedule
    manifest = {
        "config": cfg.to_dict(),
        "derived": {
            "a2": result.report.a2,
            "a_inf": result.report.a_inf,
            "rho": result.report.rho,
            "eta": sched.eta,
            "q_const": [float(q) for q in np.atleast_1d(sched.q_const)],
            "schedule_variant": sched.variant.value,
            "mu": game.mu,
            "n_players": game.n_players,
            "dims": list(game.dims),
            "reference_residual": result.reference.residual,
            "reference_cross_gap": result.reference.cross_gap,
        },
        "environment": {
            "package_version": PACKAGE_VERSION,
            "numpy_version": numpy.__version__,
            "backend": BACKEND,
        },
    }
    try:
        import numba

        manifest["environment"]["numba_version"] = numba.__version__
    except ImportError:
        pass
    return manifest


def bound_audit(result: ExperimentResult, game: GameSpec) -> dict:
    """Envelope constants and a per-iteration dominance table."""
    cfg = result.config
    report = result.report
    m = result.metrics
    c0 = met.initial_error_constant(game, result.reference.profile)
    ks = np.arange(len(m.u))
    eta = result.schedule.eta

    entry = {"c0": c0, "eta": eta}
    if cfg.scheme in ("synchronous",):
        b = met.sync_bound(report.a2, eta, c0, game.n_players)
        env = b.envelope(ks)
        entry.update({"kind": "synchronous", "a": b.a, "c": b.c, "q": b.q,
                      "d_const": b.d_const})
    elif cfg.scheme in ("randomized", "poisson"):
        scheme_cfg = resolve_scheme(cfg, game)
        p = (scheme_cfg.kind.p if cfg.scheme == "randomized"
             else scheme_cfg.kind.probabilities())
        b = met.randomized_bound(report.a2, eta, p, c0)
        env = b.envelope(ks)
        entry.update({
            "kind": "randomized", "a_tilde": b.a_tilde,
            "eta_tilde": b.eta_tilde, "eta_zero": b.eta_zero, "q": b.q,
            "c0_tilde": b.c0_tilde, "d_tilde": b.d_tilde,
        })
    else:
        b1 = cfg.b1 if cfg.scheme == "asynchronous" else game.n_players
        b = met.asynchronous_bound(report.a_inf, eta, b1, cfg.b2, c0)
        env = b.upper_envelope(ks)
        entry.update({
            "kind": "asynchronous", "rho": b.rho, "n0": b.n0, "c": b.c,
            "q": b.q, "d_const": b.d_const,
        })
    series = m.u if cfg.scheme not in ("asynchronous", "cyclic") else m.inf_metric
    rows = met.bound_dominance_report(series, env)
    entry["dominance"] = [
        {"k": r.k, "empirical": r.empirical, "theoretical": r.theoretical,
         "ok": r.ok}
        for r in rows
    ]
    entry["all_dominated"] = all(r.ok for r in rows)
    return entry


# ---------------------------------------------------------------------------
# plain stochastic-gradient baseline (communication comparison)


def sg_modulus(game: GameSpec) -> float:
    """Strong-monotonicity modulus estimate from the curvature bounds."""
    if game.curvature is None:
        raise InvalidArgument("game carries no curvature bounds")
    slack = game.curvature.zeta_min - game.curvature.zeta_offmax.sum(axis=1)
    m = float(slack.min())
    if m <= 0:
        m = float(game.curvature.zeta_min.min())
    return m


def run_sg_baseline(
    game: GameSpec, iters: int, trajectories: int, seed: int,
    mu_sg: float = None,
) -> list:
    """One projected stochastic-gradient step per player per round.

    Communication rounds equal per-player gradient steps by construction,
    the counter identity the comparison figures rely on.
    """
    mu_sg = sg_modulus(game) if mu_sg is None else mu_sg
    base = SampleStream(seed)
    out = []
    offsets = game.offsets()
    for t in range(trajectories):
        stream = base.substream(t)
        prof = game.start_profile()
        n = game.n_players
        profiles = np.empty((iters + 1, game.total_dim))
        profiles[0] = prof.data
        for k in range(iters):
            gamma = 1.0 / (mu_sg * (k + 1))
            new = prof.copy()
            for i, p in enumerate(game.players):
                rng = stream.substream(GRAD, i, k).generator()
                noise = p.draw_noise(rng, 1)[0]
                g = p.stoch_grad(prof.block(i).copy(), prof, noise)
                if p.recourse is not None:
                    from .recourse import recourse_subgradient

                    scen = p.recourse.sample_scenario(rng)
                    g = g + p.recourse.first_stage_grad(prof.block(i).copy())
                    g = g + recourse_subgradient(p.recourse, prof.block(i), scen)
                new = new.with_block(i, project(p.box, prof.block(i) - gamma * g))
            prof = new
            profiles[k + 1] = prof.data
        counts = np.arange(iters + 1, dtype=np.int64)
        out.append(
            TrajectoryRecord(
                profiles=profiles,
                beta=np.tile(counts[:, None], (1, n)),
                sg_cum=np.tile(counts[:, None], (1, n)),
                comm_rounds=counts,
                offsets=offsets,
            )
        )
    return out


def run_comparison(cfg: ExperimentConfig, sg_iters: int = None, write: bool = True):
    """Run the proximal scheme and the SG baseline on a shared threshold grid."""
    result = run_experiment(cfg, write=False)
    game = build_game(cfg)
    sg_iters = sg_iters or 4 * int(result.metrics.sg_cum.mean(axis=1)[-1] + 1)
    sg_records = run_sg_baseline(game, sg_iters, cfg.trajectories, cfg.seed)
    sg_metrics = met.compute_metrics(sg_records, result.reference.profile)

    floor = max(
        cfg.eps_floor,
        1.05 * max(result.metrics.u.min(), sg_metrics.u.min()),
    )
    grid = np.geomspace(result.metrics.u[0] / 2.0, floor, cfg.eps_points)
    br_steps = met.k_of_epsilon(
        result.metrics.u, result.metrics.sg_cum.mean(axis=1), grid
    )
    br_comm = met.k_of_epsilon(result.metrics.u, result.metrics.comm_rounds, grid)
    sg_steps = met.k_of_epsilon(sg_metrics.u, sg_metrics.sg_cum.mean(axis=1), grid)
    sg_comm = met.k_of_epsilon(sg_metrics.u, sg_metrics.comm_rounds, grid)

    summary = {
        "epsilon": [float(e) for e in grid],
        "proximal_br": {
            "sg_steps": [s for _, s in br_steps],
            "comm_rounds": [s for _, s in br_comm],
        },
        "sg_baseline": {
            "sg_steps": [s for _, s in sg_steps],
            "comm_rounds": [s for _, s in sg_comm],
            "mu_sg": sg_modulus(game),
        },
    }
    if write:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.json").write_text(json.dumps(summary, indent=2) + "\n")
        _write_metrics_csv(out / "metrics_br.csv", result.metrics, game.n_players)
        _write_metrics_csv(out / "metrics_sg.csv", sg_metrics, game.n_players)
    return summary, result, sg_metrics
