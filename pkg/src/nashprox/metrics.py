"""Reference equilibria, empirical error series, and theoretical bounds.

The reference equilibrium is computed twice by independent deterministic
methods (fixed-point iteration of the exact proximal best response, and a
stacked projected-gradient method on the concatenated game map) and the two
must agree.  For recourse games the deterministic recourse gradient is a
high-accuracy quadrature of the scenario subgradient, so the ground truth
carries no Monte-Carlo noise.

Bound evaluators expose every constituent constant so audits can check each
piece; range violations raise naming the violated hypothesis.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgument, PreflightFailure
from .game import GameSpec, Profile, project

FIXED_POINT_TOL = 1e-12
RESIDUAL_TOL = 1e-10
CROSS_METHOD_TOL = 1e-8


# ---------------------------------------------------------------------------
# reference equilibrium


@dataclass(frozen=True)
class ReferenceEquilibrium:
    profile: Profile
    method: str
    residual: float          # fixed-point gap of the exact proximal response
    cross_gap: float         # disagreement between the two methods


def total_det_grad(game: GameSpec, i: int, z: np.ndarray, prof: Profile):
    """Deterministic gradient of player i's full cost at (z, rivals)."""
    p = game.players[i]
    g = p.det_grad(z, prof)
    if p.recourse is not None:
        rec = p.recourse
        g = g + rec.first_stage_grad(z)
        if not hasattr(rec, "mean_subgradient"):
            raise InvalidArgument(
                "recourse attachment lacks a deterministic mean subgradient; "
                "reference equilibria need one"
            )
        g = g + np.atleast_1d(rec.mean_subgradient(float(np.atleast_1d(z)[0])))
    return g


def _curvature_cap(game: GameSpec) -> float:
    """Crude Lipschitz estimate for inner projected-gradient step sizes."""
    if game.curvature is not None:
        own = float(np.max(game.curvature.zeta_min))
        cross = float(np.max(game.curvature.zeta_offmax.sum(axis=1)))
        base = own + cross
    else:
        base = 10.0
    rec_slope = max(
        (getattr(p.recourse, "h_high", 0.0) for p in game.players),
        default=0.0,
    )
    return base + rec_slope + game.mu


def exact_best_response(
    game: GameSpec, i: int, anchor: Profile, tol=1e-13, max_iter=2_000_000
) -> np.ndarray:
    """Deterministic proximal best response by projected gradient."""
    p = game.players[i]
    mu = game.mu
    step = 1.0 / (_curvature_cap(game) + mu)
    z = anchor.block(i).copy()
    y = anchor.block(i).copy()
    for _ in range(max_iter):
        g = total_det_grad(game, i, z, anchor) + mu * (z - y)
        z_new = project(p.box, z - step * g)
        if np.max(np.abs(z_new - z)) <= tol:
            return z_new
        z = z_new
    return z


def reference_equilibrium(
    game: GameSpec, force: bool = False, report=None
) -> ReferenceEquilibrium:
    """Fixed point of the exact proximal best response, cross-validated.

    Refuses games whose contraction preflight fails unless forced.
    """
    if report is None and game.curvature is not None:
        from .contraction import analyze

        report = analyze(game.curvature, game.mu)
    if report is not None and not (report.ok_2norm or report.ok_infnorm):
        if not force:
            raise PreflightFailure(
                "no contraction certificate holds; pass force=True to search "
                "for a fixed point anyway"
            )

    prof = game.start_profile()
    for _ in range(200_000):
        new = prof.copy()
        for i in range(game.n_players):
            new = new.with_block(i, exact_best_response(game, i, prof))
        gap = np.max(np.abs(new.data - prof.data))
        prof = new
        if gap <= FIXED_POINT_TOL:
            break

    residual = _fixed_point_residual(game, prof)
    alt = _stacked_projected_gradient(game)
    cross = float(np.max(np.abs(alt.data - prof.data)))
    if residual > RESIDUAL_TOL:
        raise PreflightFailure(
            f"fixed-point residual {residual:.2e} exceeds {RESIDUAL_TOL}"
        )
    if cross > CROSS_METHOD_TOL:
        raise PreflightFailure(
            f"independent methods disagree by {cross:.2e}"
        )
    return ReferenceEquilibrium(
        profile=prof, method="prox-br+stacked-pg", residual=residual,
        cross_gap=cross,
    )


def _fixed_point_residual(game, prof) -> float:
    gap = 0.0
    for i in range(game.n_players):
        br = exact_best_response(game, i, prof)
        gap = max(gap, float(np.max(np.abs(br - prof.block(i)))))
    return gap


def _stacked_projected_gradient(game) -> Profile:
    prof = game.start_profile()
    step = 0.9 / _curvature_cap(game)
    for _ in range(5_000_000):
        new = prof.copy()
        for i in range(game.n_players):
            g = total_det_grad(game, i, prof.block(i).copy(), prof)
            new = new.with_block(
                i, project(game.players[i].box, prof.block(i) - step * g)
            )
        gap = np.max(np.abs(new.data - prof.data))
        prof = new
        if gap <= 1e-14:
            break
    return prof


# ---------------------------------------------------------------------------
# empirical series


@dataclass(frozen=True)
class RunMetrics:
    u: np.ndarray            # mean stacked error norm per iteration
    inf_metric: np.ndarray   # max over players of mean block error
    variance: np.ndarray     # total variance of the iterate across trajectories
    sg_cum: np.ndarray       # (K+1, N) mean cumulative inner steps
    comm_rounds: np.ndarray  # (K+1,)

    @property
    def n_iters(self):
        return len(self.u) - 1


def compute_metrics(records, xstar: Profile) -> RunMetrics:
    """Cross-trajectory error/variance/step summaries against a reference."""
    if not records:
        raise InvalidArgument("need at least one trajectory")
    k_len = min(r.profiles.shape[0] for r in records)
    stack = np.stack([r.profiles[:k_len] for r in records])  # (T, K+1, n)
    err = stack - xstar.data[None, None, :]
    u = np.linalg.norm(err, axis=2).mean(axis=0)

    offsets = records[0].offsets
    n = len(offsets) - 1
    block_err = np.empty((stack.shape[0], k_len, n))
    for i in range(n):
        block_err[:, :, i] = np.linalg.norm(
            err[:, :, offsets[i]: offsets[i + 1]], axis=2
        )
    inf_metric = block_err.mean(axis=0).max(axis=1)

    if stack.shape[0] > 1:
        variance = stack.var(axis=0, ddof=1).sum(axis=1)
    else:
        variance = np.zeros(k_len)
    sg_cum = np.stack([r.sg_cum[:k_len] for r in records]).mean(axis=0)
    return RunMetrics(
        u=u,
        inf_metric=inf_metric,
        variance=variance,
        sg_cum=sg_cum,
        comm_rounds=np.arange(k_len),
    )


def compute_u_k(records, xstar: Profile) -> np.ndarray:
    return compute_metrics(records, xstar).u


def compute_inf_metric(records, xstar: Profile) -> np.ndarray:
    return compute_metrics(records, xstar).inf_metric


def compute_variance(records) -> np.ndarray:
    if not records:
        raise InvalidArgument("need at least one trajectory")
    k_len = min(r.profiles.shape[0] for r in records)
    stack = np.stack([r.profiles[:k_len] for r in records])
    if stack.shape[0] > 1:
        return stack.var(axis=0, ddof=1).sum(axis=1)
    return np.zeros(k_len)


def k_of_epsilon(u: np.ndarray, sg_counts: np.ndarray, eps_grid) -> list:
    """First cumulative step count at which u drops below each epsilon.

    Entries are (epsilon, count-or-None); None marks thresholds never hit.
    """
    out = []
    for eps in eps_grid:
        hit = np.flatnonzero(u < eps)
        out.append((float(eps), float(sg_counts[hit[0]]) if hit.size else None))
    return out


def default_eps_grid(u0: float, floor: float = 2.5e-3, points: int = 12):
    """Geometric threshold grid from u0/2 down to the stopping target."""
    hi = u0 / 2.0
    if hi <= floor:
        raise InvalidArgument("initial error too small for the default grid")
    return np.geomspace(hi, floor, points)


def fit_inverse_square(table) -> tuple:
    """Least squares of K against 1/eps^2 (slope through origin + constant).

    Returns ((coefficient, intercept), r_squared).
    """
    pts = [(eps, k) for eps, k in table if k is not None]
    if len(pts) < 3:
        raise InvalidArgument("need at least three reached thresholds to fit")
    eps = np.array([p[0] for p in pts])
    counts = np.array([p[1] for p in pts])
    x = 1.0 / eps**2
    if np.ptp(x) <= 0:
        raise InvalidArgument("degenerate epsilon grid")
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, counts, rcond=None)
    pred = design @ coef
    ss_res = float(np.sum((counts - pred) ** 2))
    ss_tot = float(np.sum((counts - counts.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return (float(coef[0]), float(coef[1])), r2


def log_linear_r2(series: np.ndarray, start: int = 0) -> float:
    """R^2 of a straight-line fit to log(series) against the iteration index."""
    y = np.asarray(series, dtype=float)[start:]
    mask = y > 0
    y = np.log(y[mask])
    x = np.arange(len(mask))[mask].astype(float)
    if len(y) < 3:
        raise InvalidArgument("need at least three positive values")
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    pred = design @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


# ---------------------------------------------------------------------------
# theoretical bounds


def geometric_envelope_constant(c: float, q: float) -> float:
    """Smallest D with z*c**z <= D*q**z for all z >= 0: D = 1/(e*ln(q/c))."""
    if not (0 < c < q < 1):
        raise InvalidArgument("need 0 < c < q < 1")
    return 1.0 / (math.e * math.log(q / c))


def default_q(c: float) -> float:
    return (c + 1.0) / 2.0


@dataclass(frozen=True)
class SyncBound:
    """Constants of the synchronous geometric envelope sqrt(N)(C+D)q^k."""

    a: float
    eta: float
    c: float
    q: float
    d_const: float
    c0: float
    n_players: int

    def envelope(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return np.sqrt(self.n_players) * (self.c0 + self.d_const) * self.q**k


def sync_bound(
    a: float, eta: float, c0: float, n_players: int, q: Optional[float] = None
) -> SyncBound:
    if not 0 < a < 1:
        raise InvalidArgument("contraction modulus a must lie in (0, 1)")
    if not 0 < eta < 1:
        raise InvalidArgument("inexactness base eta must lie in (0, 1)")
    c = max(a, eta)
    q = default_q(c) if q is None else q
    if not c < q < 1:
        raise InvalidArgument("q must lie in (max(a, eta), 1)")
    return SyncBound(
        a=a, eta=eta, c=c, q=q,
        d_const=geometric_envelope_constant(c, q),
        c0=c0, n_players=n_players,
    )


def sync_complexity(q_i: float, bound: SyncBound, eps: float) -> float:
    """Per-player inner-step budget to reach a stacked error below eps."""
    eta, q = bound.eta, bound.q
    lead = q_i / (eta**4 * math.log(1.0 / eta**2))
    ratio = math.sqrt(bound.n_players) * (bound.c0 + bound.d_const) / eps
    exponent = math.log(1.0 / eta**2) / math.log(1.0 / q)
    return lead * ratio**exponent + math.ceil(math.log(ratio) / math.log(1.0 / q))


def sync_complexity_delta(
    q_i: float, a: float, c0: float, n_players: int, eps: float, delta: float
) -> float:
    """Budget with eta = a and the exponent pinned at 2 + delta."""
    if delta <= 0:
        raise InvalidArgument("delta must be positive")
    if not 0 < a < 1:
        raise InvalidArgument("a must lie in (0, 1)")
    d_const = (1.0 + 2.0 / delta) / (math.e * math.log(1.0 / a))
    lead = q_i / (a**4 * math.log(1.0 / a**2))
    ratio = math.sqrt(n_players) * (c0 + d_const) / eps
    return lead * ratio ** (2.0 + delta) + math.ceil(
        math.log(ratio) * (2.0 + delta) / (2.0 * math.log(1.0 / a))
    )


def sync_complexity_tight(
    q_i: float, a: float, eta: float, c0: float, n_players: int, eps: float
) -> float:
    """Exactly inverse-square budget, valid only when eta exceeds a."""
    if not a < eta < 1:
        raise InvalidArgument("the tight budget needs eta in (a, 1)")
    c_big = c0 + eta / (eta - a)
    ratio = math.sqrt(n_players) * c_big / eps
    lead = q_i / (eta**4 * math.log(1.0 / eta**2))
    return lead * ratio**2 + math.ceil(math.log(ratio) / math.log(1.0 / eta))


def prob_complexity_delta(
    q_i, a, c0, n_players, eps, confidence_slack, delta
):
    """Budget for hitting eps with probability >= 1 - slack (Markov)."""
    if not 0 < confidence_slack < 1:
        raise InvalidArgument("confidence slack must lie in (0, 1)")
    return sync_complexity_delta(
        q_i, a, c0, n_players, eps * confidence_slack, delta
    )


@dataclass(frozen=True)
class RandomizedBound:
    """Constants of the randomized envelope (N p_max)^0.5 (C~+D~) q~^k."""

    a: float
    eta: float
    p: np.ndarray
    a_tilde: float
    eta_tilde: float
    eta_zero: float
    c_tilde: float
    q: float
    d_const: float
    c0_tilde: float
    d_tilde: float
    n_players: int

    def envelope(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        lead = math.sqrt(self.n_players * float(self.p.max()))
        return lead * (self.c0_tilde + self.d_tilde) * self.q**k

    def envelope_weighted(self, k) -> np.ndarray:
        """Envelope of the p-weighted norm, sqrt(N)(C~+D~) q~^k."""
        k = np.asarray(k, dtype=float)
        return math.sqrt(self.n_players) * (self.c0_tilde + self.d_tilde) * self.q**k


def randomized_eta_tilde(eta: float, p_min: float) -> float:
    if not 0 < eta < 1 or not 0 < p_min <= 1:
        raise InvalidArgument("need eta in (0,1) and p_min in (0,1]")
    return math.sqrt(1.0 - p_min * (1.0 - eta**2))


def randomized_eta_zero(eta: float, p_max: float) -> float:
    if not 0 < eta < 1 or not 0 < p_max <= 1:
        raise InvalidArgument("need eta in (0,1) and p_max in (0,1]")
    return math.sqrt(1.0 / (p_max * (eta**-2 - 1.0) + 1.0))


def randomized_bound(
    a: float, eta: float, p, c0: float, q: Optional[float] = None
) -> RandomizedBound:
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0) or np.any(p > 1):
        raise InvalidArgument("activation probabilities must lie in (0, 1]")
    if not 0 < a < 1:
        raise InvalidArgument("a must lie in (0, 1)")
    n = p.shape[0]
    p_min, p_max = float(p.min()), float(p.max())
    a_tilde = math.sqrt(1.0 - p_min * (1.0 - a**2))
    eta_tilde = randomized_eta_tilde(eta, p_min)
    eta_zero = randomized_eta_zero(eta, p_max)
    c_tilde = max(a_tilde, eta_tilde)
    q = default_q(c_tilde) if q is None else q
    if not c_tilde < q < 1:
        raise InvalidArgument("q must lie in (max(a~, eta~), 1)")
    d_const = geometric_envelope_constant(c_tilde, q)
    c0_tilde = c0 * math.sqrt(float(np.mean(1.0 / p)))
    d_tilde = d_const * eta / eta_tilde
    return RandomizedBound(
        a=a, eta=eta, p=p, a_tilde=a_tilde, eta_tilde=eta_tilde,
        eta_zero=eta_zero, c_tilde=c_tilde, q=q, d_const=d_const,
        c0_tilde=c0_tilde, d_tilde=d_tilde, n_players=n,
    )


def randomized_complexity(q_i: float, bound: RandomizedBound, eps: float, p_i: float) -> float:
    """Expected per-player budget; activation thins the work by p_i."""
    eta, ez, q = bound.eta, bound.eta_zero, bound.q
    eps_t = eps / (
        math.sqrt(bound.n_players * float(bound.p.max()))
        * (bound.c0_tilde + bound.d_tilde)
    )
    lead = p_i * q_i / (eta**2 * ez**2 * math.log(1.0 / ez**2))
    exponent = math.log(1.0 / ez**2) / math.log(1.0 / q)
    return lead * (1.0 / eps_t) ** exponent + math.ceil(
        math.log(1.0 / eps_t) / math.log(1.0 / q)
    )


def randomized_complexity_delta(
    q_i: float, a: float, p, c0: float, eps: float, delta: float, p_i: float
) -> float:
    """Expected budget with eta = a and a delta-pinned exponent."""
    if delta <= 0:
        raise InvalidArgument("delta must be positive")
    p = np.asarray(p, dtype=float)
    eta = a
    p_min, p_max = float(p.min()), float(p.max())
    eta_tilde = randomized_eta_tilde(eta, p_min)
    eta_zero = randomized_eta_zero(eta, p_max)
    le, lz = math.log(1.0 / eta_tilde), math.log(1.0 / eta_zero)
    delta0 = delta * le / (lz / le + delta / 2.0)
    q = eta_tilde * math.exp(delta0 / 2.0)
    d_const = (lz / le + 2.0 / delta) / (math.e * le)
    c0_tilde = c0 * math.sqrt(float(np.mean(1.0 / p)))
    d_tilde = d_const * eta / eta_tilde
    n = p.shape[0]
    eps_t = eps / (math.sqrt(n * p_max) * (c0_tilde + d_tilde))
    lead = p_i * q_i / (eta_tilde**2 * eta**2 * math.log(1.0 / eta_tilde**2))
    exponent = 2.0 * lz / le + delta
    return lead * (1.0 / eps_t) ** exponent + math.ceil(
        math.log(1.0 / eps_t) * (1.0 / le + delta / (2.0 * lz))
    )


@dataclass(frozen=True)
class AsynchronousBound:
    """Constants of the delayed-update envelope (C+k) rho^floor(k/b1)."""

    a_inf: float
    eta: float
    b1: int
    b2: int
    n0: int
    rho: float
    c: float
    q: float
    d_const: float
    c0: float

    def envelope(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return (self.c0 + k) * self.rho ** np.floor(k / self.b1)

    def upper_envelope(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        lead = self.rho ** (-(self.b1 - 1) / self.b1)
        return lead * (self.c0 + self.d_const) * self.q**k


def asynchronous_bound(
    a_inf: float, eta: float, b1: int, b2: int, c0: float,
    q: Optional[float] = None,
) -> AsynchronousBound:
    if not 0 < a_inf < 1:
        raise InvalidArgument("a_inf must lie in (0, 1)")
    if not 0 < eta < 1:
        raise InvalidArgument("eta must lie in (0, 1)")
    if b1 < 1 or b2 < 0:
        raise InvalidArgument("need b1 >= 1 and b2 >= 0")
    n0 = math.ceil(b2 / b1)
    rho = max(a_inf, eta) ** (1.0 / (n0 + 1))
    c = rho ** (1.0 / b1)
    q = default_q(c) if q is None else q
    if not c < q < 1:
        raise InvalidArgument("q must lie in (rho^(1/b1), 1)")
    return AsynchronousBound(
        a_inf=a_inf, eta=eta, b1=b1, b2=b2, n0=n0, rho=rho, c=c, q=q,
        d_const=geometric_envelope_constant(c, q), c0=c0,
    )


def asynchronous_complexity(q_i: float, bound: AsynchronousBound, eps: float) -> float:
    eta, q = bound.eta, bound.q
    eps_hat = (
        eps / (bound.c0 + bound.d_const)
        * bound.rho ** ((bound.b1 - 1) / bound.b1)
    )
    lead = q_i / (eta**4 * math.log(1.0 / eta**2))
    exponent = math.log(1.0 / eta**2) / math.log(1.0 / q)
    return lead * (1.0 / eps_hat) ** exponent + math.ceil(
        math.log(1.0 / eps_hat) / math.log(1.0 / q)
    )


def cyclic_complexity(
    q_i: float, eta: float, a_inf: float, n_players: int, b2: int,
    c0: float, eps: float, q: Optional[float] = None,
) -> float:
    """Budget under the one-player-per-iteration rule (b1 = N)."""
    if not 0 < eta < 1 or not 0 < a_inf < 1:
        raise InvalidArgument("eta and a_inf must lie in (0, 1)")
    n0 = math.ceil(b2 / n_players)
    rho = max(a_inf, eta) ** (1.0 / (n0 + 1))
    c = rho ** (1.0 / n_players)
    q = default_q(c) if q is None else q
    if not c < q < 1:
        raise InvalidArgument("q must lie in (rho^(1/N), 1)")
    d_const = geometric_envelope_constant(c, q)
    eps_t = eps / (c0 + d_const) * rho ** ((n_players - 1) / n_players)
    eta_t = eta ** (1.0 / n_players)
    lead = q_i / (eta_t**2 * eta**2 * math.log(1.0 / eta_t**2))
    exponent = math.log(1.0 / eta_t**2) / math.log(1.0 / q)
    return lead * (1.0 / eps_t) ** exponent + math.ceil(
        math.log(1.0 / eps_t) / math.log(1.0 / q)
    )


def asynchronous_complexity_delta(
    q_i: float, a_inf: float, b1: int, b2: int, c0: float, eps: float,
    delta: float,
) -> float:
    """Delta-pinned budget at eta = a_inf for the windowed update rule."""
    if delta <= 0:
        raise InvalidArgument("delta must be positive")
    eta = a_inf
    n0 = math.ceil(b2 / b1)
    n_prime = b1 * (1 + n0)
    le = math.log(1.0 / eta)
    d_const = (n_prime + 2.0 * n_prime**2 / delta) / (math.e * le)
    rho = eta ** (1.0 / (n0 + 1))
    eps_hat = eps / (c0 + d_const) * rho ** ((b1 - 1) / b1)
    lead = q_i / (eta**4 * math.log(1.0 / eta**2))
    return lead * (1.0 / eps_hat) ** (2 * n_prime + delta) + math.ceil(
        math.log(1.0 / eps_hat) * (2 * n_prime + delta) / (2.0 * le)
    )


def cyclic_complexity_delta(
    q_i: float, a_inf: float, n_players: int, b2: int, c0: float, eps: float,
    delta: float,
) -> float:
    """Delta-pinned budget at eta = a_inf for the cyclic rule."""
    if delta <= 0:
        raise InvalidArgument("delta must be positive")
    eta = a_inf
    n0 = math.ceil(b2 / n_players)
    le = math.log(1.0 / eta)
    d_const = (
        n_players * (1 + n0) * (1.0 + 2.0 * (1 + n0) / delta) / (math.e * le)
    )
    rho = eta ** (1.0 / (n0 + 1))
    eps_t = eps / (c0 + d_const) * rho ** ((n_players - 1) / n_players)
    eta_t = eta ** (1.0 / n_players)
    lead = q_i / (eta ** (2 + 2 / n_players) * math.log(1.0 / eta_t**2))
    return lead * (1.0 / eps_t) ** (2 * (n0 + 1) + delta) + math.ceil(
        math.log(1.0 / eps_t) * (2 * (n0 + 1) + delta) / (2.0 * le / n_players)
    )


def initial_error_constant(game: GameSpec, xstar: Profile) -> float:
    """Tightest valid per-player bound on the start error, max_i ||x_i0 - x_i*||."""
    start = game.start_profile()
    offsets = game.offsets()
    return max(
        float(np.linalg.norm(
            start.data[offsets[i]: offsets[i + 1]]
            - xstar.data[offsets[i]: offsets[i + 1]]
        ))
        for i in range(game.n_players)
    )


@dataclass(frozen=True)
class DominanceRow:
    k: int
    empirical: float
    theoretical: float
    ok: bool


def bound_dominance_report(u: np.ndarray, envelope: np.ndarray, ks=None) -> list:
    """Per-iteration comparison of an empirical series against its bound."""
    if ks is None:
        ks = range(len(u))
    rows = []
    for k in ks:
        rows.append(
            DominanceRow(
                k=int(k),
                empirical=float(u[k]),
                theoretical=float(envelope[k]),
                ok=bool(u[k] <= envelope[k]),
            )
        )
    return rows
