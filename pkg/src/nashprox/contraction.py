"""Contraction certification for the proximal best-response map.

From per-player curvature bounds (smallest own-block Hessian eigenvalue
zeta_min[i], largest cross-block Hessian norm zeta_offmax[i][j]) and the
proximal weight mu, build the nonnegative N x N matrix

    gamma[i][i] = mu / (mu + zeta_min[i])
    gamma[i][j] = zeta_offmax[i][j] / (mu + zeta_min[i]),  j != i

whose norms certify that the best-response map contracts blockwise.  All
convergence guarantees in the scheme drivers assume one of the flags
reported here.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, NumericFailure

POWER_ITER_LIMIT = 100_000
POWER_ITER_TOL = 1e-12
TIE_TOL = 1e-12  # values this close to 1 fail the check but raise a warning flag


@dataclass(frozen=True)
class CurvatureBounds:
    """Own-block curvature lower bounds and cross-block coupling upper bounds."""

    zeta_min: np.ndarray   # (N,), each >= 0
    zeta_offmax: np.ndarray  # (N, N), zero diagonal, entries >= 0

    def __post_init__(self):
        zmin = np.asarray(self.zeta_min, dtype=float)
        zoff = np.asarray(self.zeta_offmax, dtype=float)
        object.__setattr__(self, "zeta_min", zmin)
        object.__setattr__(self, "zeta_offmax", zoff)
        n = zmin.shape[0]
        if zoff.shape != (n, n):
            raise InvalidArgument("zeta_offmax must be N x N")
        if np.any(zmin < 0) or np.any(zoff < 0):
            raise InvalidArgument("curvature bounds must be nonnegative")
        if np.any(np.diagonal(zoff) != 0):
            raise InvalidArgument("zeta_offmax must have zero diagonal")

    @property
    def n_players(self) -> int:
        return self.zeta_min.shape[0]


def build_gamma(bounds: CurvatureBounds, mu: float) -> np.ndarray:
    """Contraction-ratio matrix of the proximal best-response map."""
    if not mu > 0:
        raise InvalidArgument("mu must be strictly positive")
    denom = (mu + bounds.zeta_min)[:, None]
    gamma = bounds.zeta_offmax / denom
    np.fill_diagonal(gamma, mu / (mu + bounds.zeta_min))
    return gamma


def norm_inf(gamma: np.ndarray) -> float:
    """Infinity norm (max row sum) of a nonnegative square matrix."""
    g = _checked_square(gamma)
    return float(np.abs(g).sum(axis=1).max())


def norm_2(gamma: np.ndarray) -> float:
    """Spectral norm via power iteration on gamma^T gamma.

    Deterministic normalized all-ones start; relative tolerance 1e-12.
    """
    g = _checked_square(gamma)
    gtg = g.T @ g
    lam = _power_iteration(gtg, "norm_2")
    return float(np.sqrt(max(lam, 0.0)))


def spectral_radius(gamma: np.ndarray) -> float:
    """Perron root of a nonnegative matrix via power iteration."""
    g = _checked_square(gamma)
    return float(_power_iteration(g, "spectral_radius"))


def _checked_square(gamma) -> np.ndarray:
    g = np.atleast_2d(np.asarray(gamma, dtype=float))
    if g.shape[0] != g.shape[1]:
        raise InvalidArgument("matrix must be square")
    if np.any(g < 0):
        raise InvalidArgument("matrix must be nonnegative")
    return g


def _power_iteration(m: np.ndarray, label: str) -> float:
    n = m.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    for _ in range(POWER_ITER_LIMIT):
        w = m @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v_new = w / norm
        lam_new = float(v_new @ (m @ v_new))
        if abs(lam_new - lam) <= POWER_ITER_TOL * max(abs(lam_new), 1.0):
            return lam_new
        lam, v = lam_new, v_new
    raise NumericFailure(
        f"{label}: power iteration did not converge in {POWER_ITER_LIMIT} steps",
        estimate=lam,
    )


@dataclass(frozen=True)
class ContractionReport:
    """Gamma matrix, its norms/spectral radius, and the assumption flags."""

    gamma: np.ndarray
    a2: float
    a_inf: float
    rho: float
    ok_2norm: bool
    ok_infnorm: bool
    ok_diag_dom: bool
    near_tie: bool = False  # some quantity sits within TIE_TOL of 1

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma.tolist(),
            "a2": self.a2,
            "a_inf": self.a_inf,
            "rho": self.rho,
            "ok_2norm": self.ok_2norm,
            "ok_infnorm": self.ok_infnorm,
            "ok_diag_dom": self.ok_diag_dom,
            "near_tie": self.near_tie,
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def check_assumptions(bounds: CurvatureBounds, a2: float, a_inf: float):
    """Strict-inequality flags; ties within 1e-12 of 1 fail with a warning."""
    ok_2 = a2 < 1.0
    ok_inf = a_inf < 1.0
    row_off = bounds.zeta_offmax.sum(axis=1)
    ok_dd = bool(np.all(bounds.zeta_min > row_off))
    near = (abs(a2 - 1.0) <= TIE_TOL) or (abs(a_inf - 1.0) <= TIE_TOL)
    if ok_dd and not ok_inf:
        # row sums of gamma are (mu + sum_j zeta_off) / (mu + zeta_min) < 1
        # whenever zeta_min strictly dominates, so this cannot happen.
        raise NumericFailure("diagonal dominance held but a_inf >= 1", estimate=a_inf)
    return ok_2, ok_inf, ok_dd, near


def analyze(bounds: CurvatureBounds, mu: float) -> ContractionReport:
    """Build gamma and certify every contraction assumption in one report."""
    gamma = build_gamma(bounds, mu)
    a2 = norm_2(gamma)
    a_inf = norm_inf(gamma)
    rho = spectral_radius(gamma)
    ok_2, ok_inf, ok_dd, near = check_assumptions(bounds, a2, a_inf)
    return ContractionReport(
        gamma=gamma,
        a2=a2,
        a_inf=a_inf,
        rho=rho,
        ok_2norm=ok_2,
        ok_infnorm=ok_inf,
        ok_diag_dom=ok_dd,
        near_tie=near,
    )


def estimate_curvature_grid(
    game, n_samples: int, rng: np.random.Generator, fd_step: float = 1e-5
) -> CurvatureBounds:
    """Heuristic curvature estimate by finite differences on a sample grid.

    Samples feasible profiles uniformly, differentiates each player's smooth
    deterministic gradient (including any smooth first-stage recourse cost),
    and records the worst case seen.  Not a certified bound; intended as a
    sanity check against analytic values on games whose Hessians are
    constant.
    """
    n = game.n_players

    def smooth_grad(player, z, prof):
        g = player.det_grad(z, prof)
        if player.recourse is not None:
            g = g + player.recourse.first_stage_grad(z)
        return g

    zmin = np.full(n, np.inf)
    zoff = np.zeros((n, n))
    for _ in range(n_samples):
        blocks = [
            rng.uniform(p.box.lower, p.box.upper) for p in game.players
        ]
        prof = game.profile(blocks)
        for i, p in enumerate(game.players):
            own = prof.block(i).copy()
            h_own = _fd_jacobian(lambda z: smooth_grad(p, z, prof), own, fd_step)
            h_own = 0.5 * (h_own + h_own.T)
            zmin[i] = min(zmin[i], float(np.linalg.eigvalsh(h_own).min()))
            for j in range(n):
                if j == i:
                    continue
                rival = prof.block(j).copy()

                def g_of_rival(y, i=i, j=j, own=own):
                    p_i = game.players[i]
                    return smooth_grad(p_i, own, prof.with_block(j, y))

                h_cross = _fd_jacobian(g_of_rival, rival, fd_step)
                zoff[i, j] = max(zoff[i, j], float(np.linalg.norm(h_cross, 2)))
    return CurvatureBounds(zeta_min=np.maximum(zmin, 0.0), zeta_offmax=zoff)


def _fd_jacobian(f, x, h):
    x = np.asarray(x, dtype=float)
    m = len(f(x))
    jac = np.zeros((m, len(x)))
    for c in range(len(x)):
        e = np.zeros_like(x)
        e[c] = h
        jac[:, c] = (f(x + e) - f(x - e)) / (2 * h)
    return jac
