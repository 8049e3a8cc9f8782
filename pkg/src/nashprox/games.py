"""Builders for the two shipped example games.

Both games have constant Hessians, so their curvature bounds are exact
analytic values rather than grid estimates.  Gradient second-moment bounds
come from interval arithmetic over the boxes and the noise supports, kept
deliberately conservative so the inner-solve accuracy certificates hold.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .contraction import CurvatureBounds
from .errors import InvalidArgument
from .game import BoxSet, GameSpec, PlayerSpec, Profile
from .recourse import CapacityRecourse


@dataclass(frozen=True)
class PortfolioKernel:
    """Fused inner loop for a portfolio player: diagonal quadratic + coupling."""

    coef: np.ndarray      # 2 * rho_i * diag(R)
    nu: np.ndarray
    x0_own: np.ndarray
    x0_total: np.ndarray  # sum of all initial holdings

    def run(self, game, player, anchor, z, own_center, nsteps, rng):
        noise = player.draw_noise(rng, nsteps)
        rival = np.zeros(player.dim)
        for j in range(anchor.n_blocks):
            if j != player.index:
                rival += anchor.block(j)
        # own trade enters the pooled sum and the proportional term, hence -2 x0
        base = rival - (self.x0_total - self.x0_own) - 2.0 * self.x0_own
        return kernels.portfolio_inner(
            z, player.box.lower, player.box.upper, game.mu, own_center,
            self.coef, self.nu, base, noise, nsteps,
        )


@dataclass(frozen=True)
class CapacityKernel:
    """Fused inner loop for a capacity player incl. the recourse subgradient."""

    eta_i: float
    demand_intercept: float
    demand_slope: float

    def run(self, game, player, anchor, z, own_center, nsteps, rng):
        dh = player.recourse.draw_noise(rng, nsteps)
        rival = 0.0
        for j in range(anchor.n_blocks):
            if j != player.index:
                rival += anchor.block(j)[0]
        return kernels.capacity_inner(
            z, player.box.lower, player.box.upper, game.mu, own_center,
            self.eta_i, self.demand_intercept, self.demand_slope, rival,
            dh, nsteps,
        )


@dataclass(frozen=True)
class PortfolioConfig:
    """Multi-investor portfolio game over pooled transaction costs."""

    n_players: int = 6
    n_assets: int = 4
    nu: tuple = (0.5, 0.35, 0.4, 0.3)
    r_diag: tuple = (0.16, 0.10, 0.12, 0.09)
    phi_low: float = 0.12
    phi_high: float = 0.18
    rho: Optional[tuple] = None  # default: 3 + i/N for i = 1..N
    cap: float = 0.5
    x0: float = 0.0
    mu: float = 2.0

    def risk_aversions(self):
        if self.rho is not None:
            return np.asarray(self.rho, dtype=float)
        n = self.n_players
        return np.array([3.0 + (i + 1) / n for i in range(n)])

    def phi_mean(self) -> float:
        return 0.5 * (self.phi_low + self.phi_high)


@dataclass(frozen=True)
class CapacityConfig:
    """Two-stage capacity market: Cournot first stage, scalar recourse."""

    n_players: int = 5
    mu: float = 1.0
    demand_intercept: float = 2.0   # price = intercept - slope * total output
    demand_slope: float = 0.5
    d_low: float = 0.3
    d_high: float = 0.4
    h_low: float = 0.45
    h_high: float = 0.55
    eta: Optional[tuple] = None     # default (N - 2.5) * slope for every firm
    caps: Optional[tuple] = None    # default 0.3 + 0.1 * sqrt(i), i = 1..N
    x0: float = 0.0

    def cost_curvatures(self):
        if self.eta is not None:
            return np.asarray(self.eta, dtype=float)
        val = (self.n_players - 2.5) * self.demand_slope
        return np.full(self.n_players, val)

    def capacities(self):
        if self.caps is not None:
            return np.asarray(self.caps, dtype=float)
        return np.array(
            [0.3 + 0.1 * np.sqrt(i + 1) for i in range(self.n_players)]
        )


def build_portfolio(cfg: PortfolioConfig = PortfolioConfig()) -> GameSpec:
    """Portfolio game with analytic gradients and sampled price shocks.

    Warns (but still builds) when the spectral sufficient condition
    lambda_min(2 rho_i R + 2 Phi) > (N - 1) ||Phi|| fails for some player.
    """
    n, na = cfg.n_players, cfg.n_assets
    nu = np.asarray(cfg.nu, dtype=float)
    r_diag = np.asarray(cfg.r_diag, dtype=float)
    if nu.shape != (na,) or r_diag.shape != (na,):
        raise InvalidArgument("nu and r_diag must have one entry per asset")
    rho = cfg.risk_aversions()
    if rho.shape != (n,):
        raise InvalidArgument("rho must have one entry per player")
    phi = cfg.phi_mean()
    phi_norm = phi  # Phi is phi * identity, so its spectral norm is phi

    zeta_min = 2.0 * rho * r_diag.min() + 2.0 * phi
    cond_ok = np.all(zeta_min > (n - 1) * phi_norm)
    if not cond_ok:
        warnings.warn(
            "portfolio coupling condition fails: own curvature does not "
            "dominate (N-1) * coupling for every player", RuntimeWarning,
        )
    zoff = np.full((n, n), phi_norm)
    np.fill_diagonal(zoff, 0.0)
    curvature = CurvatureBounds(zeta_min=zeta_min, zeta_offmax=zoff)

    x0 = np.full(na, cfg.x0)
    x0_total = n * x0
    box = BoxSet(np.zeros(na), np.full(na, cfg.cap))
    lo, hi = cfg.phi_low, cfg.phi_high

    players = []
    for i in range(n):
        coef = 2.0 * rho[i] * r_diag

        def det_grad(z, prof, i=i, coef=coef):
            rival = np.zeros(na)
            for j in range(prof.n_blocks):
                if j != i:
                    rival += prof.block(j)
            base = rival - (x0_total - x0) - 2.0 * x0
            return coef * z - nu + phi * (base + 2.0 * z)

        def stoch_grad(z, prof, noise, i=i, coef=coef):
            rival = np.zeros(na)
            for j in range(prof.n_blocks):
                if j != i:
                    rival += prof.block(j)
            base = rival - (x0_total - x0) - 2.0 * x0
            return coef * z - nu + noise * (base + 2.0 * z)

        def sample_noise(rng, count):
            return lo + (hi - lo) * rng.random((count, na))

        players.append(
            PlayerSpec(
                dim=na,
                box=box,
                det_grad=det_grad,
                stoch_grad=stoch_grad,
                grad_bound=_portfolio_grad_bound(cfg, rho[i]),
                index=i,
                noise_dim=na,
                sample_noise=sample_noise,
                kernel=PortfolioKernel(
                    coef=coef, nu=nu, x0_own=x0, x0_total=x0_total
                ),
            )
        )
    start = Profile.from_blocks([np.clip(x0, 0.0, cfg.cap)] * n)
    return GameSpec(players=tuple(players), mu=cfg.mu, start=start,
                    curvature=curvature)


def _portfolio_grad_bound(cfg: PortfolioConfig, rho_i: float) -> float:
    """Interval bound on the sampled gradient norm over box and supports."""
    n, na = cfg.n_players, cfg.n_assets
    nu = np.asarray(cfg.nu, dtype=float)
    r_diag = np.asarray(cfg.r_diag, dtype=float)
    # pooled trade term sum_{j != i}(y_j - x0) + 2(z - x0), coordinatewise
    trade_lo = (n + 1) * (0.0 - cfg.x0)
    trade_hi = (n + 1) * (cfg.cap - cfg.x0)
    t_min = min(cfg.phi_low * trade_lo, cfg.phi_high * trade_lo)
    t_max = max(cfg.phi_low * trade_hi, cfg.phi_high * trade_hi)
    m2 = 0.0
    for c in range(na):
        g_lo = -nu[c] + t_min
        g_hi = 2.0 * rho_i * r_diag[c] * cfg.cap - nu[c] + t_max
        m2 += max(abs(g_lo), abs(g_hi)) ** 2
    return float(np.sqrt(m2))


def build_capacity(cfg: CapacityConfig = CapacityConfig()) -> GameSpec:
    """Capacity-market game with scalar recourse attached to every firm.

    Warns when min_i eta_i <= (N - 3) * slope, the regime where the
    first-stage contraction condition is not guaranteed.
    """
    n = cfg.n_players
    eta = cfg.cost_curvatures()
    caps = cfg.capacities()
    if eta.shape != (n,) or caps.shape != (n,):
        raise InvalidArgument("eta and caps must have one entry per firm")
    a, b = cfg.demand_intercept, cfg.demand_slope

    if not eta.min() > (n - 3) * b:
        warnings.warn(
            "capacity contraction condition fails: min cost curvature must "
            "exceed (N-3) * demand slope", RuntimeWarning,
        )
    zoff = np.full((n, n), b)
    np.fill_diagonal(zoff, 0.0)
    curvature = CurvatureBounds(zeta_min=eta + 2.0 * b, zeta_offmax=zoff)

    players = []
    for i in range(n):
        box = BoxSet([0.0], [caps[i]])

        def det_grad(z, prof, i=i):
            rival = 0.0
            for j in range(prof.n_blocks):
                if j != i:
                    rival += prof.block(j)[0]
            return -a + b * rival + 2.0 * b * z

        def stoch_grad(z, prof, noise, i=i):
            return det_grad(z, prof)

        rec = CapacityRecourse(
            d_low=cfg.d_low, d_high=cfg.d_high,
            h_low=cfg.h_low, h_high=cfg.h_high,
            first_stage_grad=(lambda z, e=eta[i]: e * z),
            first_stage_bound=float(eta[i] * caps[i]),
        )
        # first-stage marginal revenue ranges over [-a, -a + b*(sum caps + cap_i)]
        g_lo = -a
        g_hi = -a + b * (caps.sum() + caps[i])
        players.append(
            PlayerSpec(
                dim=1,
                box=box,
                det_grad=det_grad,
                stoch_grad=stoch_grad,
                grad_bound=float(max(abs(g_lo), abs(g_hi))),
                index=i,
                noise_dim=0,
                recourse=rec,
                kernel=CapacityKernel(
                    eta_i=float(eta[i]), demand_intercept=a, demand_slope=b
                ),
            )
        )
    start = Profile.from_blocks(
        [[min(max(cfg.x0, 0.0), caps[i])] for i in range(n)]
    )
    return GameSpec(players=tuple(players), mu=cfg.mu, start=start,
                    curvature=curvature)
