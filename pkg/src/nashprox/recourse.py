"""Two-stage recourse costs: scenario values, dual subgradients, schedules.

A recourse attachment adds a convex, possibly nonsmooth expected cost to a
player's objective.  Per scenario the cost is the optimal value of a small
LP or convex QP parameterized by the first-stage block; subgradients come
out of the dual multipliers (s = -T' pi at a dual solution).  The capacity
variant has a one-dimensional closed form used by the fused kernel.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InfeasibleSample, InvalidArgument
from .subsolvers import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    QuadraticProgram,
    qp_active_set,
    scalar_box_qp,
    simplex_solve,
)


@dataclass(frozen=True)
class RecourseSample:
    """One scenario draw of second-stage data."""

    d: np.ndarray            # second-stage cost
    t_mat: np.ndarray        # technology matrix coupling the first stage
    h: np.ndarray            # right-hand side
    h_quad: Optional[np.ndarray] = None  # PSD quadratic term (QP recourse)


@dataclass(frozen=True)
class LinearRecourse:
    """Scenario LP  min d.q  s.t.  W q = h - T x, q >= 0, with fixed W.

    ``sample_scenario`` must produce scenarios that are feasible and bounded
    for every feasible first-stage block (spot-checked, not certified).
    """

    recourse_matrix: np.ndarray          # W
    sample_scenario: Callable            # rng -> RecourseSample
    subgrad_bound: float                 # M_s
    first_stage_grad: Callable           # gradient of the deterministic cost
    first_stage_bound: float             # M_c

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.recourse_matrix, dtype=float))
        object.__setattr__(self, "recourse_matrix", w)


@dataclass(frozen=True)
class QuadraticRecourse(LinearRecourse):
    """Scenario QP  min d.q + 0.5 q.H.q  over the same polyhedron."""


@dataclass(frozen=True)
class CapacityRecourse:
    """Scalar second stage  max_{0<=q<=x} d q - (h/2) q^2  with uniform d, h."""

    d_low: float = 0.3
    d_high: float = 0.4
    h_low: float = 0.45
    h_high: float = 0.55
    first_stage_grad: Callable = None
    first_stage_bound: float = 0.0

    def __post_init__(self):
        if not (0 < self.d_low <= self.d_high and 0 < self.h_low <= self.h_high):
            raise InvalidArgument("uniform supports must be positive intervals")

    @property
    def subgrad_bound(self) -> float:
        # |subgradient| = max(0, d - h x) <= sup d
        return self.d_high

    def draw_noise(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Pre-draw (count, 2) rows of (d, h); matches sample_scenario order."""
        raw = rng.random((count, 2))
        out = np.empty_like(raw)
        out[:, 0] = self.d_low + (self.d_high - self.d_low) * raw[:, 0]
        out[:, 1] = self.h_low + (self.h_high - self.h_low) * raw[:, 1]
        return out

    def sample_scenario(self, rng: np.random.Generator):
        d = self.d_low + (self.d_high - self.d_low) * rng.random()
        h = self.h_low + (self.h_high - self.h_low) * rng.random()
        return (d, h)

    def mean_subgradient(self, x: float, nodes: int = 64) -> float:
        """E[max(0, d - h x)], exact over d, Gauss-Legendre over h.

        The h-range is split at the kink locations d_low/x and d_high/x so
        every quadrature panel integrates a polynomial; node-doubling then
        reproduces the value to machine precision.
        """
        x = float(x)

        def inner(h):
            k = h * x
            dl, dh = self.d_low, self.d_high
            if dh == dl:
                return np.maximum(0.0, dl - k)
            out = np.empty_like(h)
            low = k <= dl
            high = k >= dh
            mid = ~(low | high)
            out[low] = 0.5 * (dl + dh) - k[low]
            out[high] = 0.0
            out[mid] = 0.5 * (dh - k[mid]) ** 2 / (dh - dl)
            return out

        return self._h_average(inner, x, nodes)

    def mean_value(self, x: float, nodes: int = 64) -> float:
        """E[scenario value], exact over d, Gauss-Legendre over h."""
        x = float(x)

        def inner(h):
            k = h * x
            dl, dh = self.d_low, self.d_high
            span = dh - dl
            if span == 0:
                q = np.clip(dl / h, 0.0, x)
                return dl * q - 0.5 * h * q * q
            out = np.empty_like(h)
            low = k <= dl          # q = x for every d
            high = k >= dh         # q = d / h for every d
            mid = ~(low | high)
            out[low] = 0.5 * (dl + dh) * x - 0.5 * h[low] * x * x
            out[high] = (dh**3 - dl**3) / (3 * span) / (2 * h[high])
            km = k[mid]
            out[mid] = (km**3 - dl**3) / (6 * h[mid] * span) + (
                0.5 * x * (dh**2 - km**2) - 0.5 * h[mid] * x * x * (dh - km)
            ) / span
            return out

        return self._h_average(inner, x, nodes)

    def _h_average(self, inner, x, nodes):
        """Average inner(h) over h ~ U[h_low, h_high], panel-split at kinks."""
        width = self.h_high - self.h_low
        if width == 0:
            return float(inner(np.array([self.h_low]))[0])
        cuts = [self.h_low, self.h_high]
        if x > 0:
            for c in (self.d_low / x, self.d_high / x):
                if self.h_low < c < self.h_high:
                    cuts.append(c)
        cuts = sorted(cuts)
        total = 0.0
        for lo, hi in zip(cuts, cuts[1:]):
            gh, wh = _gl_nodes(lo, hi, nodes)
            total += float(wh @ inner(gh)) * (hi - lo) / width
        return total


def _gl_nodes(lo, hi, n):
    """Gauss-Legendre nodes/weights for averaging over a uniform on [lo, hi]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * w


def recourse_value(problem, x, scenario) -> float:
    """Scenario cost of taking recourse given the first-stage block x."""
    if isinstance(problem, CapacityRecourse):
        d, h = scenario
        return scalar_box_qp(d, h, float(np.atleast_1d(x)[0]))[1]
    rhs = scenario.h - scenario.t_mat @ np.atleast_1d(x)
    if isinstance(problem, QuadraticRecourse) and scenario.h_quad is not None:
        out = _solve_primal_qp(problem, scenario, rhs)
    else:
        out = simplex_solve(
            LinearProgram(c=scenario.d, a=problem.recourse_matrix, b=rhs)
        )
    _check_status(out.status)
    return float(out.objective)


def recourse_subgradient(problem, x, scenario) -> np.ndarray:
    """An element of the scenario subdifferential of the recourse cost at x.

    Ties in the dual solution set resolve by pivot order; any element is a
    valid subgradient, which the subgradient-inequality tests verify.
    """
    if isinstance(problem, CapacityRecourse):
        d, h = scenario
        z = float(np.atleast_1d(x)[0])
        return np.array([max(0.0, d - h * z)])
    rhs = scenario.h - scenario.t_mat @ np.atleast_1d(x)
    if isinstance(problem, QuadraticRecourse) and scenario.h_quad is not None:
        dual = qp_active_set(dorn_dual(scenario, x, problem.recourse_matrix))
        _check_status(dual.status)
        nq = scenario.d.shape[0]
        pi = dual.x[nq:]
    else:
        out = simplex_solve(
            LinearProgram(c=scenario.d, a=problem.recourse_matrix, b=rhs)
        )
        _check_status(out.status)
        pi = out.duals
    return -scenario.t_mat.T @ pi


def dorn_dual(scenario: RecourseSample, x, w_mat) -> QuadraticProgram:
    """Dual QP of the scenario second stage, in variables (u, pi):

        max (h - T x).pi - 0.5 u.Hq.u   s.t.  W'pi - Hq u <= d
    """
    w_mat = np.atleast_2d(np.asarray(w_mat, dtype=float))
    hq = scenario.h_quad
    if hq is None:
        hq = np.zeros((scenario.d.shape[0], scenario.d.shape[0]))
    nq = scenario.d.shape[0]
    m = w_mat.shape[0]
    rhs = scenario.h - scenario.t_mat @ np.atleast_1d(x)
    h_full = np.zeros((nq + m, nq + m))
    h_full[:nq, :nq] = hq
    c = np.concatenate([np.zeros(nq), rhs])
    g_mat = np.hstack([-hq, w_mat.T])
    return QuadraticProgram(h=h_full, c=c, g_mat=g_mat, g_rhs=scenario.d, maximize=True)


def _solve_primal_qp(problem, scenario, rhs):
    w = problem.recourse_matrix
    nq = scenario.d.shape[0]
    g_mat = np.vstack([w, -w, -np.eye(nq)])
    g_rhs = np.concatenate([rhs, -rhs, np.zeros(nq)])
    return qp_active_set(
        QuadraticProgram(h=scenario.h_quad, c=scenario.d, g_mat=g_mat, g_rhs=g_rhs)
    )


def _check_status(status):
    if status == OPTIMAL:
        return
    if status == INFEASIBLE:
        raise InfeasibleSample(
            "sampled second stage is infeasible: no strictly positive recourse "
            "satisfies the coupling constraint for this first-stage point"
        )
    if status == UNBOUNDED:
        raise InfeasibleSample(
            "sampled second stage is unbounded: recession directions carry "
            "negative cost for this scenario"
        )
    raise InfeasibleSample(f"second-stage solve failed with status {status}")
