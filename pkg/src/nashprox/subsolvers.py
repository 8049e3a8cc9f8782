"""Small dense LP and convex-QP solvers.

Problem sizes here are tiny (second stages of the shipped games have at most
a handful of variables), so both solvers favor auditable correctness over
speed: a dense two-phase simplex with Bland's anti-cycling rule, and a
primal active-set method whose reduced subproblems are solved by
eigendecomposition.  All index choices are lowest-index, so identical inputs
produce identical pivot sequences.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgument

LP_TOL = 1e-9
QP_TOL = 1e-8
SIMPLEX_PIVOT_LIMIT = 100_000
ACTIVE_SET_LIMIT = 10_000

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITER_LIMIT = "iter_limit"


@dataclass(frozen=True)
class LinearProgram:
    """min c.x  subject to  A x = b, x >= 0."""

    c: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.asarray(self.b, dtype=float)
        if a.shape != (b.shape[0], c.shape[0]):
            raise InvalidArgument("LP dimensions are inconsistent")
        if not np.isfinite(b).all() or not np.isfinite(a).all() or not np.isfinite(c).all():
            raise InvalidArgument("LP data must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class QuadraticProgram:
    """min 0.5 z.H.z + c.z  subject to  G z <= g  (maximize: c.z - 0.5 z.H.z).

    H must be symmetric positive semidefinite; checked by an attempted
    Cholesky factorization with a tiny diagonal shift.
    """

    h: np.ndarray
    c: np.ndarray
    g_mat: np.ndarray
    g_rhs: np.ndarray
    maximize: bool = False

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.h, dtype=float))
        c = np.asarray(self.c, dtype=float)
        gm = np.atleast_2d(np.asarray(self.g_mat, dtype=float))
        gr = np.asarray(self.g_rhs, dtype=float)
        n = c.shape[0]
        if h.shape != (n, n) or gm.shape[1] != n or gr.shape[0] != gm.shape[0]:
            raise InvalidArgument("QP dimensions are inconsistent")
        if not np.allclose(h, h.T, atol=1e-12):
            raise InvalidArgument("H must be symmetric")
        try:
            np.linalg.cholesky(h + 1e-10 * max(1.0, np.abs(h).max()) * np.eye(n))
        except np.linalg.LinAlgError:
            raise InvalidArgument("H must be positive semidefinite")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "g_mat", gm)
        object.__setattr__(self, "g_rhs", gr)


@dataclass(frozen=True)
class SolveOutcome:
    status: str
    x: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    objective: Optional[float] = None


def simplex_solve(lp: LinearProgram) -> SolveOutcome:
    """Two-phase dense simplex with Bland's rule.

    Optimal outcomes carry the primal solution, the equality-row duals, and
    an objective certified against the dual to within 1e-9.
    """
    a = lp.a.copy()
    b = lp.b.copy()
    c = lp.c
    m, n = a.shape
    neg = b < 0
    a[neg] *= -1.0
    b[neg] *= -1.0

    # phase 1: artificial basis
    a1 = np.hstack([a, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    basis = list(range(n, n + m))
    status, basis, x1 = _simplex_core(a1, b, c1, basis, allowed=n + m)
    if status != OPTIMAL:
        return SolveOutcome(status=status)
    if c1 @ x1 > LP_TOL:
        return SolveOutcome(status=INFEASIBLE)

    # drive zero-level artificials out of the basis; a row whose artificial
    # cannot be pivoted out is redundant and is dropped together with it
    rows = list(range(m))
    while True:
        pos = next((p for p, v in enumerate(basis) if v >= n), None)
        if pos is None:
            break
        bmat = a1[np.ix_(rows, basis)]
        erow = np.linalg.solve(bmat.T, _unit(len(basis), pos))
        tableau_row = erow @ a1[np.ix_(rows, list(range(n)))]
        pivot = next(
            (j for j in range(n) if j not in basis and abs(tableau_row[j]) > 1e-9),
            None,
        )
        if pivot is not None:
            basis[pos] = pivot
        else:
            rows.remove(basis[pos] - n)
            basis.pop(pos)

    a2, b2 = a[rows], b[rows]
    status, basis, x = _simplex_core(a2, b2, c, basis, allowed=n)
    if status != OPTIMAL:
        return SolveOutcome(status=status)
    x = x[:n]
    duals = np.zeros(m)
    if rows:
        duals[rows] = np.linalg.solve(a2[:, basis].T, c[basis])
    duals[neg] *= -1.0
    obj = float(c @ x)
    gap = abs(obj - float(lp.b @ duals))
    feas = float(np.abs(lp.a @ x - lp.b).max()) if m else 0.0
    if gap > LP_TOL * max(1.0, abs(obj)) or feas > LP_TOL:
        return SolveOutcome(status=ITER_LIMIT, x=x, duals=duals, objective=obj)
    return SolveOutcome(status=OPTIMAL, x=x, duals=duals, objective=obj)


def _unit(n, i):
    e = np.zeros(n)
    e[i] = 1.0
    return e


def _simplex_core(a, b, c, basis, allowed):
    """Revised simplex iterations with Bland's rule over columns < allowed."""
    m, _ = a.shape
    basis = list(basis)
    for _ in range(SIMPLEX_PIVOT_LIMIT):
        bmat = a[:, basis]
        xb = np.linalg.solve(bmat, b)
        y = np.linalg.solve(bmat.T, c[basis])
        entering = -1
        for j in range(allowed):
            if j in basis:
                continue
            if c[j] - y @ a[:, j] < -LP_TOL:
                entering = j
                break
        if entering < 0:
            x = np.zeros(a.shape[1])
            x[basis] = xb
            return OPTIMAL, basis, x
        d = np.linalg.solve(bmat, a[:, entering])
        ratios = [
            (xb[i] / d[i], basis[i], i) for i in range(m) if d[i] > LP_TOL
        ]
        if not ratios:
            return UNBOUNDED, basis, None
        min_ratio = min(r[0] for r in ratios)
        # Bland: among minimal ratios, the smallest basis variable leaves
        leave = min((var, i) for r, var, i in ratios if r <= min_ratio + LP_TOL)[1]
        basis[leave] = entering
    return ITER_LIMIT, basis, None


def qp_active_set(qp: QuadraticProgram) -> SolveOutcome:
    """Primal active-set method for convex QPs over a polyhedron.

    The feasible start comes from a phase-1 LP when the origin is
    infeasible.  Optimal outcomes satisfy stationarity, feasibility, and
    complementarity to within 1e-8.
    """
    h, c = (qp.h, qp.c) if not qp.maximize else (qp.h, -qp.c)
    gm, gr = qp.g_mat, qp.g_rhs
    n = c.shape[0]
    m = gm.shape[0]

    z = _feasible_point(gm, gr, n)
    if z is None:
        return SolveOutcome(status=INFEASIBLE)

    work = _independent_active(gm, gr, z)
    status = ITER_LIMIT
    for _ in range(ACTIVE_SET_LIMIT):
        grad = h @ z + c
        gw = gm[work] if work else np.zeros((0, n))
        p, ray = _reduced_step(h, grad, gw)
        if ray is not None:
            alpha, blocking = _blocking(gm, gr, z, ray, work, np.inf)
            if blocking is None:
                return SolveOutcome(status=UNBOUNDED)
            z = z + alpha * ray
            work.append(blocking)
            work.sort()
            continue
        if np.linalg.norm(p) <= 1e-11 * max(1.0, np.linalg.norm(z)):
            lam_w, resid = _multipliers(gw, grad)
            if resid > 1e-7:
                # numerically inconsistent working set; drop the first row
                if not work:
                    status = ITER_LIMIT
                    break
                work.pop(0)
                continue
            negative = [i for i, l in enumerate(lam_w) if l < -QP_TOL]
            if not negative:
                lam = np.zeros(m)
                for i, row in enumerate(work):
                    lam[row] = max(lam_w[i], 0.0)
                status = OPTIMAL
                return _finish(qp, h, c, z, lam)
            work.pop(negative[0])  # lowest-index rule
        else:
            alpha, blocking = _blocking(gm, gr, z, p, work, 1.0)
            z = z + alpha * p
            if blocking is not None:
                work.append(blocking)
                work.sort()
    return SolveOutcome(status=status)


def _finish(qp, h, c, z, lam):
    obj = 0.5 * z @ h @ z + c @ z
    feas = float(np.max(qp.g_mat @ z - qp.g_rhs, initial=0.0))
    stat = float(np.linalg.norm(h @ z + c + qp.g_mat.T @ lam))
    comp = float(np.max(np.abs(lam * (qp.g_mat @ z - qp.g_rhs)), initial=0.0))
    if max(feas, stat, comp) > QP_TOL:
        return SolveOutcome(status=ITER_LIMIT, x=z, duals=lam, objective=obj)
    if qp.maximize:
        obj = -obj
    return SolveOutcome(status=OPTIMAL, x=z, duals=lam, objective=float(obj))


def _feasible_point(gm, gr, n):
    if np.all(gr >= 0):
        return np.zeros(n)
    # min s  s.t.  G(z+ - z-) - 1 s + w = g,  all variables >= 0
    m = gm.shape[0]
    a = np.hstack([gm, -gm, -np.ones((m, 1)), np.eye(m)])
    c = np.concatenate([np.zeros(2 * n), [1.0], np.zeros(m)])
    out = simplex_solve(LinearProgram(c=c, a=a, b=gr))
    if out.status != OPTIMAL or out.objective > 1e-9:
        return None
    return out.x[:n] - out.x[n : 2 * n]


def _independent_active(gm, gr, z):
    active = [i for i in range(gm.shape[0]) if gm[i] @ z - gr[i] >= -1e-10]
    work = []
    for i in active:
        cand = work + [i]
        if np.linalg.matrix_rank(gm[cand], tol=1e-10) == len(cand):
            work.append(i)
    return work


def _reduced_step(h, grad, gw):
    """Newton step restricted to the working-set null space.

    Returns (step, None) or (None, ray) when an unbounded descent direction
    exists in the null space.
    """
    n = h.shape[0]
    if gw.shape[0] == 0:
        zbasis = np.eye(n)
    else:
        _, s, vt = np.linalg.svd(gw)
        rank = int(np.sum(s > 1e-11 * max(1.0, s[0] if len(s) else 1.0)))
        zbasis = vt[rank:].T
    if zbasis.shape[1] == 0:
        return np.zeros(n), None
    hr = zbasis.T @ h @ zbasis
    gr_vec = zbasis.T @ grad
    vals, vecs = np.linalg.eigh(hr)
    scale = max(1.0, float(vals.max(initial=0.0)))
    gproj = vecs.T @ gr_vec
    w = np.zeros_like(gproj)
    for i, v in enumerate(vals):
        if v > 1e-11 * scale:
            w[i] = -gproj[i] / v
        elif abs(gproj[i]) > 1e-9:
            ray = zbasis @ vecs[:, i] * (-np.sign(gproj[i]))
            return None, ray
    return zbasis @ (vecs @ w), None


def _multipliers(gw, grad):
    if gw.shape[0] == 0:
        return np.zeros(0), float(np.linalg.norm(grad))
    lam, *_ = np.linalg.lstsq(gw.T, -grad, rcond=None)
    resid = float(np.linalg.norm(gw.T @ lam + grad))
    return lam, resid


def _blocking(gm, gr, z, p, work, alpha_cap):
    alpha = alpha_cap
    blocking = None
    gp = gm @ p
    slack = gr - gm @ z
    for i in range(gm.shape[0]):
        if i in work or gp[i] <= 1e-12:
            continue
        a_i = max(slack[i], 0.0) / gp[i]
        if a_i < alpha - 1e-14:
            alpha = a_i
            blocking = i
    if not np.isfinite(alpha):
        return None, None
    return alpha, blocking


def scalar_box_qp(d: float, h: float, x: float):
    """max over q in [0, x] of d*q - (h/2)*q**2; returns (argmax, value)."""
    if not h > 0:
        raise InvalidArgument("curvature h must be strictly positive")
    if x < 0:
        raise InvalidArgument("box width x must be nonnegative")
    q = min(max(d / h, 0.0), x)
    return q, d * q - 0.5 * h * q * q
