"""Fused inner-loop kernels for the shipped example games.

Each kernel performs ``nsteps`` projected stochastic-gradient updates of one
player's block with step size 1/(mu*(t+1)), t starting at 1, consuming one
pre-drawn noise row per step.  They are jitted on the numba backend and run
as plain Python on the numpy fallback (see ``_backend``); the generic oracle
path in ``sa`` produces identical iterates, which the tests assert.
"""

from ._backend import jit_kernel


@jit_kernel
def portfolio_inner(z, lo, hi, mu, anchor, coef, nu, base, phi, nsteps):
    # grad = coef*z - nu + phi*(base + 2z) + mu*(z - anchor), all diagonal
    n = z.shape[0]
    for t in range(1, nsteps + 1):
        gt = 1.0 / (mu * (t + 1))
        for c in range(n):
            g = (
                coef[c] * z[c]
                - nu[c]
                + phi[t - 1, c] * (base[c] + 2.0 * z[c])
                + mu * (z[c] - anchor[c])
            )
            w = z[c] - gt * g
            if w < lo[c]:
                w = lo[c]
            elif w > hi[c]:
                w = hi[c]
            z[c] = w
    return z


@jit_kernel
def capacity_inner(z, lo, hi, mu, anchor, eta_i, a, b, rival_sum, dh, nsteps):
    # grad = eta_i*z + (-a + b*rival_sum + 2b*z) + max(0, d - h*z) + mu*(z - anchor)
    x = z[0]
    for t in range(1, nsteps + 1):
        gt = 1.0 / (mu * (t + 1))
        s = dh[t - 1, 0] - dh[t - 1, 1] * x
        if s < 0.0:
            s = 0.0
        g = eta_i * x + (-a + b * rival_sum + 2.0 * b * x) + s + mu * (x - anchor[0])
        w = x - gt * g
        if w < lo[0]:
            w = lo[0]
        elif w > hi[0]:
            w = hi[0]
        x = w
    z[0] = x
    return z
