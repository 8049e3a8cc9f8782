"""Stochastic-approximation inner solver and inner-step schedules.

``sa_solve`` runs projected stochastic-gradient steps on the mu-strongly
convex proximal subproblem of one player, warm-started at the player's
current block.  With ``steps=J`` it performs exactly J-1 updates producing
z_J from z_1 (so J=1 returns the start unchanged); the step size is
1/(mu*(t+1)) with t starting at 1.

``InnerSchedule`` maps (major iteration k, per-player update count beta) to
the number of inner steps and to the certified root-mean-square accuracy
that this step count buys on a mu-strongly convex subproblem whose
second-moment constant is ``q_const``.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import InvalidArgument, StepBudgetExceeded
from .game import GameSpec, Profile, project

DEFAULT_STEP_CEILING = 10_000_000


class Variant(Enum):
    SYNCHRONOUS = "synchronous"
    RANDOMIZED = "randomized"
    ASYNCHRONOUS = "asynchronous"
    CYCLIC = "cyclic"
    POLYNOMIAL_UNSUMMABLE = "polynomial_unsummable"
    FIXED = "fixed"


_GEOMETRIC = (
    Variant.SYNCHRONOUS,
    Variant.RANDOMIZED,
    Variant.ASYNCHRONOUS,
    Variant.CYCLIC,
)


@dataclass(frozen=True)
class InnerSchedule:
    """Inner-step counts and matching accuracy targets per scheme variant."""

    variant: Variant
    eta: float = 0.5
    q_const: np.ndarray = None  # per-player second-moment constants
    n_players: int = 1          # used by the cyclic exponent
    exponent: int = 2           # polynomial variant: steps = k**exponent
    count: int = 1              # fixed variant
    step_ceiling: int = DEFAULT_STEP_CEILING

    def __post_init__(self):
        if self.variant in _GEOMETRIC and not (0.0 < self.eta < 1.0):
            raise InvalidArgument("eta must lie in (0, 1) for geometric schedules")
        q = np.atleast_1d(np.asarray(
            1.0 if self.q_const is None else self.q_const, dtype=float
        ))
        if np.any(q <= 0):
            raise InvalidArgument("q_const must be positive")
        object.__setattr__(self, "q_const", q)

    def q_of(self, player: int) -> float:
        q = self.q_const
        return float(q[player]) if q.shape[0] > 1 else float(q[0])


def steps_for(schedule: InnerSchedule, player: int, k: int, beta: int = 0) -> int:
    """Number of inner SA steps prescribed at major iteration k."""
    if k < 0 or beta < 0:
        raise InvalidArgument("k and beta must be nonnegative")
    v, eta = schedule.variant, schedule.eta
    q = schedule.q_of(player)
    if v in (Variant.SYNCHRONOUS, Variant.ASYNCHRONOUS):
        steps = math.ceil(q / eta ** (2 * (k + 1)))
    elif v is Variant.RANDOMIZED:
        steps = math.ceil(q / eta ** (2 * (beta + 1)))
    elif v is Variant.CYCLIC:
        steps = math.ceil(q / eta ** (2 + 2 * k / schedule.n_players))
    elif v is Variant.POLYNOMIAL_UNSUMMABLE:
        steps = max(1, k ** schedule.exponent)
    elif v is Variant.FIXED:
        steps = schedule.count
    else:  # pragma: no cover
        raise InvalidArgument(f"unknown variant {v}")
    steps = max(1, int(steps))
    if steps > schedule.step_ceiling:
        raise StepBudgetExceeded(
            f"inner step count {steps} exceeds ceiling {schedule.step_ceiling}"
        )
    return steps


def accuracy_for(schedule: InnerSchedule, player: int, k: int, beta: int = 0) -> float:
    """RMS accuracy certified by ``steps_for`` on the matching subproblem.

    The certification chain is q_const / steps_for(...) <= accuracy**2.
    Geometric variants return the inexactness-sequence values driving the
    rate results; callers of the asynchronous variant pass the update count
    including the current iteration.
    """
    if k < 0 or beta < 0:
        raise InvalidArgument("k and beta must be nonnegative")
    v, eta = schedule.variant, schedule.eta
    if v is Variant.SYNCHRONOUS:
        return eta ** (k + 1)
    if v is Variant.RANDOMIZED:
        return eta ** (beta + 1)
    if v in (Variant.ASYNCHRONOUS, Variant.CYCLIC):
        return eta ** beta
    q = schedule.q_of(player)
    if v is Variant.POLYNOMIAL_UNSUMMABLE:
        return math.sqrt(q) / max(k, 1)
    if v is Variant.FIXED:
        return math.sqrt(q / schedule.count)
    raise InvalidArgument(f"unknown variant {v}")  # pragma: no cover


def q_constant_smooth(grad_bound: float, mu: float, box_diameter: float) -> float:
    """Second-moment constant of the inner SA recursion for smooth costs."""
    return 2.0 * grad_bound**2 / mu**2 + 2.0 * box_diameter**2


def q_constant_recourse(
    grad_bound: float, subgrad_bound: float, first_stage_bound: float,
    mu: float, box_diameter: float,
) -> float:
    """Second-moment constant when a recourse subgradient joins the direction."""
    m2 = subgrad_bound**2 + first_stage_bound**2 + grad_bound**2
    return 4.0 * m2 / mu**2 + 4.0 * box_diameter**2


def sa_solve(
    game: GameSpec,
    player_index: int,
    anchor: Profile,
    start: np.ndarray,
    steps: int,
    rng: np.random.Generator,
    anchor_own: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Inexact proximal best response by projected stochastic gradient.

    ``anchor`` supplies the rivals' blocks; ``anchor_own`` is the center of
    the proximal term (defaults to the anchor's own block).  Noise rows are
    pre-drawn from ``rng`` so that the fused kernels and the generic loop
    consume identical variates.
    """
    player = game.players[player_index]
    if steps < 1:
        raise InvalidArgument("steps must be >= 1")
    z = np.array(start, dtype=float)
    if not player.box.contains(z, tol=1e-12):
        raise InvalidArgument("start point is infeasible for the player's box")
    own_center = (
        anchor.block(player_index).copy() if anchor_own is None
        else np.asarray(anchor_own, dtype=float)
    )
    nsteps = steps - 1
    if nsteps == 0:
        return z

    if player.recourse is not None:
        return _solve_recourse(game, player, anchor, z, own_center, nsteps, rng)

    kern = player.kernel
    if kern is not None:
        return kern.run(game, player, anchor, z, own_center, nsteps, rng)

    noise = player.draw_noise(rng, nsteps)
    mu = game.mu
    for t in range(1, nsteps + 1):
        gt = 1.0 / (mu * (t + 1))
        g = player.stoch_grad(z, anchor, noise[t - 1]) + mu * (z - own_center)
        z = project(player.box, z - gt * g)
    return z


def sa_solve_recourse(
    game: GameSpec,
    player_index: int,
    anchor: Profile,
    start: np.ndarray,
    steps: int,
    rng: np.random.Generator,
    anchor_own: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Recourse-aware inner solve; requires a recourse attachment."""
    if game.players[player_index].recourse is None:
        raise InvalidArgument("player has no recourse attachment")
    return sa_solve(game, player_index, anchor, start, steps, rng, anchor_own)


def _solve_recourse(game, player, anchor, z, own_center, nsteps, rng):
    from .recourse import recourse_subgradient

    rec = player.recourse
    kern = player.kernel
    if kern is not None:
        return kern.run(game, player, anchor, z, own_center, nsteps, rng)

    mu = game.mu
    noise = player.draw_noise(rng, nsteps)
    for t in range(1, nsteps + 1):
        gt = 1.0 / (mu * (t + 1))
        scenario = rec.sample_scenario(rng)
        s = recourse_subgradient(rec, z, scenario)
        g = (
            rec.first_stage_grad(z)
            + player.stoch_grad(z, anchor, noise[t - 1])
            + mu * (z - own_center)
            + s
        )
        z = project(player.box, z - gt * g)
    return z
