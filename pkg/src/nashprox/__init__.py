"""Inexact proximal best-response solvers for N-player stochastic Nash games.

Players hold box strategy sets and noisy first-order oracles; the solvers
compute approximate equilibria by running stochastic-approximation inner
loops to certified accuracy inside synchronous, randomized, or asynchronous
best-response outer loops, with optional two-stage recourse costs handled
through LP/QP duality.
"""

from ._backend import BACKEND
from .contraction import ContractionReport, CurvatureBounds, analyze, build_gamma
from .game import BoxSet, GameSpec, PlayerSpec, Profile, diameter, project
from .games import (
    CapacityConfig,
    PortfolioConfig,
    build_capacity,
    build_portfolio,
)
from .metrics import reference_equilibrium
from .sa import InnerSchedule, Variant, accuracy_for, sa_solve, steps_for
from .schemes import (
    Asynchronous,
    Cyclic,
    PoissonClock,
    Randomized,
    SchemeConfig,
    Synchronous,
    TrajectoryRecord,
    run_asynchronous,
    run_randomized,
    run_synchronous,
    run_trajectories,
)
from .streams import SampleStream

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BoxSet",
    "GameSpec",
    "PlayerSpec",
    "Profile",
    "project",
    "diameter",
    "CurvatureBounds",
    "ContractionReport",
    "build_gamma",
    "analyze",
    "InnerSchedule",
    "Variant",
    "sa_solve",
    "steps_for",
    "accuracy_for",
    "SampleStream",
    "SchemeConfig",
    "Synchronous",
    "Randomized",
    "PoissonClock",
    "Asynchronous",
    "Cyclic",
    "TrajectoryRecord",
    "run_synchronous",
    "run_randomized",
    "run_asynchronous",
    "run_trajectories",
    "reference_equilibrium",
    "PortfolioConfig",
    "CapacityConfig",
    "build_portfolio",
    "build_capacity",
]
