"""Players, box strategy sets, strategy profiles, and first-order oracles.

A game is a list of players, each with a box-constrained strategy block and a
pair of gradient oracles: a deterministic gradient of the smooth part of its
cost, and a sampled gradient that is unbiased for it.  Nonsmooth recourse
costs are handled additively by the recourse layer; the oracles here cover
the smooth part only.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidArgument
from .streams import SampleStream


@dataclass(frozen=True)
class BoxSet:
    """Axis-aligned box {x : lower <= x <= upper} with finite bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidArgument("box bounds must be 1-d arrays of equal length")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise InvalidArgument("box bounds must be finite")
        if np.any(lo > hi):
            raise InvalidArgument("box lower bound exceeds upper bound")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, point, tol: float = 0.0) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(
            p.shape == self.lower.shape
            and np.all(p >= self.lower - tol)
            and np.all(p <= self.upper + tol)
        )


def project(box: BoxSet, point) -> np.ndarray:
    """Euclidean projection onto a box: coordinate-wise clamp."""
    p = np.asarray(point, dtype=float)
    if p.shape != box.lower.shape:
        raise InvalidArgument(
            f"point has shape {p.shape}, box has dimension {box.dim}"
        )
    return np.clip(p, box.lower, box.upper)


def diameter(box: BoxSet) -> float:
    """Euclidean diameter of a box, ||upper - lower||_2."""
    return float(np.linalg.norm(box.upper - box.lower))


@dataclass(frozen=True)
class PlayerSpec:
    """One player's strategy set and first-order oracles.

    ``det_grad(z, profile)`` is the gradient of the smooth expected cost in
    the player's own block ``z``, with rivals read from ``profile``.
    ``stoch_grad(z, profile, noise)`` applies one pre-drawn noise row and
    must average to ``det_grad`` over the noise distribution, with
    E||stoch_grad||^2 <= grad_bound**2 on the feasible set.
    """

    dim: int
    box: BoxSet
    det_grad: Callable
    stoch_grad: Callable
    grad_bound: float
    index: int = 0
    noise_dim: int = 0
    sample_noise: Optional[Callable] = None
    recourse: object = None
    kernel: object = None

    def __post_init__(self):
        if self.dim != self.box.dim:
            raise InvalidArgument("player dim does not match its box")
        if self.grad_bound < 0:
            raise InvalidArgument("gradient second-moment bound must be >= 0")

    def draw_noise(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Pre-draw ``count`` noise rows, shape (count, noise_dim)."""
        if self.noise_dim == 0 or self.sample_noise is None:
            return np.zeros((count, 0))
        return self.sample_noise(rng, count)


class Profile:
    """A full strategy profile stored as one dense vector with a block table."""

    __slots__ = ("data", "offsets")

    def __init__(self, data: np.ndarray, offsets: np.ndarray):
        self.data = np.asarray(data, dtype=float)
        self.offsets = offsets

    @classmethod
    def from_blocks(cls, blocks) -> "Profile":
        dims = [len(b) for b in blocks]
        offsets = np.concatenate(([0], np.cumsum(dims)))
        return cls(np.concatenate([np.asarray(b, dtype=float) for b in blocks]), offsets)

    def block(self, i: int) -> np.ndarray:
        return self.data[self.offsets[i] : self.offsets[i + 1]]

    def with_block(self, i: int, value) -> "Profile":
        out = self.data.copy()
        out[self.offsets[i] : self.offsets[i + 1]] = value
        return Profile(out, self.offsets)

    def copy(self) -> "Profile":
        return Profile(self.data.copy(), self.offsets)

    @property
    def n_blocks(self) -> int:
        return len(self.offsets) - 1


@dataclass(frozen=True)
class GameSpec:
    """An N-player game: ordered players plus the proximal weight mu > 0."""

    players: tuple
    mu: float
    start: Optional[Profile] = None
    curvature: object = None  # optional CurvatureBounds attached by builders

    def __post_init__(self):
        object.__setattr__(self, "players", tuple(self.players))
        if len(self.players) < 1:
            raise InvalidArgument("a game needs at least one player")
        if not self.mu > 0:
            raise InvalidArgument("proximal weight mu must be strictly positive")
        for i, p in enumerate(self.players):
            if p.index != i:
                raise InvalidArgument(
                    f"player at position {i} carries index {p.index}"
                )

    @property
    def n_players(self) -> int:
        return len(self.players)

    @property
    def dims(self):
        return [p.dim for p in self.players]

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    def offsets(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.dims)))

    def profile(self, blocks) -> Profile:
        prof = Profile.from_blocks(blocks)
        if prof.data.shape[0] != self.total_dim:
            raise InvalidArgument("profile dimensions do not match the game")
        return prof

    def start_profile(self) -> Profile:
        """The configured start, else the projection of the origin onto X."""
        if self.start is not None:
            return self.start.copy()
        return self.profile([project(p.box, np.zeros(p.dim)) for p in self.players])

    def feasible(self, prof: Profile, tol: float = 0.0) -> bool:
        return all(
            p.box.contains(prof.block(i), tol) for i, p in enumerate(self.players)
        )


def sample_stoch_grad(
    player: PlayerSpec, profile: Profile, stream: SampleStream
) -> np.ndarray:
    """One sampled gradient draw at the profile point from a keyed stream."""
    rng = stream.generator()
    noise = player.draw_noise(rng, 1)[0]
    return player.stoch_grad(profile.block(player.index).copy(), profile, noise)
