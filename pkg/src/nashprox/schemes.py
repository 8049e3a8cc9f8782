"""Major-iteration drivers: synchronous, randomized, and asynchronous loops.

Each driver advances one trajectory on a single logical clock.  Asynchrony
is simulated, never threaded: update sets are materialized up front and
delays are sampled from dedicated streams, so a trajectory is a pure
function of (game, config, schedule, stream).  Activation and delay
randomness never touches the gradient-noise streams, which is what makes
the degenerate configurations reproduce the synchronous trajectory bit for
bit under a shared seed.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InvalidArgument, StepBudgetExceeded
from .game import GameSpec, Profile
from .sa import InnerSchedule, sa_solve, steps_for
from .streams import ACTIVATION, DELAY, GRAD, UPDATE_SETS, SampleStream


@dataclass(frozen=True)
class Synchronous:
    pass


@dataclass(frozen=True)
class Randomized:
    """Independent Bernoulli activation with per-player probabilities."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        object.__setattr__(self, "p", p)
        if np.any(p <= 0) or np.any(p > 1):
            raise InvalidArgument("activation probabilities must lie in (0, 1]")


@dataclass(frozen=True)
class PoissonClock:
    """Single-player activation with probabilities proportional to rates."""

    rates: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=float)
        object.__setattr__(self, "rates", r)
        if np.any(r <= 0):
            raise InvalidArgument("clock rates must be strictly positive")

    def probabilities(self) -> np.ndarray:
        return self.rates / self.rates.sum()


@dataclass(frozen=True)
class Asynchronous:
    """Deterministic update sets with bounded inter-update gaps and delays.

    ``update_sets`` may be given explicitly (one set of player indices per
    iteration); otherwise sets are generated from the stream once per run
    and repaired so every aligned window of b1 iterations contains every
    player.  ``delay`` is either "uniform" (iid uniform on {0..b2}) or a
    fixed integer.
    """

    b1: int = 1
    b2: int = 0
    update_sets: Optional[Sequence] = None
    delay: Union[str, int] = "uniform"

    def __post_init__(self):
        if self.b1 < 1 or self.b2 < 0:
            raise InvalidArgument("need b1 >= 1 and b2 >= 0")
        if isinstance(self.delay, int) and not 0 <= self.delay <= self.b2:
            raise InvalidArgument("fixed delay must lie in [0, b2]")


@dataclass(frozen=True)
class Cyclic:
    """One player per iteration in index order; a special case with b1 = N."""

    b2: int = 0
    delay: Union[str, int] = "uniform"


@dataclass(frozen=True)
class SchemeConfig:
    kind: object = Synchronous()
    major_iters: int = 40
    trajectories: int = 50
    seed: int = 0


@dataclass
class TrajectoryRecord:
    """Everything one trajectory produced, snapshot per major iteration.

    ``beta[k, i]`` counts player i's updates before iteration k;
    ``sg_cum[k, i]`` is the total inner-step budget spent producing x_k.
    """

    profiles: np.ndarray          # (K+1, n)
    beta: np.ndarray              # (K+1, N)
    sg_cum: np.ndarray            # (K+1, N)
    comm_rounds: np.ndarray       # (K+1,)
    offsets: np.ndarray
    aborted: bool = False
    abort_reason: str = ""

    @property
    def n_iters(self) -> int:
        return self.profiles.shape[0] - 1

    def profile_at(self, k: int) -> Profile:
        return Profile(self.profiles[k].copy(), self.offsets)


class DelayBuffer:
    """Ring of the most recent b2+1 profiles, age 0 = current iterate.

    Ages requested beyond the stored history clamp to the oldest entry,
    which before iteration b2 is the start profile.
    """

    def __init__(self, b2: int):
        if b2 < 0:
            raise InvalidArgument("delay bound must be nonnegative")
        self.b2 = b2
        self._entries = []  # newest first

    def push(self, data: np.ndarray):
        self._entries.insert(0, np.array(data, copy=True))
        if len(self._entries) > self.b2 + 1:
            self._entries.pop()

    def by_age(self, age: int) -> np.ndarray:
        if age < 0 or age > self.b2:
            raise InvalidArgument(f"age {age} outside [0, {self.b2}]")
        return self._entries[min(age, len(self._entries) - 1)]


def delayed_view(buffer: DelayBuffer, delays, offsets) -> Profile:
    """Assemble a profile whose block j has the requested age, clamped."""
    delays = np.asarray(delays, dtype=int)
    n_blocks = len(offsets) - 1
    if delays.shape != (n_blocks,):
        raise InvalidArgument("one delay per player required")
    data = np.empty(offsets[-1], dtype=float)
    for j in range(n_blocks):
        src = buffer.by_age(int(delays[j]))
        data[offsets[j]: offsets[j + 1]] = src[offsets[j]: offsets[j + 1]]
    return Profile(data, offsets)


def run_synchronous(
    game: GameSpec,
    config: SchemeConfig,
    schedule: InnerSchedule,
    stream: SampleStream,
) -> TrajectoryRecord:
    """All players refresh their blocks from the shared current profile."""
    rec = _Recorder(game, config.major_iters)
    prof = game.start_profile()
    rec.snap(prof, rec.beta_now, rec.sg_now, 0)
    for k in range(config.major_iters):
        new = prof.copy()
        try:
            for i in range(game.n_players):
                steps = steps_for(schedule, i, k, beta=int(rec.beta_now[i]))
                rng = stream.substream(GRAD, i, k).generator()
                z = sa_solve(game, i, prof, prof.block(i).copy(), steps, rng)
                new = new.with_block(i, z)
                rec.sg_now[i] += steps
                rec.beta_now[i] += 1
        except StepBudgetExceeded as exc:
            rec.mark_aborted(str(exc))
            break
        prof = new
        rec.snap(prof, rec.beta_now, rec.sg_now, k + 1)
    return rec.finish()


def run_randomized(
    game: GameSpec,
    config: SchemeConfig,
    schedule: InnerSchedule,
    stream: SampleStream,
) -> TrajectoryRecord:
    """Bernoulli-activated updates; idle players copy their blocks forward.

    Inner-step counts depend on each player's own update count, never on
    the global clock.  Activation draws come from a dedicated stream keyed
    by iteration, consumed before any gradient noise.
    """
    kind = config.kind
    n = game.n_players
    if isinstance(kind, PoissonClock):
        probs = kind.probabilities()
    elif isinstance(kind, Randomized):
        if kind.p.shape != (n,):
            raise InvalidArgument("one activation probability per player")
    else:
        raise InvalidArgument("config.kind must be Randomized or PoissonClock")

    rec = _Recorder(game, config.major_iters)
    prof = game.start_profile()
    rec.snap(prof, rec.beta_now, rec.sg_now, 0)
    for k in range(config.major_iters):
        act_rng = stream.substream(ACTIVATION, k).generator()
        if isinstance(kind, PoissonClock):
            active = np.zeros(n, dtype=bool)
            active[int(act_rng.choice(n, p=probs))] = True
        else:
            active = act_rng.random(n) < kind.p
        new = prof.copy()
        try:
            for i in range(n):
                if not active[i]:
                    continue
                steps = steps_for(schedule, i, k, beta=int(rec.beta_now[i]))
                rng = stream.substream(GRAD, i, k).generator()
                z = sa_solve(game, i, prof, prof.block(i).copy(), steps, rng)
                new = new.with_block(i, z)
                rec.sg_now[i] += steps
        except StepBudgetExceeded as exc:
            rec.mark_aborted(str(exc))
            break
        rec.beta_now[active] += 1
        prof = new
        rec.snap(prof, rec.beta_now, rec.sg_now, k + 1)
    return rec.finish()


def run_asynchronous(
    game: GameSpec,
    config: SchemeConfig,
    schedule: InnerSchedule,
    stream: SampleStream,
) -> TrajectoryRecord:
    """Update sets with outdated rival data read through a delay ring.

    Updaters anchor the proximal term at their own current block while the
    gradient sees the delayed view; own-block delay is always zero.
    """
    kind = config.kind
    n = game.n_players
    k_max = config.major_iters
    if isinstance(kind, Cyclic):
        sets = [frozenset([k % n]) for k in range(k_max)]
        b1, b2, delay = n, kind.b2, kind.delay
    elif isinstance(kind, Asynchronous):
        b1, b2, delay = kind.b1, kind.b2, kind.delay
        if kind.update_sets is not None:
            sets = [frozenset(s) for s in kind.update_sets]
            if len(sets) < k_max:
                raise InvalidArgument("update_sets shorter than the horizon")
        else:
            sets = generate_update_sets(
                n, k_max, b1, stream.substream(UPDATE_SETS).generator()
            )
        validate_update_sets(sets[:k_max], n, b1)
    else:
        raise InvalidArgument("config.kind must be Asynchronous or Cyclic")

    rec = _Recorder(game, k_max)
    prof = game.start_profile()
    offsets = prof.offsets
    buffer = DelayBuffer(b2)
    buffer.push(prof.data)
    rec.snap(prof, rec.beta_now, rec.sg_now, 0)
    for k in range(k_max):
        new = prof.copy()
        try:
            for i in sorted(sets[k]):
                taus = _sample_delays(delay, b2, n, stream.substream(DELAY, i, k))
                taus[i] = 0
                view = delayed_view(buffer, taus, offsets)
                steps = steps_for(schedule, i, k, beta=int(rec.beta_now[i]))
                rng = stream.substream(GRAD, i, k).generator()
                z = sa_solve(
                    game, i, view, prof.block(i).copy(), steps, rng,
                    anchor_own=prof.block(i).copy(),
                )
                new = new.with_block(i, z)
                rec.sg_now[i] += steps
                rec.beta_now[i] += 1
        except StepBudgetExceeded as exc:
            rec.mark_aborted(str(exc))
            break
        prof = new
        buffer.push(prof.data)
        rec.snap(prof, rec.beta_now, rec.sg_now, k + 1)
    return rec.finish()


def generate_update_sets(n, k_max, b1, rng) -> list:
    """Random subsets repaired so each aligned b1-window covers all players."""
    sets = [set(np.flatnonzero(rng.random(n) < 0.5)) for _ in range(k_max)]
    for w_start in range(0, k_max, b1):
        w_end = min(w_start + b1, k_max)
        present = set().union(*sets[w_start:w_end])
        for i in range(n):
            if i not in present:
                sets[w_end - 1].add(i)
    return [frozenset(s) for s in sets]


def validate_update_sets(sets, n, b1):
    """Every aligned window of b1 iterations must contain every player."""
    for w_start in range(0, len(sets), b1):
        window = sets[w_start : w_start + b1]
        if len(window) < b1:
            break  # trailing partial window is unconstrained
        present = set().union(*window)
        missing = set(range(n)) - present
        if missing:
            raise InvalidArgument(
                f"players {sorted(missing)} miss the update window starting "
                f"at {w_start}"
            )


def _sample_delays(delay, b2, n, stream: SampleStream) -> np.ndarray:
    if isinstance(delay, int):
        return np.full(n, delay, dtype=int)
    if delay == "uniform":
        rng = stream.generator()
        return rng.integers(0, b2 + 1, size=n)
    if callable(delay):
        return np.asarray(delay(stream.generator(), n), dtype=int)
    raise InvalidArgument(f"unknown delay sampler {delay!r}")


class _Recorder:
    def __init__(self, game: GameSpec, k_max: int):
        n = game.n_players
        self.offsets = game.offsets()
        self.profiles = np.empty((k_max + 1, game.total_dim))
        self.beta = np.zeros((k_max + 1, n), dtype=np.int64)
        self.sg_cum = np.zeros((k_max + 1, n), dtype=np.int64)
        self.beta_now = np.zeros(n, dtype=np.int64)
        self.sg_now = np.zeros(n, dtype=np.int64)
        self._count = 0
        self._aborted = False
        self._reason = ""

    def snap(self, prof: Profile, beta, sg, k):
        self.profiles[k] = prof.data
        self.beta[k] = beta
        self.sg_cum[k] = sg
        self._count = k + 1

    def mark_aborted(self, reason: str):
        self._aborted = True
        self._reason = reason

    def finish(self) -> TrajectoryRecord:
        c = self._count
        return TrajectoryRecord(
            profiles=self.profiles[:c],
            beta=self.beta[:c],
            sg_cum=self.sg_cum[:c],
            comm_rounds=np.arange(c, dtype=np.int64),
            offsets=self.offsets,
            aborted=self._aborted,
            abort_reason=self._reason,
        )


RUNNERS = {
    Synchronous: run_synchronous,
    Randomized: run_randomized,
    PoissonClock: run_randomized,
    Asynchronous: run_asynchronous,
    Cyclic: run_asynchronous,
}


def run_trajectory(game, config, schedule, stream) -> TrajectoryRecord:
    """Dispatch on the configured scheme kind."""
    runner = RUNNERS.get(type(config.kind))
    if runner is None:
        raise InvalidArgument(f"unknown scheme kind {config.kind!r}")
    return runner(game, config, schedule, stream)


def run_trajectories(game, config, schedule) -> list:
    """All trajectories under disjoint sub-streams of the config seed."""
    base = SampleStream(config.seed)
    return [
        run_trajectory(game, config, schedule, base.substream(t))
        for t in range(config.trajectories)
    ]
