"""Keyed random streams for reproducible trajectories.

Every random draw in a run comes from a stream identified by a master seed
plus an integer key path, e.g. ``(trajectory, purpose, player, iteration)``.
Identical (seed, key) pairs yield bitwise-identical sample sequences;
distinct keys yield statistically independent streams (numpy SeedSequence
guarantees).  Within one stream, scalar variates are consumed in a fixed
documented order: player-major (via the key), coordinate-minor (row-major
array fills).
"""

from dataclasses import dataclass

import numpy as np

# Purpose codes used as key components by the scheme drivers.  Activation and
# delay randomness live on their own streams so that gradient noise is
# identical across scheme variants run under a shared seed.
GRAD = 0
ACTIVATION = 1
DELAY = 2
UPDATE_SETS = 3


@dataclass(frozen=True)
class SampleStream:
    """A lazily-instantiated random stream at a key path under a master seed."""

    seed: int
    key: tuple = ()

    def substream(self, *parts: int) -> "SampleStream":
        """Child stream with additional key components appended."""
        return SampleStream(self.seed, self.key + tuple(int(p) for p in parts))

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(ss))
