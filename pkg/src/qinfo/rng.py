"""Seeded random source used by every stochastic routine.

The generator is PCG64 (O'Neill's permuted congruential generator, 128-bit
LCG state with the XSL-RR output function giving 64-bit words). Seeds are
expanded into the 128-bit state by numpy's ``SeedSequence`` hash. Only the
raw 64-bit output stream is consumed; every derived quantity is computed here:

* uniform double in [0, 1): ``(word >> 11) * 2**-53``
* fair bit: the top bit of a word
* integer in [0, n): ``floor(uniform * n)``
* standard normal: Box-Muller on two uniforms

so a given seed reproduces the same trace bit for bit, independent of how
numpy's own distribution samplers evolve. Nothing in the package touches
global randomness; a generator is always passed in explicitly.
"""

from __future__ import annotations

import numpy as np

_TWO_NEG_53 = 2.0**-53
SEED_MASK = (1 << 64) - 1


class Rng:
    """A single-owner PCG64 stream.

    Parameters
    ----------
    seed : int
        Unsigned 64-bit seed.
    stream : tuple of int, optional
        Sub-stream key. ``Rng(s, (k,))`` is independent of ``Rng(s)`` and is
        how a session splits off channel, check-selection and hashing
        randomness without perturbing the other streams.
    """

    def __init__(self, seed: int, stream: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed <= SEED_MASK:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.stream = tuple(int(k) for k in stream)
        ss = np.random.SeedSequence(entropy=seed, spawn_key=self.stream)
        self._bitgen = np.random.PCG64(ss)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, stream={self.stream})"

    def child(self, key: int) -> "Rng":
        """Independent generator for a named sub-stream."""
        return Rng(self.seed, self.stream + (int(key),))

    def raw(self, size: int) -> np.ndarray:
        return self._bitgen.random_raw(size).astype(np.uint64)

    def random(self, size: int | None = None):
        """Uniform doubles in [0, 1)."""
        n = 1 if size is None else int(size)
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * _TWO_NEG_53
        return float(u[0]) if size is None else u

    def bits(self, size: int) -> np.ndarray:
        return (self.raw(int(size)) >> np.uint64(63)).astype(np.uint8)

    def integers(self, high: int, size: int | None = None):
        """Integers uniform on ``[0, high)``."""
        if high < 1:
            raise ValueError("high must be positive")
        u = self.random(1 if size is None else size)
        k = np.minimum(np.floor(np.atleast_1d(u) * high).astype(np.int64), high - 1)
        return int(k[0]) if size is None else k

    def normal(self, size: int) -> np.ndarray:
        size = int(size)
        m = (size + 1) // 2
        u1 = 1.0 - self.random(m)  # (0, 1], safe for log
        u2 = self.random(m)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
        return z[:size]

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.random(int(n)), kind="stable")

    def choose(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct indices from ``range(n)``, uniformly, returned sorted."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot choose {k} of {n}")
        return np.sort(self.permutation(n)[:k])


def trial_seed(base_seed: int, trial_index: int) -> int:
    """Seed for one Monte-Carlo trial: base seed plus trial index, mod 2**64."""
    return (int(base_seed) + int(trial_index)) & SEED_MASK
