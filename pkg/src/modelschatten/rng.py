"""Seeded 64-bit linear congruential generator.

The recurrence is ``state <- (A * state + C) mod 2**64`` with
``A = 6364136223846793005`` and ``C = 1442695040888963407``.  A uniform
double in ``[0, 1)`` is the top 53 bits of the new state divided by
``2**53``.  The stream is fully specified so that the atom samples used
by the experiments can be reproduced in any language.
"""

from __future__ import annotations

import math

import numpy as np

MULTIPLIER = 6364136223846793005
INCREMENT = 1442695040888963407
_MASK = (1 << 64) - 1


class LCG64:
    """Minimal LCG with uniform, disk and annulus helpers."""

    def __init__(self, seed: int = 0):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (MULTIPLIER * self.state + INCREMENT) & _MASK
        return self.state

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = (self.next_u64() >> 11) / float(1 << 53)
        return lo + (hi - lo) * u

    def uniforms(self, n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        return np.array([self.uniform(lo, hi) for _ in range(n)])

    def point_in_disk(self, radius: float = 1.0, accept=None) -> complex:
        """Uniform point in ``|z| <= radius`` by rejection, optionally filtered."""
        while True:
            x = self.uniform(-radius, radius)
            y = self.uniform(-radius, radius)
            z = complex(x, y)
            if abs(z) <= radius and (accept is None or accept(z)):
                return z

    def blaschke_zeros(self, degree: int, rmax: float = 0.8) -> np.ndarray:
        """Zeros ``r e^{it}`` with ``r`` uniform in ``[0, rmax]``, ``t`` uniform."""
        out = []
        for _ in range(degree):
            r = self.uniform(0.0, rmax)
            t = self.uniform(0.0, 2.0 * math.pi)
            out.append(r * complex(math.cos(t), math.sin(t)))
        return np.array(out, dtype=complex)
