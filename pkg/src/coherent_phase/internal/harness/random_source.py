"""Seeded random numbers and random chart points for the verification harness.

The generator is xoshiro256** seeded through splitmix64, following the published reference
algorithms, so a given seed yields the same matrices on every platform.
"""

import logging
import math
from typing import List, Tuple

import numpy as np

from coherent_phase.grassmann_geometry import (
    ChartExitError,
    CutLocusError,
    GrassmannPoint,
    geodesic_between,
)
from coherent_phase.mat_core import NumericalError, spectral_norm

logger = logging.getLogger("coherent_phase")

MASK64 = (1 << 64) - 1


class SamplingException(NumericalError):
    """Thrown when no admissible sample was found within the resampling limit."""

    ...  # pragma: no cover


def splitmix64(state: int) -> Tuple[int, int]:
    """Advance a splitmix64 state.

    :param state: Current 64-bit state.
    :return: The next state and the output drawn from it.
    """
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _rotl(value: int, shift: int) -> int:
    return ((value << shift) | (value >> (64 - shift))) & MASK64


class Xoshiro256StarStar:
    """xoshiro256** pseudo random generator."""

    _state: List[int]

    def __init__(self, seed: int):
        """Create the generator, expanding the seed with splitmix64.

        :param seed: Seed, reduced modulo 2**64.
        """
        state = seed & MASK64
        self._state = []
        for _ in range(4):
            state, value = splitmix64(state)
            self._state.append(value)

    def next_u64(self) -> int:
        """Draw the next 64-bit output.

        :return: Integer in [0, 2**64).
        """
        s0, s1, s2, s3 = self._state
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._state = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        """Uniform double from the top 53 bits.

        :return: Float in [0, 1).
        """
        return (self.next_u64() >> 11) * 2.0**-53

    def gaussian(self) -> float:
        """Standard normal variate by the Box-Muller transform.

        :return: Float drawn from N(0, 1).
        """
        radius = math.sqrt(-2.0 * math.log(1.0 - self.uniform()))
        return radius * math.cos(2.0 * math.pi * self.uniform())

    def complex_gaussian(self) -> complex:
        """Circular complex normal variate with unit variance.

        :return: Complex number whose parts are drawn from N(0, 1/2).
        """
        scale = math.sqrt(0.5)
        return complex(scale * self.gaussian(), scale * self.gaussian())


def random_point(
    n: int, m: int, rng: Xoshiro256StarStar, radius_cap: float = 0.8
) -> GrassmannPoint:
    """Random chart point with spectral norm at most radius_cap.

    A complex Gaussian matrix is rescaled to spectral norm radius_cap * u with u uniform in [0, 1).

    :param n: Dimension of the subspace.
    :param m: Codimension of the subspace.
    :param rng: Generator to draw from.
    :param radius_cap: Upper bound on the spectral norm.
    :return: The point.
    """
    entries = np.array([rng.complex_gaussian() for _ in range(n * m)], dtype=np.complex128)
    matrix = entries.reshape(n, m)
    norm = spectral_norm(matrix)
    scale = radius_cap * rng.uniform()
    if norm == 0.0:
        return GrassmannPoint.origin(n, m)
    return GrassmannPoint.from_matrix(matrix * (scale / norm))


def in_uniqueness_domain(*vertices: GrassmannPoint) -> bool:
    """Check that every pair of vertices is joined by a unique geodesic arc.

    :param vertices: Triangle vertices.
    :return: False if some arc reaches the cut locus or leaves the chart.
    """
    try:
        for index, start in enumerate(vertices):
            for end in vertices[index + 1 :]:
                geodesic_between(start, end)
    except (CutLocusError, ChartExitError):
        return False
    return True


def random_triangle(
    n: int,
    m: int,
    rng: Xoshiro256StarStar,
    radius_cap: float = 0.8,
    with_origin: bool = False,
    max_resample: int = 100,
) -> Tuple[GrassmannPoint, GrassmannPoint, GrassmannPoint]:
    """Random triangle inside the uniqueness domain, redrawn until admissible.

    :param n: Dimension of the subspace.
    :param m: Codimension of the subspace.
    :param rng: Generator to draw from.
    :param radius_cap: Upper bound on the spectral norm of the vertices.
    :param with_origin: Whether the first vertex is the origin.
    :param max_resample: How often a rejected triangle may be redrawn.
    :raises SamplingException: If no admissible triangle was found.
    :return: The three vertices.
    """
    for attempt in range(max_resample + 1):
        first = (
            GrassmannPoint.origin(n, m) if with_origin else random_point(n, m, rng, radius_cap)
        )
        triangle = (first, random_point(n, m, rng, radius_cap), random_point(n, m, rng, radius_cap))
        if in_uniqueness_domain(*triangle):
            if attempt:
                logger.debug("Accepted triangle after %s rejected draws", attempt)
            return triangle
    raise SamplingException(
        f"No triangle in the uniqueness domain after {max_resample} resampled draws."
    )
