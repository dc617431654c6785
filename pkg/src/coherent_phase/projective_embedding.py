"""Pluecker embedding of the Grassmannian into projective space and Fubini-Study functions."""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import List, Tuple

import numpy as np
import numpy.typing as npt
from typing_extensions import Self

from coherent_phase.coherent_phases import bargmann_three_point
from coherent_phase.grassmann_geometry import GrassmannPoint
from coherent_phase.mat_core import DimensionError, NonFiniteEntryError, det, identity

logger = logging.getLogger("coherent_phase")

MAX_AMBIENT_DIMENSION = 10
"""Largest m + n that is embedded, keeping at most 252 homogeneous coordinates."""
ZERO_VECTOR_TOL = 1e-300

ComplexVector = npt.NDArray[np.complex128]


class ZeroVectorError(ValueError):
    """Thrown when homogeneous coordinates are all zero and do not define a projective point."""

    ...  # pragma: no cover


@dataclass(frozen=True, eq=False)
class ProjectivePoint:
    """Point of CP^N given by homogeneous coordinates."""

    homo: ComplexVector
    """N + 1 homogeneous coordinates, not all zero. Read-only."""

    def __post_init__(self) -> None:
        """Validate the coordinates."""
        homo = np.array(self.homo, dtype=np.complex128)
        if homo.ndim != 1 or homo.size == 0:
            raise DimensionError(
                f"Homogeneous coordinates must be a vector, got shape {homo.shape}."
            )
        if not np.all(np.isfinite(homo)):
            raise NonFiniteEntryError("Homogeneous coordinates contain NaN or infinite entries.")
        if float(np.max(np.abs(homo))) <= ZERO_VECTOR_TOL:
            raise ZeroVectorError("All homogeneous coordinates are zero.")
        homo.setflags(write=False)
        object.__setattr__(self, "homo", homo)

    @classmethod
    def from_coordinates(cls, *coordinates: complex) -> Self:
        """Create a point from its coordinates.

        :param coordinates: The homogeneous coordinates.
        :return: The point.
        """
        return cls(homo=np.array(coordinates, dtype=np.complex128))

    @property
    def norm(self) -> float:
        """Euclidean norm of the homogeneous coordinates."""
        return float(np.sqrt(np.sum(np.abs(self.homo) ** 2)))

    def inner(self, other: "ProjectivePoint") -> complex:
        """Hermitian inner product, linear in `other`.

        :param other: Second point.
        :return: sum conj(self_i) other_i.
        """
        if self.homo.shape != other.homo.shape:
            raise DimensionError(
                f"Points of CP^{self.homo.size - 1} and CP^{other.homo.size - 1} cannot be paired."
            )
        return complex(np.vdot(self.homo, other.homo))

    def is_same_point(self, other: "ProjectivePoint", tol: float = 1e-10) -> bool:
        """Projective equality: the normalized coordinates of both points are proportional.

        :param other: Second point.
        :param tol: Bound on every 2x2 minor of the stacked normalized coordinates.
        :return: True if both represent the same point.
        """
        if self.homo.shape != other.homo.shape:
            return False
        first = self.homo / self.norm
        second = other.homo / other.norm
        minors = np.outer(first, second) - np.outer(second, first)
        return float(np.max(np.abs(minors))) <= tol


def plucker_indices(n: int, m: int) -> List[Tuple[int, ...]]:
    """Column subsets of [1_n | Z] in lexicographic order, the identity block first.

    :param n: Dimension of the subspace.
    :param m: Codimension of the subspace.
    :return: binomial(m + n, n) index tuples.
    """
    return list(combinations(range(n + m), n))


def plucker_embed(p: GrassmannPoint) -> ProjectivePoint:
    """Pluecker coordinates of a point: the n x n minors of [1_n | Z].

    :param p: The point.
    :raises DimensionError: If m + n exceeds MAX_AMBIENT_DIMENSION.
    :return: Homogeneous coordinates with first entry 1.
    """
    if p.n + p.m > MAX_AMBIENT_DIMENSION:
        raise DimensionError(
            f"Pluecker embedding is limited to m + n <= {MAX_AMBIENT_DIMENSION}, "
            f"got {p.n + p.m}."
        )
    frame = np.concatenate([identity(p.n), p.z], axis=1)
    minors = [det(frame[:, list(columns)]) for columns in plucker_indices(p.n, p.m)]
    return ProjectivePoint(homo=np.array(minors, dtype=np.complex128))


def fs_two_point(a: ProjectivePoint, b: ProjectivePoint) -> float:
    """Fubini-Study two-point function |<a, b>| / (|a| |b|).

    :param a: First point.
    :param b: Second point.
    :return: Cosine of the Cayley distance, in [0, 1].
    """
    value = abs(a.inner(b)) / (a.norm * b.norm)
    return min(1.0, max(0.0, value))


def cpn_three_point(a: ProjectivePoint, b: ProjectivePoint, c: ProjectivePoint) -> complex:
    """Three-point function <a,b><b,c><c,a> / (|a|^2 |b|^2 |c|^2) on CP^N.

    :param a: First point.
    :param b: Second point.
    :param c: Third point.
    :return: The invariant, independent of the representatives.
    """
    numerator = a.inner(b) * b.inner(c) * c.inner(a)
    return numerator / (a.norm**2 * b.norm**2 * c.norm**2)


def cauchy_residual(x: GrassmannPoint, y: GrassmannPoint, z: GrassmannPoint) -> float:
    """Difference between the Grassmannian invariant and the invariant of the embedded triangle.

    :param x: First vertex.
    :param y: Second vertex.
    :param z: Third vertex.
    :return: Modulus of the difference.
    """
    embedded = cpn_three_point(plucker_embed(x), plucker_embed(y), plucker_embed(z))
    return abs(bargmann_three_point(x, y, z) - embedded)
