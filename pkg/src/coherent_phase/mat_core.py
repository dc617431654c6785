"""Dense complex linear algebra on small matrices.

Every matrix is a two-dimensional ``numpy`` array of dtype complex128. The algorithms are written
out here (LU with partial pivoting, cyclic complex Jacobi, SVD from the Gram matrix) so that the
geometry modules depend on one audited kernel; matrices are at most 16x16.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt

from coherent_phase.types import ComplexMatrix, RealArray

logger = logging.getLogger("coherent_phase")

HERMITIAN_TOL = 1e-12
"""Largest admitted |h - h^+| entry, relative to max(1, ||h||_F), for Hermitian input."""
JACOBI_OFF_TOL = 1e-14
"""Jacobi stops once the off-diagonal Frobenius mass is below this fraction of ||h||_F."""
JACOBI_MAX_SWEEPS = 64
RANK_TOL = 1e-12
"""Singular values at or below this value are completed by Gram-Schmidt in `svd`."""
SINGULAR_PIVOT_TOL = 1e-13
"""Pivots at or below this fraction of the largest entry make `inverse` give up."""
POLE_MAGNITUDE = 1.0 / float(np.finfo(np.float64).eps)
"""Magnitude float64 functions reach at a pole, e.g. tan(pi/2) ~ 1.6e16."""

MatrixLike = Union[ComplexMatrix, npt.ArrayLike]


class DimensionError(ValueError):
    """Thrown when matrix shapes do not conform to the requested operation."""

    ...  # pragma: no cover


class NonFiniteEntryError(ValueError):
    """Thrown when a matrix contains NaN or infinite entries."""

    ...  # pragma: no cover


class NotHermitianError(ValueError):
    """Thrown when a matrix that must be Hermitian is not, beyond tolerance."""

    ...  # pragma: no cover


class NumericalError(Exception):
    """Base for failures of a numerical procedure on admissible input."""

    ...  # pragma: no cover


class SingularMatrixError(NumericalError):
    """Thrown when a matrix is numerically singular."""

    pivot: float
    """Magnitude of the pivot that was rejected."""

    def __init__(self, pivot: float):
        """Create the exception.

        :param pivot: Magnitude of the rejected pivot.
        """
        super().__init__(f"Matrix is numerically singular (pivot magnitude {pivot:.3e}).")
        self.pivot = pivot


class ConvergenceError(NumericalError):
    """Thrown when an iterative method does not converge within its iteration limit."""

    sweeps: int
    """Iterations performed before giving up."""

    def __init__(self, sweeps: int, message: str):
        """Create the exception.

        :param sweeps: Iterations performed before giving up.
        :param message: Description of the failed iteration.
        """
        super().__init__(message)
        self.sweeps = sweeps


class PoleError(NumericalError):
    """Thrown when a spectral function is singular at an eigenvalue."""

    eigenvalue: float
    """The eigenvalue at which the function could not be evaluated."""

    def __init__(self, eigenvalue: float):
        """Create the exception.

        :param eigenvalue: The offending eigenvalue.
        """
        super().__init__(f"Spectral function has a pole at eigenvalue {eigenvalue!r}.")
        self.eigenvalue = eigenvalue


@dataclass(frozen=True, eq=False)
class HermEig:
    """Eigendecomposition h = vectors . diag(eigenvalues) . vectors^+ of a Hermitian matrix."""

    eigenvalues: RealArray
    """Real eigenvalues in ascending order."""
    vectors: ComplexMatrix
    """Unitary matrix whose columns are the eigenvectors."""

    def reconstruct(self) -> ComplexMatrix:
        """Multiply the factors back together.

        :return: vectors . diag(eigenvalues) . vectors^+.
        """
        return (self.vectors * self.eigenvalues) @ dagger(self.vectors)


@dataclass(frozen=True, eq=False)
class Svd:
    """Thin singular value decomposition a = u . diag(sigma) . v^+."""

    u: ComplexMatrix
    """rows x k matrix with orthonormal columns, k = min(rows, cols)."""
    sigma: RealArray
    """Nonnegative singular values in descending order."""
    v: ComplexMatrix
    """cols x k matrix with orthonormal columns."""

    def reconstruct(self) -> ComplexMatrix:
        """Multiply the factors back together.

        :return: u . diag(sigma) . v^+.
        """
        return (self.u * self.sigma) @ dagger(self.v)


def as_complex_matrix(value: MatrixLike) -> ComplexMatrix:
    """Convert a value to a validated two-dimensional complex128 array.

    A copy is always made so callers may mutate the result.

    :param value: Anything `numpy.array` accepts.
    :raises DimensionError: If the value is not two-dimensional.
    :raises NonFiniteEntryError: If an entry is NaN or infinite.
    :return: The complex matrix.
    """
    matrix = np.array(value, dtype=np.complex128)
    if matrix.ndim != 2:
        raise DimensionError(
            f"Expected a two-dimensional matrix but received shape {matrix.shape}."
        )
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteEntryError("Matrix contains NaN or infinite entries.")
    return matrix


def identity(size: int) -> ComplexMatrix:
    """Complex identity matrix.

    :param size: Number of rows and columns.
    :return: The identity.
    """
    return np.eye(size, dtype=np.complex128)


def dagger(a: ComplexMatrix) -> ComplexMatrix:
    """Conjugate transpose of the last two axes.

    :param a: Matrix or stack of matrices.
    :return: a^+.
    """
    return np.conj(np.swapaxes(a, -1, -2))


def max_abs(a: ComplexMatrix) -> float:
    """Largest entry modulus, 0 for an empty matrix.

    :param a: The matrix.
    :return: max |a_ij|.
    """
    return float(np.max(np.abs(a))) if a.size else 0.0


def frobenius_norm(a: ComplexMatrix) -> float:
    """Frobenius norm.

    :param a: The matrix.
    :return: sqrt(sum |a_ij|^2).
    """
    return float(np.sqrt(np.sum(np.abs(a) ** 2)))


def _require_square(a: ComplexMatrix, operation: str) -> int:
    rows, cols = a.shape
    if rows != cols:
        raise DimensionError(f"{operation} requires a square matrix but received {rows}x{cols}.")
    return rows


def det(a: MatrixLike) -> complex:
    """Determinant by LU decomposition with partial pivoting.

    Row swaps flip the sign exactly; the determinant of the 0x0 matrix is 1.

    :param a: Square matrix.
    :raises DimensionError: If the matrix is not square.
    :return: det(a).
    """
    lu = as_complex_matrix(a)
    size = _require_square(lu, "det")
    result = complex(1.0)
    for k in range(size):
        pivot_row = k + int(np.argmax(np.abs(lu[k:, k])))
        pivot = lu[pivot_row, k]
        if pivot == 0:
            return complex(0.0)
        if pivot_row != k:
            lu[[k, pivot_row]] = lu[[pivot_row, k]]
            result = -result
        result *= complex(pivot)
        lu[k + 1 :, k:] -= np.outer(lu[k + 1 :, k] / pivot, lu[k, k:])
    return result


def inverse(a: MatrixLike) -> ComplexMatrix:
    """Inverse by Gauss-Jordan elimination with partial pivoting.

    :param a: Square, well-conditioned matrix.
    :raises DimensionError: If the matrix is not square.
    :raises SingularMatrixError: If a pivot drops below SINGULAR_PIVOT_TOL times the largest entry.
    :return: a^-1.
    """
    work = as_complex_matrix(a)
    size = _require_square(work, "inverse")
    if size == 0:
        return work
    scale = max_abs(work)
    augmented = np.concatenate([work, identity(size)], axis=1)
    for k in range(size):
        pivot_row = k + int(np.argmax(np.abs(augmented[k:, k])))
        pivot = augmented[pivot_row, k]
        if abs(pivot) <= SINGULAR_PIVOT_TOL * scale:
            raise SingularMatrixError(float(abs(pivot)))
        if pivot_row != k:
            augmented[[k, pivot_row]] = augmented[[pivot_row, k]]
        augmented[k] /= pivot
        factors = augmented[:, k].copy()
        factors[k] = 0.0
        augmented -= np.outer(factors, augmented[k])
    return augmented[:, size:].copy()


def _off_diagonal_norm(a: ComplexMatrix) -> float:
    off = a - np.diag(np.diag(a))
    return frobenius_norm(off)


def _jacobi_rotate(work: ComplexMatrix, vectors: ComplexMatrix, p: int, q: int) -> None:
    """Annihilate work[p, q] with a complex Jacobi rotation, in place."""
    coupling = complex(work[p, q])
    magnitude = abs(coupling)
    if magnitude == 0.0:
        return
    phase = coupling / magnitude
    theta = (work[q, q].real - work[p, p].real) / (2.0 * magnitude)
    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c
    # diag(1, conj(phase)) makes the coupling real, the real rotation then removes it.
    rotation = np.array(
        [[c, s], [-s * phase.conjugate(), c * phase.conjugate()]], dtype=np.complex128
    )
    pair = [p, q]
    work[:, pair] = work[:, pair] @ rotation
    work[pair, :] = dagger(rotation) @ work[pair, :]
    work[p, q] = 0.0
    work[q, p] = 0.0
    work[p, p] = work[p, p].real
    work[q, q] = work[q, q].real
    vectors[:, pair] = vectors[:, pair] @ rotation


def herm_eig(h: MatrixLike) -> HermEig:
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    The input is symmetrized as (h + h^+)/2 first. Sweeps continue until the off-diagonal
    Frobenius mass is below JACOBI_OFF_TOL times ||h||_F.

    :param h: Hermitian matrix.
    :raises DimensionError: If the matrix is not square.
    :raises NotHermitianError: If h deviates from h^+ beyond HERMITIAN_TOL.
    :raises ConvergenceError: If JACOBI_MAX_SWEEPS sweeps do not suffice.
    :return: Ascending eigenvalues with unitary eigenvectors.
    """
    matrix = as_complex_matrix(h)
    size = _require_square(matrix, "herm_eig")
    scale = frobenius_norm(matrix)
    asymmetry = max_abs(matrix - dagger(matrix))
    if asymmetry > HERMITIAN_TOL * max(1.0, scale):
        raise NotHermitianError(
            f"Matrix is not Hermitian: largest |h - h^+| entry is {asymmetry:.3e}."
        )
    work = 0.5 * (matrix + dagger(matrix))
    vectors = identity(size)
    threshold = JACOBI_OFF_TOL * scale

    sweeps = 0
    while _off_diagonal_norm(work) > threshold:
        if sweeps == JACOBI_MAX_SWEEPS:
            raise ConvergenceError(
                sweeps, f"Jacobi eigensolver did not converge within {sweeps} sweeps."
            )
        for p in range(size - 1):
            for q in range(p + 1, size):
                _jacobi_rotate(work, vectors, p, q)
        sweeps += 1
    logger.debug("Jacobi eigensolver converged for %sx%s input in %s sweeps", size, size, sweeps)

    eigenvalues = np.real(np.diag(work)).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return HermEig(eigenvalues=eigenvalues[order], vectors=vectors[:, order].copy())


def _orthogonalize(
    vector: ComplexMatrix, basis: Sequence[ComplexMatrix]
) -> Optional[ComplexMatrix]:
    """Modified Gram-Schmidt, two passes; None when nothing independent remains."""
    work = vector.copy()
    for _ in range(2):
        for column in basis:
            work = work - np.vdot(column, work) * column
    norm = float(np.sqrt(np.sum(np.abs(work) ** 2)))
    if norm <= RANK_TOL:
        return None
    return work / norm


def _completion_vector(rows: int, basis: Sequence[ComplexMatrix]) -> ComplexMatrix:
    best: Optional[ComplexMatrix] = None
    best_norm = -1.0
    for index in range(rows):
        candidate = np.zeros(rows, dtype=np.complex128)
        candidate[index] = 1.0
        for _ in range(2):
            for column in basis:
                candidate = candidate - np.vdot(column, candidate) * column
        norm = float(np.sqrt(np.sum(np.abs(candidate) ** 2)))
        if norm > best_norm:
            best, best_norm = candidate, norm
    assert best is not None
    return best / best_norm


def svd(a: MatrixLike) -> Svd:
    """Thin singular value decomposition.

    Right factors come from `herm_eig` of a^+a; the singular values are the norms of the columns
    of a.v and the left factors those columns normalized, orthogonalized by modified Gram-Schmidt
    and completed where a singular value is at or below RANK_TOL.

    :param a: Any rectangular matrix.
    :return: The decomposition with u rows x k, v cols x k, k = min(rows, cols).
    """
    matrix = as_complex_matrix(a)
    rows, cols = matrix.shape
    if rows < cols:
        flipped = svd(dagger(matrix))
        return Svd(u=flipped.v, sigma=flipped.sigma, v=flipped.u)

    eig = herm_eig(dagger(matrix) @ matrix)
    right = eig.vectors[:, ::-1]
    columns = matrix @ right
    sigma = np.sqrt(np.sum(np.abs(columns) ** 2, axis=0))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    right = right[:, order]
    columns = columns[:, order]

    basis: List[ComplexMatrix] = []
    for j in range(cols):
        vector = None
        if sigma[j] > RANK_TOL:
            vector = _orthogonalize(columns[:, j] / sigma[j], basis)
        if vector is None:
            vector = _completion_vector(rows, basis)
        basis.append(vector)
    left = np.stack(basis, axis=1) if basis else np.zeros((rows, 0), dtype=np.complex128)
    return Svd(u=left, sigma=sigma, v=right.copy())


def spectral_norm(a: MatrixLike) -> float:
    """Largest singular value, 0 for an empty matrix.

    :param a: The matrix.
    :return: ||a||_2.
    """
    sigma = svd(a).sigma
    return float(sigma[0]) if sigma.size else 0.0


def herm_fun(h: MatrixLike, f: Callable[[float], float]) -> ComplexMatrix:
    """Apply a real scalar function to a Hermitian matrix through its spectrum.

    :param h: Hermitian matrix.
    :param f: Function evaluated on each eigenvalue.
    :raises PoleError: If f raises an arithmetic error, or returns a non-finite value or a value
        beyond POLE_MAGNITUDE, at some eigenvalue.
    :return: V . diag(f(lambda_i)) . V^+, made exactly Hermitian.
    """
    eig = herm_eig(h)
    values = np.empty(eig.eigenvalues.size, dtype=np.float64)
    for index, eigenvalue in enumerate(eig.eigenvalues):
        try:
            value = float(f(float(eigenvalue)))
        except (ArithmeticError, ValueError) as error:
            raise PoleError(float(eigenvalue)) from error
        if not math.isfinite(value) or abs(value) > POLE_MAGNITUDE:
            raise PoleError(float(eigenvalue))
        values[index] = value
    result = (eig.vectors * values) @ dagger(eig.vectors)
    return 0.5 * (result + dagger(result))


def inverse_sqrt(value: float) -> float:
    """Scalar 1/sqrt(x), for use with `herm_fun`.

    :param value: Positive number.
    :return: value ** -0.5.
    """
    return 1.0 / math.sqrt(value)
