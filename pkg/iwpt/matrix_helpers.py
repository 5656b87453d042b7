"""
# `iwpt.matrix_helpers`

Helper functions for the dense complex linear algebra shared by the solver modules.
"""

__all__ = [
    "as_vector",
    "as_matrix",
    "hermitianize",
    "is_hermitian",
    "fix_phase",
    "dominant_eigenpair",
    "eigen_ratio",
]

from typing import Tuple

import numpy as np
from scipy import linalg

from .type_hints import ComplexMatrix, ComplexVector


def as_vector(value) -> ComplexVector:
    """
    Unwraps a beam-like object into a 1-D complex array.

    Accepts anything with an ``x`` attribute (``BeamVector``) or any array-like.

    :param value: The vector or wrapper.
    :return: A 1-D complex array.
    :rtype: ComplexVector
    """
    value = getattr(value, "x", value)
    return np.asarray(value, dtype=complex).reshape(-1)


def as_matrix(value) -> ComplexMatrix:
    """
    Unwraps a matrix-like object into a 2-D complex array.

    Accepts anything with a ``matrix`` attribute (``CovarianceMatrix``, ``TraceKernel``,
    ``EquivalentChannel``) or any array-like.

    :param value: The matrix or wrapper.
    :return: A 2-D complex array.
    :rtype: ComplexMatrix
    """
    value = getattr(value, "matrix", value)
    matrix = np.asarray(value, dtype=complex)
    if matrix.ndim != 2:
        raise ValueError(f"Expected a 2-D matrix, got {matrix.ndim} dimensions.")
    return matrix


def hermitianize(matrix: ComplexMatrix) -> ComplexMatrix:
    """
    Returns ``(A + A^H) / 2``, scrubbing rounding asymmetry.

    :param matrix: A square matrix.
    :type matrix: ComplexMatrix
    :return: The Hermitian part of the matrix.
    :rtype: ComplexMatrix
    """
    return 0.5 * (matrix + matrix.conj().T)


def is_hermitian(matrix: ComplexMatrix, tolerance: float = 1e-12) -> bool:
    """
    If ``‖A − A^H‖_F ≤ tolerance · max(‖A‖_F, 1e-300)``.

    :param matrix: A square matrix.
    :type matrix: ComplexMatrix
    :param tolerance: The relative tolerance.
    :type tolerance: float
    :rtype: bool
    """
    if matrix.shape[0] != matrix.shape[1]:
        return False
    scale = max(float(np.linalg.norm(matrix)), 1e-300)
    return float(np.linalg.norm(matrix - matrix.conj().T)) <= tolerance * scale


def fix_phase(vector: ComplexVector) -> ComplexVector:
    """
    Rotates a vector so its largest-magnitude entry is real and positive.

    Ties resolve to the first such entry. A zero vector is returned unchanged.

    :param vector: The vector to rotate.
    :type vector: ComplexVector
    :return: The rotated vector.
    :rtype: ComplexVector
    """
    vector = np.asarray(vector, dtype=complex)
    if not vector.size:
        return vector
    pivot = vector[int(np.argmax(np.abs(vector)))]
    if pivot == 0:
        return vector
    return vector * (np.conj(pivot) / np.abs(pivot))


def dominant_eigenpair(matrix: ComplexMatrix) -> Tuple[float, ComplexVector]:
    """
    Returns the largest eigenvalue and its unit eigenvector for a Hermitian matrix.

    :param matrix: A Hermitian matrix.
    :type matrix: ComplexMatrix
    :return: ``(λ_max, u_max)``.
    :rtype: Tuple[float, ComplexVector]
    """
    size = matrix.shape[0]
    values, vectors = linalg.eigh(
        hermitianize(matrix), subset_by_index=[size - 1, size - 1]
    )
    return float(values[0]), vectors[:, 0]


def eigen_ratio(matrix: ComplexMatrix) -> float:
    """
    Returns ``λ₂/λ₁`` for a Hermitian PSD matrix, 0 for 1×1 or zero matrices.

    :param matrix: A Hermitian PSD matrix.
    :type matrix: ComplexMatrix
    :rtype: float
    """
    if matrix.shape[0] < 2:
        return 0.0
    values = linalg.eigvalsh(hermitianize(matrix))
    if values[-1] <= 0:
        return 0.0
    return float(max(values[-2], 0.0) / values[-1])
