"""
Vector and matrix primitives of the toolkit.

A DenseVector is a read-only, finite, one dimensional float64 array and a SenseMatrix
is a read-only, finite, two dimensional float64 array. Everything else in this module
is a pure function of those.
"""

from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .errors import DomainError

Vector = npt.NDArray[np.float64]
Matrix = npt.NDArray[np.float64]

WEIGHT_SUM_TOL = 1e-12


def as_vector(values: npt.ArrayLike, name: str = "vector") -> Vector:
    """
    Validate and freeze a DenseVector.

    Args:
        values (ArrayLike): The entries.
        name (str, optional): Used in error messages. Defaults to "vector".

    Returns:
        Vector: A read-only float64 copy.

    Raises:
        DomainError: If the input is not one dimensional, is empty or holds NaN/Inf.
    """
    v = np.array(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DomainError(f"{name} must be a non-empty one dimensional array")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} has non-finite entries")
    v.flags.writeable = False
    return v


def as_matrix(values: npt.ArrayLike, name: str = "matrix") -> Matrix:
    A = np.array(values, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DomainError(f"{name} must be a two dimensional array with n, p >= 1")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} has non-finite entries")
    A.flags.writeable = False
    return A


class KTermSplit(NamedTuple):
    head: Vector
    tail: Vector
    k: int


def lq_quasinorm(v: npt.ArrayLike, q: float) -> float:
    """
    The l_q (quasi-)norm (sum |v_i|^q)^(1/q).

    Args:
        v (ArrayLike): The vector.
        q (float): Any positive exponent, q < 1 gives a quasi-norm.

    Returns:
        float: The norm, 0 exactly when v is 0.

    Raises:
        DomainError: If q <= 0; the l0 count lives in `l0_count`.
    """
    if not q > 0:
        raise DomainError(f"q must be positive, got {q!r} (use l0_count for q = 0)")
    magnitudes = np.abs(as_vector(v))
    scale = magnitudes.max()
    if scale == 0:
        return 0.0
    # scaling keeps |v_i|^q away from overflow/underflow for large q
    return float(scale * np.sum((magnitudes / scale) ** q) ** (1.0 / q))


def lq_power(v: npt.ArrayLike, q: float) -> float:
    """The l_q objective sum |v_i|^q, for 0 < q <= 1."""
    if not 0 < q <= 1:
        raise DomainError(f"q must lie in (0, 1], got {q!r}")
    return float(np.sum(np.abs(as_vector(v)) ** q))


def l0_count(v: npt.ArrayLike, tol: Optional[float] = None) -> int:
    """
    Number of entries with |v_i| > tol.

    Args:
        v (ArrayLike): The vector.
        tol (Optional[float], optional): Threshold. Defaults to 1e-9 * max|v_i|.

    Returns:
        int: The count.
    """
    magnitudes = np.abs(as_vector(v))
    if tol is None:
        tol = 1e-9 * float(magnitudes.max())
    if tol < 0:
        raise DomainError("tol must be non-negative")
    return int(np.count_nonzero(magnitudes > tol))


def best_k_split(v: npt.ArrayLike, k: int) -> KTermSplit:
    """
    Split v into its k largest-magnitude entries and the remainder.

    Ties in magnitude go to the lower index.

    Args:
        v (ArrayLike): The vector.
        k (int): How many entries the head keeps, 0 <= k <= p.

    Returns:
        KTermSplit: head + tail == v exactly, with disjoint supports.
    """
    v = as_vector(v)
    if not 0 <= k <= v.size:
        raise DomainError(f"k must lie in [0, {v.size}], got {k}")
    # a stable sort of -|v| keeps lower indices first among equal magnitudes
    order = np.argsort(-np.abs(v), kind="stable")[:k]
    head = np.zeros_like(v)
    head[order] = v[order]
    tail = v.copy()
    tail[order] = 0.0
    head.flags.writeable = False
    tail.flags.writeable = False
    return KTermSplit(head=head, tail=tail, k=k)


def tail_dominance(h: npt.ArrayLike, k: int, q: float) -> Tuple[float, float]:
    """
    Return (||h_max(k)||_q^q, ||h_-max(k)||_q^q).

    For a null-space direction h of a matrix on which l_q minimization recovers every
    k-sparse vector the tail never outweighs the head.
    """
    split = best_k_split(h, k)
    return lq_power(split.head, q), lq_power(split.tail, q)


def spectral_norm(A: npt.ArrayLike) -> float:
    """Largest singular value, from a complete singular value decomposition."""
    return float(scipy.linalg.svdvals(as_matrix(A))[0])


def holder_factor(count: int, q: float) -> float:
    """The factor count^(1/q - 1/2) bounding ||v||_q by ||v||_2 for count-sparse v."""
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    if not 0 < q < 1:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    return float(count ** (1.0 / q - 0.5))


def polarization_residual(
    B: npt.ArrayLike,
    betas: Sequence[npt.ArrayLike],
    lambdas: Sequence[float],
    c: float,
) -> float:
    """
    LHS - RHS of the weighted polarization identity

        sum_i l_i ||B(sum_j l_j b_j - c b_i)||^2 + (1 - 2c) sum_{i<j} l_i l_j ||B(b_i - b_j)||^2
            = sum_i l_i (1 - c)^2 ||B b_i||^2

    which holds exactly for any B, b_i and c once the weights l_i sum to one.

    Args:
        B (ArrayLike): An n x p matrix.
        betas (Sequence[ArrayLike]): N vectors of length p.
        lambdas (Sequence[float]): N non-negative weights summing to one.
        c (float): Any real.

    Returns:
        float: The residual, zero up to rounding.
    """
    B = as_matrix(B, name="B")
    lam = np.asarray(lambdas, dtype=np.float64)
    if lam.ndim != 1 or lam.size == 0 or lam.size != len(betas):
        raise DomainError("betas and lambdas must be non-empty and of the same length")
    if np.any(lam < 0) or abs(float(lam.sum()) - 1.0) > WEIGHT_SUM_TOL:
        raise DomainError("lambdas must be non-negative and sum to 1")
    images = B @ np.column_stack([as_vector(b, name="beta") for b in betas])
    mean = images @ lam

    lhs = sum(lam[i] * np.sum((mean - c * images[:, i]) ** 2) for i in range(lam.size))
    cross = 0.0
    for i in range(lam.size):
        for j in range(i + 1, lam.size):
            cross += lam[i] * lam[j] * np.sum((images[:, i] - images[:, j]) ** 2)
    lhs += (1 - 2 * c) * cross
    rhs = (1 - c) ** 2 * float(lam @ np.sum(images**2, axis=0))
    return float(lhs - rhs)
