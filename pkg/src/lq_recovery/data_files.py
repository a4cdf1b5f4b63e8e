"""
Plain-text storage of vectors and matrices.

Vectors are stored one decimal value per line, lines starting with `#` are comments.
Matrices are CSV files with one matrix row per line and no header.
Decimal points are always `.`, regardless of the locale.
"""

import os
from typing import Sequence, Union

import numpy as np
import numpy.typing as npt

from .core import Matrix, Vector, as_matrix, as_vector
from .errors import DomainError

PathLike = Union[str, os.PathLike]


def read_vector(filename: PathLike) -> Vector:
    """
    Read a DenseVector from a text file.

    Args:
        filename (PathLike): The file to read.

    Returns:
        Vector: The frozen vector.

    Raises:
        DomainError: If a line is not a number or the file holds no value.
    """
    try:
        values = np.loadtxt(filename, comments="#", dtype=np.float64, ndmin=1)
    except ValueError as e:
        raise DomainError(f"{filename}: not a vector file ({e})") from e
    if values.ndim != 1:
        raise DomainError(f"{filename}: expected one value per line")
    return as_vector(values, name=str(filename))


def read_matrix(filename: PathLike) -> Matrix:
    """
    Read a SenseMatrix from a CSV file.

    Args:
        filename (PathLike): The file to read.

    Returns:
        Matrix: The frozen matrix.

    Raises:
        DomainError: If the rows are ragged or hold something else than numbers.
    """
    try:
        values = np.loadtxt(
            filename, delimiter=",", comments="#", dtype=np.float64, ndmin=2
        )
    except ValueError as e:
        raise DomainError(f"{filename}: not a matrix file ({e})") from e
    return as_matrix(values, name=str(filename))


def write_vector(filename: PathLike, v: Union[Sequence[float], npt.ArrayLike]) -> None:
    # repr precision so that a write/read cycle is lossless
    np.savetxt(filename, np.asarray(v, dtype=np.float64).reshape(-1), fmt="%.17g")


def write_matrix(filename: PathLike, A: npt.ArrayLike) -> None:
    np.savetxt(filename, np.atleast_2d(np.asarray(A, dtype=np.float64)), fmt="%.17g", delimiter=",")
