# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Reduced row echelon forms in floating point or in exact rationals.

Float mode runs Gauss-Jordan with partial pivoting and treats pivots no
larger than PIVOT_TOLERANCE * max|K| as zero.  Exact mode runs the same
elimination over fractions.Fraction entries held in numpy object arrays
and is authoritative whenever the two disagree.

Row spaces that grow block by block are kept separately: exact ones as
fraction-free reduced integer rows and float ones as orthonormal bases."""
import functools
import logging
import math
import typing
from fractions import Fraction

import numpy as np
import scipy.linalg

from . import error
from . import struct

logger = logging.getLogger(__name__)

MODES = ("float", "exact")
PIVOT_TOLERANCE = 1e-9
ONE_HOT_TOLERANCE = 1e-6
LEAK_TOLERANCE = 1e-3


def to_exact(array: typing.Any) -> np.ndarray:
    """Object array of Fractions; floats keep their exact dyadic value."""
    array = np.asarray(array)
    result = np.empty(array.shape, dtype=object)
    values = array.ravel()
    if array.dtype != object:
        values = values.tolist()
    result.flat[:] = [
        x if isinstance(x, Fraction) else Fraction(x) for x in values
    ]
    return result


def identity(n: int, exact: bool = False) -> np.ndarray:
    """n x n identity as floats or as Fractions."""
    if not exact:
        return np.eye(n)
    result = np.full((n, n), Fraction(0), dtype=object)
    for i in range(n):
        result[i, i] = Fraction(1)
    return result


def check_mode(mode: str) -> bool:
    """Validate mode, returning whether it is exact."""
    if mode not in MODES:
        raise error.RumorError(
            "Unknown mode {!r}; choose from {}".format(mode, MODES)
        )
    return mode == "exact"


def rref(
    k: typing.Union[struct.KnowledgeMatrix, np.ndarray],
    mode: str = "float",
    *,
    transform: bool = True,
    tolerance: float = PIVOT_TOLERANCE
) -> struct.RrefDecomposition:
    """Factor K into U = L K with U the unique RREF of K.

    Rank deficiency is expected.  Skipping the transform saves the m x m
    bookkeeping when only U is required (e.g. static audits)."""
    exact = check_mode(mode)
    if isinstance(k, struct.KnowledgeMatrix):
        matrix, columns = k.matrix, tuple(k.columns)
    else:
        matrix, columns = k, None
    a = to_exact(matrix) if exact else np.array(matrix, dtype=float)
    if a.ndim != 2:
        raise error.RumorError(
            "RREF requires a matrix, not shape {}".format(a.shape)
        )
    m, n = a.shape
    if columns is None:
        columns = tuple(range(n))
    if transform:
        a = np.hstack((a, identity(m, exact)))

    threshold = 0.0
    if not exact and m and n:
        threshold = tolerance * float(np.abs(a[:, :n]).max())

    pivots = []
    row = 0
    for column in range(n):
        if row == m:
            break
        if exact:
            best = next((r for r in range(row, m) if a[r, column] != 0), None)
            if best is None:
                continue
        else:
            magnitudes = np.abs(a[row:, column])
            best = row + int(np.argmax(magnitudes))
            if magnitudes[best - row] <= threshold:
                a[row:, column] = 0.0
                continue
        if best != row:
            a[[row, best]] = a[[best, row]]
        a[row] = a[row] / a[row, column]
        if exact:
            for r in range(m):
                if r != row and a[r, column] != 0:
                    a[r] = a[r] - a[r, column] * a[row]
        else:
            factors = a[:, column].copy()
            factors[row] = 0.0
            a -= np.outer(factors, a[row])
            a[:, column] = 0.0
            a[row, column] = 1.0
        pivots.append(column)
        row += 1

    logger.debug(
        "rref: {}x{} {} matrix has rank {}".format(m, n, mode, len(pivots))
    )
    return struct.RrefDecomposition(
        reduced=a[:, :n],
        transform=a[:, n:] if transform else None,
        pivots=tuple(pivots),
        rank=len(pivots),
        tolerance=threshold,
        exact=exact,
        columns=columns,
    )


def _one_hot(row: np.ndarray, column: int, exact: bool, tolerance: float):
    if exact:
        return row[column] == 1 and np.count_nonzero(row != 0) == 1
    row = np.asarray(row, dtype=float)
    others = np.abs(np.delete(row, column))
    return abs(row[column] - 1.0) <= tolerance and (
        others.size == 0 or others.max() < tolerance
    )


def classify_reconstructible(
    dec: struct.RrefDecomposition, tolerance: float = ONE_HOT_TOLERANCE
) -> typing.FrozenSet[int]:
    """Nodes whose row of U is a one-hot vector."""
    return frozenset(
        dec.columns[column]
        for i, column in enumerate(dec.pivots)
        if _one_hot(dec.reduced[i], column, dec.exact, tolerance)
    )


def numerically_leaked(
    dec: struct.RrefDecomposition, tolerance: float = LEAK_TOLERANCE
) -> typing.FrozenSet[int]:
    """Nodes whose row of U lies within a loose tolerance of one-hot."""
    return classify_reconstructible(dec, tolerance=tolerance)


def _lcm(a: int, b: int) -> int:
    return a // math.gcd(a, b) * b


def to_integer(matrix: typing.Any, *, per_row: bool = True) -> np.ndarray:
    """Integer multiple of a rational matrix as a Python-int object array.

    Scaling each row by its own common denominator keeps the row space;
    one factor for the whole matrix keeps the linear map up to a scalar."""
    exact = to_exact(matrix)
    result = np.empty(exact.shape, dtype=object)
    if per_row:
        for i, row in enumerate(exact):
            scale = functools.reduce(_lcm, (x.denominator for x in row), 1)
            result[i] = [int(x * scale) for x in row]
        return result
    scale = functools.reduce(_lcm, (x.denominator for x in exact.flat), 1)
    result.flat[:] = [int(x * scale) for x in exact.flat]
    return result


def row_space(columns: int, exact: bool = False) -> struct.RowSpace:
    """Empty row space of vectors with the given length."""
    return struct.RowSpace(
        rows=np.empty((0, columns), dtype=object if exact else float),
        pivots=(),
        exact=exact,
    )


def _primitive(row: np.ndarray) -> np.ndarray:
    divisor = functools.reduce(math.gcd, row.tolist(), 0)
    return row // divisor if divisor > 1 else row


def _extend_exact(space, candidates):
    rows, pivots, fresh = list(space.rows), list(space.pivots), []
    for candidate in candidates:
        row = np.array(candidate, dtype=object)
        for basis, column in zip(rows, pivots):
            if row[column] != 0:
                row = _primitive(basis[column] * row - row[column] * basis)
        nonzero = np.flatnonzero(row != 0)
        if not nonzero.size:
            continue
        column = int(nonzero[0])
        row = _primitive(-row if row[column] < 0 else row)
        for i, basis in enumerate(rows):
            if basis[column] != 0:
                rows[i] = _primitive(row[column] * basis - basis[column] * row)
        rows.append(row)
        pivots.append(column)
        fresh.append(row)
    columns = space.rows.shape[1]
    stacked = np.vstack(rows) if rows else space.rows
    fresh = np.vstack(fresh) if fresh else np.empty((0, columns), object)
    return struct.RowSpace(stacked, tuple(pivots), True), fresh


def _extend_float(space, candidates, tolerance):
    basis = space.rows
    block = np.asarray(candidates, dtype=float).reshape(-1, basis.shape[1])
    empty = np.empty((0, basis.shape[1]))
    if not block.size:
        return space, empty
    scale = float(np.linalg.norm(block, axis=1).max())
    if scale == 0.0:
        return space, empty
    # Twice is enough to keep the basis orthogonal to working precision.
    for _ in range(2):
        block = block - (block @ basis.T) @ basis
    _, values, directions = scipy.linalg.svd(block, full_matrices=False)
    fresh = directions[values > tolerance * scale]
    if not fresh.shape[0]:
        return space, empty
    fresh = fresh - (fresh @ basis.T) @ basis
    fresh = scipy.linalg.qr(fresh.T, mode="economic")[0].T
    rows = np.vstack((basis, fresh))
    return struct.RowSpace(rows, (), False), fresh


def extend_space(
    space: struct.RowSpace,
    candidates: typing.Any,
    tolerance: float = PIVOT_TOLERANCE,
) -> typing.Tuple[struct.RowSpace, np.ndarray]:
    """Add candidate rows to a row space.

    Returns the grown space and a basis for the part of the candidates'
    span that was new: reduced integer rows in exact mode, orthonormal
    rows otherwise.  Float directions whose singular value is no larger
    than tolerance times the longest candidate are dropped."""
    if space.exact:
        return _extend_exact(space, candidates)
    return _extend_float(space, candidates, tolerance)


def unit_members(
    space: struct.RowSpace, tolerance: float = ONE_HOT_TOLERANCE
) -> typing.FrozenSet[int]:
    """Columns whose unit vector lies in the row space.

    Float membership compares the squared distance from e_v to the span
    against tolerance."""
    if space.exact:
        return frozenset(
            column
            for row, column in zip(space.rows, space.pivots)
            if np.count_nonzero(row != 0) == 1
        )
    captured = np.sum(space.rows ** 2, axis=0)
    members = np.flatnonzero(1.0 - captured <= tolerance)
    return frozenset(int(v) for v in members)
