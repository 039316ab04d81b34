"""Plain dense linear algebra used as ground truth by experiments and tests."""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .errors import InvalidParameterError, SingularMatrixError

# relative pivot threshold below which LU factors are not trusted
_PIVOT_RTOL = 1e-12


def _as_matrix(m, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidParameterError(f"{what} must be a 2-D array")
    return arr


def gemm_reference(a, b, tile: int = 128) -> np.ndarray:
    """Exact dense product A @ B, accumulated tile by tile in a fixed order.

    The k-tiles are summed in ascending order, so results are reproducible
    independent of BLAS threading heuristics.
    """
    av = _as_matrix(a, "left operand")
    bv = _as_matrix(b, "right operand")
    if av.shape[1] != bv.shape[0]:
        raise InvalidParameterError(
            f"inner dimensions must match, got {av.shape} x {bv.shape}"
        )
    if tile < 1:
        raise InvalidParameterError("tile size must be positive")
    n1, m = av.shape
    n2 = bv.shape[1]
    out = np.zeros((n1, n2), dtype=np.float64)
    for i0 in range(0, n1, tile):
        i1 = min(i0 + tile, n1)
        for j0 in range(0, n2, tile):
            j1 = min(j0 + tile, n2)
            acc = out[i0:i1, j0:j1]
            for k0 in range(0, m, tile):
                k1 = min(k0 + tile, m)
                acc += av[i0:i1, k0:k1] @ bv[k0:k1, j0:j1]
    return out


def frobenius_norm_sq(m) -> float:
    """Sum of squared entries."""
    arr = _as_matrix(m, "input")
    return float(np.sum(arr * arr))


def nnz(m, tol: float = 0.0) -> int:
    """Number of entries with absolute value strictly above ``tol``."""
    arr = _as_matrix(m, "input")
    if tol < 0:
        raise InvalidParameterError("tolerance must be non-negative")
    return int(np.count_nonzero(np.abs(arr) > tol))


def lu_inverse(m) -> np.ndarray:
    """Inverse via partially pivoted LU.

    Raises :class:`SingularMatrixError` when any pivot magnitude falls below
    1e-12 times the largest absolute entry of the input.
    """
    arr = _as_matrix(m, "input")
    n1, n2 = arr.shape
    if n1 != n2:
        raise InvalidParameterError(f"matrix must be square, got {arr.shape}")
    scale = float(np.max(np.abs(arr))) if arr.size else 0.0
    if scale == 0.0:
        raise SingularMatrixError("matrix is zero")
    with warnings.catch_warnings():
        # the pivot check below turns scipy's singularity warning into an error
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(arr, check_finite=True)
    pivots = np.abs(np.diag(lu))
    smallest = float(pivots.min())
    if smallest < _PIVOT_RTOL * scale:
        raise SingularMatrixError(
            f"pivot {smallest:.3e} below threshold {_PIVOT_RTOL * scale:.3e}"
        )
    return scipy.linalg.lu_solve((lu, piv), np.eye(n1), check_finite=False)
