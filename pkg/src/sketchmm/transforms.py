"""Fast transforms used by the sketch pipeline.

Both transforms are unnormalized on the forward pass; the single 1/b scale
is applied once, on the final transform of a convolution:

* Walsh-Hadamard (FWHT), butterflies (u, v) -> (u + v, u - v).  Applying it
  twice multiplies by b, so ``xor_convolve`` divides the last pass by b.
* Radix-2 complex FFT over precomputed twiddle tables.  The public interface
  works on the half spectrum (b // 2 + 1 bins) of real inputs.

The kernels are handwritten (iterative, in-place, allocation-free) so the
compress kernels can call them from compiled code.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import InvalidParameterError, InvalidSpectrumError

_IMAG_TOL = 1e-9  # largest |imag| tolerated on the DC / Nyquist bins


def _check_pow2_len(n: int, what: str) -> None:
    if n < 2 or (n & (n - 1)) != 0:
        raise InvalidParameterError(f"{what} length must be a power of two >= 2, got {n}")


def _as_f64_vector(x, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidParameterError(f"{what} must be one-dimensional")
    return arr


@njit(cache=True)
def fwht_serial(x):  # pragma: no cover - exercised through wrappers
    n = x.shape[0]
    h = 1
    while h < n:
        step = h << 1
        for start in range(0, n, step):
            for j in range(start, start + h):
                u = x[j]
                v = x[j + h]
                x[j] = u + v
                x[j + h] = u - v
        h = step


@njit(cache=True)
def fft_serial(z, tw, rev):  # pragma: no cover - exercised through wrappers
    n = z.shape[0]
    for i in range(n):
        j = rev[i]
        if j > i:
            t = z[i]
            z[i] = z[j]
            z[j] = t
    size = 2
    while size <= n:
        half = size >> 1
        step = n // size
        for start in range(0, n, size):
            idx = 0
            for j in range(start, start + half):
                w = tw[idx]
                u = z[j]
                v = z[j + half] * w
                z[j] = u + v
                z[j + half] = u - v
                idx += step
        size <<= 1


_fft_tables: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def fft_tables(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(forward twiddles, inverse twiddles, bit-reversal permutation) for length n.

    Cached per length; tables are shared read-only with the compiled kernels.
    """
    _check_pow2_len(n, "transform")
    cached = _fft_tables.get(n)
    if cached is not None:
        return cached
    bits = n.bit_length() - 1
    rev = np.zeros(n, dtype=np.int64)
    for i in range(1, n):
        rev[i] = (rev[i >> 1] >> 1) | ((i & 1) << (bits - 1))
    k = np.arange(n // 2, dtype=np.float64)
    tw = np.exp(-2j * np.pi * k / n)
    tables = (tw, np.conj(tw), rev)
    _fft_tables[n] = tables
    return tables


def fwht_inplace(x: np.ndarray) -> np.ndarray:
    """Unnormalized in-place Walsh-Hadamard transform of a float64 vector.

    Requires a contiguous power-of-two-length float64 array; returns the same
    array.  Allocation-free after the first (JIT-compiling) call.
    """
    if not isinstance(x, np.ndarray):
        raise InvalidParameterError("fwht_inplace requires a numpy array")
    if x.dtype != np.float64 or x.ndim != 1 or not x.flags.c_contiguous:
        raise InvalidParameterError("fwht_inplace requires a contiguous 1-D float64 array")
    _check_pow2_len(x.shape[0], "transform")
    fwht_serial(x)
    return x


def xor_convolve(x, y) -> np.ndarray:
    """XOR (dyadic) convolution: out[k] = sum_{i ^ j == k} x[i] * y[j]."""
    xv = _as_f64_vector(x, "operand").copy()
    yv = _as_f64_vector(y, "operand").copy()
    if xv.shape[0] != yv.shape[0]:
        raise InvalidParameterError("operands must have equal length")
    _check_pow2_len(xv.shape[0], "operand")
    fwht_serial(xv)
    fwht_serial(yv)
    prod = xv * yv
    fwht_serial(prod)
    prod /= xv.shape[0]
    return prod


def fft_forward(x) -> np.ndarray:
    """Half spectrum (b // 2 + 1 complex bins) of a real power-of-two vector."""
    xv = _as_f64_vector(x, "input")
    n = xv.shape[0]
    _check_pow2_len(n, "transform")
    tw, _, rev = fft_tables(n)
    z = xv.astype(np.complex128)
    fft_serial(z, tw, rev)
    return z[: n // 2 + 1].copy()


def fft_inverse(spectrum) -> np.ndarray:
    """Real signal whose half spectrum is ``spectrum``; applies the 1/b scale.

    The DC and Nyquist bins must be real (|imag| <= 1e-9), otherwise no real
    signal matches and an :class:`InvalidSpectrumError` is raised.
    """
    spec = np.ascontiguousarray(spectrum, dtype=np.complex128)
    if spec.ndim != 1:
        raise InvalidParameterError("spectrum must be one-dimensional")
    m = spec.shape[0]
    if m < 2:
        raise InvalidParameterError("half spectrum must have at least 2 bins")
    n = 2 * (m - 1)
    _check_pow2_len(n, "transform")
    if abs(spec[0].imag) > _IMAG_TOL or abs(spec[-1].imag) > _IMAG_TOL:
        raise InvalidSpectrumError(
            "DC and Nyquist bins must be real for a real-valued inverse "
            f"(got imag parts {spec[0].imag:g}, {spec[-1].imag:g})"
        )
    _, twi, rev = fft_tables(n)
    z = np.empty(n, dtype=np.complex128)
    z[:m] = spec
    z[m:] = np.conj(spec[-2:0:-1])
    fft_serial(z, twi, rev)
    return z.real / n


def cyclic_convolve(x, y) -> np.ndarray:
    """Cyclic convolution: out[k] = sum_{(i + j) mod b == k} x[i] * y[j]."""
    xv = _as_f64_vector(x, "operand")
    yv = _as_f64_vector(y, "operand")
    if xv.shape[0] != yv.shape[0]:
        raise InvalidParameterError("operands must have equal length")
    _check_pow2_len(xv.shape[0], "operand")
    return fft_inverse(fft_forward(xv) * fft_forward(yv))
