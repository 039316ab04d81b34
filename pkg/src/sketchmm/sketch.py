"""Sketched matrix products.

The product AB is compressed as d independent count sketches of size b.  For
each inner index k the outer product of column k of A and row k of B is
folded into a length-b polynomial pair and multiplied by convolution:

* ``fwht`` variant: XOR convolution via Walsh-Hadamard transforms.
* ``fft`` variant: cyclic convolution via the complex FFT, accumulated in the
  half-spectrum domain.

Each convolution is accumulated over k, and a single inverse transform per
sketch (with the lone 1/b scale) yields the compressed polynomials.  Entry
(i, j) is then estimated as the median over sketches of
``s1(i) * s2(j) * p[t][combine(h1(i), h2(j))]`` where ``combine`` is XOR for
the fwht variant and addition mod b for the fft variant.  Estimates are
unbiased with variance at most ||AB||_F^2 / b per sketch.

Parallel runs are reproducible: the inner dimension is split into one chunk
per configured thread, each chunk accumulates privately, and partial results
are reduced in a fixed order.  The polynomials therefore depend on the thread
count but are bit-identical across runs at a fixed thread count.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np
from numba import njit, prange

# an old ambient TBB triggers a harmless fallback warning at kernel launch
warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

from .errors import FormatError, InvalidParameterError
from .hashing import SketchHashes
from .transforms import fft_serial, fft_tables, fwht_serial

TRANSFORMS = ("fft", "fwht")
_TRANSFORM_CODES = {"fft": 0, "fwht": 1}
_TRANSFORM_NAMES = {v: k for k, v in _TRANSFORM_CODES.items()}

SKETCH_MAGIC = b"SKCH"
SKETCH_VERSION = 1
_SKETCH_HEADER = struct.Struct("<4sIQQQIQ")

_MAX_BUCKETS = 1 << 32
_MAX_SEED = (1 << 64) - 1


def _is_pow2(v: int) -> bool:
    return v >= 1 and (v & (v - 1)) == 0


@dataclass(frozen=True)
class SketchParams:
    """Sketch configuration: dimension, width b, depth d, transform variant."""

    n: int
    b: int
    d: int
    transform: str = "fwht"
    seed: int = 0

    def __post_init__(self) -> None:
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise InvalidParameterError(f"n must be a positive integer, got {self.n}")
        if not (isinstance(self.b, (int, np.integer)) and 2 <= self.b <= _MAX_BUCKETS and _is_pow2(int(self.b))):
            raise InvalidParameterError(
                f"b must be a power of two in [2, 2**32], got {self.b}"
            )
        if not (isinstance(self.d, (int, np.integer)) and self.d >= 1 and self.d % 2 == 1):
            raise InvalidParameterError(f"d must be an odd positive integer, got {self.d}")
        if self.transform not in TRANSFORMS:
            raise InvalidParameterError(
                f"transform must be one of {TRANSFORMS}, got {self.transform!r}"
            )
        if not (0 <= int(self.seed) <= _MAX_SEED):
            raise InvalidParameterError("seed must fit in 64 bits")


def derive_params(
    n: int, c_d: float, c_b: float, transform: str = "fwht", seed: int = 0
) -> SketchParams:
    """Sketch size from the dimension and the two tuning constants.

    d = 2 * floor(c_d * log2(n) / 2) + 1  (always odd, at least 1)
    b = c_b * n                            (must land on a power of two)
    """
    if not (isinstance(n, (int, np.integer)) and n >= 2 and _is_pow2(int(n))):
        raise InvalidParameterError(f"n must be a power of two >= 2, got {n}")
    if not (c_d > 0 and c_b > 0):
        raise InvalidParameterError("c_d and c_b must be positive")
    logn = int(n).bit_length() - 1
    d = 2 * math.floor(c_d * logn / 2.0) + 1
    b_float = c_b * n
    b = int(round(b_float))
    if abs(b_float - b) > 1e-9 * max(b, 1) or not _is_pow2(b) or b < 2:
        raise InvalidParameterError(
            f"c_b * n must be a power of two >= 2, got {b_float!r}"
        )
    return SketchParams(n=int(n), b=b, d=d, transform=transform, seed=int(seed))


def effective_threads(threads: int | None = None) -> int:
    """Resolve the chunk count used for parallel accumulation."""
    if threads is None:
        return numba.get_num_threads()
    if not (isinstance(threads, (int, np.integer)) and threads >= 1):
        raise InvalidParameterError(f"threads must be a positive integer, got {threads}")
    return int(threads)


def _chunk_bounds(m: int, nchunks: int) -> tuple[np.ndarray, np.ndarray]:
    """Split range(m) into nchunks contiguous chunks (some possibly empty)."""
    edges = np.linspace(0, m, nchunks + 1).astype(np.int64)
    return edges[:-1].copy(), edges[1:].copy()


@dataclass
class ProductSketch:
    """Compressed representation of one matrix product."""

    polys: np.ndarray  # (d, b) float64
    hashes: SketchHashes
    params: SketchParams
    n_rows: int
    n_cols: int

    _tables: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def is_square(self) -> bool:
        return self.n_rows == self.n_cols == self.params.n

    def table(self, which: str) -> np.ndarray:
        """Cached bucket/sign tables for decompression."""
        cached = self._tables.get(which)
        if cached is None:
            n = self.n_rows if which in ("h1", "s1") else self.n_cols
            if which.startswith("h"):
                cached = self.hashes.bucket_table(which, n)
            else:
                cached = self.hashes.sign_table(which, n)
            self._tables[which] = cached
        return cached


@njit(cache=True, parallel=True)
def _compress_fwht_kernel(at, bm, h1, s1, h2, s2, b, starts, ends):
    nchunks = starts.shape[0]
    d = h1.shape[0]
    n1 = at.shape[1]
    n2 = bm.shape[1]
    partial = np.zeros((nchunks, d, b))
    for c in prange(nchunks):
        pa = np.empty((d, b))
        pb = np.empty(b)
        for k in range(starts[c], ends[c]):
            for t in range(d):
                row = pa[t]
                row[:] = 0.0
                for i in range(n1):
                    row[h1[t, i]] += s1[t, i] * at[k, i]
                fwht_serial(row)
            for t in range(d):
                pb[:] = 0.0
                for j in range(n2):
                    pb[h2[t, j]] += s2[t, j] * bm[k, j]
                fwht_serial(pb)
                acc = partial[c, t]
                row = pa[t]
                for u in range(b):
                    acc[u] += row[u] * pb[u]
    out = np.zeros((d, b))
    for c in range(nchunks):  # fixed reduction order keeps runs bit-identical
        for t in range(d):
            for u in range(b):
                out[t, u] += partial[c, t, u]
    inv = 1.0 / b
    for t in prange(d):
        row = out[t]
        fwht_serial(row)
        for u in range(b):
            row[u] *= inv
    return out


@njit(cache=True, parallel=True)
def _compress_fft_kernel(at, bm, h1, s1, h2, s2, b, tw, twi, rev, starts, ends):
    nchunks = starts.shape[0]
    d = h1.shape[0]
    n1 = at.shape[1]
    n2 = bm.shape[1]
    half = (b >> 1) + 1
    partial = np.zeros((nchunks, d, half), dtype=np.complex128)
    for c in prange(nchunks):
        z = np.empty(b, dtype=np.complex128)
        for k in range(starts[c], ends[c]):
            for t in range(d):
                # pack both polynomials into one complex signal: A in the
                # real part, B in the imaginary part, one FFT instead of two
                z[:] = 0.0
                for i in range(n1):
                    z[h1[t, i]] += s1[t, i] * at[k, i]
                for j in range(n2):
                    z[h2[t, j]] += (s2[t, j] * bm[k, j]) * 1j
                fft_serial(z, tw, rev)
                acc = partial[c, t]
                for u in range(half):
                    zu = z[u]
                    zv = np.conj(z[(b - u) & (b - 1)])
                    fa = 0.5 * (zu + zv)
                    fb = -0.5j * (zu - zv)
                    acc[u] += fa * fb
    total = np.zeros((d, half), dtype=np.complex128)
    for c in range(nchunks):  # fixed reduction order keeps runs bit-identical
        for t in range(d):
            for u in range(half):
                total[t, u] += partial[c, t, u]
    out = np.empty((d, b))
    inv = 1.0 / b
    for t in prange(d):
        z = np.empty(b, dtype=np.complex128)
        for u in range(half):
            z[u] = total[t, u]
        for u in range(1, b >> 1):
            z[b - u] = np.conj(total[t, u])
        fft_serial(z, twi, rev)
        for u in range(b):
            out[t, u] = z[u].real * inv
    return out


def _run_kernel(
    at: np.ndarray, bm: np.ndarray, hashes: SketchHashes, params: SketchParams, nchunks: int
) -> np.ndarray:
    n1 = at.shape[1]
    n2 = bm.shape[1]
    h1 = np.ascontiguousarray(hashes.bucket_table("h1", n1))
    h2 = np.ascontiguousarray(hashes.bucket_table("h2", n2))
    s1 = np.ascontiguousarray(hashes.sign_table("s1", n1))
    s2 = np.ascontiguousarray(hashes.sign_table("s2", n2))
    starts, ends = _chunk_bounds(at.shape[0], nchunks)
    old_threads = numba.get_num_threads()
    numba.set_num_threads(min(nchunks, numba.config.NUMBA_NUM_THREADS))
    try:
        if params.transform == "fwht":
            polys = _compress_fwht_kernel(at, bm, h1, s1, h2, s2, params.b, starts, ends)
        else:
            tw, twi, rev = fft_tables(params.b)
            polys = _compress_fft_kernel(
                at, bm, h1, s1, h2, s2, params.b, tw, twi, rev, starts, ends
            )
    finally:
        numba.set_num_threads(old_threads)
    return polys


def _compress_shapes(
    at: np.ndarray, bm: np.ndarray, params: SketchParams, threads: int | None
) -> ProductSketch:
    if at.shape[0] != bm.shape[0]:
        raise InvalidParameterError(
            f"inner dimensions must match, got {at.shape[0]} and {bm.shape[0]}"
        )
    nchunks = effective_threads(threads)
    hashes = SketchHashes.draw(np.random.default_rng(params.seed), params.d, params.b)
    polys = _run_kernel(at, bm, hashes, params, nchunks)
    return ProductSketch(
        polys=polys,
        hashes=hashes,
        params=params,
        n_rows=at.shape[1],
        n_cols=bm.shape[1],
    )


def _as_matrix(m, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidParameterError(f"{what} must be a 2-D array")
    return arr


def compress(a, b, params: SketchParams, threads: int | None = None) -> ProductSketch:
    """Sketch the product of square matrices ``a @ b`` of size params.n.

    Hash functions are drawn from ``params.seed``; ``threads`` fixes the
    accumulation chunk count (defaults to the ambient thread count).
    """
    av = _as_matrix(a, "left operand")
    bv = _as_matrix(b, "right operand")
    n = params.n
    if av.shape != (n, n) or bv.shape != (n, n):
        raise InvalidParameterError(
            f"operands must both be {n} x {n}, got {av.shape} and {bv.shape}"
        )
    return _compress_pair(av, bv, params, threads)


def _compress_pair(av, bv, params, threads):
    at = np.ascontiguousarray(av.T)
    return _compress_shapes(at, bv, params, threads)


def compress_pretransposed(
    at, b, params: SketchParams, threads: int | None = None
) -> ProductSketch:
    """Like :func:`compress` but takes A already transposed (row k = column k of A)."""
    atv = _as_matrix(at, "left operand (transposed)")
    bv = _as_matrix(b, "right operand")
    n = params.n
    if atv.shape != (n, n) or bv.shape != (n, n):
        raise InvalidParameterError(
            f"operands must both be {n} x {n}, got {atv.shape} and {bv.shape}"
        )
    return _compress_shapes(atv, bv, params, threads)


def compress_rect(
    a, b, params: SketchParams, threads: int | None = None
) -> ProductSketch:
    """Sketch a rectangular product A (n1 x m) @ B (m x n2).

    ``params.n`` must equal the inner dimension m.  The resulting sketch
    decompresses over the n1 x n2 output grid but cannot be serialized (the
    container format records a single dimension).
    """
    av = _as_matrix(a, "left operand")
    bv = _as_matrix(b, "right operand")
    if av.shape[1] != params.n or bv.shape[0] != params.n:
        raise InvalidParameterError(
            f"inner dimension must equal params.n={params.n}, "
            f"got {av.shape} x {bv.shape}"
        )
    return _compress_pair(av, bv, params, threads)


def combine_index(sketch: ProductSketch, k1: int, k2: int) -> int:
    """Bucket index of the product term: XOR for fwht, addition mod b for fft."""
    if sketch.params.transform == "fwht":
        return k1 ^ k2
    return (k1 + k2) % sketch.params.b


def sketch_estimates(sketch: ProductSketch, i: int, j: int) -> np.ndarray:
    """The d per-sketch estimates of entry (i, j), in sketch order."""
    if not (0 <= i < sketch.n_rows and 0 <= j < sketch.n_cols):
        raise InvalidParameterError(
            f"entry ({i}, {j}) outside {sketch.n_rows} x {sketch.n_cols}"
        )
    h = sketch.hashes
    b = sketch.params.b
    xor = sketch.params.transform == "fwht"
    out = np.empty(h.d)
    from .hashing import eval_bucket, eval_sign

    for t in range(h.d):
        k1 = eval_bucket(h.h1[t], i)
        k2 = eval_bucket(h.h2[t], j)
        idx = (k1 ^ k2) if xor else (k1 + k2) % b
        out[t] = eval_sign(h.s1[t], i) * eval_sign(h.s2[t], j) * sketch.polys[t, idx]
    return out


def decompress_entry(sketch: ProductSketch, i: int, j: int) -> float:
    """Median-of-sketches estimate of product entry (i, j)."""
    return float(np.median(sketch_estimates(sketch, i, j)))


def decompress_all(sketch: ProductSketch) -> np.ndarray:
    """Estimates for every entry; identical values to per-entry decompression."""
    d, b = sketch.polys.shape
    n1, n2 = sketch.n_rows, sketch.n_cols
    h1 = sketch.table("h1")
    h2 = sketch.table("h2")
    s1 = sketch.table("s1")
    s2 = sketch.table("s2")
    xor = sketch.params.transform == "fwht"
    out = np.empty((n1, n2))
    # cap the (d, rows, n2) gather workspace at ~2**24 elements per array
    block = max(1, (1 << 24) // max(1, d * n2))
    for r0 in range(0, n1, block):
        r1 = min(r0 + block, n1)
        if xor:
            idx = h1[:, r0:r1, None] ^ h2[:, None, :]
        else:
            idx = (h1[:, r0:r1, None] + h2[:, None, :]) % b
        vals = np.take_along_axis(
            sketch.polys, idx.reshape(d, -1), axis=1
        ).reshape(d, r1 - r0, n2)
        vals *= s1[:, r0:r1, None]
        vals *= s2[:, None, :]
        out[r0:r1] = np.median(vals, axis=0)
    return out


def estimate_workspace_bytes(
    n: int, b: int, d: int, transform: str, threads: int
) -> int:
    """Rough peak-memory estimate for compress + full decompress at size n."""
    f8 = 8
    c16 = 16
    half = b // 2 + 1
    operands = 3 * n * n * f8  # A, its transposed copy, B
    tables = 4 * d * n * f8
    if transform == "fwht":
        kernel = (threads + 1) * d * b * f8 + threads * (d + 1) * b * f8
    else:
        kernel = 2 * (threads + 1) * d * half * c16 + threads * b * c16 + d * b * f8
    block = max(1, (1 << 24) // max(1, d * n))
    decomp = n * n * f8 + 3 * d * block * n * f8
    return operands + tables + kernel + decomp


def sketch_to_bytes(sketch: ProductSketch) -> bytes:
    """Serialize a square sketch: header, hash words, polynomials (all LE)."""
    if not sketch.is_square:
        raise InvalidParameterError("only square sketches can be serialized")
    p = sketch.params
    header = _SKETCH_HEADER.pack(
        SKETCH_MAGIC,
        SKETCH_VERSION,
        p.n,
        p.b,
        p.d,
        _TRANSFORM_CODES[p.transform],
        p.seed,
    )
    words = sketch.hashes.packed_words().astype("<u8").tobytes()
    payload = sketch.polys.astype("<f8").tobytes(order="C")
    return header + words + payload


def sketch_from_bytes(buf: bytes) -> ProductSketch:
    if len(buf) < _SKETCH_HEADER.size:
        raise FormatError("sketch container truncated before header")
    magic, version, n, b, d, tcode, seed = _SKETCH_HEADER.unpack_from(buf)
    if magic != SKETCH_MAGIC:
        raise FormatError(f"bad sketch magic {magic!r}")
    if version != SKETCH_VERSION:
        raise FormatError(f"unsupported sketch container version {version}")
    if tcode not in _TRANSFORM_NAMES:
        raise FormatError(f"unknown transform code {tcode}")
    try:
        params = SketchParams(
            n=int(n), b=int(b), d=int(d), transform=_TRANSFORM_NAMES[tcode], seed=int(seed)
        )
    except InvalidParameterError as exc:
        raise FormatError(f"invalid sketch header: {exc}") from exc
    words_off = _SKETCH_HEADER.size
    words_len = 8 * 8 * params.d  # 4 groups x d pairs x 2 words
    payload_off = words_off + words_len
    want = payload_off + 8 * params.d * params.b
    if len(buf) != want:
        raise FormatError(f"sketch payload has {len(buf)} bytes, expected {want}")
    words = np.frombuffer(buf, dtype="<u8", count=8 * params.d, offset=words_off)
    shift = 64 - (params.b.bit_length() - 1)
    from .hashing import HashPair

    def group(g: int, s: int) -> tuple[HashPair, ...]:
        base = g * 2 * params.d
        return tuple(
            HashPair(a=int(words[base + 2 * t]), c=int(words[base + 2 * t + 1]), shift=s)
            for t in range(params.d)
        )

    hashes = SketchHashes(
        h1=group(0, shift), h2=group(1, shift), s1=group(2, 63), s2=group(3, 63)
    )
    polys = (
        np.frombuffer(buf, dtype="<f8", offset=payload_off)
        .reshape(params.d, params.b)
        .astype(np.float64)
    )
    return ProductSketch(
        polys=polys, hashes=hashes, params=params, n_rows=params.n, n_cols=params.n
    )


def save_sketch(path, sketch: ProductSketch) -> None:
    from pathlib import Path

    Path(path).write_bytes(sketch_to_bytes(sketch))


def load_sketch(path) -> ProductSketch:
    from pathlib import Path

    return sketch_from_bytes(Path(path).read_bytes())
