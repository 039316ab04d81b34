"""Independent slow-path oracles used to validate the fast implementations."""

from __future__ import annotations

import numpy as np

from sketchmm.hashing import SketchHashes
from sketchmm.sketch import SketchParams
from sketchmm.transforms import cyclic_convolve, xor_convolve


def xor_convolve_bruteforce(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """O(b^2) XOR convolution by direct summation."""
    b = len(x)
    idx = np.arange(b)[:, None] ^ np.arange(b)[None, :]
    return np.bincount(idx.ravel(), weights=np.outer(x, y).ravel(), minlength=b)


def cyclic_convolve_bruteforce(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """O(b^2) cyclic convolution by direct summation."""
    b = len(x)
    idx = (np.arange(b)[:, None] + np.arange(b)[None, :]) % b
    return np.bincount(idx.ravel(), weights=np.outer(x, y).ravel(), minlength=b)


def dft_bruteforce(x: np.ndarray) -> np.ndarray:
    """Direct O(b^2) DFT, returning the half spectrum."""
    b = len(x)
    k = np.arange(b)
    w = np.exp(-2j * np.pi * np.outer(k, k) / b)
    return (w @ x.astype(np.complex128))[: b // 2 + 1]


def matmul_naive(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pure triple-loop matrix product; the slowest, most literal oracle."""
    n1, m = a.shape
    m2, n2 = b.shape
    assert m == m2
    out = np.zeros((n1, n2))
    for i in range(n1):
        for j in range(n2):
            acc = 0.0
            for k in range(m):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return out


def compress_slow(a: np.ndarray, b: np.ndarray, params: SketchParams) -> np.ndarray:
    """Sketch polynomials via per-outer-product convolutions (original loop order).

    Builds each rank-1 contribution's polynomial pair explicitly and convolves
    with the public one-shot convolution routines, summing over k per sketch.
    Numerically independent of the fused kernel (different operation order).
    """
    n = params.n
    hashes = SketchHashes.draw(np.random.default_rng(params.seed), params.d, params.b)
    conv = xor_convolve if params.transform == "fwht" else cyclic_convolve
    h1 = hashes.bucket_table("h1", a.shape[0])
    h2 = hashes.bucket_table("h2", b.shape[1])
    s1 = hashes.sign_table("s1", a.shape[0])
    s2 = hashes.sign_table("s2", b.shape[1])
    polys = np.zeros((params.d, params.b))
    for t in range(params.d):
        for k in range(n):
            pa = np.zeros(params.b)
            pb = np.zeros(params.b)
            np.add.at(pa, h1[t], s1[t] * a[:, k])
            np.add.at(pb, h2[t], s2[t] * b[k, :])
            polys[t] += conv(pa, pb)
    return polys
