"""Sketched (compressed) matrix multiplication.

Estimate any entry of a product AB from a small sketch built in one pass,
without forming AB.  Two interchangeable sketch variants are provided (FFT
cyclic convolution and Walsh-Hadamard XOR convolution) plus reference dense
kernels, synthetic benchmark instances, and an experiment harness.
"""

from .errors import (
    FormatError,
    InvalidParameterError,
    InvalidSpectrumError,
    MemoryBudgetError,
    SingularMatrixError,
    SketchmmError,
)
from .hashing import HashPair, SketchHashes, draw_hash, eval_bucket, eval_sign
from .reference import frobenius_norm_sq, gemm_reference, lu_inverse, nnz
from .sketch import (
    ProductSketch,
    SketchParams,
    compress,
    compress_pretransposed,
    compress_rect,
    decompress_all,
    decompress_entry,
    derive_params,
    load_sketch,
    save_sketch,
    sketch_estimates,
)
from .transforms import (
    cyclic_convolve,
    fft_forward,
    fft_inverse,
    fwht_inplace,
    xor_convolve,
)

__version__ = "0.1.0"

__all__ = [
    "FormatError",
    "HashPair",
    "InvalidParameterError",
    "InvalidSpectrumError",
    "MemoryBudgetError",
    "ProductSketch",
    "SingularMatrixError",
    "SketchHashes",
    "SketchParams",
    "SketchmmError",
    "compress",
    "compress_pretransposed",
    "compress_rect",
    "cyclic_convolve",
    "decompress_all",
    "decompress_entry",
    "derive_params",
    "draw_hash",
    "eval_bucket",
    "eval_sign",
    "fft_forward",
    "fft_inverse",
    "frobenius_norm_sq",
    "fwht_inplace",
    "gemm_reference",
    "load_sketch",
    "lu_inverse",
    "nnz",
    "save_sketch",
    "sketch_estimates",
    "xor_convolve",
    "__version__",
]
