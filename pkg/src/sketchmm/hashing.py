"""Multiply-add-shift hash families for count-sketch bucketing and signs.

A hash pair ``(a, c)`` of 64-bit words maps a 32-bit key ``x`` to a bucket::

    h(x) = ((a * x + c) mod 2**64) >> (64 - log2(b))

which is 2-wise independent over the draw of ``(a, c)``.  Sign hashes are the
``b = 2`` special case, with bucket 0 mapped to +1 and bucket 1 to -1.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

MASK64 = (1 << 64) - 1
MAX_BUCKETS = 1 << 32
_SIGN_SHIFT = 63  # sign hashes are bucket hashes with b = 2


def _check_buckets(b: int) -> int:
    """Return log2(b) after validating b as a power of two in [2, 2**32]."""
    if not isinstance(b, (int, np.integer)):
        raise InvalidParameterError(f"bucket count must be an integer, got {type(b).__name__}")
    b = int(b)
    if b < 2 or b > MAX_BUCKETS or (b & (b - 1)) != 0:
        raise InvalidParameterError(f"bucket count must be a power of two in [2, 2**32], got {b}")
    return b.bit_length() - 1


@dataclass(frozen=True)
class HashPair:
    """One drawn hash function: multiplier ``a``, offset ``c``, right shift."""

    a: int
    c: int
    shift: int

    def __post_init__(self) -> None:
        if not (0 <= self.a <= MASK64 and 0 <= self.c <= MASK64):
            raise InvalidParameterError("hash words must be 64-bit unsigned integers")
        if not (32 <= self.shift <= 63):
            raise InvalidParameterError(f"shift must lie in [32, 63], got {self.shift}")

    @property
    def buckets(self) -> int:
        return 1 << (64 - self.shift)


def eval_bucket(h: HashPair, x: int) -> int:
    """Bucket of key ``x`` (0 <= x < 2**32) under ``h``."""
    return ((h.a * x + h.c) & MASK64) >> h.shift


def eval_sign(h: HashPair, x: int) -> int:
    """Sign in {-1, +1} of key ``x`` under a sign hash (shift 63)."""
    return 1 - 2 * (((h.a * x + h.c) & MASK64) >> _SIGN_SHIFT)


def bucket_many(h: HashPair, xs: np.ndarray) -> np.ndarray:
    """Vectorized :func:`eval_bucket` over an array of keys."""
    xs = np.asarray(xs, dtype=np.uint64)
    # uint64 arithmetic wraps mod 2**64, which is exactly the hash definition
    return ((np.uint64(h.a) * xs + np.uint64(h.c)) >> np.uint64(h.shift)).astype(np.int64)


def sign_many(h: HashPair, xs: np.ndarray) -> np.ndarray:
    """Vectorized :func:`eval_sign`; returns float64 values in {-1.0, +1.0}."""
    xs = np.asarray(xs, dtype=np.uint64)
    top = (np.uint64(h.a) * xs + np.uint64(h.c)) >> np.uint64(_SIGN_SHIFT)
    return 1.0 - 2.0 * top.astype(np.float64)


def draw_hash(rng: np.random.Generator, b: int) -> HashPair:
    """Draw (a, c) uniformly from the 64-bit words for a b-bucket hash.

    Consumes exactly two 64-bit draws from ``rng``, in the order (a, c).
    """
    log2b = _check_buckets(b)
    a, c = (int(v) for v in rng.integers(0, 1 << 64, size=2, dtype=np.uint64))
    return HashPair(a=a, c=c, shift=64 - log2b)


def draw_sign_hash(rng: np.random.Generator) -> HashPair:
    return draw_hash(rng, 2)


@dataclass(frozen=True)
class SketchHashes:
    """The 4d hash functions of a depth-d sketch.

    ``h1``/``h2`` bucket row and column indices into ``b`` buckets; ``s1``/``s2``
    are the matching sign hashes.  Tuples are indexed by sketch number t.
    """

    h1: tuple[HashPair, ...]
    h2: tuple[HashPair, ...]
    s1: tuple[HashPair, ...]
    s2: tuple[HashPair, ...]

    def __post_init__(self) -> None:
        d = len(self.h1)
        if d == 0 or any(len(g) != d for g in (self.h2, self.s1, self.s2)):
            raise InvalidParameterError("hash groups must be non-empty and of equal depth")
        shifts = {h.shift for h in self.h1} | {h.shift for h in self.h2}
        if len(shifts) != 1:
            raise InvalidParameterError("bucket hashes must all target the same bucket count")
        if any(h.shift != _SIGN_SHIFT for g in (self.s1, self.s2) for h in g):
            raise InvalidParameterError("sign hashes must have shift 63")

    @property
    def d(self) -> int:
        return len(self.h1)

    @property
    def b(self) -> int:
        return self.h1[0].buckets

    @classmethod
    def draw(cls, rng: np.random.Generator, d: int, b: int) -> "SketchHashes":
        """Draw all 4d functions; order is fixed as h1[0..d), h2, s1, s2."""
        if d < 1:
            raise InvalidParameterError(f"depth d must be >= 1, got {d}")
        h1 = tuple(draw_hash(rng, b) for _ in range(d))
        h2 = tuple(draw_hash(rng, b) for _ in range(d))
        s1 = tuple(draw_sign_hash(rng) for _ in range(d))
        s2 = tuple(draw_sign_hash(rng) for _ in range(d))
        return cls(h1=h1, h2=h2, s1=s1, s2=s2)

    def bucket_table(self, which: str, n: int) -> np.ndarray:
        """(d, n) int64 table of buckets for keys 0..n-1 under h1 or h2."""
        group = self.h1 if which == "h1" else self.h2
        xs = np.arange(n, dtype=np.uint64)
        return np.stack([bucket_many(h, xs) for h in group])

    def sign_table(self, which: str, n: int) -> np.ndarray:
        """(d, n) float64 table of signs for keys 0..n-1 under s1 or s2."""
        group = self.s1 if which == "s1" else self.s2
        xs = np.arange(n, dtype=np.uint64)
        return np.stack([sign_many(h, xs) for h in group])

    def packed_words(self) -> np.ndarray:
        """All (a, c) words as a flat uint64 array, groups in draw order."""
        words: list[int] = []
        for group in (self.h1, self.h2, self.s1, self.s2):
            for h in group:
                words.extend((h.a, h.c))
        return np.array(words, dtype=np.uint64)

    def digest(self) -> str:
        """Short stable digest of the drawn words, for run metadata."""
        return hashlib.sha256(self.packed_words().tobytes()).hexdigest()[:16]

    def to_json_obj(self) -> dict:
        def pairs(group: tuple[HashPair, ...]) -> list[list[str]]:
            # decimal strings: keeps 64-bit values exact for readers without
            # arbitrary-precision JSON numbers
            return [[str(h.a), str(h.c)] for h in group]

        return {
            "b": self.b,
            "d": self.d,
            "h1": pairs(self.h1),
            "h2": pairs(self.h2),
            "s1": pairs(self.s1),
            "s2": pairs(self.s2),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SketchHashes":
        shift = 64 - _check_buckets(obj["b"])

        def group(name: str, s: int) -> tuple[HashPair, ...]:
            return tuple(HashPair(a=int(a), c=int(c), shift=s) for a, c in obj[name])

        return cls(
            h1=group("h1", shift),
            h2=group("h2", shift),
            s1=group("s1", _SIGN_SHIFT),
            s2=group("s2", _SIGN_SHIFT),
        )
