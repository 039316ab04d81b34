"""Synthetic benchmark instances with planted structure.

Each generator returns matrices A, B together with the planted "big" entries
of C = AB and, where the construction admits one, the exact product.  The big
entries are the needles an estimator should recover:

* ``logunit``: log2(n) product entries equal to 1 exactly, every other entry
  ~1e-4 or smaller; A and B are dense.
* ``diagonal``: C is a permuted diagonal with values in +-[0.5, 1); every
  product entry is big.
* ``covariance``: Gaussian A and B with one correlated row/column pair, so a
  single entry concentrates near rho while the rest are O(1/sqrt(n)) noise.
* ``lightbulb``: sign matrices scaled by 1/sqrt(n); one column of B agrees
  with one row of A up to a fixed number of sign flips, planting an entry of
  exactly (n - 2*flips) / n.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidParameterError, SingularMatrixError
from .reference import gemm_reference, lu_inverse

KINDS = ("logunit", "diagonal", "covariance", "lightbulb")

_BIG = 100.0
_SMALL = 0.01
_REDRAW_LIMIT = 16


@dataclass
class Instance:
    """One generated benchmark problem."""

    kind: str
    n: int
    rho: float | None
    seed: int
    a: np.ndarray
    b: np.ndarray
    big_entries: dict[tuple[int, int], float]
    exact_product: np.ndarray | None = None

    def true_product(self) -> np.ndarray:
        """The planted product if exact, otherwise the reference GEMM."""
        if self.exact_product is not None:
            return self.exact_product
        return gemm_reference(self.a, self.b)

    @property
    def big_index_set(self) -> set[tuple[int, int]]:
        return set(self.big_entries)


def _check_pow2(n: int, minimum: int, what: str) -> None:
    if not (isinstance(n, (int, np.integer)) and n >= minimum and (n & (n - 1)) == 0):
        raise InvalidParameterError(f"{what} must be a power of two >= {minimum}, got {n}")


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not (0.0 <= rho <= 1.0) or not math.isfinite(rho):
        raise InvalidParameterError(f"rho must lie in [0, 1], got {rho}")
    return rho


def _invertible_uniform(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw a uniform(-1, 1) matrix until it inverts cleanly."""
    for _ in range(_REDRAW_LIMIT):
        m = rng.uniform(-1.0, 1.0, size=(n, n))
        try:
            return m, lu_inverse(m)
        except SingularMatrixError:
            continue
    raise SingularMatrixError(f"no invertible draw in {_REDRAW_LIMIT} attempts at n={n}")


def gen_logunit(n: int, seed: int) -> Instance:
    """Product with log2(n) entries of exactly 1 hidden among ~1e-4 noise.

    A = D1 @ M for a well-conditioned uniform M, B = M^-1 @ (D2 @ P).  The
    diagonal scalings D1, D2 hold 100 at floor(log2(n)/2) and ceil(log2(n)/2)
    disjoint positions and 0.01 elsewhere, so C = D1 @ D2 @ P has exactly
    log2(n) ones (100 * 0.01) on a random permutation support.
    """
    _check_pow2(n, 4, "n")
    rng = np.random.default_rng(seed)
    m, m_inv = _invertible_uniform(rng, n)
    logn = n.bit_length() - 1
    k1 = logn // 2
    k2 = logn - k1
    positions = rng.permutation(n)
    d1 = np.full(n, _SMALL)
    d1[positions[:k1]] = _BIG
    d2 = np.full(n, _SMALL)
    d2[positions[k1 : k1 + k2]] = _BIG
    perm = rng.permutation(n)  # support: entry (i, perm[i]) for every row i
    a = d1[:, None] * m
    # scale rows by d2 before permuting so row i carries d1[i] * d2[i]; the
    # disjoint big positions then make every product entry 1 or 1e-4
    target = np.zeros((n, n))
    target[np.arange(n), perm] = d2
    b = m_inv @ target
    exact = np.zeros((n, n))
    values = d1 * d2
    exact[np.arange(n), perm] = values
    big = {
        (int(i), int(perm[i])): float(values[i])
        for i in range(n)
        if values[i] > 0.5
    }
    return Instance(
        kind="logunit", n=int(n), rho=None, seed=int(seed),
        a=a, b=b, big_entries=big, exact_product=exact,
    )


def gen_diagonal(n: int, seed: int) -> Instance:
    """Product equal to a permuted diagonal with entries in +-[0.5, 1)."""
    _check_pow2(n, 2, "n")
    rng = np.random.default_rng(seed)
    m, m_inv = _invertible_uniform(rng, n)
    mags = rng.uniform(0.5, 1.0, size=n)
    signs = 1.0 - 2.0 * rng.integers(0, 2, size=n)
    dvals = mags * signs
    perm = rng.permutation(n)
    exact = np.zeros((n, n))
    exact[np.arange(n), perm] = dvals[perm]
    b = m_inv @ exact
    big = {(int(i), int(perm[i])): float(dvals[perm[i]]) for i in range(n)}
    return Instance(
        kind="diagonal", n=int(n), rho=None, seed=int(seed),
        a=m, b=b, big_entries=big, exact_product=exact,
    )


def gen_covariance(n: int, rho: float, seed: int) -> Instance:
    """Gaussian product with one planted correlation.

    Entries of A and B are N(0, 1/n); column j* of B is replaced by
    rho * (row i* of A) + sqrt(1 - rho^2) * (original column), planting
    c[i*, j*] ~ rho while all other entries stay O(1/sqrt(n)).
    """
    if not (isinstance(n, (int, np.integer)) and n >= 2):
        raise InvalidParameterError(f"n must be an integer >= 2, got {n}")
    rho = _check_rho(rho)
    rng = np.random.default_rng(seed)
    sd = 1.0 / math.sqrt(n)
    a = rng.normal(0.0, sd, size=(n, n))
    b = rng.normal(0.0, sd, size=(n, n))
    i_star = int(rng.integers(n))
    j_star = int(rng.integers(n))
    b[:, j_star] = rho * a[i_star, :] + math.sqrt(1.0 - rho * rho) * b[:, j_star]
    planted = float(a[i_star, :] @ b[:, j_star])
    return Instance(
        kind="covariance", n=int(n), rho=rho, seed=int(seed),
        a=a, b=b, big_entries={(i_star, j_star): planted}, exact_product=None,
    )


def gen_lightbulb(n: int, rho: float, seed: int) -> Instance:
    """Sign-matrix product with one planted correlated pair.

    A and B have entries +-1/sqrt(n); column j* of B copies the signs of row
    i* of A with exactly round(n * (1 - rho) / 2) flips, so
    c[i*, j*] = (n - 2 * flips) / n exactly (n is a power of two, hence every
    partial sum of +-1/n terms is a representable float).
    """
    _check_pow2(n, 16, "n")
    rho = _check_rho(rho)
    rng = np.random.default_rng(seed)
    inv_sqrt = 1.0 / math.sqrt(n)
    a = (1.0 - 2.0 * rng.integers(0, 2, size=(n, n))) * inv_sqrt
    b = (1.0 - 2.0 * rng.integers(0, 2, size=(n, n))) * inv_sqrt
    i_star = int(rng.integers(n))
    j_star = int(rng.integers(n))
    flips = round(n * (1.0 - rho) / 2.0)
    col = a[i_star, :].copy()
    if flips:
        col[rng.choice(n, size=flips, replace=False)] *= -1.0
    b[:, j_star] = col
    planted = float((n - 2 * flips) / n)
    return Instance(
        kind="lightbulb", n=int(n), rho=rho, seed=int(seed),
        a=a, b=b, big_entries={(i_star, j_star): planted}, exact_product=None,
    )


def generate(kind: str, n: int, seed: int, rho: float | None = None) -> Instance:
    """Dispatch on instance kind; rho is required for the planted-pair kinds."""
    if kind not in KINDS:
        raise InvalidParameterError(f"unknown instance kind {kind!r}; choose from {KINDS}")
    if kind in ("covariance", "lightbulb"):
        if rho is None:
            raise InvalidParameterError(f"{kind} instances require rho")
        if kind == "covariance":
            return gen_covariance(n, rho, seed)
        return gen_lightbulb(n, rho, seed)
    if rho is not None:
        raise InvalidParameterError(f"{kind} instances do not take rho")
    if kind == "logunit":
        return gen_logunit(n, seed)
    return gen_diagonal(n, seed)


def verify_instance(inst: Instance, tol: float = 1e-6) -> tuple[bool, str]:
    """Check the planted structure against the reference GEMM.

    Returns (ok, human-readable report).  ``tol`` bounds the deviation of big
    entries from their recorded values; off-support entries of the exact
    kinds must vanish to the same tolerance.
    """
    c = gemm_reference(inst.a, inst.b)
    issues: list[str] = []
    for (i, j), v in inst.big_entries.items():
        if abs(c[i, j] - v) > tol:
            issues.append(f"big entry ({i}, {j}) = {c[i, j]:.6g}, recorded {v:.6g}")
    if inst.exact_product is not None:
        worst = float(np.max(np.abs(c - inst.exact_product)))
        if worst > tol:
            issues.append(f"max deviation from exact product {worst:.3e} > {tol:g}")
    else:
        others = np.abs(c).copy()
        for i, j in inst.big_entries:
            others[i, j] = 0.0
        # planted-noise kinds: the rest must stay clearly below the plant
        ceiling = 0.5 * min(abs(v) for v in inst.big_entries.values())
        worst = float(others.max())
        if inst.n >= 64 and worst > max(ceiling, 10.0 / math.sqrt(inst.n)):
            issues.append(f"background entry {worst:.3g} rivals the planted value")
    if issues:
        return False, "; ".join(issues)
    big = len(inst.big_entries)
    return True, f"{inst.kind} n={inst.n}: {big} planted entr{'y' if big == 1 else 'ies'} verified"


def instance_meta_obj(inst: Instance) -> dict:
    return {
        "kind": inst.kind,
        "n": inst.n,
        "rho": inst.rho,
        "seed": inst.seed,
        "big_entries": [[i, j, v] for (i, j), v in sorted(inst.big_entries.items())],
    }


def save_instance(prefix, inst: Instance) -> tuple[Path, Path, Path]:
    """Write <prefix>.A.dmat, <prefix>.B.dmat and a JSON sidecar."""
    from .matio import save_matrix_binary

    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    a_path = prefix.with_suffix(prefix.suffix + ".A.dmat")
    b_path = prefix.with_suffix(prefix.suffix + ".B.dmat")
    meta_path = prefix.with_suffix(prefix.suffix + ".json")
    save_matrix_binary(a_path, inst.a)
    save_matrix_binary(b_path, inst.b)
    meta_path.write_text(json.dumps(instance_meta_obj(inst), indent=2) + "\n")
    return a_path, b_path, meta_path


def load_instance(prefix) -> Instance:
    """Regenerate the instance recorded at ``prefix`` and check the files match."""
    from .matio import load_matrix_binary

    prefix = Path(prefix)
    meta_path = prefix.with_suffix(prefix.suffix + ".json")
    if not meta_path.exists():
        raise FormatError(f"missing instance sidecar {meta_path}")
    meta = json.loads(meta_path.read_text())
    try:
        kind, n, seed = meta["kind"], int(meta["n"]), int(meta["seed"])
        rho = meta["rho"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed instance sidecar: {exc}") from exc
    inst = generate(kind, n, seed, rho=None if rho is None else float(rho))
    a = load_matrix_binary(prefix.with_suffix(prefix.suffix + ".A.dmat"))
    b = load_matrix_binary(prefix.with_suffix(prefix.suffix + ".B.dmat"))
    if not (np.array_equal(a, inst.a) and np.array_equal(b, inst.b)):
        raise FormatError("matrix files do not match the recorded generator settings")
    return inst
