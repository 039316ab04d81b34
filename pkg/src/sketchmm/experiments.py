"""Reusable experiment procedures: variance, correctness, grid search, scaling.

All Monte-Carlo drivers split a root seed into per-trial seeds with
``numpy.random.SeedSequence.spawn``, so runs are replayable from (root seed,
thread count) alone.  Result rows carry that metadata plus a digest of every
hash function drawn.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
import subprocess
import time
from dataclasses import asdict, dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
import psutil

from . import __version__
from .errors import InvalidParameterError, MemoryBudgetError
from .instances import Instance, generate
from .reference import frobenius_norm_sq, gemm_reference
from .sketch import (
    ProductSketch,
    SketchParams,
    compress,
    decompress_all,
    decompress_entry,
    derive_params,
    estimate_workspace_bytes,
)

EPS_ERROR = 0.1  # absolute-error threshold for the eps-counts
MAG_THRESHOLD = 0.5  # magnitude threshold separating recovered/suppressed


def spawn_seeds(root_seed: int, count: int) -> list[int]:
    """Derive ``count`` independent 64-bit seeds from a root seed."""
    children = np.random.SeedSequence(root_seed).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


class RunDigest:
    """Accumulates a short digest over every hash function drawn in a run."""

    def __init__(self) -> None:
        self._h = hashlib.sha256()

    def update(self, sketch: ProductSketch) -> None:
        self._h.update(sketch.hashes.packed_words().tobytes())

    def hexdigest(self) -> str:
        return self._h.hexdigest()[:16]


def build_describe() -> str:
    """git describe of the working tree, or the package version as fallback."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=10,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except OSError:
        pass
    return f"sketchmm-{__version__}"


@dataclass(frozen=True)
class RunMeta:
    """Replayability metadata attached to every result row."""

    root_seed: int
    threads: int
    hash_digest: str
    build: str

    def columns(self) -> dict:
        return {
            "root_seed": self.root_seed,
            "threads": self.threads,
            "hash_digest": self.hash_digest,
            "build": self.build,
        }


class ParameterCategory(IntEnum):
    """Quality classes for a parameter pair, ordered worst to best."""

    FAIL = 0
    SATISFACTORY = 1
    DECENT = 2
    GOOD = 3
    PERFECT = 4

    @property
    def label(self) -> str:
        return self.name.capitalize()


@dataclass(frozen=True)
class CorrectnessReport:
    """Per-repetition recovery counts over big (planted) and small entries."""

    n: int
    n_big: int
    n_small: int
    big_above_half: int
    small_below_half: int
    big_eps01: int
    small_eps01: int

    def __post_init__(self) -> None:
        if self.n_big + self.n_small != self.n * self.n:
            raise InvalidParameterError("big/small counts must partition the n*n entries")
        for label, value, cap in (
            ("big_above_half", self.big_above_half, self.n_big),
            ("big_eps01", self.big_eps01, self.n_big),
            ("small_below_half", self.small_below_half, self.n_small),
            ("small_eps01", self.small_eps01, self.n_small),
        ):
            if not (0 <= value <= cap):
                raise InvalidParameterError(f"{label}={value} outside [0, {cap}]")


def correctness_metrics(estimate, truth, big_entries) -> CorrectnessReport:
    """Count recovered big entries and suppressed small entries.

    Big entries count as recovered when |estimate| >= 0.5 and as accurate when
    |estimate - truth| <= 0.1; small entries when |estimate| <= 0.5 and the
    same error bound.  Comparisons are inclusive.
    """
    est = np.asarray(estimate, dtype=np.float64)
    tru = np.asarray(truth, dtype=np.float64)
    if est.ndim != 2 or est.shape != tru.shape:
        raise InvalidParameterError(
            f"estimate and truth must share a 2-D shape, got {est.shape} and {tru.shape}"
        )
    if est.shape[0] != est.shape[1]:
        raise InvalidParameterError("correctness metrics expect square matrices")
    n = est.shape[0]
    big_mask = np.zeros(est.shape, dtype=bool)
    for i, j in big_entries:
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidParameterError(f"big entry ({i}, {j}) outside the index space")
        big_mask[i, j] = True
    small_mask = ~big_mask
    abs_est = np.abs(est)
    err_ok = np.abs(est - tru) <= EPS_ERROR
    return CorrectnessReport(
        n=n,
        n_big=int(big_mask.sum()),
        n_small=int(small_mask.sum()),
        big_above_half=int(np.count_nonzero(abs_est[big_mask] >= MAG_THRESHOLD)),
        small_below_half=int(np.count_nonzero(abs_est[small_mask] <= MAG_THRESHOLD)),
        big_eps01=int(np.count_nonzero(err_ok[big_mask])),
        small_eps01=int(np.count_nonzero(err_ok[small_mask])),
    )


def categorize(reports: list[CorrectnessReport]) -> ParameterCategory:
    """Best quality class whose condition holds across the repetitions.

    Perfect: every entry within the error bound, in every repetition.
    Good: all big entries within the bound, small entries short by at most n,
    in every repetition.  Decent: big entries within the bound short of at
    most log2(n) (but at least one accurate), small entries >= 99%, in every
    repetition.  Satisfactory: >= 99% of big entries recovered and >= 99% of
    small entries suppressed, each in at least ceil(0.99 * R) repetitions.
    """
    if not reports:
        raise InvalidParameterError("categorize needs at least one report")
    n = reports[0].n
    if any(r.n != n or r.n_big != reports[0].n_big for r in reports):
        raise InvalidParameterError("reports must describe the same problem shape")
    logn = math.log2(n)
    if all(r.big_eps01 + r.small_eps01 == r.n * r.n for r in reports):
        return ParameterCategory.PERFECT
    if all(
        r.big_eps01 == r.n_big and r.small_eps01 >= r.n_small - r.n for r in reports
    ):
        return ParameterCategory.GOOD
    if all(
        r.big_eps01 >= max(r.n_big - logn, 1.0) and r.small_eps01 >= 0.99 * r.n_small
        for r in reports
    ):
        return ParameterCategory.DECENT
    need = math.ceil(0.99 * len(reports))
    big_ok = sum(r.big_above_half >= 0.99 * r.n_big for r in reports)
    small_ok = sum(r.small_below_half >= 0.99 * r.n_small for r in reports)
    if big_ok >= need and small_ok >= need:
        return ParameterCategory.SATISFACTORY
    return ParameterCategory.FAIL


@dataclass(frozen=True)
class VariancePoint:
    """Sample variance of one entry's estimate at one sketch width."""

    b: int
    sample_var: float
    bound: float
    trials: int


def variance_experiment(
    instance: Instance,
    entry: tuple[int, int],
    bs: list[int],
    trials: int,
    transform: str,
    seed: int,
    threads: int | None = None,
    digest: RunDigest | None = None,
) -> list[VariancePoint]:
    """Sample variance of the d=1 estimate at ``entry`` against the bound.

    For each width b the same instance is sketched ``trials`` times with
    fresh hash seeds; the bound is ||C||_F^2 / b from the reference product.
    """
    if trials < 2:
        raise InvalidParameterError(f"need at least 2 trials, got {trials}")
    if not bs:
        raise InvalidParameterError("need at least one sketch width")
    i, j = entry
    n = instance.n
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidParameterError(f"entry ({i}, {j}) outside the {n} x {n} product")
    fro = frobenius_norm_sq(gemm_reference(instance.a, instance.b))
    per_b_seeds = np.random.SeedSequence(seed).spawn(len(bs))
    out: list[VariancePoint] = []
    for b, ss in zip(bs, per_b_seeds):
        estimates = np.empty(trials)
        for t_idx, child in enumerate(ss.spawn(trials)):
            params = SketchParams(
                n=n,
                b=int(b),
                d=1,
                transform=transform,
                seed=int(child.generate_state(1, np.uint64)[0]),
            )
            sk = compress(instance.a, instance.b, params, threads=threads)
            if digest is not None:
                digest.update(sk)
            estimates[t_idx] = decompress_entry(sk, i, j)
        out.append(
            VariancePoint(
                b=int(b),
                sample_var=float(np.var(estimates, ddof=1)),
                bound=fro / int(b),
                trials=trials,
            )
        )
    return out


@dataclass
class CorrectnessRun:
    """Repetition reports plus the resulting category for one parameter pair."""

    instance_kind: str
    n: int
    c_d: float | None
    c_b: float | None
    params: SketchParams
    reports: list[CorrectnessReport]
    category: ParameterCategory


def correctness_run(
    instance: Instance,
    params: SketchParams,
    repetitions: int,
    seed: int,
    threads: int | None = None,
    c_d: float | None = None,
    c_b: float | None = None,
    digest: RunDigest | None = None,
) -> CorrectnessRun:
    """Sketch the same instance ``repetitions`` times with fresh hashes."""
    if repetitions < 1:
        raise InvalidParameterError("need at least one repetition")
    truth = instance.true_product()
    reports: list[CorrectnessReport] = []
    for child_seed in spawn_seeds(seed, repetitions):
        p = SketchParams(
            n=params.n, b=params.b, d=params.d, transform=params.transform, seed=child_seed
        )
        sk = compress(instance.a, instance.b, p, threads=threads)
        if digest is not None:
            digest.update(sk)
        est = decompress_all(sk)
        reports.append(correctness_metrics(est, truth, instance.big_entries))
    return CorrectnessRun(
        instance_kind=instance.kind,
        n=instance.n,
        c_d=c_d,
        c_b=c_b,
        params=params,
        reports=reports,
        category=categorize(reports),
    )


@dataclass(frozen=True)
class GridPoint:
    c_d: float
    c_b: float
    b: int
    d: int
    category: ParameterCategory


@dataclass(frozen=True)
class GridSelection:
    c_d: float
    c_b: float
    median_seconds: float


@dataclass
class GridSearchResult:
    points: list[GridPoint]
    pareto: list[GridPoint]
    selected: dict[ParameterCategory, GridSelection]


def pareto_filter(points: list[GridPoint]) -> list[GridPoint]:
    """Drop points dominated in (c_d, c_b), comparing within a category only."""
    keep: list[GridPoint] = []
    for p in points:
        dominated = any(
            q.category == p.category
            and q.c_d <= p.c_d
            and q.c_b <= p.c_b
            and (q.c_d < p.c_d or q.c_b < p.c_b)
            for q in points
        )
        if not dominated:
            keep.append(p)
    return keep


def grid_search(
    kind: str,
    n: int,
    c_d_grid: list[float],
    c_b_grid: list[float],
    repetitions: int,
    transform: str,
    seed: int,
    rho: float | None = None,
    threads: int | None = None,
    timing_reps: int = 3,
    digest: RunDigest | None = None,
) -> GridSearchResult:
    """Categorize every (c_d, c_b) pair, Pareto-filter, pick fastest per category.

    One instance is generated from the root seed and shared by all pairs;
    every repetition uses fresh hash functions.  The confirmation timing is
    1 + ``timing_reps`` compress + decompress-all runs, summarized by median.
    """
    if not c_d_grid or not c_b_grid:
        raise InvalidParameterError("parameter grids must be nonempty")
    # validate the whole grid before doing any work
    for c_b in c_b_grid:
        for c_d in c_d_grid:
            derive_params(n, c_d, c_b, transform=transform)
    inst_seed, rep_root, timing_root = spawn_seeds(seed, 3)
    instance = generate(kind, n, inst_seed, rho=rho)
    points: list[GridPoint] = []
    for c_d in c_d_grid:
        for c_b in c_b_grid:
            params = derive_params(n, c_d, c_b, transform=transform)
            run = correctness_run(
                instance, params, repetitions, rep_root, threads=threads,
                c_d=c_d, c_b=c_b, digest=digest,
            )
            points.append(
                GridPoint(c_d=c_d, c_b=c_b, b=params.b, d=params.d, category=run.category)
            )
    pareto = pareto_filter(points)
    selected: dict[ParameterCategory, GridSelection] = {}
    timing_seeds = spawn_seeds(timing_root, len(pareto))
    for p, t_seed in zip(pareto, timing_seeds):
        if p.category == ParameterCategory.FAIL:
            continue
        params = derive_params(n, p.c_d, p.c_b, transform=transform, seed=t_seed)
        times: list[float] = []
        for rep in range(1 + timing_reps):
            t0 = time.perf_counter()
            sk = compress(instance.a, instance.b, params, threads=threads)
            decompress_all(sk)
            elapsed = time.perf_counter() - t0
            if rep > 0:  # first run is warm-up
                times.append(elapsed)
        med = float(np.median(times)) if times else math.inf
        current = selected.get(p.category)
        if current is None or med < current.median_seconds:
            selected[p.category] = GridSelection(c_d=p.c_d, c_b=p.c_b, median_seconds=med)
    return GridSearchResult(points=points, pareto=pareto, selected=selected)


@dataclass(frozen=True)
class TimingRecord:
    """One wall-clock measurement of compress + decompress-all (or GEMM)."""

    kind: str
    n: int
    c_d: float
    c_b: float
    b: int
    d: int
    transform: str  # "fft", "fwht", or "gemm" for the dense baseline
    rep: int
    warmup: bool
    seconds: float
    threads: int
    host: str


def default_memory_budget() -> int:
    return int(psutil.virtual_memory().available)


def scaling_run(
    kind: str,
    n_list: list[int],
    params_list: list[tuple[float, float]],
    transforms: list[str],
    repetitions: int,
    seed: int,
    rho: float | None = None,
    threads: int | None = None,
    include_baseline: bool = False,
    mem_budget: int | None = None,
    digest: RunDigest | None = None,
) -> list[TimingRecord]:
    """Time 1 + R repetitions per configuration on one instance per size.

    The first repetition is flagged as warm-up.  Before any allocation the
    estimated footprint is checked against ``mem_budget`` (defaults to the
    currently available memory).
    """
    if repetitions < 0:
        raise InvalidParameterError("repetitions must be >= 0")
    for n in n_list:
        if n < 2 or (n & (n - 1)) != 0:
            raise InvalidParameterError(f"sizes must be powers of two, got {n}")
    budget = default_memory_budget() if mem_budget is None else int(mem_budget)
    from .sketch import effective_threads

    nthreads = effective_threads(threads)
    # preflight every configuration before generating anything
    for n in n_list:
        for c_d, c_b in params_list:
            for transform in transforms:
                params = derive_params(n, c_d, c_b, transform=transform)
                need = int(1.25 * estimate_workspace_bytes(n, params.b, params.d, transform, nthreads))
                if need > budget:
                    raise MemoryBudgetError(
                        f"estimated {need} bytes for n={n} b={params.b} d={params.d} "
                        f"{transform} exceeds budget {budget}"
                    )
    host = platform.node() or "unknown"
    records: list[TimingRecord] = []
    inst_seeds = spawn_seeds(seed, len(n_list))
    for n, inst_seed in zip(n_list, inst_seeds):
        instance = generate(kind, n, inst_seed, rho=rho)
        rep_seed_root = np.random.SeedSequence(inst_seed).spawn(1)[0]
        for c_d, c_b in params_list:
            for transform in transforms:
                params0 = derive_params(n, c_d, c_b, transform=transform)
                rep_seeds = spawn_seeds(
                    int(rep_seed_root.generate_state(1, np.uint64)[0]), 1 + repetitions
                )
                for rep in range(1 + repetitions):
                    params = SketchParams(
                        n=n, b=params0.b, d=params0.d,
                        transform=transform, seed=rep_seeds[rep],
                    )
                    t0 = time.perf_counter()
                    sk = compress(instance.a, instance.b, params, threads=threads)
                    decompress_all(sk)
                    elapsed = time.perf_counter() - t0
                    if digest is not None:
                        digest.update(sk)
                    records.append(
                        TimingRecord(
                            kind=kind, n=n, c_d=c_d, c_b=c_b, b=params0.b, d=params0.d,
                            transform=transform, rep=rep, warmup=(rep == 0),
                            seconds=elapsed, threads=nthreads, host=host,
                        )
                    )
            if include_baseline:
                for rep in range(1 + repetitions):
                    t0 = time.perf_counter()
                    gemm_reference(instance.a, instance.b)
                    elapsed = time.perf_counter() - t0
                    records.append(
                        TimingRecord(
                            kind=kind, n=n, c_d=c_d, c_b=c_b, b=0, d=0,
                            transform="gemm", rep=rep, warmup=(rep == 0),
                            seconds=elapsed, threads=nthreads, host=host,
                        )
                    )
    return records


def summarize_timings(records: list[TimingRecord]) -> list[dict]:
    """Per-configuration min/median/max seconds, warm-up reps excluded."""
    groups: dict[tuple, list[float]] = {}
    for r in records:
        if r.warmup:
            continue
        groups.setdefault((r.kind, r.n, r.c_d, r.c_b, r.transform), []).append(r.seconds)
    out = []
    for (kind, n, c_d, c_b, transform), secs in sorted(groups.items()):
        out.append(
            {
                "kind": kind, "n": n, "c_d": c_d, "c_b": c_b, "transform": transform,
                "reps": len(secs),
                "min_seconds": float(np.min(secs)),
                "median_seconds": float(np.median(secs)),
                "max_seconds": float(np.max(secs)),
            }
        )
    return out


def timing_records_to_rows(records: list[TimingRecord], meta: RunMeta) -> list[dict]:
    return [asdict(r) | meta.columns() for r in records]


def timing_records_from_rows(rows: list[dict]) -> list[TimingRecord]:
    fields = {
        "kind": str, "n": int, "c_d": float, "c_b": float, "b": int, "d": int,
        "transform": str, "rep": int,
        "warmup": lambda v: v if isinstance(v, bool) else str(v).lower() == "true",
        "seconds": float, "threads": int, "host": str,
    }
    return [TimingRecord(**{k: conv(row[k]) for k, conv in fields.items()}) for row in rows]


def write_rows_csv(path, rows: list[dict]) -> None:
    """Write dict rows with a header; column order follows the first row."""
    if not rows:
        Path(path).write_text("")
        return
    fieldnames = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def read_rows_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_rows_json(path, rows) -> None:
    Path(path).write_text(json.dumps(rows, indent=2) + "\n")


def read_rows_json(path):
    return json.loads(Path(path).read_text())
