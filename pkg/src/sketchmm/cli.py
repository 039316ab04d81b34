"""Command-line front end: multiply, gen, verify, and experiment workflows.

Exit codes: 0 success, 1 runtime failure (I/O, formats, memory budget),
2 usage or validation error.  Experiment subcommands write the delimited
result table, a metadata JSON, and a rendered figure into the output
directory; all of them re-run bit-identically from (seed, threads).
"""

from __future__ import annotations

import functools
import json
import re
import time
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from . import __version__
from .errors import InvalidParameterError, MemoryBudgetError, SketchmmError
from .experiments import (
    RunDigest,
    RunMeta,
    build_describe,
    correctness_run,
    grid_search,
    scaling_run,
    spawn_seeds,
    summarize_timings,
    timing_records_to_rows,
    variance_experiment,
    write_rows_csv,
    write_rows_json,
)
from .instances import KINDS, generate, load_instance, save_instance, verify_instance
from .matio import load_matrix, save_matrix
from .sketch import (
    SketchParams,
    compress,
    decompress_all,
    derive_params,
    effective_threads,
    estimate_workspace_bytes,
    save_sketch,
)

_PLANTED_KINDS = ("covariance", "lightbulb")
_DEFAULT_RHO = 0.8


@dataclass
class CliConfig:
    seed: int
    threads: int | None
    transform: str
    fmt: str
    max_mem: int | None


def _parse_bytes(text: str) -> int:
    m = re.fullmatch(r"\s*(\d+(?:\.\d+)?)\s*([kmgt]?)b?\s*", text, re.IGNORECASE)
    if not m:
        raise click.BadParameter(f"cannot parse memory size {text!r}")
    scale = {"": 1, "k": 1 << 10, "m": 1 << 20, "g": 1 << 30, "t": 1 << 40}
    return int(float(m.group(1)) * scale[m.group(2).lower()])


def _cli_errors(fn):
    """Map library errors onto the exit-code contract."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InvalidParameterError as exc:
            raise click.UsageError(str(exc)) from exc
        except (SketchmmError, OSError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _check_budget(cfg: CliConfig, n: int, b: int, d: int, transform: str) -> None:
    if cfg.max_mem is None:
        return
    need = int(1.25 * estimate_workspace_bytes(n, b, d, transform, effective_threads(cfg.threads)))
    if need > cfg.max_mem:
        raise MemoryBudgetError(
            f"estimated working set {need} bytes exceeds --max-mem {cfg.max_mem}"
        )


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"{what} must be a comma-separated integer list") from exc


def _parse_float_list(text: str, what: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"{what} must be a comma-separated number list") from exc


def _rho_for(kind: str, rho: float | None) -> float | None:
    if kind in _PLANTED_KINDS:
        return _DEFAULT_RHO if rho is None else rho
    if rho is not None:
        raise click.UsageError(f"--rho does not apply to {kind} instances")
    return None


def _emit_rows(cfg: CliConfig, out_dir: Path, stem: str, rows: list[dict]) -> Path:
    if cfg.fmt == "csv":
        path = out_dir / f"{stem}.csv"
        write_rows_csv(path, rows)
    else:
        path = out_dir / f"{stem}.json"
        write_rows_json(path, rows)
    return path


def _write_meta(out_dir: Path, stem: str, obj: dict) -> Path:
    path = out_dir / f"{stem}.meta.json"
    path.write_text(json.dumps(obj, indent=2) + "\n")
    return path


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="sketchmm")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True,
              help="Root seed; all randomness derives from it.")
@click.option("--threads", type=click.IntRange(min=1), default=None,
              help="Accumulation chunk count (default: ambient thread count).")
@click.option("--transform", type=click.Choice(["fft", "fwht"]), default="fwht",
              show_default=True, help="Sketch convolution variant.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True, help="Result table format for experiments.")
@click.option("--max-mem", type=str, default=None, metavar="BYTES",
              help="Refuse runs whose estimated working set exceeds this budget "
                   "(accepts K/M/G/T suffixes).")
@click.pass_context
def main(ctx, seed, threads, transform, fmt, max_mem):
    """Sketched matrix products: estimate entries of A @ B from a small sketch."""
    budget = _parse_bytes(max_mem) if max_mem is not None else None
    ctx.obj = CliConfig(seed=seed, threads=threads, transform=transform,
                        fmt=fmt, max_mem=budget)


@main.command()
@click.argument("a_file", type=click.Path(dir_okay=False))
@click.argument("b_file", type=click.Path(dir_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False),
              help="Output matrix file (.csv for text, anything else binary).")
@click.option("--cd", type=float, default=None, help="Depth constant c_d.")
@click.option("--cb", type=float, default=None, help="Width constant c_b.")
@click.option("-b", "--buckets", type=int, default=None, help="Explicit sketch width b.")
@click.option("-d", "--depth", type=int, default=None, help="Explicit sketch depth d.")
@click.option("--save-sketch", "sketch_out", type=click.Path(dir_okay=False), default=None,
              help="Also write the sketch container to this path.")
@click.pass_obj
@_cli_errors
def multiply(cfg: CliConfig, a_file, b_file, out, cd, cb, buckets, depth, sketch_out):
    """Estimate A @ B through a sketch and write the full estimate matrix."""
    derived = cd is not None or cb is not None
    explicit = buckets is not None or depth is not None
    if derived == explicit or (derived and (cd is None or cb is None)) or (
        explicit and (buckets is None or depth is None)
    ):
        raise click.UsageError("give either --cd with --cb, or --buckets with --depth")
    a = load_matrix(a_file)
    b = load_matrix(b_file)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise InvalidParameterError(
            f"operands must be square with matching size, got {a.shape} and {b.shape}"
        )
    n = a.shape[0]
    if derived:
        params = derive_params(n, cd, cb, transform=cfg.transform, seed=cfg.seed)
    else:
        params = SketchParams(n=n, b=buckets, d=depth, transform=cfg.transform, seed=cfg.seed)
    _check_budget(cfg, n, params.b, params.d, params.transform)
    threads = effective_threads(cfg.threads)
    t0 = time.perf_counter()
    sk = compress(a, b, params, threads=threads)
    est = decompress_all(sk)
    wall = time.perf_counter() - t0
    save_matrix(out, est)
    if sketch_out is not None:
        save_sketch(sketch_out, sk)
    click.echo(
        f"n={n} b={params.b} d={params.d} transform={params.transform} "
        f"threads={threads} seed={params.seed} wall={wall:.3f}s",
        err=True,
    )


@main.command()
@click.argument("kind", type=click.Choice(KINDS))
@click.argument("out_prefix", type=click.Path())
@click.option("-n", "--size", "n", type=int, required=True, help="Matrix dimension.")
@click.option("--rho", type=float, default=None,
              help=f"Planted correlation for covariance/lightbulb [default: {_DEFAULT_RHO}].")
@click.pass_obj
@_cli_errors
def gen(cfg: CliConfig, kind, out_prefix, n, rho):
    """Generate a benchmark instance: A, B, and a JSON sidecar."""
    inst = generate(kind, n, cfg.seed, rho=_rho_for(kind, rho))
    a_path, b_path, meta_path = save_instance(out_prefix, inst)
    for p in (a_path, b_path, meta_path):
        click.echo(str(p))


@main.command()
@click.argument("prefix", type=click.Path())
@click.pass_obj
@_cli_errors
def verify(cfg: CliConfig, prefix):
    """Check a generated instance against the reference dense product."""
    inst = load_instance(prefix)
    ok, report = verify_instance(inst)
    if not ok:
        raise click.ClickException(report)
    click.echo(report)


@main.group()
def experiment():
    """Statistical experiment drivers; each writes a table, metadata, and a figure."""


def _experiment_common(fn):
    fn = click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
                      help="Output directory.")(fn)
    fn = click.option("--plot/--no-plot", "do_plot", default=True, show_default=True,
                      help="Render the figure next to the table.")(fn)
    return fn


@experiment.command()
@click.option("--kind", type=click.Choice(KINDS), required=True)
@click.option("-n", "--size", "n", type=int, required=True)
@click.option("--bs", default="64,128,256,512,1024", show_default=True,
              help="Comma-separated sketch widths.")
@click.option("--trials", type=click.IntRange(min=2), default=1000, show_default=True)
@click.option("--entry", default=None, metavar="I,J",
              help="Product entry to track [default: first planted entry].")
@click.option("--rho", type=float, default=None)
@_experiment_common
@click.pass_obj
@_cli_errors
def variance(cfg: CliConfig, kind, n, bs, trials, entry, rho, out_dir, do_plot):
    """Sample variance of a single-entry estimate vs the Frobenius bound (d=1)."""
    widths = _parse_int_list(bs, "--bs")
    inst_seed, trial_seed = spawn_seeds(cfg.seed, 2)
    inst = generate(kind, n, inst_seed, rho=_rho_for(kind, rho))
    if entry is None:
        i, j = sorted(inst.big_entries)[0]
    else:
        parts = _parse_int_list(entry, "--entry")
        if len(parts) != 2:
            raise click.BadParameter("--entry must be I,J")
        i, j = parts
    digest = RunDigest()
    points = variance_experiment(
        inst, (i, j), widths, trials, cfg.transform, trial_seed,
        threads=cfg.threads, digest=digest,
    )
    meta = RunMeta(cfg.seed, effective_threads(cfg.threads), digest.hexdigest(), build_describe())
    rows = [
        {
            "kind": kind, "n": n, "transform": cfg.transform,
            "entry_i": i, "entry_j": j, "d": 1, "trials": p.trials,
            "b": p.b, "sample_var": p.sample_var, "bound": p.bound,
        } | meta.columns()
        for p in points
    ]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = _emit_rows(cfg, out, "variance", rows)
    _write_meta(out, "variance", {
        "experiment": "variance", "kind": kind, "n": n, "rho": inst.rho,
        "transform": cfg.transform, "bs": widths, "trials": trials,
        "entry": [i, j],
    } | meta.columns())
    if do_plot:
        from .plots import save_figure, variance_figure

        save_figure(variance_figure({f"{kind} ({i},{j})": points}), out / "variance.png")
    click.echo(str(table))


@experiment.command()
@click.option("--kind", type=click.Choice(KINDS), required=True)
@click.option("-n", "--size", "n", type=int, required=True)
@click.option("--cd", type=float, required=True, help="Depth constant c_d.")
@click.option("--cb", type=float, required=True, help="Width constant c_b.")
@click.option("--reps", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--rho", type=float, default=None)
@_experiment_common
@click.pass_obj
@_cli_errors
def correctness(cfg: CliConfig, kind, n, cd, cb, reps, rho, out_dir, do_plot):
    """Recovery counts per repetition and the resulting quality category."""
    inst_seed, rep_seed = spawn_seeds(cfg.seed, 2)
    inst = generate(kind, n, inst_seed, rho=_rho_for(kind, rho))
    params = derive_params(n, cd, cb, transform=cfg.transform)
    _check_budget(cfg, n, params.b, params.d, params.transform)
    digest = RunDigest()
    run = correctness_run(
        inst, params, reps, rep_seed, threads=cfg.threads, c_d=cd, c_b=cb, digest=digest
    )
    meta = RunMeta(cfg.seed, effective_threads(cfg.threads), digest.hexdigest(), build_describe())
    rows = [
        {
            "kind": kind, "n": n, "transform": cfg.transform, "c_d": cd, "c_b": cb,
            "b": params.b, "d": params.d, "rep": idx,
            "big_above_half": r.big_above_half, "small_below_half": r.small_below_half,
            "big_eps01": r.big_eps01, "small_eps01": r.small_eps01,
            "n_big": r.n_big, "n_small": r.n_small,
        } | meta.columns()
        for idx, r in enumerate(run.reports)
    ]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = _emit_rows(cfg, out, "correctness", rows)
    _write_meta(out, "correctness", {
        "experiment": "correctness", "kind": kind, "n": n, "rho": inst.rho,
        "transform": cfg.transform, "c_d": cd, "c_b": cb,
        "b": params.b, "d": params.d, "repetitions": reps,
        "category": run.category.label,
    } | meta.columns())
    if do_plot:
        from .plots import correctness_figure, save_figure

        save_figure(correctness_figure(run), out / "correctness.png")
    click.echo(f"{table} category={run.category.label}")


@experiment.command()
@click.option("--kind", type=click.Choice(KINDS), required=True)
@click.option("-n", "--size", "n", type=int, required=True)
@click.option("--cd-grid", required=True, help="Comma-separated c_d values.")
@click.option("--cb-grid", required=True, help="Comma-separated c_b values.")
@click.option("--reps", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--timing-reps", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--rho", type=float, default=None)
@_experiment_common
@click.pass_obj
@_cli_errors
def gridsearch(cfg: CliConfig, kind, n, cd_grid, cb_grid, reps, timing_reps, rho,
               out_dir, do_plot):
    """Categorize a (c_d, c_b) grid, keep the Pareto set, pick fastest per category."""
    cds = _parse_float_list(cd_grid, "--cd-grid")
    cbs = _parse_float_list(cb_grid, "--cb-grid")
    digest = RunDigest()
    result = grid_search(
        kind, n, cds, cbs, reps, cfg.transform, cfg.seed,
        rho=_rho_for(kind, rho), threads=cfg.threads,
        timing_reps=timing_reps, digest=digest,
    )
    meta = RunMeta(cfg.seed, effective_threads(cfg.threads), digest.hexdigest(), build_describe())
    rows = [
        {
            "kind": kind, "n": n, "transform": cfg.transform,
            "c_d": p.c_d, "c_b": p.c_b, "b": p.b, "d": p.d,
            "category": p.category.label,
        } | meta.columns()
        for p in result.points
    ]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = _emit_rows(cfg, out, "gridsearch", rows)
    _write_meta(out, "gridsearch", {
        "experiment": "gridsearch", "kind": kind, "n": n,
        "transform": cfg.transform, "cd_grid": cds, "cb_grid": cbs,
        "repetitions": reps, "timing_reps": timing_reps,
        "pareto": [{"c_d": p.c_d, "c_b": p.c_b, "category": p.category.label}
                   for p in result.pareto],
        "selected": {
            cat.label: {"c_d": sel.c_d, "c_b": sel.c_b,
                        "median_seconds": sel.median_seconds}
            for cat, sel in result.selected.items()
        },
    } | meta.columns())
    if do_plot:
        from .plots import gridsearch_figure, save_figure

        save_figure(gridsearch_figure(result), out / "gridsearch.png")
    click.echo(str(table))


@experiment.command()
@click.option("--kind", type=click.Choice(KINDS), required=True)
@click.option("--ns", required=True, help="Comma-separated problem sizes.")
@click.option("--params", "param_pairs", multiple=True, metavar="CD:CB",
              help="Parameter pair, repeatable.", required=True)
@click.option("--transforms", default=None,
              help="Comma-separated variants [default: the global --transform].")
@click.option("--reps", type=click.IntRange(min=0), default=5, show_default=True,
              help="Timed repetitions after the warm-up run.")
@click.option("--baseline/--no-baseline", default=False, show_default=True,
              help="Also time the reference dense product.")
@click.option("--rho", type=float, default=None)
@_experiment_common
@click.pass_obj
@_cli_errors
def scaling(cfg: CliConfig, kind, ns, param_pairs, transforms, reps, baseline, rho,
            out_dir, do_plot):
    """Wall-clock scaling of compress + decompress over problem sizes."""
    n_list = _parse_int_list(ns, "--ns")
    pairs = []
    for tok in param_pairs:
        parts = tok.split(":")
        if len(parts) != 2:
            raise click.BadParameter(f"--params must be CD:CB, got {tok!r}")
        pairs.append((float(parts[0]), float(parts[1])))
    tf_list = [t.strip() for t in transforms.split(",")] if transforms else [cfg.transform]
    for t in tf_list:
        if t not in ("fft", "fwht"):
            raise click.BadParameter(f"unknown transform {t!r}")
    digest = RunDigest()
    records = scaling_run(
        kind, n_list, pairs, tf_list, reps, cfg.seed,
        rho=_rho_for(kind, rho), threads=cfg.threads,
        include_baseline=baseline, mem_budget=cfg.max_mem, digest=digest,
    )
    meta = RunMeta(cfg.seed, effective_threads(cfg.threads), digest.hexdigest(), build_describe())
    rows = timing_records_to_rows(records, meta)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = _emit_rows(cfg, out, "scaling", rows)
    _write_meta(out, "scaling", {
        "experiment": "scaling", "kind": kind, "ns": n_list,
        "params": [list(p) for p in pairs], "transforms": tf_list,
        "repetitions": reps, "baseline": baseline,
        "summaries": summarize_timings(records),
    } | meta.columns())
    if do_plot:
        from .plots import save_figure, scaling_figure

        save_figure(scaling_figure(records), out / "scaling.png")
    click.echo(str(table))


if __name__ == "__main__":
    main()
