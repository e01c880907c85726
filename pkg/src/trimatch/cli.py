"""Command line surface: instance generation, metric validation, single
matching requests, and batch benchmarking.

Exit codes: 0 success, 2 usage or input error, 3 metric/data validation
failure.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path
from time import perf_counter

import click

from .bench import (DEFAULT_ELL_GRID, aggregate, row_to_dict, run_queries,
                    sample_query_lanes)
from .costshare import shapley_split
from .generate import generate_instance, write_instance
from .lanes import LaneIndex, build_index, load_lanes_csv
from .metric import (GREAT_CIRCLE, MATRIX, MetricSpace, UnknownBaseError,
                     load_bases_csv, load_matrix_csv, validate_metric)
from .search import (Query, enumerate_bruteforce, enumerate_pruned,
                     enumerate_quad, enumerate_topk)


class InputError(click.ClickException):
    exit_code = 2


@click.group()
def main():
    """Find triangular transports for full-truckload lanes."""


def _load_space(bases_path: str, matrix_path: str | None, provider: str,
                force: bool, samples: int = 1000, seed: int = 0) -> MetricSpace:
    try:
        bases = load_bases_csv(bases_path)
        if provider == MATRIX:
            if matrix_path is None:
                raise InputError("--provider matrix requires --matrix")
            space = MetricSpace.from_matrix(bases, load_matrix_csv(matrix_path))
        else:
            space = MetricSpace.great_circle(bases)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if provider == MATRIX:
        # explicit matrices carry no proof of metricity; refuse bad ones
        report = validate_metric(space, samples=samples, seed=seed)
        if not report.ok:
            click.echo(report.summary(), err=True)
            if not force:
                click.echo("metric validation failed (use --force to proceed)", err=True)
                sys.exit(3)
    return space


def _load_index(lanes_path: str, space: MetricSpace) -> LaneIndex:
    try:
        return build_index(load_lanes_csv(lanes_path, space), space)
    except (ValueError, UnknownBaseError) as exc:
        raise InputError(str(exc)) from exc


def _triangle_record(tr, shares=None, ell_star=None) -> dict:
    rec = {
        "t1": tr.t1, "t2": tr.t2, "t3": tr.t3,
        "d": [round(tr.d1, 3), round(tr.d2, 3), round(tr.d3, 3)],
        "e": [round(tr.e1, 3), round(tr.e2, 3), round(tr.e3, 3)],
        "ovr": round(tr.ovr, 6),
        "total": round(tr.total, 3),
    }
    if shares is not None:
        rec["shapley"] = [round(s, 3) for s in shares]
    if ell_star is not None:
        rec["ell_star"] = round(ell_star, 6)
    return rec


def _emit_records(records: list[dict], fmt: str, out: str | None) -> None:
    if fmt == "jsonl":
        lines = [json.dumps(rec) for rec in records]
        text = "\n".join(lines) + ("\n" if lines else "")
    else:
        cols = ["t1", "t2", "t3", "d1", "d2", "d3", "e1", "e2", "e3", "ovr", "total"]
        if records and "shapley" in records[0]:
            cols += ["shapley1", "shapley2", "shapley3"]
        if records and "ell_star" in records[0]:
            cols.append("ell_star")
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(cols)
        for rec in records:
            flat = {
                "t1": rec["t1"], "t2": rec["t2"], "t3": rec["t3"],
                "d1": f"{rec['d'][0]:.3f}", "d2": f"{rec['d'][1]:.3f}", "d3": f"{rec['d'][2]:.3f}",
                "e1": f"{rec['e'][0]:.3f}", "e2": f"{rec['e'][1]:.3f}", "e3": f"{rec['e'][2]:.3f}",
                "ovr": f"{rec['ovr']:.6f}", "total": f"{rec['total']:.3f}",
            }
            if "shapley" in rec:
                for i in range(3):
                    flat[f"shapley{i + 1}"] = f"{rec['shapley'][i]:.3f}"
            if "ell_star" in rec:
                flat["ell_star"] = f"{rec['ell_star']:.6f}"
            writer.writerow([flat[c] for c in cols])
        text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--n-bases", type=int, required=True, help="Number of bases to place.")
@click.option("--n-lanes", type=int, default=None,
              help="Number of lanes (default: 3.5 per base).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=".", show_default=True,
              help="Directory for bases.csv and lanes.csv.")
def gen(n_bases, n_lanes, seed, out):
    """Write a seeded synthetic instance (bases.csv + lanes.csv)."""
    try:
        bases, rows = generate_instance(n_bases, n_lanes, seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_instance(bases, rows, outdir / "bases.csv", outdir / "lanes.csv")
    click.echo(f"wrote {len(bases)} bases and {len(rows)} lanes to {outdir}")


@main.command()
@click.option("--bases", "bases_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--lanes", "lanes_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--matrix", "matrix_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--provider", type=click.Choice([GREAT_CIRCLE, MATRIX]), default=GREAT_CIRCLE,
              show_default=True)
@click.option("--samples", type=int, default=1000, show_default=True,
              help="Random triples for the triangle-inequality check.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--force", is_flag=True, help="Report violations but exit 0.")
def validate(bases_path, lanes_path, matrix_path, provider, samples, seed, force):
    """Check the metric axioms and lane-file integrity."""
    try:
        bases = load_bases_csv(bases_path)
        if provider == MATRIX:
            if matrix_path is None:
                raise InputError("--provider matrix requires --matrix")
            space = MetricSpace.from_matrix(bases, load_matrix_csv(matrix_path))
        else:
            space = MetricSpace.great_circle(bases)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    report = validate_metric(space, samples=samples, seed=seed)
    click.echo(report.summary())
    lane_trouble = None
    if lanes_path is not None:
        try:
            lanes = load_lanes_csv(lanes_path, space)
            build_index(lanes, space)
            click.echo(f"lanes: {len(lanes)} rows ok")
        except ValueError as exc:
            lane_trouble = str(exc)
            click.echo(f"lanes: {lane_trouble}")
    if (not report.ok or lane_trouble) and not force:
        sys.exit(3)
    click.echo("validation passed" if report.ok and not lane_trouble else "violations ignored (--force)")


@main.command()
@click.argument("lane_id")
@click.option("--bases", "bases_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--lanes", "lanes_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--matrix", "matrix_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--provider", type=click.Choice([GREAT_CIRCLE, MATRIX]), default=GREAT_CIRCLE,
              show_default=True)
@click.option("--l", "ell", type=float, required=True, help="Desired occupied vehicle rate.")
@click.option("--u-km", type=float, default=None, help="Absolute mileage cap in km.")
@click.option("--u-factor", type=float, default=None,
              help="Cap as a multiple of the client lane length (default 4).")
@click.option("--k", type=int, default=None, help="Return only the k best rates.")
@click.option("--algo", type=click.Choice(["brute", "quad", "pruned", "topk"]), default=None,
              help="Backend (default: pruned, or topk when --k is given).")
@click.option("--shapley", is_flag=True, help="Attach fair mileage-savings shares.")
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default="jsonl",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--deterministic", is_flag=True,
              help="Resolve equal-rate ties at the kth rank by lane ids.")
@click.option("--force", is_flag=True, help="Skip the metric gate on matrix inputs.")
def match(lane_id, bases_path, lanes_path, matrix_path, provider, ell, u_km, u_factor,
          k, algo, shapley, fmt, out, deterministic, force):
    """List feasible triangular transports containing LANE_ID."""
    if u_km is not None and u_factor is not None:
        raise InputError("--u-km and --u-factor are mutually exclusive")
    algo = algo or ("topk" if k is not None else "pruned")
    if algo == "topk" and k is None:
        raise InputError("--algo topk requires --k")
    if algo != "topk" and k is not None:
        raise InputError("--k only applies to --algo topk")

    space = _load_space(bases_path, matrix_path, provider, force)
    index = _load_index(lanes_path, space)
    if lane_id not in index.by_id:
        raise InputError(f"unknown lane id {lane_id!r}")
    t1 = index.by_id[lane_id]
    u = u_km if u_km is not None else (u_factor if u_factor is not None else 4.0) * t1.dist
    try:
        query = Query(lane_id, ell, u, k)
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    if algo == "brute":
        rs = enumerate_bruteforce(index, space, query)
    elif algo == "quad":
        rs = enumerate_quad(index, space, query)
    elif algo == "pruned":
        rs = enumerate_pruned(index, space, query)
    else:
        rs = enumerate_topk(index, space, query, deterministic=deterministic)

    records = []
    for tr in rs.triangles:
        shares = shapley_split(tr, index, space).shares if shapley else None
        records.append(_triangle_record(
            tr, shares, rs.ell_star if algo == "topk" else None))
    _emit_records(records, fmt, out)
    click.echo(f"{len(records)} triangles (ell={ell}, u={u:.3f}, algo={algo})", err=True)


@main.command()
@click.option("--bases", "bases_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--lanes", "lanes_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--matrix", "matrix_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--provider", type=click.Choice([GREAT_CIRCLE, MATRIX]), default=GREAT_CIRCLE,
              show_default=True)
@click.option("--queries", type=int, default=100, show_default=True,
              help="Client lanes sampled without replacement.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--algo", "algos", type=click.Choice(["brute", "quad", "pruned", "topk"]),
              multiple=True, default=("pruned",), show_default=True)
@click.option("--l", "ells", type=float, multiple=True,
              help="Rate grid (default 0.75..0.95 step 0.05).")
@click.option("--u-factor", type=float, default=4.0, show_default=True)
@click.option("--u-km", type=float, default=None)
@click.option("--k", type=int, default=20, show_default=True, help="k for the topk backend.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write per-query rows here.")
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default="jsonl",
              show_default=True)
@click.option("--deterministic", is_flag=True)
@click.option("--force", is_flag=True)
def bench(bases_path, lanes_path, matrix_path, provider, queries, seed, algos, ells,
          u_factor, u_km, k, out, fmt, deterministic, force):
    """Run a query batch over a rate grid and summarize per grid cell."""
    space = _load_space(bases_path, matrix_path, provider, force)
    build_start = perf_counter()
    index = _load_index(lanes_path, space)
    build_seconds = perf_counter() - build_start
    click.echo(f"index: {len(index.lanes)} lanes over {len(space)} bases, "
               f"built in {build_seconds:.3f}s")
    try:
        lane_ids = sample_query_lanes(index, queries, seed)
        rows = run_queries(index, space, lane_ids, algos, ells or DEFAULT_ELL_GRID,
                           u_factor=u_factor, u_km=u_km, k=k,
                           deterministic=deterministic)
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    if out:
        if fmt == "jsonl":
            text = "".join(json.dumps(row_to_dict(r)) + "\n" for r in rows)
            Path(out).write_text(text)
        else:
            buf = io.StringIO()
            writer = csv.writer(buf)
            writer.writerow(["lane", "algo", "ell", "u", "k", "wall_seconds",
                             "result_size", "candidates", "level_visits", "ell_star"])
            for r in rows:
                writer.writerow([r.lane, r.algo, r.ell, f"{r.u:.3f}", r.k if r.k else "",
                                 repr(r.wall_seconds), r.result_size, r.candidates,
                                 "/".join(map(str, r.level_visits)), repr(r.ell_star)])
            Path(out).write_text(buf.getvalue())
        click.echo(f"rows: {len(rows)} written to {out}")

    cells = aggregate(rows)
    click.echo(f"{'ell':>5} {'algo':>7} {'queries':>8} {'mean_s':>10} {'median_s':>10} "
               f"{'p95_s':>10} {'max_s':>10} {'mean_cand':>12} {'results':>8}")
    for (ell, algo) in sorted(cells):
        c = cells[(ell, algo)]
        click.echo(f"{ell:>5.2f} {algo:>7} {c.queries:>8} {c.mean_seconds:>10.4f} "
                   f"{c.median_seconds:>10.4f} {c.p95_seconds:>10.4f} {c.max_seconds:>10.4f} "
                   f"{c.mean_candidates:>12.1f} {c.total_results:>8}")


if __name__ == "__main__":
    main()
