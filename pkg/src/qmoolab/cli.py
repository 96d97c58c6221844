"""Command-line experiment harness: gen, oracle, run, report.

Results are a single CSV with one row per run. Runs are keyed by
(algo, solver, indicator, p, kind, n, instance_id, run_seed); re-running a
matrix skips keys already present, so interrupted matrices resume. Every
coverage-weighted run is paired with a plain hypervolume baseline under the
same seed so the report stage can compute relative deltas.

Exit codes: 0 success, 1 usage error, 2 capability error (instance too
large), 3 some matrix cells failed. The QMOOLAB_OUT environment variable
overrides the directory of all output paths.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .bench import (
    KINDS,
    GeneratorConfig,
    brute_force_pareto,
    generate,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    save_instance,
)
from .core import CapabilityError
from .drivers import RunConfig, prepare, run
from .indicators import Indicator

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CAPABILITY = 2
EXIT_PARTIAL = 3

RESULT_COLUMNS = [
    "algo", "solver", "indicator", "p", "kind", "n", "instance_id", "run_seed",
    "hv", "oracle_hv", "rel_hv", "ps", "od", "m", "dm", "d", "ev",
    "evals", "wall_ms", "termination",
]

_KIND_ALIASES = {k.lower().replace("-", ""): k for k in KINDS}
_KIND_ALIASES.update({k.lower(): k for k in KINDS})


class UsageError(Exception):
    pass


def _canonical_kind(raw: str) -> str:
    key = raw.lower().replace("_", "-")
    if key in _KIND_ALIASES:
        return _KIND_ALIASES[key]
    key = key.replace("-", "")
    if key in _KIND_ALIASES:
        return _KIND_ALIASES[key]
    raise UsageError(f"unknown problem kind {raw!r}; choose from {', '.join(KINDS)}")


def _out_path(raw: str | Path) -> Path:
    """Apply the QMOOLAB_OUT directory override, keeping the file name."""
    path = Path(raw)
    override = os.environ.get("QMOOLAB_OUT")
    if override:
        return Path(override) / path.name
    return path


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def cmd_gen(kind: str, n: int, count: int, seed: int, out_dir: str | Path) -> list[Path]:
    """Write `count` instance files named {kind}_{n}_{index}.json.

    Instance index i uses seed = base seed + i, so regeneration is
    byte-identical for a fixed base seed.
    """
    kind = _canonical_kind(kind)
    out = _out_path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i in range(count):
        instance = generate(GeneratorConfig(kind=kind, n=n, seed=seed + i))
        path = out / f"{kind}_{n}_{i}.json"
        save_instance(instance, path)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

def cmd_oracle(instance_file: str | Path, out_dir: str | Path | None = None) -> Path:
    """Write {instance}.oracle.json with the exact front and its hypervolume."""
    src = Path(instance_file)
    instance = load_instance(src)
    oracle = brute_force_pareto(instance)
    payload = {
        "instance": src.stem,
        "n": instance.n,
        "K": instance.K,
        "ideal": oracle.ideal.tolist(),
        "nadir": oracle.nadir.tolist(),
        "efficient": oracle.efficient.tolist(),
        "front": oracle.front.tolist(),
        "front_size": int(oracle.front.shape[0]),
        "hv": oracle.hv,
    }
    target_dir = _out_path(out_dir) if out_dir is not None else src.parent
    target_dir.mkdir(parents=True, exist_ok=True)
    target = target_dir / f"{src.stem}.oracle.json"
    target.write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")
    return target


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _cell_key(cell: dict) -> tuple:
    return (
        cell["algo"],
        cell.get("solver", "nelder-mead") if cell["algo"] != "qmoom" else "nsga2",
        cell.get("indicator") or "",
        _fmt(cell.get("p")) if cell["algo"] == "qmooc" else "",
    )


def _row_key(row: dict) -> tuple:
    return (
        row["algo"], row["solver"], row["indicator"], row["p"],
        row["kind"], row["n"], row["instance_id"], row["run_seed"],
    )


def _task_key(cell: dict, payload: dict, seed: int) -> tuple:
    return (*_cell_key(cell), payload["kind"], str(payload["n"]),
            payload["instance_id"], str(seed))


def _normalize_cells(cells: list[dict]) -> list[dict]:
    """Validate cells and append missing same-seed baselines for qmooc cells."""
    normalized: list[dict] = []
    seen = set()

    def push(cell: dict) -> None:
        key = _cell_key(cell)
        if key not in seen:
            seen.add(key)
            normalized.append(cell)

    for cell in cells:
        algo = cell.get("algo")
        if algo not in ("qmoo", "qmooc", "qmoom"):
            raise UsageError(f"unknown algorithm {algo!r}")
        cell = dict(cell)
        cell["solver"] = str(cell.get("solver", "nelder-mead")).lower()
        cell["budget"] = int(cell.get("budget", 4000))
        cell["layers"] = int(cell.get("layers", 5))
        if algo == "qmooc":
            if not cell.get("indicator"):
                raise UsageError("qmooc cells need an indicator")
            Indicator(cell["indicator"])  # validates
            if cell.get("p") is None:
                raise UsageError("qmooc cells need a weight p")
            cell["p"] = float(cell["p"])  # resume keys compare formatted floats
        push(cell)
        if algo == "qmooc":
            baseline = {k: v for k, v in cell.items() if k not in ("indicator", "p")}
            baseline["algo"] = "qmoo"
            push(baseline)
    return normalized


def _instance_payloads(matrix: dict) -> list[dict]:
    """Resolve the matrix's instance block into (kind, n, id, instance-dict) payloads."""
    payloads = []
    if "instances" in matrix:
        for path in matrix["instances"]:
            p = Path(path)
            instance = load_instance(p)
            payloads.append({
                "kind": instance.kind,
                "n": instance.n,
                "instance_id": p.stem,
                "data": instance_to_dict(instance),
            })
    for prob in matrix.get("problems", []):
        kind = _canonical_kind(prob["kind"])
        n = int(prob["n"])
        base = int(prob.get("seed", 0))
        for i in range(int(prob.get("count", 1))):
            instance = generate(GeneratorConfig(kind=kind, n=n, seed=base + i))
            payloads.append({
                "kind": kind,
                "n": n,
                "instance_id": str(i),
                "data": instance_to_dict(instance),
            })
    if not payloads:
        raise UsageError("matrix defines no instances")
    return payloads


def _run_seeds(matrix: dict) -> list[int]:
    seeds = matrix.get("run_seeds", 40)
    if isinstance(seeds, int):
        return list(range(seeds))
    return [int(s) for s in seeds]


def _execute_instance(task: dict) -> tuple[list[dict], list[str]]:
    """Worker: all requested runs of one instance (oracle computed once).

    Cell failures are collected, not raised, so one bad configuration cannot
    abort the rest of the matrix.
    """
    instance = instance_from_dict(task["data"])
    ws = prepare(instance)
    rows: list[dict] = []
    errors: list[str] = []
    for cell, run_seed in task["jobs"]:
        try:
            config = RunConfig(
                algorithm=cell["algo"],
                layers=int(cell.get("layers", 5)),
                pareto_points=cell.get("pareto_points"),
                solver=cell.get("solver", "nelder-mead"),
                budget=int(cell.get("budget", 4000)),
                indicator=cell.get("indicator") if cell["algo"] == "qmooc" else None,
                p=float(cell.get("p", 0.0)) if cell["algo"] == "qmooc" else 0.0,
                seed=run_seed,
            )
            record = run(ws, config)
        except CapabilityError:
            raise
        except Exception as exc:
            errors.append(f"{task['kind']} {task['instance_id']} seed {run_seed} "
                          f"({cell['algo']}): {exc}")
            continue
        rows.append({
            "algo": record.algorithm,
            "solver": record.solver,
            "indicator": record.indicator or "",
            "p": _fmt(record.p),
            "kind": task["kind"],
            "n": str(task["n"]),
            "instance_id": task["instance_id"],
            "run_seed": str(run_seed),
            "hv": _fmt(record.hv),
            "oracle_hv": _fmt(record.oracle_hv),
            "rel_hv": _fmt(record.relative_hv),
            **{ind.value: _fmt(record.indicators[ind.value]) for ind in Indicator},
            "evals": str(record.evaluations),
            "wall_ms": _fmt(record.wall_ms),
            "termination": record.termination,
        })
    return rows, errors


def run_matrix(matrix: dict, out_csv: str | Path, jobs: int = 1) -> tuple[int, int]:
    """Execute every (instance x cell x seed) combination not yet in out_csv.

    Returns (rows written, cells failed). Rows are flushed as they complete;
    content (not row order under jobs > 1) is deterministic for fixed seeds.
    """
    out = _out_path(out_csv)
    out.parent.mkdir(parents=True, exist_ok=True)
    done: set[tuple] = set()
    if out.exists():
        with out.open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                done.add(_row_key(row))

    cells = _normalize_cells(matrix.get("cells", []))
    payloads = _instance_payloads(matrix)
    seeds = _run_seeds(matrix)

    tasks = []
    for payload in payloads:
        jobs_for_instance = [
            (cell, seed)
            for cell in cells
            for seed in seeds
            if _task_key(cell, payload, seed) not in done
        ]
        if jobs_for_instance:
            tasks.append({**payload, "jobs": jobs_for_instance})

    new_file = not out.exists()
    written = 0
    failed = 0
    with out.open("a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        if new_file:
            writer.writeheader()
            fh.flush()

        def consume(result):
            nonlocal written, failed
            if isinstance(result, Exception):
                failed += 1
                print(f"instance task failed: {result}", file=sys.stderr)
                return
            rows, errors = result
            for message in errors:
                failed += 1
                print(f"run failed: {message}", file=sys.stderr)
            for row in rows:
                writer.writerow(row)
                written += 1
            fh.flush()

        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for result in pool.map(_guarded_execute, tasks):
                    consume(result)
        else:
            for task in tasks:
                consume(_guarded_execute(task))
    return written, failed


def _guarded_execute(task: dict):
    try:
        return _execute_instance(task)
    except CapabilityError:
        raise
    except Exception as exc:  # e.g. a corrupt instance payload
        return exc


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def _load_rows(results_csv: str | Path) -> list[dict]:
    with Path(results_csv).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise UsageError(f"no rows in {results_csv}")
    return rows


def report_boxdata(results_csv: str | Path, out_file: str | Path) -> Path:
    """Per (kind, n, algo, solver): min, q1, median, mean, q3, max of rel_hv."""
    rows = _load_rows(results_csv)
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        key = (row["kind"], row["n"], row["algo"], row["solver"])
        groups.setdefault(key, []).append(float(row["rel_hv"]))
    out = _out_path(out_file)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "n", "algo", "solver", "count",
                         "min", "q1", "median", "mean", "q3", "max"])
        for key in sorted(groups):
            vals = np.asarray(groups[key])
            q = np.quantile(vals, [0.0, 0.25, 0.5, 0.75, 1.0])
            writer.writerow([*key, vals.size, _fmt(q[0]), _fmt(q[1]), _fmt(q[2]),
                             _fmt(float(vals.mean())), _fmt(q[3]), _fmt(q[4])])
    return out


def report_deltadata(results_csv: str | Path, out_file: str | Path) -> Path:
    """Per (indicator, p): mean relative change of hv and of the indicator.

    Every coverage-weighted row is paired with the plain-hypervolume row of
    the same (kind, n, instance, solver, seed); unmatched rows and pairs with
    a zero denominator are reported on stderr and excluded.
    """
    rows = _load_rows(results_csv)
    baselines: dict[tuple, dict] = {}
    for row in rows:
        if row["algo"] == "qmoo":
            key = (row["kind"], row["n"], row["instance_id"], row["solver"],
                   row["run_seed"])
            baselines[key] = row
    accum: dict[tuple, list[tuple[float, float]]] = {}
    skipped = 0
    for row in rows:
        if row["algo"] != "qmooc":
            continue
        key = (row["kind"], row["n"], row["instance_id"], row["solver"],
               row["run_seed"])
        base = baselines.get(key)
        if base is None:
            skipped += 1
            continue
        hv_b, hv_c = float(base["hv"]), float(row["hv"])
        ind = row["indicator"]
        raw_b, raw_c = float(base[ind]), float(row[ind])
        if hv_b == 0 or raw_b == 0 or not np.isfinite(raw_b) or not np.isfinite(raw_c):
            skipped += 1
            continue
        delta1 = (hv_c - hv_b) / hv_b
        delta2 = (raw_c - raw_b) / raw_b
        accum.setdefault((ind, row["p"]), []).append((delta1, delta2))
    if skipped:
        print(f"deltadata: excluded {skipped} unmatched or degenerate pairs",
              file=sys.stderr)
    out = _out_path(out_file)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["indicator", "p", "pairs", "mean_delta1", "mean_delta2"])
        for key in sorted(accum):
            pairs = np.asarray(accum[key])
            writer.writerow([key[0], key[1], pairs.shape[0],
                             _fmt(float(pairs[:, 0].mean())),
                             _fmt(float(pairs[:, 1].mean()))])
    return out


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="qmoolab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate benchmark instance files")
    gen.add_argument("--kind", required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--count", type=int, default=20)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=".")

    oracle = sub.add_parser("oracle", help="compute the exact Pareto front")
    oracle.add_argument("instances", nargs="+")
    oracle.add_argument("--out", default=None)

    runp = sub.add_parser("run", help="execute a run matrix")
    runp.add_argument("instances", nargs="*",
                      help="instance files (alternative to --matrix / --kind)")
    runp.add_argument("--matrix", help="JSON matrix file")
    runp.add_argument("--kind")
    runp.add_argument("--n", type=int)
    runp.add_argument("--count", type=int, default=1)
    runp.add_argument("--seed", type=int, default=0,
                      help="base seed for generated instances")
    runp.add_argument("--algo", choices=("qmoo", "qmooc", "qmoom"), default="qmoo")
    runp.add_argument("--solver", default="nelder-mead")
    runp.add_argument("--indicator", choices=[i.value for i in Indicator])
    runp.add_argument("--p", type=float)
    runp.add_argument("--layers", type=int, default=5)
    runp.add_argument("--pareto-points", type=int, default=None)
    runp.add_argument("--budget", type=int, default=4000)
    runp.add_argument("--seeds", type=int, default=40, help="run seeds per instance")
    runp.add_argument("--jobs", type=int, default=1)
    runp.add_argument("--out", default="results.csv")

    rep = sub.add_parser("report", help="aggregate a results CSV")
    rep.add_argument("results")
    rep.add_argument("--mode", choices=("boxdata", "deltadata"), required=True)
    rep.add_argument("--out", required=True)
    return parser


def _matrix_from_args(args) -> dict:
    if args.matrix:
        return json.loads(Path(args.matrix).read_text(encoding="utf-8"))
    cell = {
        "algo": args.algo,
        "solver": args.solver,
        "budget": args.budget,
        "layers": args.layers,
    }
    if args.pareto_points is not None:
        cell["pareto_points"] = args.pareto_points
    if args.algo == "qmooc":
        cell["indicator"] = args.indicator
        cell["p"] = args.p
    matrix: dict = {"cells": [cell], "run_seeds": args.seeds}
    if args.instances:
        matrix["instances"] = args.instances
    elif args.kind and args.n:
        matrix["problems"] = [{
            "kind": args.kind, "n": args.n, "count": args.count, "seed": args.seed,
        }]
    else:
        raise UsageError("run needs instance files, --matrix, or --kind with --n")
    return matrix


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "gen":
            written = cmd_gen(args.kind, args.n, args.count, args.seed, args.out)
            print(f"wrote {len(written)} instance files")
            return EXIT_OK
        if args.command == "oracle":
            for path in args.instances:
                target = cmd_oracle(path, args.out)
                print(f"wrote {target}")
            return EXIT_OK
        if args.command == "run":
            matrix = _matrix_from_args(args)
            written, failed = run_matrix(matrix, args.out, jobs=args.jobs)
            print(f"wrote {written} rows ({failed} cells failed)")
            return EXIT_PARTIAL if failed else EXIT_OK
        if args.command == "report":
            if args.mode == "boxdata":
                target = report_boxdata(args.results, args.out)
            else:
                target = report_deltadata(args.results, args.out)
            print(f"wrote {target}")
            return EXIT_OK
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY


if __name__ == "__main__":
    sys.exit(main())
