"""The diolab command line: experiment orchestration and result persistence.

Every run resolves its configuration, hashes it, and stamps the hash plus
version and seed into each output file; outputs are written atomically
(temp file + rename).  Exit codes: 0 ok, 1 error, 2 inconclusive verdict.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._jit import set_threads
from .checks import run_check_suite
from .dimfun import format_dimension_function, parse_dimension_function
from .estimators import (
    SAMPLING_EXACT,
    box_count,
    generation_set,
    mc_measure,
    zero_one_probe,
)
from .geometry import hit_list
from .problems import (
    LinearFormsProblem,
    SquaresProblem,
    load_problem,
    parse_problem,
    problem_to_dict,
)
from .series import (
    INCONCLUSIVE,
    classify,
    cor1_sum,
    critical_exponent_analytic,
    critical_exponent_numeric,
    hausdorff_sum,
    schmidt_sum,
    squares_sum,
)
from .slicing import slice_to_hausdorff_pipeline

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2


HASH_EXCLUDED = {"out", "base_dir", "format", "threads"}  # do not affect the numbers


def config_hash(config: dict) -> str:
    payload = {k: v for k, v in config.items() if k not in HASH_EXCLUDED}
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header_meta: dict, columns: list, rows) -> None:
    lines = [f"# {k}: {v}" for k, v in header_meta.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, header_meta: dict, payload: dict) -> None:
    _atomic_write(path, json.dumps({"meta": header_meta, **payload}, indent=1,
                                   default=str) + "\n")


def write_manifest(out_path, config: dict, started: float, summary: dict) -> None:
    manifest = {
        "config_hash": config_hash(config),
        "version": __version__,
        "wall_time_s": round(time.time() - started, 3),
        "threads": config.get("threads") or int(os.environ.get("DIOLAB_THREADS", "0")) or None,
        "summary": summary,
    }
    _atomic_write(Path(str(out_path) + ".manifest.json"), json.dumps(manifest, indent=1) + "\n")


def _meta(config: dict) -> dict:
    return {"config_hash": config_hash(config), "version": __version__,
            "seed": config.get("seed", "")}


def parse_range(text: str) -> range:
    """"4..12" -> range(4, 13)."""
    lo, hi = text.split("..")
    return range(int(lo), int(hi) + 1)


def parse_windows(text: str) -> range:
    if not text.startswith("dyadic:"):
        raise ValueError("window schedules are written dyadic:a..b")
    return parse_range(text[len("dyadic:"):])


# --- tasks ---------------------------------------------------------------------

def task_sum(problem, config: dict) -> tuple:
    criterion = config["criterion"]
    H = int(config["H"])
    if criterion == "squares":
        if not isinstance(problem, SquaresProblem):
            raise ValueError("criterion 'squares' needs a squares problem")
        series = squares_sum(problem, parse_dimension_function(config["f"]), H)
    elif isinstance(problem, SquaresProblem):
        raise ValueError(f"criterion {criterion!r} needs a linear-forms problem")
    elif criterion == "schmidt":
        series = schmidt_sum(problem, H)
    elif criterion == "hausdorff":
        series = hausdorff_sum(problem, parse_dimension_function(config["f"]), H)
    elif criterion == "cor1":
        series = cor1_sum(problem, float(config["s"]), H)
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    verdict = None
    if len(series.heights) >= 8 and series.heights[-1] >= 100 * series.heights[0]:
        verdict = classify(series)
    meta = _meta(config)
    meta["criterion"] = criterion
    if verdict is not None:
        meta["classification"] = verdict.verdict
        if verdict.limit is not None:
            meta["limit_estimate"] = verdict.limit
    if config.get("format") == "json":
        write_json(config["out"], meta, {"H": series.heights.tolist(),
                                         "S_H": series.sums.tolist()})
    else:
        write_csv(config["out"], meta, ["H", "S_H"],
                  zip(series.heights.tolist(), series.sums.tolist()))
    summary = {"criterion": criterion, "H": H, "final_sum": float(series.sums[-1]),
               "classification": verdict.verdict if verdict else None}
    code = EXIT_INCONCLUSIVE if verdict and verdict.verdict == INCONCLUSIVE else EXIT_OK
    return summary, code


def task_exponent(problem, config: dict) -> tuple:
    mode = config.get("mode", "analytic")
    if mode == "analytic":
        result = critical_exponent_analytic(problem)
    else:
        bracket = config.get("bracket")
        if bracket:
            lo, hi = (float(x) for x in str(bracket).split(":"))
        else:
            n, m = problem.n, problem.m
            lo, hi = (n - 1) * m + 0.05 * m, n * m - 0.05 * m
        result = critical_exponent_numeric(problem, (lo, hi),
                                           tol=float(config.get("tol", 0.02)),
                                           H_max=int(config.get("H_max", 1 << 14)))
    payload = {"s_star": result.s_star, "method": result.method,
               "bracket": list(result.bracket), "flags": list(result.flags),
               "diagnostics": result.diagnostics}
    write_json(config["out"], _meta(config), payload)
    code = EXIT_INCONCLUSIVE if INCONCLUSIVE in result.flags else EXIT_OK
    return {"s_star": result.s_star, "mode": mode}, code


def task_measure(problem, config: dict) -> tuple:
    ks = parse_windows(config["windows"])
    report = zero_one_probe(problem, ks, int(config["samples"]), int(config["seed"]),
                            force_per_window=bool(config.get("force_per_window")))
    write_json(config["out"], _meta(config), report.to_dict())
    code = EXIT_INCONCLUSIVE if report.verdict == INCONCLUSIVE else EXIT_OK
    return {"verdict": report.verdict,
            "final_cumulative_fraction": report.cumulative[-1].fraction}, code


def task_boxdim(problem, config: dict) -> tuple:
    K = int(config.get("generations", 3))
    first_k = int(config.get("first_window", 1))
    scales = [2.0 ** -e for e in parse_range(str(config.get("scales", "6..12")))]
    sampling = config.get("sampling", SAMPLING_EXACT)
    gset = generation_set(problem, K, first_k=first_k)
    report = box_count(gset, scales, sampling)
    meta = _meta(config)
    meta["slope"] = report.slope
    meta["windows"] = report.windows
    meta["bias_note"] = report.bias_note
    if config.get("format") == "json":
        write_json(config["out"], meta, report.to_dict())
    else:
        write_csv(config["out"], meta, ["delta", "N"],
                  zip(report.scales, report.counts))
    return {"slope": report.slope, "counts": report.counts}, EXIT_OK


def task_slice(problem, config: dict) -> tuple:
    ks = parse_windows(config.get("windows", "dyadic:1..10"))
    f = parse_dimension_function(config["f"])
    report = slice_to_hausdorff_pipeline(problem, f,
                                         n_slices=int(config.get("slices", 8)),
                                         ks=ks, threads=config.get("threads"))
    write_json(config["out"], _meta(config), report.to_dict())
    return {"f": format_dimension_function(f),
            "slices_reaching_threshold": report.slices_reaching_threshold,
            "slices_stalling": report.slices_stalling}, EXIT_OK


def task_enumerate(problem, config: dict) -> tuple:
    x = [float(v) for v in str(config["x"]).split(",")]
    rows = hit_list(np.asarray(x), problem, int(config["H1"]), int(config["H2"]))
    n = problem.n
    cols = [f"a{i + 1}" for i in range(n)] + ["psi", "max_dist"]
    write_csv(config["out"], _meta(config), cols,
              [tuple(a) + (psi, dist) for a, psi, dist in rows])
    return {"hits": len(rows)}, EXIT_OK


def task_check(problem, config: dict) -> tuple:
    report = run_check_suite(config["preset"])
    if config.get("out"):
        write_json(config["out"], _meta(config), report)
    code = EXIT_OK if report["passed"] else EXIT_ERROR
    return {"preset": config["preset"], "passed": report["passed"]}, code


TASKS = {
    "sum": task_sum,
    "exponent": task_exponent,
    "measure": task_measure,
    "boxdim": task_boxdim,
    "slice": task_slice,
    "enumerate": task_enumerate,
    "check": task_check,
}


def run(config: dict) -> int:
    """Dispatch one resolved experiment config; returns the exit code."""
    started = time.time()
    task = config["task"]
    threads = config.get("threads") or os.environ.get("DIOLAB_THREADS")
    if threads:
        set_threads(int(threads))
        config["threads"] = int(threads)
    problem = None
    if "problem" in config and config["problem"]:
        spec = config["problem"]
        if isinstance(spec, dict):
            problem = parse_problem(spec, base_dir=config.get("base_dir"))
        else:
            problem = load_problem(spec)
        config = {**config, "problem": problem_to_dict(problem)}
    summary, code = TASKS[task](problem, config)
    if config.get("out"):
        write_manifest(config["out"], config, started, summary)
    print(json.dumps({"task": task, "exit": code, **summary}, default=str))
    return code


def load_config(path) -> dict:
    path = Path(path)
    try:
        import tomllib
    except ImportError:
        import tomli as tomllib
    raw = tomllib.loads(path.read_text())
    config = {k: v for k, v in raw.items() if k not in ("params", "output")}
    config.update(raw.get("params", {}))
    out = raw.get("output", {})
    if "path" in out:
        config["out"] = out["path"]
    config["base_dir"] = path.parent
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diolab",
                                     description="desk-scale limsup-set experiments")
    parser.add_argument("--version", action="version", version=f"diolab {__version__}")
    sub = parser.add_subparsers(dest="task", required=True)

    def common(p, problem=True):
        if problem:
            p.add_argument("--problem", required=True, help="problem TOML/JSON path")
        p.add_argument("--out", required=False, help="output file")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--format", choices=["csv", "json"], default=None)

    p = sub.add_parser("sum", help="criterion partial sums")
    common(p)
    p.add_argument("--criterion", required=True,
                   choices=["schmidt", "hausdorff", "squares", "cor1"])
    p.add_argument("--f", help='dimension function, e.g. "r^1.75"')
    p.add_argument("--s", type=float, help="exponent for cor1")
    p.add_argument("--H", type=int, required=True)

    p = sub.add_parser("exponent", help="critical exponent solvers")
    common(p)
    p.add_argument("--mode", choices=["analytic", "numeric"], default="analytic")
    p.add_argument("--bracket", help="lo:hi")
    p.add_argument("--tol", type=float, default=0.02)
    p.add_argument("--H-max", dest="H_max", type=int, default=1 << 14)

    p = sub.add_parser("measure", help="Monte Carlo zero-one probe")
    common(p)
    p.add_argument("--windows", default="dyadic:4..12")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--force-per-window", action="store_true")

    p = sub.add_parser("boxdim", help="box-counting dimension estimate")
    common(p)
    p.add_argument("--generations", type=int, default=3)
    p.add_argument("--first-window", dest="first_window", type=int, default=1)
    p.add_argument("--scales", default="6..12")
    p.add_argument("--sampling", default=SAMPLING_EXACT)

    p = sub.add_parser("slice", help="slicing pipeline")
    common(p)
    p.add_argument("--f", required=True)
    p.add_argument("--slices", type=int, default=8)
    p.add_argument("--windows", default="dyadic:1..10")
    p.add_argument("--seed", type=int, default=7)

    p = sub.add_parser("enumerate", help="finite-window hit list")
    common(p)
    p.add_argument("--x", required=True, help="comma-separated point coordinates")
    p.add_argument("--H1", type=int, default=1)
    p.add_argument("--H2", type=int, required=True)

    p = sub.add_parser("check", help="named invariant bundles")
    common(p, problem=False)
    p.add_argument("--preset", required=True)

    p = sub.add_parser("run", help="run a full experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.task == "run":
            config = load_config(args.config)
            if args.threads:
                config["threads"] = args.threads
            return run(config)
        config = {k: v for k, v in vars(args).items() if v is not None}
        return run(config)
    except (ValueError, OSError, KeyError) as exc:
        print(f"diolab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
