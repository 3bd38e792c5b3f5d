"""Command-line front end.

Each subcommand reads one JSON config (``--config``), merges flag
overrides, runs, and writes into ``--out``:

* ``report.json``  deterministic result: config echo, seed, version, claim
* ``run_meta.json``  wall-clock time and thread count (varies run to run)
* one CSV per command (fixed columns, see ``CSV_COLUMNS``)

Exit codes: 0 verified, 1 property falsified, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Callable

import numpy as np

from landscape_lab import __version__
from landscape_lab.activations import builtin, check_assumption2
from landscape_lab.approximation import f_k, make_sequence, uniform_distance
from landscape_lab.descent import DescentConfig, global_descent
from landscape_lab.errors import LabError
from landscape_lab.landscape import (
    SURFACES,
    UV_GLOBAL_TOL,
    grid_scan_2d,
    prop3_counterexample,
    uv_demo,
    weakly_global_verdict,
)
from landscape_lab.network import Dataset, NetSpec, Weights, builtin_loss, random_dataset, random_weights
from landscape_lab.rank_certify import DEFAULT_SCALE, Verdict, certify_full_rank_measure
from landscape_lab.seeding import default_seed

EXIT_OK, EXIT_FINDING, EXIT_USAGE = 0, 1, 2

CSV_COLUMNS = {
    "singulars.csv": ("trial", "sigma_min_rel"),
    "path.csv": ("lambda", "loss"),
    "approx.csv": ("k", "sup_gap", "bound", "derivs_nonzero"),
    "heatmap.csv": ("u", "v", "value"),
}

CLAIMS = {
    "certify-rank": "last hidden output has full rank for almost every hidden weight draw",
    "descend": "after a small perturbation a non-increasing path reaches the global infimum",
    "approximate": "f_k = g + (sin + cos)/(s(k+1)) has no vanishing derivative at 0 and converges uniformly",
    "counterexample": "a non-strict bad local minimum exists for a bump activation",
    "scan": "every setwise strict local minimum on the grid is global",
    "uv-demo": "(uv - 1)^2 has no strict local minimum and no bad setwise strict minimum",
}


class ConfigError(Exception):
    pass


# -- config helpers ----------------------------------------------------------


def _get(config: dict, key: str, default: Any = None, *, required: bool = False):
    if key in config:
        return config[key]
    if required:
        raise ConfigError(f"missing config key {key!r}")
    return default


def _activation(config: dict, key: str = "activation"):
    spec = _get(config, key, required=True)
    if isinstance(spec, str):
        spec = {"name": spec}
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError(f"{key!r} must be a name or {{'name': ..., 'params': {{...}}}}")
    return builtin(spec["name"], spec.get("params", {}))


def _dims(config: dict) -> list[int]:
    dims = _get(config, "dims", required=True)
    if not isinstance(dims, list) or not all(isinstance(d, int) for d in dims):
        raise ConfigError("'dims' must be a list of integers")
    return dims


def _dataset(config: dict, dims: list[int], seed: int) -> Dataset:
    ds = _get(config, "dataset", {})
    if "X" in ds:
        X = np.asarray(ds["X"], dtype=float)
        Y = np.asarray(ds["Y"], dtype=float) if "Y" in ds else np.zeros((dims[-1], X.shape[1]))
        return Dataset(X, Y)
    n = int(ds.get("n", dims[-2]))
    return random_dataset(dims[0], dims[-1], n, int(ds.get("seed", seed)))


def _net(config: dict) -> NetSpec:
    return NetSpec(tuple(_dims(config)), _activation(config), builtin_loss(_get(config, "loss", "quadratic")))


# -- output helpers ----------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_plain(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _report(command: str, config: dict, seed: int, result: dict, verified: bool) -> dict:
    return {
        "command": command,
        "claim": CLAIMS[command],
        "tool_version": __version__,
        "seed": seed,
        "config": config,
        "verified": verified,
        "result": result,
    }


# -- commands ----------------------------------------------------------------


def cmd_certify_rank(config: dict, seed: int, threads: int):
    spec = _net(config)
    data = _dataset(config, list(spec.dims), seed)
    cert = certify_full_rank_measure(
        spec,
        data,
        trials=int(_get(config, "trials", 1000)),
        seed=seed,
        rel_tol=_get(config, "rel_tol"),
        scale=float(_get(config, "scale", DEFAULT_SCALE)),
        workers=threads,
    )
    ok = cert.verdict is Verdict.CERTIFIED_FULL_RANK_AE
    csvs = {"singulars.csv": list(enumerate(cert.smallest_singular))}
    return cert.summary(), ok, csvs


def cmd_descend(config: dict, seed: int, threads: int):
    spec = _net(config)
    data = _dataset(config, list(spec.dims), seed)
    w0_cfg = _get(config, "w0", {})
    if isinstance(w0_cfg, list):
        w0 = Weights(tuple(np.asarray(m, dtype=float) for m in w0_cfg))
    else:
        w0 = random_weights(spec, int(w0_cfg.get("seed", seed)), float(w0_cfg.get("scale", DEFAULT_SCALE)))
    tol = float(_get(config, "tol", 1e-8))
    cfg = DescentConfig(
        max_tries=int(_get(config, "max_tries", 16)),
        seed=seed,
        rel_tol=_get(config, "rel_tol"),
        tol=tol,
        samples=int(_get(config, "samples", 1000)),
    )
    trace = global_descent(spec, data, w0, float(_get(config, "delta", 1e-2)), cfg)
    ok = trace.status == "ok" and trace.monotone and trace.reached(data.Y, tol)
    result = trace.to_dict()
    result["reached_infimum"] = trace.reached(data.Y, tol)
    return result, ok, {"path.csv": list(trace.path)}


def cmd_approximate(config: dict, seed: int, threads: int):
    base = _activation(config, "base")
    order = int(_get(config, "order", 6))
    seq = make_sequence(base, order, _get(config, "s"))
    ks = list(_get(config, "ks", list(range(10))))
    g = _get(config, "grid", {})
    grid = np.linspace(float(g.get("lo", -10.0)), float(g.get("hi", 10.0)), int(g.get("points", 2001)))
    slack = float(_get(config, "tol", 1e-12))
    base_check = check_assumption2(base, order)
    rows = []
    for k in ks:
        fk = f_k(seq, k)
        rows.append((k, uniform_distance(fk, base, grid), seq.bound(k), check_assumption2(fk, order).ok))
    ok = all(gap <= bound + slack for _, gap, bound, _ in rows)
    result = {
        "base": base.name,
        "base_params": dict(base.params),
        "order": order,
        "s": seq.s,
        "base_derivs_nonzero": base_check.ok,
        "base_failing_order": base_check.failing_order,
        "rows": [{"k": k, "sup_gap": gap, "bound": b, "derivs_nonzero": a} for k, gap, b, a in rows],
    }
    return result, ok, {"approx.csv": rows}


def cmd_counterexample(config: dict, seed: int, threads: int):
    spec, star, record = prop3_counterexample(
        int(_get(config, "d", 4)),
        float(_get(config, "x", 1.0)),
        float(_get(config, "y", 1.0)),
        radius=float(_get(config, "radius", 0.05)),
        samples=int(_get(config, "samples", 100_000)),
        seed=seed,
    )
    result = {"dims": list(spec.dims), "activation": spec.activation.name,
              "activation_params": dict(spec.activation.params),
              "w_star": star.to_lists(), **record.to_dict()}
    return result, record.all_ok, {}


def _heatmap_rows(report):
    au, av = report.axes
    for i, u in enumerate(au):
        for j, v in enumerate(av):
            yield float(u), float(v), float(report.values[i, j])


def cmd_scan(config: dict, seed: int, threads: int):
    name = _get(config, "function", required=True)
    if name not in SURFACES:
        raise ConfigError(f"unknown function {name!r}; expected one of {sorted(SURFACES)}")
    box = _get(config, "box", [[-3.0, 3.0], [-3.0, 3.0]])
    report = grid_scan_2d(
        SURFACES[name],
        (tuple(box[0]), tuple(box[1])),
        int(_get(config, "resolution", 201)),
        float(_get(config, "value_tol", 1e-9)),
        float(_get(config, "strict_margin", 1e-9)),
        _get(config, "global_tol"),
    )
    tol = float(_get(config, "tol", report.global_tol))
    report.weakly_global = weakly_global_verdict(report, tol)
    result = {"function": name, "verdict_tol": tol, **report.to_dict()}
    return result, report.weakly_global, {"heatmap.csv": _heatmap_rows(report)}


def cmd_uv_demo(config: dict, seed: int, threads: int):
    report = uv_demo(int(_get(config, "resolution", 401)))
    i, j = report.cell_of(0.0, 0.0)
    result = {
        "function": "uv",
        "verdict_tol": UV_GLOBAL_TOL,
        "origin_is_local_min_cell": bool(report.local_min[i, j]),
        **report.to_dict(),
    }
    ok = report.weakly_global and not report.strict_bad_components() and not result["origin_is_local_min_cell"]
    return result, ok, {"heatmap.csv": _heatmap_rows(report)}


COMMANDS: dict[str, Callable] = {
    "certify-rank": cmd_certify_rank,
    "descend": cmd_descend,
    "approximate": cmd_approximate,
    "counterexample": cmd_counterexample,
    "scan": cmd_scan,
    "uv-demo": cmd_uv_demo,
}

# flag -> config key per command
_TOL_KEY = {"certify-rank": "rel_tol", "descend": "tol", "approximate": "tol",
            "counterexample": "tol", "scan": "tol", "uv-demo": None}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="landscape-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=CLAIMS[name])
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--seed", type=int, help="overrides config seed and $LANDSCAPE_LAB_SEED")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--trials", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--threads", type=int, default=1, help="worker cap")
        p.add_argument("--quiet", action="store_true")
    return parser


def run(command: str, config: dict, seed: int, out: Path, threads: int = 1) -> tuple[int, dict]:
    """Run one command and write its outputs; returns (exit code, report)."""
    start = time.perf_counter()
    result, ok, csvs = COMMANDS[command](config, seed, threads)
    report = _report(command, config, seed, result, bool(ok))
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps_report(report), encoding="utf-8")
    for fname, rows in csvs.items():
        write_csv(out / fname, CSV_COLUMNS[fname], rows)
    meta = {"wall_clock_s": time.perf_counter() - start, "threads": threads, "command": command}
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return (EXIT_OK if ok else EXIT_FINDING), report


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    def fail(msg: str) -> int:
        print(f"landscape-lab {args.command}: {msg}", file=sys.stderr)
        return EXIT_USAGE

    try:
        config = json.loads(args.config.read_text(encoding="utf-8")) if args.config else {}
        if not isinstance(config, dict):
            raise ConfigError("config must be a JSON object")
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        return fail(f"cannot read config: {exc}")

    seed = args.seed if args.seed is not None else int(config.get("seed", default_seed()))
    config = {**config, "seed": seed}
    if args.trials is not None:
        key = "samples" if args.command == "counterexample" else "trials"
        config[key] = args.trials
    if args.tol is not None and _TOL_KEY[args.command]:
        config[_TOL_KEY[args.command]] = args.tol

    try:
        code, report = run(args.command, config, seed, args.out, max(1, args.threads))
    except (ConfigError, LabError, KeyError, TypeError, ValueError) as exc:
        return fail(str(exc))
    if not args.quiet:
        status = "verified" if code == EXIT_OK else "FALSIFIED"
        print(f"{args.command}: {status} -> {args.out / 'report.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
