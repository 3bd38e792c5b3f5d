"""Run every shipped config through the CLI and tabulate exit codes.

    python3 scripts/run_experiments.py --out out/experiments --threads 4
"""

import argparse
from pathlib import Path

from landscape_lab.cli import main

ROOT = Path(__file__).resolve().parents[1]

# config file -> subcommand
PLAN = {
    "certify_exp.json": "certify-rank",
    "certify_relu_adversarial.json": "certify-rank",
    "descend_quadratic.json": "descend",
    "descend_relu_failure.json": "descend",
    "approximate_exp.json": "approximate",
    "approximate_sigmoid.json": "approximate",
    "counterexample.json": "counterexample",
    "scan_double_well.json": "scan",
    "scan_uv.json": "scan",
}


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=ROOT / "out" / "experiments")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int)
    return p.parse_args()


if __name__ == "__main__":
    args = parse_args()
    rows = []
    for config, command in PLAN.items():
        out = args.out / config.removesuffix(".json")
        argv = [command, "--config", str(ROOT / "configs" / config), "--out", str(out),
                "--threads", str(args.threads), "--quiet"]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        rows.append((config, command, main(argv)))
    out = args.out / "uv_demo"
    rows.append(("(none)", "uv-demo", main(["uv-demo", "--out", str(out), "--quiet"])))

    width = max(len(r[0]) for r in rows)
    for config, command, code in rows:
        print(f"{config:<{width}}  {command:<15} exit {code}")
