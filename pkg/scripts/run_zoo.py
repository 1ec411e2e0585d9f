#!/usr/bin/env python3
"""Run the full analysis battery over the model zoo and drop artifacts.

For every zoo model this writes, under --outdir:
  <name>.model.json      the model file (re-loadable by the CLI)
  <name>.verdict.json    honesty report with evidence
  <name>.trajectory.csv  mass/functional/delta columns over the time grid
  <name>.compare.json    resolvent-route vs expansion-route deltas
  <name>.sim.csv         Monte Carlo survival/explosion/killed estimates

Everything is deterministic given the seed; rerunning overwrites in place.
"""

import argparse
import json
import os
import sys

from substochastic.cli import main as cli_main
from substochastic.models import dump_model
from substochastic.zoo import zoo_models


def run(outdir: str, seed: int, paths: int, grid: str) -> int:
    os.makedirs(outdir, exist_ok=True)
    failures = 0
    for m in zoo_models():
        base = os.path.join(outdir, m.name)
        model_path = base + ".model.json"
        dump_model(m, model_path)
        jobs = [
            (["verdict", "--model", model_path, "--out", base + ".verdict.json"], (0, 10, 20)),
            (
                ["trajectory", "--model", model_path, "--t-grid", grid, "--out", base + ".trajectory.csv"],
                (0,),
            ),
            (
                ["compare", "--model", model_path, "--t-grid", grid, "--out", base + ".compare.json"],
                (0,),
            ),
            (
                [
                    "simulate",
                    "--model",
                    model_path,
                    "--t-grid",
                    grid,
                    "--paths",
                    str(paths),
                    "--seed",
                    str(seed),
                    "--out",
                    base + ".sim.csv",
                ],
                (0,),
            ),
        ]
        for argv, ok_codes in jobs:
            rc = cli_main(argv)
            status = "ok" if rc in ok_codes else "FAILED"
            if status == "FAILED":
                failures += 1
            print(f"{m.name:>16} {argv[0]:<10} rc={rc} {status}")
        with open(base + ".verdict.json", encoding="utf-8") as fh:
            verdict = json.load(fh)["verdict"]
        print(f"{m.name:>16} verdict    -> {verdict}")
    return 1 if failures else 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="out")
    ap.add_argument("--seed", type=int, default=12345)
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--t-grid", default="0.25,0.5,1.0")
    args = ap.parse_args()
    sys.exit(run(args.outdir, args.seed, args.paths, args.t_grid))
