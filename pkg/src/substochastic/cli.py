"""Batch command line: load a model file, run analyses, write reports/CSV.

Exit codes for ``verdict``: 0 honest, 10 dishonest, 20 undetermined,
1 error.  All outputs are deterministic functions of the configuration;
no timestamps are embedded.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from .honesty import (
    DISHONEST,
    HONEST,
    VerdictPolicy,
    delta_by_routes,
    honesty_verdict,
)
from .l1 import PosSeq
from .minimal import EvolveParams
from .models import ModelError, load_model
from .montecarlo import CSV_HEADER, simulate

__all__ = ["main", "parse_t_grid", "RunConfig"]


@dataclass(frozen=True)
class RunConfig:
    """Validated batch-run configuration."""

    command: str
    model_path: str
    lam: float
    tol: float
    t_grid: tuple[float, ...]
    paths: int
    seed: int
    initial: int
    out: str | None

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError("lambda must be > 0")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if self.initial < 0:
            raise ValueError("initial state must be >= 0")
        if list(self.t_grid) != sorted(set(self.t_grid)) or any(t < 0 for t in self.t_grid):
            raise ValueError("t grid must be strictly increasing and nonnegative")


def parse_t_grid(spec: str) -> tuple[float, ...]:
    """Grid syntax: 'a:b:step' (inclusive of both ends), a comma list, or a
    single value."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad t-grid {spec!r}: want a:b:step")
        a, b, step = (float(x) for x in parts)
        if step <= 0 or b < a:
            raise ValueError(f"bad t-grid {spec!r}: want a <= b and step > 0")
        out = []
        k = 0
        while True:
            t = a + k * step
            if t > b + 1e-12 * max(1.0, abs(b)):
                break
            out.append(min(t, b))
            k += 1
        if out and abs(out[-1] - b) > 1e-12 * max(1.0, abs(b)):
            out.append(b)
        return tuple(out)
    if "," in spec:
        vals = tuple(float(x) for x in spec.split(",") if x.strip())
    else:
        vals = (float(spec),)
    if any(t < 0 for t in vals) or list(vals) != sorted(set(vals)):
        raise ValueError(f"bad t-grid {spec!r}: want strictly increasing, nonnegative")
    return vals


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="substochastic",
        description="honesty analysis of perturbed substochastic semigroups on l1",
    )
    p.add_argument("command", choices=["verdict", "trajectory", "compare", "simulate"])
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="resolvent parameter")
    p.add_argument("--tol", type=float, default=1e-8, help="working tolerance")
    p.add_argument("--t-grid", default="1.0", help="time grid a:b:step (inclusive) or comma list")
    p.add_argument("--paths", type=int, default=100_000, help="Monte Carlo path count")
    p.add_argument("--seed", type=int, default=12345, help="Monte Carlo seed (nonzero)")
    p.add_argument("--initial", type=int, default=0, help="initial basis state index")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    return p


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _cmd_verdict(cfg: RunConfig, model) -> int:
    u = PosSeq.basis(cfg.initial)
    policy = VerdictPolicy(verdict_tol=max(cfg.tol, 1e-12), xi_tol=max(cfg.tol * 0.5, 1e-12))
    report = honesty_verdict(model, u, cfg.lam, policy)
    doc = report.to_json()
    doc["config"] = {
        "model": model.name,
        "initial": cfg.initial,
        "lambda": cfg.lam,
        "tol": cfg.tol,
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True), cfg.out)
    if report.verdict == HONEST:
        return 0
    if report.verdict == DISHONEST:
        return 10
    return 20


def _cmd_trajectory(cfg: RunConfig, model) -> int:
    u = PosSeq.basis(cfg.initial)
    u_norm = u.head_sum()
    lines = ["t,mass_lo,mass_hi,abar,ahat,delta_lo,delta_hi"]
    for t in cfg.t_grid:
        res, dp = delta_by_routes(
            model, t, u, cfg.lam, params=EvolveParams(tol=cfg.tol), tol=cfg.tol
        )
        mass_lo = u_norm - res.a0.hi
        mass_hi = u_norm - res.a0.lo
        lines.append(
            f"{t!r},{mass_lo!r},{mass_hi!r},{res.functional.mid!r},"
            f"{dp.functional.mid!r},{dp.bracket.lo!r},{dp.bracket.hi!r}"
        )
    _emit("\n".join(lines), cfg.out)
    return 0


def _cmd_compare(cfg: RunConfig, model) -> int:
    u = PosSeq.basis(cfg.initial)
    rows = []
    worst = 0.0
    for t in cfg.t_grid:
        res, dp = delta_by_routes(
            model, t, u, cfg.lam, params=EvolveParams(tol=cfg.tol), tol=cfg.tol
        )
        disc = abs(res.bracket.mid - dp.bracket.mid)
        worst = max(worst, disc)
        rows.append(
            {
                "t": t,
                "delta_resolvent": {"lo": res.bracket.lo, "hi": res.bracket.hi},
                "delta_dyson_phillips": {"lo": dp.bracket.lo, "hi": dp.bracket.hi},
                "discrepancy": disc,
            }
        )
    tol = max(cfg.tol, 1e-6)
    doc = {
        "model": model.name,
        "lambda": cfg.lam,
        "tolerance": tol,
        "max_discrepancy": worst,
        "pass": worst <= tol,
        "rows": rows,
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True), cfg.out)
    return 0


def _cmd_simulate(cfg: RunConfig, model) -> int:
    u = PosSeq.basis(cfg.initial)
    lines = [CSV_HEADER]
    for t in cfg.t_grid:
        r = simulate(model, u, t, cfg.paths, cfg.seed)
        lines.append(
            f"{r.t!r},{r.survival!r},{r.survival_ci!r},{r.exploded!r},"
            f"{r.exploded_ci!r},{r.killed!r},{r.killed_ci!r}"
        )
    _emit("\n".join(lines), cfg.out)
    return 0


_COMMANDS = {
    "verdict": _cmd_verdict,
    "trajectory": _cmd_trajectory,
    "compare": _cmd_compare,
    "simulate": _cmd_simulate,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        cfg = RunConfig(
            command=args.command,
            model_path=args.model,
            lam=args.lam,
            tol=args.tol,
            t_grid=parse_t_grid(args.t_grid),
            paths=args.paths,
            seed=args.seed,
            initial=args.initial,
            out=args.out,
        )
        model = load_model(cfg.model_path)
        return _COMMANDS[cfg.command](cfg, model)
    except (ModelError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
