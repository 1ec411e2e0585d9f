"""Jump-process Monte Carlo oracle.

Simulates the pure-jump process whose forward equation is u' = (A + B)u:
hold at state k for an Exponential(a_k) time, then jump to a column target
with probability rate/a_k or die with the deficit probability.  Surviving
mass at time t estimates |V(t)u|; paths that run away to infinity in finite
time estimate the explosion defect 1 - |V(t)u| of conservative models.

Explosion is declared only under a certified criterion on the remaining
holding-time budget: with the whole upward tail ahead, the leftover time
sum has mean at most M1 = sum 1/a and variance at most M2 = sum 1/a^2, so
remaining > M1 * 1000 (budget rule) or remaining > M1 + bernstein_margin
(concentration rule, mislabel probability < 1e-12) both certify the label.
Models whose reciprocal rate sum diverges cannot explode; their paths
always resolve or hit the safety cap as a loud warning.

Randomness is counter-based (Philox) with one substream per fixed-size
chunk of paths, keyed by (seed, chunk index); estimates are integer counts,
so results are bitwise reproducible and independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .l1 import PosSeq
from .models import ModelSpec

__all__ = [
    "PathOutcome",
    "SimEstimates",
    "simulate",
    "simulate_path",
    "explosion_cdf",
    "write_estimates_csv",
    "CSV_HEADER",
]

CHUNK = 1024  # paths per Philox substream; part of the pinned algorithm
STATE_CAP = 1 << 21
BERNSTEIN_LOG = 30.0  # ln(1/mislabel) budget for the concentration rule

CSV_HEADER = "t,survival,survival_ci,exploded,exploded_ci,killed,killed_ci"


@dataclass(frozen=True)
class PathOutcome:
    status: str  # "alive" | "killed" | "exploded" | "aborted"
    state: int | None
    time_of_absorption: float | None
    jumps: int


@dataclass(frozen=True)
class SimEstimates:
    t: float
    n_paths: int
    seed: int
    survival: float
    survival_ci: float
    exploded: float
    exploded_ci: float
    killed: float
    killed_ci: float
    aborted: int

    @property
    def counts_sum_to_one(self) -> bool:
        total = round((self.survival + self.exploded + self.killed) * self.n_paths)
        return total + self.aborted == self.n_paths


def _ci(p: float, n: int) -> float:
    return 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / n)


def _explosion_thresholds(m: ModelSpec, frontier: int) -> tuple[float, float]:
    """(budget_threshold, concentration_threshold) on the remaining time;
    +inf when the model cannot explode past this frontier."""
    m1 = m.a.reciprocal_tail_bound(frontier)
    if math.isinf(m1):
        return math.inf, math.inf
    m2 = m.a.reciprocal_tail_bound(frontier, power=2.0)
    bmax = 1.0 / m.a(frontier)
    margin = 2.0 * bmax * BERNSTEIN_LOG + math.sqrt(2.0 * m2 * BERNSTEIN_LOG)
    return m1 * 1.0e3, m1 + margin


def simulate_path(m: ModelSpec, k0: int, t: float, rng: np.random.Generator, jump_cap: int = 10_000) -> PathOutcome:
    """Scalar reference simulation of a single path (used for validation)."""
    state = k0
    tau = 0.0
    jumps = 0
    while True:
        a_s = m.a(state)
        tau += rng.exponential(1.0 / a_s)
        if tau > t:
            return PathOutcome("alive", state, None, jumps)
        col = m.column(state)
        u = rng.random() * a_s
        acc = 0.0
        target = None
        for j, r in col:
            acc += r
            if u < acc:
                target = j
                break
        if target is None:
            return PathOutcome("killed", None, tau, jumps)
        state = target
        jumps += 1
        if jumps % jump_cap == 0:
            rem = t - tau
            budget, conc = _explosion_thresholds(m, state)
            if rem > budget or rem > conc:
                return PathOutcome("exploded", None, tau, jumps)
            if state >= STATE_CAP:
                return PathOutcome("aborted", state, None, jumps)


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, chunk_index]))


def _sample_initial(initial: PosSeq, n: int, rng: np.random.Generator) -> np.ndarray:
    keys = sorted(initial.entries)
    probs = np.array([initial.entries[k] for k in keys])
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    picks = np.searchsorted(cdf, rng.random(n), side="right")
    return np.asarray(keys, dtype=np.int64)[np.minimum(picks, len(keys) - 1)]


def _run_pure_birth_chunk(m: ModelSpec, states0: np.ndarray, t: float, rng: np.random.Generator):
    """Upward-cascade fast path: a path from k is a running sum of
    independent Exponential(a_k), Exponential(a_{k+1}), ... holding times."""
    n = states0.size
    alive = 0
    exploded = 0
    aborted = 0
    for k0 in np.unique(states0):
        idx = np.nonzero(states0 == k0)[0]
        tau = np.zeros(idx.size)
        frontier = int(k0)
        block = 256
        active = np.ones(idx.size, dtype=bool)
        while active.any():
            hi = min(frontier + block, STATE_CAP)
            if hi <= frontier:
                aborted += int(active.sum())
                break
            rates = m.a.array(frontier, hi)
            draws = rng.standard_exponential((int(active.sum()), hi - frontier)) / rates
            cum = tau[active, None] + np.cumsum(draws, axis=1)
            resolved = cum[:, -1] > t
            alive += int(resolved.sum())
            # paths not yet past t continue from the block end
            new_tau = cum[~resolved, -1]
            act_idx = np.nonzero(active)[0]
            still = act_idx[~resolved]
            tau[still] = new_tau
            active[:] = False
            active[still] = True
            frontier = hi
            block = min(2 * block, 1 << 16)
            if active.any():
                rem = t - tau[active]
                budget, conc = _explosion_thresholds(m, frontier)
                boom = (rem > budget) | (rem > conc)
                exploded += int(boom.sum())
                keep = np.nonzero(active)[0][~boom]
                active[:] = False
                active[keep] = True
    return alive, exploded, 0, aborted


def _run_stepper_chunk(m: ModelSpec, states0: np.ndarray, t: float, rng: np.random.Generator):
    """General bounded-kernel path engine (nearest-neighbour or table)."""
    n = states0.size
    states = states0.astype(np.int64).copy()
    tau = np.zeros(n)
    active = np.ones(n, dtype=bool)
    alive = killed = aborted = 0
    kind = m.kernel.kind
    # per-state tables up to a working cap, grown on demand
    table_cap = int(max(states.max(initial=0) + 2, 64))

    def build_tables(limit: int):
        a_vec = m.a.array(0, limit)
        if kind == "birth_death":
            b = np.array([m.kernel.birth(k) for k in range(limit)])
            d = np.array([(m.kernel.death(k) if k > 0 else 0.0) for k in range(limit)])
            return a_vec, b / a_vec, d / a_vec, None
        cols = [m.column(k) for k in range(limit)]
        return a_vec, None, None, cols

    a_vec, pb, pd, cols = build_tables(table_cap)
    steps = 0
    while active.any():
        steps += 1
        if steps > 1_000_000:
            aborted += int(active.sum())
            break
        idx = np.nonzero(active)[0]
        s = states[idx]
        if int(s.max(initial=0)) + 2 > table_cap:
            table_cap = int(max(2 * table_cap, s.max() + 2))
            a_vec, pb, pd, cols = build_tables(table_cap)
        a_s = a_vec[s]
        tau[idx] += rng.standard_exponential(idx.size) / a_s
        done = tau[idx] > t
        alive += int(done.sum())
        jump_idx = idx[~done]
        active[idx[done]] = False
        if jump_idx.size == 0:
            continue
        u = rng.random(jump_idx.size)
        s = states[jump_idx]
        if kind == "birth_death":
            up = u < pb[s]
            down = (~up) & (u < pb[s] + pd[s])
            die = ~(up | down)
            states[jump_idx[up]] += 1
            states[jump_idx[down]] -= 1
            killed += int(die.sum())
            active[jump_idx[die]] = False
        else:
            for st in np.unique(s):
                sel = jump_idx[s == st]
                usel = u[s == st]
                col = cols[st]
                if not col:
                    killed += sel.size
                    active[sel] = False
                    continue
                targets = np.array([j for j, _ in col], dtype=np.int64)
                cum = np.cumsum([r for _, r in col]) / a_vec[st]
                pick = np.searchsorted(cum, usel, side="right")
                die = pick >= targets.size
                killed += int(die.sum())
                active[sel[die]] = False
                ok = ~die
                states[sel[ok]] = targets[pick[ok]]
    return alive, 0, killed, aborted


def simulate(
    m: ModelSpec,
    initial: PosSeq,
    t: float,
    n_paths: int,
    seed: int,
) -> SimEstimates:
    """Monte Carlo estimates of survival / explosion / killed mass at time t.

    The three outcome frequencies sum to one exactly (they are counts); the
    confidence intervals are 1.96 binomial standard errors.
    """
    if seed == 0:
        raise ValueError("seed 0 is reserved; pick a nonzero seed")
    if seed < 0:
        raise ValueError("seed must be a positive integer")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if t < 0:
        raise ValueError("t must be >= 0")
    if initial.tail_bound != 0.0 or abs(initial.head_sum() - 1.0) > 1e-9:
        raise ValueError("initial distribution must be finitely supported with mass 1")
    if m.kernel.kind == "pure_birth" and m.conservative:
        runner = _run_pure_birth_chunk
    else:
        runner = _run_stepper_chunk
    alive = exploded = killed = aborted = 0
    start = 0
    chunk_index = 0
    while start < n_paths:
        size = min(CHUNK, n_paths - start)
        rng = _chunk_rng(seed, chunk_index)
        states0 = _sample_initial(initial, size, rng)
        a, e, k, ab = runner(m, states0, t, rng)
        alive += a
        exploded += e
        killed += k
        aborted += ab
        start += size
        chunk_index += 1
    n = n_paths
    ps, pe, pk = alive / n, exploded / n, killed / n
    return SimEstimates(
        t=t,
        n_paths=n,
        seed=seed,
        survival=ps,
        survival_ci=_ci(ps, n),
        exploded=pe,
        exploded_ci=_ci(pe, n),
        killed=pk,
        killed_ci=_ci(pk, n),
        aborted=aborted,
    )


def explosion_cdf(
    m: ModelSpec, i: int, t_grid: tuple[float, ...] | list[float], n_paths: int, seed: int
) -> tuple[SimEstimates, ...]:
    """Explosion probability estimates over a time grid (common streams, so
    the estimates are pathwise nondecreasing for upward cascades)."""
    return tuple(simulate(m, PosSeq.basis(i), t, n_paths, seed) for t in t_grid)


def write_estimates_csv(path: str, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(
                f"{r.t!r},{r.survival!r},{r.survival_ci!r},{r.exploded!r},"
                f"{r.exploded_ci!r},{r.killed!r},{r.killed_ci!r}\n"
            )
