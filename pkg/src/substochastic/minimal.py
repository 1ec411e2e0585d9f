"""Construction of the minimal substochastic semigroup.

Two constructive routes are provided for the semigroup generated by the
closure-extension of A + B:

* the resolvent series ``(lam - G)^{-1} u = sum_n (lam - A)^{-1} J^n u``
  with ``J = B (lam - A)^{-1}``, whose partial sums increase to the limit
  and whose remainder is certified by the telescoping identity
  ``lam * |(lam-A)^{-1} w| = |w| - |J w| - <deficit, (lam-A)^{-1} w>``;

* the evolution ``V(t) u`` on an N-state truncation, evaluated by
  uniformization (Poisson-weighted powers of ``I + Q/c``), which preserves
  positivity and substochasticity term by term.  Dropped columns beyond the
  truncation are counted as kill, so every truncated value is an entrywise
  lower bound of the true one and the ladder of truncations increases
  monotonically.

The same Poisson pass also yields ``int_0^t V(s) u ds`` exactly (the time
integral of the Poisson weights has a closed form), which downstream
functionals consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .l1 import Bracket, PosSeq
from .models import ModelSpec

__all__ = [
    "SeriesResult",
    "TruncationLadder",
    "EvolveParams",
    "EvolveResult",
    "resolvent_G",
    "resolvent_Gr",
    "semigroup_V",
    "integrate_V",
    "evolve",
]


@dataclass(frozen=True)
class SeriesResult:
    """Partial sum of a positive series plus a bound on the omitted tail.

    The exact quantity dominates ``value`` entrywise and its mass lies in
    ``[mass(value).lo, mass(value).lo + defect]``.
    """

    value: PosSeq
    defect: float
    terms_used: int
    converged: bool

    @property
    def mass_bracket(self) -> Bracket:
        lo = self.value.head_sum()
        return Bracket(lo, lo + self.defect)


def resolvent_G(
    m: ModelSpec,
    lam: float,
    u: PosSeq,
    tol: float = 1e-8,
    max_terms: int = 50_000,
) -> SeriesResult:
    """Resolvent of the minimal generator applied to ``u`` (cone input).

    Iterates ``w <- J w`` and accumulates ``(lam - A)^{-1} w``.  After K
    terms the omitted mass is at most ``|J^{K+1} u| / lam``; for data with a
    nonzero honesty defect this bound stalls at the defect over lam, which
    is reported rather than hidden.
    """
    if lam <= 0:
        raise ValueError("resolvent_G requires lambda > 0")
    if tol <= 0:
        raise ValueError("resolvent_G requires tol > 0")
    if u.tail_bound != 0.0:
        raise ValueError("resolvent_G requires finitely supported input")
    u_norm = u.head_sum()
    acc: dict[int, float] = {}
    w = u
    terms = 0
    defect = u_norm / lam
    for _ in range(max_terms):
        step = {k: v / (lam + m.a(k)) for k, v in w.entries.items()}
        for k, v in step.items():
            acc[k] = acc.get(k, 0.0) + v
        terms += 1
        w = _apply_J_dict(m, lam, step)
        defect = w.head_sum() / lam
        if defect <= tol or w.is_zero:
            break
    value = PosSeq(acc, 0.0)
    # keep the certified chain lam*(|value| + defect) <= |u| despite rounding
    defect = max(0.0, min(defect, u_norm / lam - value.head_sum()))
    return SeriesResult(value, defect, terms, converged=defect <= tol)


def _apply_J_dict(m: ModelSpec, lam: float, resolved: dict[int, float]) -> PosSeq:
    """B applied to an already-resolved vector (entries of (lam-A)^{-1} w)."""
    acc: dict[int, float] = {}
    for k, v in resolved.items():
        for j, r in m.column(k):
            if r > 0:
                acc[j] = acc.get(j, 0.0) + r * v
    return PosSeq(acc, 0.0)


def resolvent_Gr(
    m: ModelSpec,
    lam: float,
    r: float,
    u: PosSeq,
    tol: float = 1e-8,
    max_terms: int = 50_000,
) -> SeriesResult:
    """Resolvent of the interpolating generator A + r*B, 0 <= r < 1.

    The geometric weight makes the tail certifiable unconditionally:
    ``sum_{n>K} r^n |(lam-A)^{-1} J^n u| <= r^{K+1}/(1-r) * |u|/lam``.
    """
    if lam <= 0:
        raise ValueError("resolvent_Gr requires lambda > 0")
    if not (0.0 <= r < 1.0):
        raise ValueError("resolvent_Gr requires 0 <= r < 1")
    if u.tail_bound != 0.0:
        raise ValueError("resolvent_Gr requires finitely supported input")
    u_norm = u.head_sum()
    acc: dict[int, float] = {}
    w = u.entries
    rn = 1.0
    terms = 0
    defect = u_norm / lam
    for _ in range(max_terms):
        step = {k: v / (lam + m.a(k)) for k, v in w.items()}
        for k, v in step.items():
            acc[k] = acc.get(k, 0.0) + rn * v
        terms += 1
        w = _apply_J_dict(m, lam, step).entries
        rn *= r
        w_norm = math.fsum(w.values())
        defect = min(rn * w_norm / (lam * (1.0 - r)) if r > 0 else 0.0, rn / (1.0 - r) * u_norm / lam)
        if defect <= tol or not w:
            break
    return SeriesResult(PosSeq(acc, 0.0), defect, terms, converged=defect <= tol)


# ---------------------------------------------------------------------------
# Uniformized evolution on a truncation ladder
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvolveParams:
    """Knobs for the truncated evolution.

    ``step_budget`` caps the total number of Poisson terms across the whole
    ladder; rate growth like (k+1)^p makes the uniformization constant on an
    N-state truncation scale like N^p, so some cap is needed for super-linear
    models.  Hitting the cap (or ``n_max``) widens the bracket and flags the
    result instead of failing.
    """

    n_start: int = 64
    n_max: int = 1 << 20
    tol: float = 1e-8
    step_budget: int = 3_000_000
    poisson_tol: float = 1e-14


@dataclass(frozen=True)
class TruncationLadder:
    levels: tuple[int, ...]
    values: tuple[PosSeq, ...]

    def masses(self) -> tuple[float, ...]:
        return tuple(v.head_sum() for v in self.values)


@dataclass(frozen=True)
class EvolveResult:
    """Joint result of V(t)u and int_0^t V(s)u ds on the final truncation."""

    value: PosSeq
    mass_bracket: Bracket
    integral: PosSeq | None
    integral_bracket: Bracket | None
    ladder: TruncationLadder
    integral_ladder: TruncationLadder | None
    n_used: int
    steps_used: int
    closed: bool
    flagged: bool
    flag_reason: str


def _column_arrays(m: ModelSpec, n: int):
    """COO triplets (targets, sources, rates) of B restricted to [0, n)."""
    rows, cols, rates = [], [], []
    for k in range(n):
        for j, r in m.column(k):
            if 0 <= j < n and r > 0:
                rows.append(j)
                cols.append(k)
                rates.append(r)
    return (
        np.asarray(rows, dtype=np.intp),
        np.asarray(cols, dtype=np.intp),
        np.asarray(rates, dtype=np.float64),
    )


def _make_stepper(m: ModelSpec, n: int, c: float):
    """Return f with f(v, out) <- (I + Q/c) v; positive and substochastic."""
    a = np.array([m.a(k) for k in range(n)], dtype=np.float64)
    diag = 1.0 - a / c
    kind = m.kernel.kind
    if kind == "zero":

        def step_zero(v: np.ndarray, out: np.ndarray) -> None:
            np.multiply(v, diag, out=out)

        return step_zero
    if kind == "pure_birth":
        birth = m.kernel.birth
        sub = (a[:-1] if birth is None else np.array([birth(k) for k in range(n - 1)])) / c

        def step_birth(v: np.ndarray, out: np.ndarray) -> None:
            np.multiply(v, diag, out=out)
            out[1:] += sub * v[:-1]

        return step_birth
    if kind == "birth_death":
        bk = np.array([m.kernel.birth(k) for k in range(n - 1)]) / c
        dk = np.array([m.kernel.death(k) for k in range(1, n)]) / c

        def step_bd(v: np.ndarray, out: np.ndarray) -> None:
            np.multiply(v, diag, out=out)
            out[1:] += bk * v[:-1]
            out[:-1] += dk * v[1:]

        return step_bd
    rows, cols, rates = _column_arrays(m, n)
    rates_c = rates / c

    def step_table(v: np.ndarray, out: np.ndarray) -> None:
        np.multiply(v, diag, out=out)
        np.add.at(out, rows, rates_c * v[cols])

    return step_table


def _poisson_weights(lam_p: float, jmax: int):
    """pmf[j] and sf[j] = P(X >= j+1) for X ~ Poisson(lam_p), j <= jmax.

    Built multiplicatively from the mode so that huge rates never overflow;
    underflowed weights are zero and their mass shows up in the returned
    missing-weight bound.
    """
    j0 = min(int(lam_p), jmax)
    log_p0 = j0 * math.log(lam_p) - lam_p - math.lgamma(j0 + 1.0)
    pmf = np.zeros(jmax + 1)
    pmf[j0] = math.exp(log_p0)
    if j0 < jmax:
        ratios = lam_p / np.arange(j0 + 1.0, jmax + 1.0)
        pmf[j0 + 1 :] = pmf[j0] * np.cumprod(ratios)
    if j0 > 0:
        ratios = np.arange(float(j0), 0.0, -1.0) / lam_p
        pmf[j0 - 1 :: -1] = pmf[j0] * np.cumprod(ratios)
    total = float(pmf.sum())
    missing = max(0.0, 1.0 - total)
    # sf[j] = sum_{i > j} pmf[i] within the window (right tail missing mass
    # is covered by the caller's defect bookkeeping)
    sf = np.zeros(jmax + 1)
    sf[:-1] = np.cumsum(pmf[::-1])[::-1][1:]
    return pmf, sf, missing


def _uniformized(
    m: ModelSpec,
    t: float,
    u: PosSeq,
    n: int,
    want_integral: bool,
    poisson_tol: float,
):
    """One truncation level: V_N(t)u and optionally int_0^t V_N(s)u ds.

    Returns (v_acc, i_acc, v_defect, i_defect, steps): the accumulated
    vectors plus bounds on the weight mass each accumulation is missing
    (relative to the truncated evolution itself, per unit input mass).
    """
    a_max = m.a.max_upto(n)
    c = max(a_max, 1e-12)
    lam_p = c * t
    u_arr = np.zeros(n)
    for k, v in u.entries.items():
        u_arr[k] = v
    if lam_p == 0.0:
        return u_arr, (np.zeros(n) if want_integral else None), 0.0, 0.0, 0
    jmax = int(math.ceil(lam_p + 9.0 * math.sqrt(lam_p) + 40.0))
    pmf, sf, missing = _poisson_weights(lam_p, jmax)
    # the mode log-weight is a difference of ~lam_p*log(lam_p)-sized terms,
    # so all weights share a relative error of that cancellation scale
    scale_err = 4e-16 * lam_p * max(1.0, abs(math.log(lam_p)))
    step = _make_stepper(m, n, c)
    v = u_arr.copy()
    v_acc = pmf[0] * v
    i_acc = (sf[0] / c) * v if want_integral else None
    buf = np.empty(n)
    scratch = np.empty(n)
    nz = np.nonzero(pmf)[0]
    lo_w = int(nz[0]) if nz.size else 0
    hi_w = int(nz[-1]) if nz.size else -1
    for j in range(1, jmax + 1):
        step(v, buf)
        v, buf = buf, v
        if lo_w <= j <= hi_w:
            np.multiply(v, pmf[j], out=scratch)
            v_acc += scratch
        if i_acc is not None and sf[j] > 0.0:
            np.multiply(v, sf[j] / c, out=scratch)
            i_acc += scratch
    # Missing Poisson weight (both tails + underflow) plus the shared scale
    # error of the weights, per unit input mass.
    v_defect = missing + scale_err
    # Integral weights missed beyond jmax: sum_{j>jmax} sf[j]/c, bounded by a
    # geometric comparison from sf[jmax].
    tail_sum = float(sf[-1]) * max(2.0, math.sqrt(lam_p)) if jmax >= 2 * lam_p else t
    i_defect = tail_sum / c + (missing + scale_err) * t
    return v_acc, i_acc, v_defect, i_defect, jmax


def evolve(
    m: ModelSpec,
    t: float,
    u: PosSeq,
    params: EvolveParams = EvolveParams(),
    want_integral: bool = True,
) -> EvolveResult:
    """Truncation-ladder evolution: doubles N until the mass increment of
    V_N(t)u falls below ``tol``, the model is detected closed below N, or a
    resource cap is hit (then the bracket widens and the result is flagged).
    """
    if t < 0:
        raise ValueError("evolve requires t >= 0")
    if u.tail_bound != 0.0:
        raise ValueError("evolve requires finitely supported input")
    u_norm = u.head_sum()
    if t == 0.0 or u.is_zero:
        ladder = TruncationLadder((0,), (u,))
        zero = PosSeq.zero()
        return EvolveResult(
            value=u,
            mass_bracket=Bracket(u_norm, u_norm),
            integral=zero if want_integral else None,
            integral_bracket=Bracket(0.0, 0.0) if want_integral else None,
            ladder=ladder,
            integral_ladder=TruncationLadder((0,), (zero,)) if want_integral else None,
            n_used=0,
            steps_used=0,
            closed=True,
            flagged=False,
            flag_reason="",
        )
    top = max(u.support)
    n = params.n_start
    while n < 2 * (top + 1):
        n *= 2
    levels: list[int] = []
    values: list[PosSeq] = []
    integrals: list[PosSeq] = []
    budget = params.step_budget
    closed = False
    flagged = False
    reason = ""
    converged = False
    v_defect = i_defect = 0.0
    steps_total = 0
    last_inc: float | None = None
    last_inc_i: float | None = None
    while True:
        closed = m.closed_below(n, u.support)
        est_steps = int(m.a.max_upto(n) * t + 9.0 * math.sqrt(m.a.max_upto(n) * t) + 41)
        if levels and est_steps > budget:
            flagged = True
            reason = "step budget reached"
            break
        v_arr, i_arr, v_def, i_def, steps = _uniformized(
            m, t, u, n, want_integral, params.poisson_tol
        )
        steps_total += steps
        budget -= steps
        v_defect, i_defect = v_def, i_def
        levels.append(n)
        values.append(_to_seq(v_arr))
        if want_integral:
            integrals.append(_to_seq(i_arr))
            if len(integrals) >= 2:
                last_inc_i = integrals[-1].head_sum() - integrals[-2].head_sum()
        if len(values) >= 2:
            last_inc = values[-1].head_sum() - values[-2].head_sum()
        if closed:
            converged = True
            break
        if last_inc is not None and last_inc < params.tol:
            converged = True
            break
        if 2 * n > params.n_max:
            flagged = True
            reason = "n_max reached"
            break
        n *= 2

    v_mass = values[-1].head_sum()
    # rounding wobble of the accumulated Poisson sums; the weight-scale error
    # inside v_defect cuts both ways, so it widens the lower edge too
    fp_slack = (steps_total + 16) * 2.3e-16 * max(u_norm, 1e-300) + v_defect * u_norm
    poisson_gap = v_defect * u_norm + fp_slack
    if closed:
        gap_v = poisson_gap
    elif converged:
        gap_v = 2.0 * max(last_inc or 0.0, 0.0) + params.tol + poisson_gap
    else:
        # doubling increments shrink roughly geometrically; four increments
        # comfortably cover the remaining truncation error (estimate, flagged)
        inc = last_inc if last_inc is not None else u_norm - v_mass
        gap_v = min(u_norm - v_mass, 4.0 * max(inc, params.tol)) + poisson_gap
    mass_bracket = Bracket(max(0.0, v_mass - fp_slack), min(u_norm, v_mass + gap_v))

    integral = integral_bracket = int_ladder = None
    if want_integral:
        integral = integrals[-1]
        i_mass = integral.head_sum()
        fp_slack_i = fp_slack * max(t, 1.0)
        int_poisson_gap = i_defect * u_norm + fp_slack_i
        if closed:
            gap_i = int_poisson_gap
        elif converged:
            gap_i = 2.0 * max(last_inc_i or 0.0, 0.0) + params.tol * t + int_poisson_gap
        else:
            inc_i = last_inc_i if last_inc_i is not None else u_norm * t - i_mass
            gap_i = min(u_norm * t - i_mass, 4.0 * max(inc_i, params.tol * t)) + int_poisson_gap
        integral_bracket = Bracket(max(0.0, i_mass - fp_slack_i), min(u_norm * t, i_mass + gap_i))
        int_ladder = TruncationLadder(tuple(levels), tuple(integrals))

    return EvolveResult(
        value=values[-1],
        mass_bracket=mass_bracket,
        integral=integral,
        integral_bracket=integral_bracket,
        ladder=TruncationLadder(tuple(levels), tuple(values)),
        integral_ladder=int_ladder,
        n_used=levels[-1],
        steps_used=steps_total,
        closed=closed,
        flagged=flagged,
        flag_reason=reason,
    )


def _to_seq(arr: np.ndarray) -> PosSeq:
    nz = np.nonzero(arr)[0]
    return PosSeq({int(k): float(arr[k]) for k in nz}, 0.0)


def semigroup_V(
    m: ModelSpec, t: float, u: PosSeq, params: EvolveParams = EvolveParams()
) -> tuple[PosSeq, Bracket, EvolveResult]:
    """V(t)u as a certified entrywise lower bound plus its mass bracket."""
    res = evolve(m, t, u, params, want_integral=False)
    return res.value, res.mass_bracket, res


def integrate_V(
    m: ModelSpec, t: float, u: PosSeq, params: EvolveParams = EvolveParams()
) -> tuple[PosSeq, Bracket, EvolveResult]:
    """int_0^t V(s)u ds with the same monotone truncation certificate."""
    res = evolve(m, t, u, params, want_integral=True)
    return res.integral, res.integral_bracket, res
