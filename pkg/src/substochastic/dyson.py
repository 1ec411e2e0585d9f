"""Dyson-Phillips expansion of the minimal semigroup.

The iterates V_0(t) = U(t), V_{n+1}(t)u = int_0^t V_n(t-s) B U(s) u ds sum
to V(t)u from below.  Numerically each V_n(.)u is sampled on a dyadic time
grid over a finite state window; the iteration is evaluated through the
equivalent convolution V_{n+1}(t)u = int_0^t U(t-s) B V_n(s)u ds, whose
integrand reuses the stored samples directly (the two forms agree because
both telescope the same Duhamel formula).  Because A is diagonal, U and B
are applied exactly; composite Simpson panels on nested dyadic grids keep
all quadrature weights positive and let each refinement reuse every sample.
Refinement stops when consecutive levels agree below tolerance; the final
difference is reported as the quadrature error estimate, never discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .l1 import PosSeq
from .models import ModelError, ModelSpec

__all__ = [
    "QuadParams",
    "DPState",
    "DPTerm",
    "UniformTailReport",
    "dp_state",
    "dp_term",
    "dp_partial_sum",
    "dp_convolution_residual",
    "dp_B_integral",
    "dp_laplace",
    "dp_uniform_tail",
]


@dataclass(frozen=True)
class QuadParams:
    """Quadrature controls for the expansion terms."""

    tol: float = 1e-9
    min_level: int = 5
    max_level: int = 13


@dataclass(frozen=True)
class DPTerm:
    """A computed expansion quantity plus its quadrature error estimate."""

    value: PosSeq
    error: float

    @property
    def mass(self) -> float:
        return self.value.head_sum()


def _simpson_weights(j: int, h: float) -> np.ndarray:
    """Positive composite weights for j panels of width h on [0, j*h].

    Even panel counts get plain composite Simpson; odd counts >= 3 end with
    a 3/8 block; a single panel falls back to the trapezoid (its O(h^3)
    local error is absorbed by the Richardson loop).
    """
    w = np.zeros(j + 1)
    if j == 0:
        return w
    if j == 1:
        w[0] = w[1] = 0.5 * h
        return w
    if j % 2 == 0:
        w[0] = w[j] = h / 3.0
        w[1:j:2] = 4.0 * h / 3.0
        w[2 : j - 1 : 2] = 2.0 * h / 3.0
        return w
    if j > 3:
        w[: j - 2] = _simpson_weights(j - 3, h)
    w[j - 3] += 3.0 * h / 8.0
    w[j - 2] += 9.0 * h / 8.0
    w[j - 1] += 9.0 * h / 8.0
    w[j] += 3.0 * h / 8.0
    return w


class DPState:
    """Sampled expansion terms s -> V_n(s)u on a dyadic grid over [0, t].

    ``terms[n]`` has shape (M+1, W): sample index by windowed state.  The
    window is sized so that no transition from an occupied state leaves it
    for any term up to ``n_max``; a model whose kernel cannot be windowed
    this way is rejected.
    """

    def __init__(self, model: ModelSpec, u: PosSeq, t: float, n_max: int, q: QuadParams):
        if t < 0:
            raise ValueError("DPState requires t >= 0")
        if u.tail_bound != 0.0:
            raise ValueError("DPState requires finitely supported input")
        if n_max < 0:
            raise ValueError("DPState requires n_max >= 0")
        self.model = model
        self.u = u
        self.t = float(t)
        self.n_max = n_max
        self.q = q
        supp = u.support or (0,)
        stride = model.stride
        self.lo = max(0, min(supp) - (n_max + 1) * stride)
        self.hi = max(supp) + (n_max + 1) * stride + 1
        self._build_window()
        self._sample()

    def _build_window(self) -> None:
        lo, hi = self.lo, self.hi
        w = hi - lo
        margin = (self.n_max + 1) * max(self.model.stride, 1)
        self.a_win = np.array([self.model.a(k) for k in range(lo, hi)])
        bmat = np.zeros((w, w))
        for k in range(lo, hi):
            for j, r in self.model.column(k):
                if r <= 0:
                    continue
                if lo <= j < hi:
                    bmat[j - lo, k - lo] += r
                elif lo + margin <= k < hi - margin:
                    # states this deep inside the window are reachable by the
                    # tracked terms, so a leak here would silently truncate
                    raise ModelError("DPState: kernel leaks outside its stride window")
        self.b_win = bmat

    def _sample_level(self, mlev: int) -> list[np.ndarray]:
        model, t = self.model, self.t
        M = 1 << mlev
        times = np.linspace(0.0, t, M + 1)
        h = t / M
        u_win = np.zeros(self.hi - self.lo)
        for k, v in self.u.entries.items():
            u_win[k - self.lo] = v
        decay = np.exp(-np.outer(times, self.a_win))  # D[d] = U(d*h) on the window
        terms = [decay * u_win[None, :]]
        for _ in range(self.n_max):
            g = terms[-1] @ self.b_win.T
            f = np.zeros_like(g)
            for j in range(1, M + 1):
                w = _simpson_weights(j, h)
                f[j] = np.einsum("i,ik,ik->k", w, g[: j + 1], decay[j::-1])
            terms.append(f)
        return terms

    @staticmethod
    def _integrals(terms: list[np.ndarray], t: float) -> list[np.ndarray]:
        M = terms[0].shape[0] - 1
        w = _simpson_weights(M, t / M)
        return [f.T @ w for f in terms]

    def _sample(self) -> None:
        q = self.q
        amax = float(self.a_win.max(initial=1.0))
        lev = int(math.ceil(math.log2(max(4.0, amax * self.t))))
        lev = max(q.min_level, min(q.max_level - 1, lev))
        prev = self._sample_level(lev)
        prev_int = self._integrals(prev, self.t)
        errors = [math.inf] * (self.n_max + 1)
        errors_int = [math.inf] * (self.n_max + 1)
        errors[0] = 0.0  # V_0 sampled exactly
        cur, cur_int = prev, prev_int
        while lev < q.max_level:
            lev += 1
            cur = self._sample_level(lev)
            cur_int = self._integrals(cur, self.t)
            worst = 0.0
            for n in range(self.n_max + 1):
                diff_int = float(np.abs(cur_int[n] - prev_int[n]).sum())
                errors_int[n] = diff_int
                worst = max(worst, diff_int)
                if n >= 1:
                    diff = float(np.abs(cur[n][-1] - prev[n][-1]).sum())
                    errors[n] = diff
                    worst = max(worst, diff)
            if worst <= q.tol:
                break
            prev, prev_int = cur, cur_int
        self.level = lev
        self.times = np.linspace(0.0, self.t, (1 << lev) + 1)
        self.terms = cur
        self.errors = [0.0] + list(errors[1:])
        self.errors_int = list(errors_int)

    # -- extraction -----------------------------------------------------
    def _to_seq(self, row: np.ndarray) -> PosSeq:
        out = {}
        for i, v in enumerate(row):
            if v > 0.0:
                out[self.lo + i] = float(v)
        return PosSeq(out, 0.0)

    def term_at_t(self, n: int) -> DPTerm:
        return DPTerm(self._to_seq(self.terms[n][-1]), self.errors[n])

    def integral(self, n: int, weight_lam: float = 0.0) -> tuple[np.ndarray, float]:
        """int_0^t exp(-weight_lam*s) V_n(s)u ds on the window (array, error)."""
        M = self.times.size - 1
        w = _simpson_weights(M, self.t / M)
        if weight_lam:
            w = w * np.exp(-weight_lam * self.times)
        arr = self.terms[n].T @ w
        err = self.errors_int[n]
        if not math.isfinite(err):
            err = self.errors[n] * self.t
        return arr, err + self.q.tol * 1e-3

    def b_apply(self, arr: np.ndarray) -> np.ndarray:
        return self.b_win @ arr


def dp_state(model: ModelSpec, u: PosSeq, t: float, n_max: int, q: QuadParams = QuadParams()) -> DPState:
    return DPState(model, u, t, n_max, q)


def dp_term(model: ModelSpec, n: int, t: float, u: PosSeq, q: QuadParams = QuadParams()) -> DPTerm:
    """V_n(t)u: exact U(t)u for n = 0, iterated convolution above."""
    if n == 0:
        from .models import apply_U

        return DPTerm(apply_U(model, t, u), 0.0)
    st = DPState(model, u, t, n, q)
    return st.term_at_t(n)


def dp_partial_sum(model: ModelSpec, K: int, t: float, u: PosSeq, q: QuadParams = QuadParams()) -> DPTerm:
    """sum_{k<=K} V_k(t)u; increases to V(t)u from below as K grows."""
    st = DPState(model, u, t, K, q)
    total = np.zeros(st.hi - st.lo)
    for n in range(K + 1):
        total += st.terms[n][-1]
    return DPTerm(st._to_seq(total), math.fsum(st.errors[: K + 1]))


def dp_convolution_residual(
    model: ModelSpec, n: int, t: float, s: float, u: PosSeq, q: QuadParams = QuadParams()
) -> float:
    """l1 residual of V_n(t+s)u = sum_k V_k(t) V_{n-k}(s) u."""
    if n > 4:
        raise ValueError("dp_convolution_residual supports n <= 4")
    left = dp_term(model, n, t + s, u, q).value
    acc: dict[int, float] = {}
    for k in range(n + 1):
        inner = dp_term(model, n - k, s, u, q).value
        outer = dp_term(model, k, t, inner, q).value if not inner.is_zero else inner
        for idx, v in outer.entries.items():
            acc[idx] = acc.get(idx, 0.0) + v
    keys = set(acc) | set(left.entries)
    return math.fsum(abs(acc.get(k, 0.0) - left.get(k)) for k in keys)


def dp_B_integral(model: ModelSpec, n: int, t: float, u: PosSeq, q: QuadParams = QuadParams()) -> DPTerm:
    """B int_0^t V_n(s)u ds (equals int_0^t B V_n(s)u ds)."""
    st = DPState(model, u, t, n, q)
    arr, err = st.integral(n)
    return DPTerm(st._to_seq(st.b_apply(arr)), err * max(1.0, float(st.a_win.max())))


def dp_laplace(model: ModelSpec, n: int, lam: float, u: PosSeq, q: QuadParams = QuadParams()) -> DPTerm:
    """int_0^inf exp(-lam*s) V_n(s)u ds; matches (lam-A)^{-1} J^n u.

    The horizon is truncated where the substochastic envelope
    exp(-lam*T)*|u|/lam drops below the tolerance; the bound joins the
    reported error estimate.
    """
    if lam <= 0:
        raise ValueError("dp_laplace requires lambda > 0")
    u_norm = u.head_sum()
    if u_norm == 0.0:
        return DPTerm(PosSeq.zero(), 0.0)
    horizon = max(4.0 / lam, math.log(max(u_norm, 1.0) / (q.tol * lam) + 1.0) / lam)
    st = DPState(model, u, horizon, n, q)
    arr, err = st.integral(n, weight_lam=lam)
    tail = math.exp(-lam * horizon) * u_norm / lam
    return DPTerm(st._to_seq(arr), err + tail)


@dataclass(frozen=True)
class UniformTailReport:
    """Per-n tail norms |B int_t^inf e^{-lam s} V_n(s)u ds| against the
    n-independent bound e^{-lam t}|u| + |B int_t^inf e^{-lam s} U(s)u ds|."""

    bound: float
    computed: tuple[float, ...]
    all_within: bool


def dp_uniform_tail(
    model: ModelSpec, n_max: int, lam: float, t: float, u: PosSeq, q: QuadParams = QuadParams()
) -> UniformTailReport:
    if lam <= 0:
        raise ValueError("dp_uniform_tail requires lambda > 0")
    u_norm = u.head_sum()
    # exact U-tail: coordinatewise u_k e^{-(lam+a_k)t}/(lam+a_k), then B
    from .models import apply_B

    u_tail = PosSeq(
        {k: v * math.exp(-(lam + model.a(k)) * t) / (lam + model.a(k)) for k, v in u.entries.items()},
        0.0,
    )
    bound = math.exp(-lam * t) * u_norm + apply_B(model, u_tail).head_sum()
    computed = []
    for n in range(n_max + 1):
        full = dp_laplace(model, n, lam, u, q)
        st = DPState(model, u, t, n, q)
        head, _ = st.integral(n, weight_lam=lam)
        head_b = st.b_apply(head)
        full_b_mass = apply_B(model, full.value).head_sum()
        computed.append(max(0.0, full_b_mass - float(head_b.sum())))
    slack = 10.0 * q.tol + 1e-12
    ok = all(cv <= bound + slack for cv in computed)
    return UniformTailReport(bound=bound, computed=tuple(computed), all_within=ok)
