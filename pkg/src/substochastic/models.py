"""Generator pairs (A, B) on l1 and their exact primitives.

A model is a diagonal loss operator A (``(A u)_k = -a_k u_k`` with a_k > 0)
together with a positive transition kernel B whose column at k lists the
states fed by k and their rates.  Column dissipativity -- the rates leaving
state k never exceed a_k -- makes A + B formally substochastic; the column
deficit a_k - sum(rates) is the local kill rate.  A model is conservative
when every deficit vanishes.

Because A is diagonal, the semigroup U(t) = exp(tA), the resolvent
(lambda - A)^{-1} and the iteration operator J(lambda) = B (lambda - A)^{-1}
are all evaluated exactly on finitely supported data; truncation enters only
through explicit tail bounds.

Rates come as closed forms (power law ``c*(k+1)**p`` or finite table with a
power-law tail) so that a model is reproducible from its JSON file alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .l1 import PosSeq, SignedSeq

__all__ = [
    "RateFn",
    "Kernel",
    "ModelSpec",
    "ModelError",
    "DissipativityReport",
    "apply_A",
    "apply_B",
    "apply_resolvent_A",
    "apply_U",
    "apply_J",
    "dissipativity_audit",
    "model_to_json",
    "model_from_json",
    "load_model",
    "dump_model",
]

_AUDIT_DEPTH = 256  # columns checked at construction time
_RATE_RTOL = 1e-12


class ModelError(ValueError):
    """Raised for inconsistent model definitions or schema violations."""


@dataclass(frozen=True)
class RateFn:
    """Closed-form positive rate sequence.

    kind "power":  a_k = c * (k+1)**p  (c > 0, p >= 0)
    kind "table":  a_k = values[k] for k < len(values), power tail beyond.
    """

    kind: str
    c: float = 1.0
    p: float = 0.0
    values: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("power", "table"):
            raise ModelError(f"unknown rate kind {self.kind!r}")
        if not (self.c >= 0):
            raise ModelError("rate coefficient c must be >= 0")
        if self.p < 0:
            raise ModelError("rate exponent p must be >= 0")
        if self.kind == "table":
            if not self.values:
                raise ModelError("table rate needs at least one value")
            if any(v < 0 or math.isinf(v) for v in self.values):
                raise ModelError("table rate values must be finite and >= 0")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @staticmethod
    def power(c: float, p: float) -> "RateFn":
        return RateFn("power", c=c, p=p)

    @staticmethod
    def table(values, tail_c: float = 1.0, tail_p: float = 0.0) -> "RateFn":
        return RateFn("table", c=tail_c, p=tail_p, values=tuple(values))

    def __call__(self, k: int) -> float:
        if self.kind == "table" and k < len(self.values):
            return self.values[k]
        return self.c * float(k + 1) ** self.p

    def array(self, lo: int, hi: int) -> np.ndarray:
        """Vectorized values a_lo .. a_{hi-1}."""
        ks = np.arange(lo, hi, dtype=np.float64)
        out = self.c * (ks + 1.0) ** self.p
        if self.kind == "table" and lo < len(self.values):
            head = np.asarray(self.values[lo : min(hi, len(self.values))])
            out[: head.size] = head
        return out

    @property
    def bounded(self) -> bool:
        return self.p == 0.0

    def sup_bound(self) -> float:
        """Upper bound on sup_k a_k; inf when unbounded."""
        if not self.bounded:
            return math.inf
        return max(self.c, max(self.values, default=0.0))

    def max_upto(self, n: int) -> float:
        """max over 0 <= k < n."""
        if n <= 0:
            return 0.0
        m = max(self.values[: min(n, len(self.values))], default=0.0)
        k0 = len(self.values) if self.kind == "table" else 0
        if n > k0:
            m = max(m, self.c * float(n) ** self.p)  # power part is nondecreasing
        return m

    def reciprocal_sum_diverges(self) -> bool:
        """True when sum_k 1/a_k = +inf (tail exponent p <= 1)."""
        return self.p <= 1.0

    def reciprocal_tail_bound(self, k0: int, power: float = 1.0) -> float:
        """Certified upper bound on sum_{m >= k0} 1/a_m**power; inf if divergent.

        Uses the integral bound for the (nonincreasing) power-law tail; table
        heads are summed exactly.
        """
        if self.c <= 0:
            return math.inf
        exact = 0.0
        k = k0
        if self.kind == "table" and k0 < len(self.values):
            exact = math.fsum(1.0 / self.values[m] ** power for m in range(k0, len(self.values)))
            k = len(self.values)
        q = self.p * power
        if q <= 1.0:
            return math.inf
        # sum_{m >= k} (c (m+1)^p)^-power <= f(k) + integral_k^inf c^-power (x+1)^-q dx,
        # valid down to k = 0 because f is nonincreasing
        head = (self.c * float(k + 1) ** self.p) ** -power
        return exact + head + (float(k + 1) ** (1.0 - q)) / (self.c**power * (q - 1.0))


@dataclass(frozen=True)
class Kernel:
    """Transition rule giving, for each source state, the column of B.

    kinds: "zero" (B = 0), "pure_birth" (full diagonal rate feeds k+1, or a
    separate birth rate when given), "birth_death" (rates b_k up, d_k down,
    with the death rate at state 0 dropped), "table" (explicit finite
    columns, empty beyond the table).
    """

    kind: str
    birth: RateFn | None = None
    death: RateFn | None = None
    columns: tuple[tuple[int, tuple[tuple[int, float], ...]], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("zero", "pure_birth", "birth_death", "table"):
            raise ModelError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "birth_death" and (self.birth is None or self.death is None):
            raise ModelError("birth_death kernel needs birth and death rates")

    def column(self, k: int, a_k: float) -> tuple[tuple[int, float], ...]:
        if self.kind == "zero":
            return ()
        if self.kind == "pure_birth":
            r = a_k if self.birth is None else self.birth(k)
            return ((k + 1, r),) if r > 0 else ()
        if self.kind == "birth_death":
            out = []
            b = self.birth(k)
            if b > 0:
                out.append((k + 1, b))
            if k > 0:
                d = self.death(k)
                if d > 0:
                    out.append((k - 1, d))
            return tuple(out)
        for kk, col in self.columns:
            if kk == k:
                return col
        return ()

    @property
    def stride(self) -> int:
        if self.kind == "zero":
            return 0
        if self.kind in ("pure_birth", "birth_death"):
            return 1
        s = 0
        for k, col in self.columns:
            for j, _ in col:
                s = max(s, abs(j - k))
        return s

    @property
    def upward_only(self) -> bool:
        """Every transition strictly increases the state index."""
        if self.kind == "zero" or self.kind == "pure_birth":
            return True
        if self.kind == "birth_death":
            return False
        return all(j > k for k, col in self.columns for j, _ in col)


@dataclass(frozen=True)
class ModelSpec:
    """A generator pair: diagonal loss rates plus a dissipative kernel."""

    name: str
    a: RateFn
    kernel: Kernel
    conservative: bool
    stride: int = field(default=-1)

    def __post_init__(self) -> None:
        if self.stride < 0:
            object.__setattr__(self, "stride", self.kernel.stride)
        if self.a.c <= 0:
            raise ModelError(f"model {self.name!r}: diagonal rate tail must be > 0")
        if any(self.a(k) <= 0 for k in range(min(_AUDIT_DEPTH, 64))):
            raise ModelError(f"model {self.name!r}: diagonal rates must be > 0")
        birth = self.kernel.birth
        if self.kernel.kind == "pure_birth" and birth is not None and birth.kind == "power":
            # the columnwise audit below only reaches _AUDIT_DEPTH; power
            # forms allow checking tail dominance analytically
            if birth.p > self.a.p or (birth.p == self.a.p and birth.c > self.a.c):
                raise ModelError(
                    f"model {self.name!r}: birth rate tail outgrows the diagonal"
                )
        report = dissipativity_audit(self, _AUDIT_DEPTH)
        if report.violations:
            k, excess = report.violations[0]
            raise ModelError(
                f"model {self.name!r}: column {k} rates exceed a_{k} by {excess:.3g}"
            )
        if self.conservative and not report.conservative_observed:
            raise ModelError(
                f"model {self.name!r} declared conservative but has a nonzero column deficit"
            )

    # -- column access -------------------------------------------------
    def rate(self, k: int) -> float:
        return self.a(k)

    def column(self, k: int) -> tuple[tuple[int, float], ...]:
        return self.kernel.column(k, self.a(k))

    def deficit(self, k: int) -> float:
        """Kill rate a_k - sum of outgoing rates at state k."""
        return self.a(k) - math.fsum(r for _, r in self.column(k))

    def closed_below(self, n: int, support: tuple[int, ...]) -> bool:
        """True when no state reachable from ``support`` ever feeds index >= n."""
        if any(k >= n for k in support):
            return False
        if self.kernel.kind in ("pure_birth", "birth_death"):
            return False  # unbounded upward reach
        if self.kernel.kind == "zero":
            return True
        seen = set(support)
        frontier = list(support)
        while frontier:
            k = frontier.pop()
            for j, r in self.column(k):
                if r <= 0:
                    continue
                if j >= n:
                    return False
                if j not in seen:
                    seen.add(j)
                    frontier.append(j)
        return True

    # -- constructors ---------------------------------------------------
    @staticmethod
    def pure_birth(a: RateFn, name: str = "pure_birth") -> "ModelSpec":
        """Conservative upward cascade: the full rate a_k feeds state k+1."""
        return ModelSpec(name, a, Kernel("pure_birth"), conservative=True)

    @staticmethod
    def birth_death(
        b: float | RateFn,
        d: float | RateFn,
        kill: float | RateFn = 0.0,
        name: str = "birth_death",
    ) -> "ModelSpec":
        """Nearest-neighbour walk with kill; a_k = b_k + d_k + kill_k.

        The death rate at state 0 is dropped from both the kernel and the
        diagonal, so the deficit at 0 equals kill_0.  The three rates must
        share a common power-law exponent (constants included) so the
        diagonal stays expressible as a table with a power tail.
        """
        b, d, kill = (_as_rate(x) for x in (b, d, kill))
        if any(r.kind == "table" for r in (b, d, kill)):
            raise ModelError("birth_death builder needs power-law rates with one exponent")
        exps = {r.p for r in (b, d, kill) if r.c > 0}
        if len(exps) > 1:
            raise ModelError("birth_death builder needs power-law rates with one exponent")
        p = exps.pop() if exps else 0.0
        a0 = b(0) + kill(0)
        tail_c = b.c + d.c + kill.c
        a = RateFn.table((a0,), tail_c=tail_c, tail_p=p)
        conservative = kill.c == 0.0
        return ModelSpec(name, a, Kernel("birth_death", birth=b, death=d), conservative)

    @staticmethod
    def loss_only(a: RateFn, name: str = "loss_only") -> "ModelSpec":
        """B = 0: pure exponential decay state by state."""
        return ModelSpec(name, a, Kernel("zero"), conservative=False)

    @staticmethod
    def table(
        a_values,
        columns: dict[int, list[tuple[int, float]]],
        tail_c: float = 1.0,
        tail_p: float = 0.0,
        conservative: bool = False,
        name: str = "table",
    ) -> "ModelSpec":
        cols = tuple(
            (int(k), tuple((int(j), float(r)) for j, r in col if r > 0))
            for k, col in sorted(columns.items())
        )
        a = RateFn.table(a_values, tail_c=tail_c, tail_p=tail_p)
        return ModelSpec(name, a, Kernel("table", columns=cols), conservative)


def _as_rate(x: float | RateFn) -> RateFn:
    if isinstance(x, RateFn):
        return x
    if x < 0:
        raise ModelError("rates must be >= 0")
    return RateFn.power(float(x), 0.0)


@dataclass(frozen=True)
class DissipativityReport:
    deficits: tuple[float, ...]
    violations: tuple[tuple[int, float], ...]  # (k, excess rate)
    conservative_declared: bool
    conservative_observed: bool
    consistent: bool


def dissipativity_audit(m: ModelSpec, n: int) -> DissipativityReport:
    """Column-by-column deficit report for states k <= n."""
    deficits = []
    violations = []
    tol = _RATE_RTOL
    for k in range(n + 1):
        a_k = m.a(k)
        out = math.fsum(r for _, r in m.kernel.column(k, a_k))
        d = a_k - out
        deficits.append(d)
        if d < -tol * max(1.0, a_k):
            violations.append((k, -d))
    observed = all(abs(d) <= tol * max(1.0, m.a(k)) for k, d in enumerate(deficits))
    declared = bool(getattr(m, "conservative", False))
    return DissipativityReport(
        deficits=tuple(deficits),
        violations=tuple(violations),
        conservative_declared=declared,
        conservative_observed=observed,
        consistent=(declared == observed) or not declared,
    )


# ---------------------------------------------------------------------------
# Exact operator primitives (diagonal A)
# ---------------------------------------------------------------------------


def _check_tail(m: ModelSpec, u: PosSeq, op: str) -> float:
    """Bound for propagating u's tail through A- or B-type action."""
    if u.tail_bound == 0.0:
        return 0.0
    sup = m.a.sup_bound()
    if math.isinf(sup):
        raise ModelError(
            f"{op}: input has tail_bound > 0 but rates of {m.name!r} are unbounded"
        )
    return u.tail_bound * sup


def apply_A(m: ModelSpec, u: PosSeq) -> SignedSeq:
    """(A u)_k = -a_k u_k, returned as a signed sequence (pure loss part)."""
    tail = _check_tail(m, u, "apply_A")
    minus = PosSeq({k: m.a(k) * v for k, v in u.entries.items()}, tail)
    return SignedSeq(PosSeq.zero(), minus)


def apply_B(m: ModelSpec, u: PosSeq) -> PosSeq:
    """Positive kernel action: mass at k feeds the column targets of k."""
    tail = _check_tail(m, u, "apply_B")
    acc: dict[int, float] = {}
    for k, v in u.entries.items():
        for j, r in m.column(k):
            if r > 0:
                acc[j] = acc.get(j, 0.0) + r * v
    return PosSeq(acc, tail)


def apply_resolvent_A(m: ModelSpec, lam: float, u: PosSeq) -> PosSeq:
    """((lambda - A)^{-1} u)_k = u_k / (lambda + a_k); cone contraction after
    scaling by lambda."""
    if lam <= 0:
        raise ValueError("apply_resolvent_A requires lambda > 0")
    return PosSeq(
        {k: v / (lam + m.a(k)) for k, v in u.entries.items()},
        u.tail_bound / lam,
    )


def apply_U(m: ModelSpec, t: float, u: PosSeq) -> PosSeq:
    """(U(t) u)_k = exp(-a_k t) u_k, exact for diagonal A."""
    if t < 0:
        raise ValueError("apply_U requires t >= 0")
    if t == 0:
        return u
    return PosSeq({k: math.exp(-m.a(k) * t) * v for k, v in u.entries.items()}, u.tail_bound)


def apply_J(m: ModelSpec, lam: float, u: PosSeq) -> PosSeq:
    """J(lambda) = B (lambda - A)^{-1}, a contraction on the positive cone."""
    return apply_B(m, apply_resolvent_A(m, lam, u))


# ---------------------------------------------------------------------------
# JSON model files
# ---------------------------------------------------------------------------


def _rate_to_json(r: RateFn) -> dict[str, Any]:
    if r.kind == "power":
        return {"kind": "power", "c": r.c, "p": r.p}
    return {"kind": "table", "values": list(r.values), "tail": {"c": r.c, "p": r.p}}


def _rate_from_json(obj: Any, where: str) -> RateFn:
    if not isinstance(obj, dict):
        raise ModelError(f"{where}: expected an object")
    kind = obj.get("kind")
    if kind == "power":
        _require_keys(obj, {"kind", "c", "p"}, where)
        return RateFn.power(float(obj["c"]), float(obj["p"]))
    if kind == "table":
        _require_keys(obj, {"kind", "values", "tail"}, where)
        tail = obj["tail"]
        if not isinstance(tail, dict):
            raise ModelError(f"{where}.tail: expected an object")
        _require_keys(tail, {"c", "p"}, f"{where}.tail")
        return RateFn.table(
            [float(v) for v in obj["values"]],
            tail_c=float(tail["c"]),
            tail_p=float(tail["p"]),
        )
    raise ModelError(f"{where}: unknown rate kind {kind!r}")


def _require_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ModelError(f"{where}: unknown field(s) {sorted(unknown)}")


def model_to_json(m: ModelSpec) -> dict[str, Any]:
    k = m.kernel
    if k.kind == "zero":
        b: dict[str, Any] = {"kind": "zero"}
    elif k.kind == "pure_birth":
        b = {"kind": "pure_birth"}
        if k.birth is not None:
            b["birth"] = _rate_to_json(k.birth)
    elif k.kind == "birth_death":
        kill_c = max(m.a.c - k.birth.c - k.death.c, 0.0)
        kill_p = m.a.p if kill_c > 0 else 0.0
        b = {
            "kind": "birth_death",
            "b": _rate_to_json(k.birth),
            "d": _rate_to_json(k.death),
            "kill": {"kind": "power", "c": kill_c, "p": kill_p},
        }
    else:
        b = {
            "kind": "table",
            "columns": [[kk, [[j, r] for j, r in col]] for kk, col in k.columns],
            "tail": None,
        }
    return {
        "name": m.name,
        "space": "l1",
        "A": _rate_to_json(m.a),
        "B": b,
        "conservative": m.conservative,
    }


def model_from_json(obj: Any) -> ModelSpec:
    if not isinstance(obj, dict):
        raise ModelError("model file: expected a JSON object")
    _require_keys(obj, {"name", "space", "A", "B", "conservative"}, "model")
    for key in ("name", "space", "A", "B", "conservative"):
        if key not in obj:
            raise ModelError(f"model: missing field {key!r}")
    if obj["space"] != "l1":
        raise ModelError(f"model: unsupported space {obj['space']!r}")
    name = str(obj["name"])
    a = _rate_from_json(obj["A"], "A")
    conservative = bool(obj["conservative"])
    b = obj["B"]
    if not isinstance(b, dict):
        raise ModelError("B: expected an object")
    kind = b.get("kind")
    if kind == "zero":
        _require_keys(b, {"kind"}, "B")
        kernel = Kernel("zero")
    elif kind == "pure_birth":
        _require_keys(b, {"kind", "birth"}, "B")
        birth = _rate_from_json(b["birth"], "B.birth") if "birth" in b else None
        kernel = Kernel("pure_birth", birth=birth)
    elif kind == "birth_death":
        _require_keys(b, {"kind", "b", "d", "kill"}, "B")
        birth = _rate_from_json(b["b"], "B.b")
        death = _rate_from_json(b["d"], "B.d")
        kr = _rate_from_json(b["kill"], "B.kill")
        kernel = Kernel("birth_death", birth=birth, death=death)
        # the declared diagonal must match b + d + kill (death dropped at 0)
        for k in range(64):
            want = birth(k) + (death(k) if k > 0 else 0.0) + kr(k)
            if abs(want - a(k)) > _RATE_RTOL * max(1.0, want):
                raise ModelError(
                    f"B.kill: diagonal mismatch at k={k}: A gives {a(k)}, b+d+kill gives {want}"
                )
    elif kind == "table":
        _require_keys(b, {"kind", "columns", "tail"}, "B")
        if b.get("tail") is not None:
            raise ModelError("B.tail: only null is supported (columns empty beyond the table)")
        cols = []
        for item in b["columns"]:
            k, col = item
            cols.append((int(k), tuple((int(j), float(r)) for j, r in col)))
        kernel = Kernel("table", columns=tuple(cols))
    else:
        raise ModelError(f"B: unknown kernel kind {kind!r}")
    return ModelSpec(name, a, kernel, conservative)


def load_model(path: str) -> ModelSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"model file {path}: invalid JSON ({exc})") from exc
    return model_from_json(obj)


def dump_model(m: ModelSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(m), fh, indent=2)
        fh.write("\n")
