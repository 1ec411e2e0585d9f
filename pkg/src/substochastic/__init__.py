"""Numerics for positive perturbations of substochastic semigroups on l1.

The package constructs the minimal substochastic semigroup generated by an
extension of A + B along two independent routes (a resolvent series and the
Dyson-Phillips expansion), evaluates the functionals that decide whether a
trajectory's mass loss is fully accounted for by its local balance, and
cross-validates everything against a jump-process Monte Carlo oracle.
"""

from .l1 import Bracket, PosSeq, SignedSeq, axpy, leq, mass, pair_psi
from .models import (
    Kernel,
    ModelError,
    ModelSpec,
    RateFn,
    apply_A,
    apply_B,
    apply_J,
    apply_U,
    apply_resolvent_A,
    dissipativity_audit,
    dump_model,
    load_model,
    model_from_json,
    model_to_json,
)

__all__ = [
    "Bracket",
    "PosSeq",
    "SignedSeq",
    "axpy",
    "leq",
    "mass",
    "pair_psi",
    "Kernel",
    "ModelError",
    "ModelSpec",
    "RateFn",
    "apply_A",
    "apply_B",
    "apply_J",
    "apply_U",
    "apply_resolvent_A",
    "dissipativity_audit",
    "dump_model",
    "load_model",
    "model_from_json",
    "model_to_json",
]

__version__ = "0.1.0"
