import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from substochastic.l1 import PosSeq, leq, mass
from substochastic.models import (
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
    model_from_json,
    model_to_json,
)

e0 = PosSeq.basis(0)


class TestRateFn:
    def test_power_and_table(self):
        r = RateFn.power(1.0, 2.0)
        assert r(0) == 1.0 and r(3) == 16.0
        tbl = RateFn.table([1.0, 2.0], tail_c=3.0, tail_p=1.0)
        assert tbl(0) == 1.0 and tbl(1) == 2.0 and tbl(2) == 9.0

    def test_array_matches_scalar(self):
        for r in (RateFn.power(2.0, 1.5), RateFn.table([4.0, 5.0], tail_c=1.0, tail_p=2.0)):
            arr = r.array(0, 10)
            assert arr == pytest.approx([r(k) for k in range(10)])

    def test_reciprocal_tail_bound_is_upper_bound(self):
        r = RateFn.power(1.0, 2.0)
        for k0 in (0, 1, 7, 50):
            exact = sum(1.0 / r(m) for m in range(k0, 200_000))
            assert r.reciprocal_tail_bound(k0) >= exact
        assert math.isinf(RateFn.power(1.0, 1.0).reciprocal_tail_bound(0))

    def test_rejects_bad_parameters(self):
        with pytest.raises(ModelError):
            RateFn("exp", c=1.0)
        with pytest.raises(ModelError):
            RateFn.power(1.0, -1.0)


class TestModelConstruction:
    def test_pure_birth_diagonal(self, m_quadratic):
        out = apply_A(m_quadratic, e0)
        assert out.minus.entries == {0: 1.0}
        assert apply_A(m_quadratic, PosSeq.zero()).minus.is_zero

    def test_birth_death_diagonal(self):
        m = ModelSpec.birth_death(1.0, 1.0, kill=0.0)
        out = apply_A(m, PosSeq.basis(2))
        assert out.minus.entries == {2: 2.0}

    def test_column_violation_rejected(self):
        with pytest.raises(ModelError):
            ModelSpec.table(a_values=(1.0,), columns={0: [(1, 2.0)]})

    def test_conservative_mismatch_rejected(self):
        with pytest.raises(ModelError):
            ModelSpec.table(a_values=(1.0,), columns={0: [(1, 0.5)]}, conservative=True)


class TestApplyB:
    def test_single_transition(self, m_quadratic):
        assert apply_B(m_quadratic, e0).entries == {1: 1.0}

    def test_zero_kernel(self, m_pure_loss):
        assert apply_B(m_pure_loss, PosSeq({0: 1.0, 4: 2.0})).is_zero

    def test_two_targets(self):
        m = ModelSpec.birth_death(1.0, 1.0, kill=0.0)
        out = apply_B(m, PosSeq.basis(2))
        assert out.entries == {1: 1.0, 3: 1.0}

    def test_unbounded_tail_rejected(self, m_yule):
        with pytest.raises(ModelError):
            apply_B(m_yule, PosSeq({0: 1.0}, 0.1))
        with pytest.raises(ModelError):
            apply_A(m_yule, PosSeq({0: 1.0}, 0.1))


class TestResolventAndU:
    def test_resolvent_scaling(self, m_quadratic):
        assert apply_resolvent_A(m_quadratic, 1.0, e0).entries == {0: 0.5}
        assert apply_resolvent_A(m_quadratic, 1.0, PosSeq.zero()).is_zero

    def test_resolvent_linear_rates(self, m_yule):
        out = apply_resolvent_A(m_yule, 2.0, PosSeq.basis(3))
        assert out.entries[3] == pytest.approx(1.0 / 6.0)

    def test_resolvent_rejects_nonpositive_lambda(self, m_yule):
        with pytest.raises(ValueError):
            apply_resolvent_A(m_yule, 0.0, e0)

    def test_U_identity_and_decay(self, m_quadratic):
        assert apply_U(m_quadratic, 0.0, e0) is e0
        out = apply_U(m_quadratic, 1.0, e0)
        assert out.entries[0] == pytest.approx(math.exp(-1.0), rel=1e-15)

    def test_U_uniform_decay_bound(self, m_yule):
        u = PosSeq({0: 0.5, 3: 0.5})
        for t in (1.0, 5.0):
            assert mass(apply_U(m_yule, t, u)).hi <= math.exp(-t) + 1e-15

    def test_U_rejects_negative_time(self, m_yule):
        with pytest.raises(ValueError):
            apply_U(m_yule, -0.1, e0)

    def test_semigroup_law_exact(self, m_quadratic):
        u = PosSeq({0: 0.4, 2: 0.6})
        lhs = apply_U(m_quadratic, 0.7, apply_U(m_quadratic, 0.3, u))
        rhs = apply_U(m_quadratic, 1.0, u)
        for k in u.entries:
            assert lhs.get(k) == pytest.approx(rhs.get(k), rel=1e-14)


class TestApplyJ:
    def test_shift_with_weight(self, m_quadratic):
        assert apply_J(m_quadratic, 1.0, e0).entries == {1: 0.5}

    def test_zero_kernel(self, m_pure_loss):
        assert apply_J(m_pure_loss, 1.0, e0).is_zero

    def test_telescoping_product(self, m_yule):
        # n applications of J at lambda=1 move e0 to e_n with weight 1/(n+1)
        u = e0
        for n in range(1, 8):
            u = apply_J(m_yule, 1.0, u)
            assert set(u.entries) == {n}
            assert u.entries[n] == pytest.approx(1.0 / (n + 1), rel=1e-14)

    @given(st.floats(min_value=0.1, max_value=10.0), entries_st := st.dictionaries(
        st.integers(min_value=0, max_value=20),
        st.floats(min_value=1e-6, max_value=100.0),
        min_size=1,
        max_size=6,
    ))
    def test_cone_contraction(self, lam, entries):
        u = PosSeq(entries)
        for m in (ModelSpec.pure_birth(RateFn.power(1.0, 2.0)), ModelSpec.birth_death(1.0, 2.0, kill=0.5)):
            assert mass(apply_J(m, lam, u)).hi <= mass(u).hi * (1.0 + 1e-12)

    def test_resolvent_monotone_in_lambda(self, m_quadratic, m_bd_kill):
        u = PosSeq({0: 1.0, 3: 0.25})
        for m in (m_quadratic, m_bd_kill):
            assert leq(apply_J(m, 2.0, u), apply_J(m, 0.5, u)) is True


class TestDissipativityAudit:
    def test_pure_birth_conservative(self, m_yule):
        rep = dissipativity_audit(m_yule, 32)
        assert not rep.violations
        assert rep.conservative_observed and rep.consistent
        assert all(d == 0.0 for d in rep.deficits)

    def test_kill_deficit(self):
        m = ModelSpec.birth_death(1.0, 1.0, kill=1.0)
        rep = dissipativity_audit(m, 16)
        assert rep.deficits == tuple([1.0] * 17)
        assert not rep.conservative_observed

    def test_violation_flagged(self, m_yule):
        bad = Kernel("table", columns=((0, ((1, 5.0),)),))
        probe = ModelSpec.__new__(ModelSpec)
        object.__setattr__(probe, "name", "bad")
        object.__setattr__(probe, "a", RateFn.power(1.0, 0.0))
        object.__setattr__(probe, "kernel", bad)
        object.__setattr__(probe, "conservative", False)
        object.__setattr__(probe, "stride", 1)
        rep = dissipativity_audit(probe, 4)
        assert rep.violations and rep.violations[0][0] == 0


class TestEqCbBound:
    def test_b_flux_integral_below_input_mass(self, m_two_state, m_yule, m_bd_kill):
        # int_0^t |B U(s) u| ds <= |u| for cone inputs; the integrand is a
        # finite sum of exponentials, integrated exactly per entry
        scipy_integrate = pytest.importorskip("scipy.integrate")
        u = PosSeq({0: 0.25, 1: 0.5, 2: 0.25})
        for m in (m_two_state, m_yule, m_bd_kill):
            for t in (0.5, 2.0):
                val, err = scipy_integrate.quad(
                    lambda s: mass(apply_B(m, apply_U(m, s, u))).lo, 0.0, t, limit=200
                )
                assert val <= mass(u).lo + err + 1e-10


class TestModelJson:
    def test_round_trip(self, zoo):
        for m in zoo:
            doc = model_to_json(m)
            again = model_from_json(json.loads(json.dumps(doc)))
            assert model_to_json(again) == doc

    def test_unknown_fields_rejected(self, m_yule):
        doc = model_to_json(m_yule)
        doc["extra"] = 1
        with pytest.raises(ModelError):
            model_from_json(doc)
        doc = model_to_json(m_yule)
        doc["A"]["scale"] = 2
        with pytest.raises(ModelError):
            model_from_json(doc)

    def test_birth_death_diagonal_mismatch_rejected(self):
        m = ModelSpec.birth_death(1.0, 1.0, kill=0.5)
        doc = model_to_json(m)
        doc["A"] = {"kind": "power", "c": 9.0, "p": 0.0}
        with pytest.raises(ModelError):
            model_from_json(doc)

    def test_wrong_space_rejected(self, m_yule):
        doc = model_to_json(m_yule)
        doc["space"] = "l2"
        with pytest.raises(ModelError):
            model_from_json(doc)
