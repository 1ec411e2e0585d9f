import math

import numpy as np
import pytest

from substochastic.honesty import (
    DISHONEST,
    HONEST,
    a0_on_integral,
    a_frak,
    abar_resolvent,
    ahat_dp,
    delta_by_routes,
    hereditary_audit,
    honesty_verdict,
    mass_loss_delta,
    report_from_json,
    report_to_json,
    subsolution_check,
    xi,
    xi_dual,
)
from substochastic.l1 import PosSeq, SignedSeq
from substochastic.minimal import EvolveParams, semigroup_V

e0 = PosSeq.basis(0)
EXP1 = math.exp(-1.0)
EXP2 = math.exp(-2.0)

# frozen from the partial-product oracle below and the closed form pi/sinh(pi)
XI_QUADRATIC = 0.2720290549821331
A_TWO_STATE = 1.0 - 2.0 * EXP1 + EXP2  # = 0.3995764003594543


def product_oracle(lam: float, factors: int = 1_000_000) -> tuple[float, float]:
    """Partial products of m^2/(m^2+lam) with the reciprocal-square tail
    bound: an independent bracket for the quadratic-cascade defect."""
    m = np.arange(1.0, factors + 1.0)
    log_p = -np.log1p(lam / (m * m)).sum()
    upper = math.exp(log_p)
    lower = upper * math.exp(-lam / factors)  # sum_{m>K} 1/m^2 <= 1/K
    return lower, upper


class TestAFrak:
    def test_conservative_zero(self, m_yule):
        u = PosSeq({0: 0.3, 7: 0.7})
        assert a_frak(m_yule, u) == 0.0

    def test_two_state_column_deficit(self, m_two_state):
        assert a_frak(m_two_state, PosSeq.basis(1)) == 2.0
        assert a_frak(m_two_state, PosSeq.basis(0)) == 0.0

    def test_zero_and_signed(self, m_two_state):
        assert a_frak(m_two_state, PosSeq.zero()) == 0.0
        s = SignedSeq(PosSeq.basis(1, 2.0), PosSeq.basis(1, 0.5))
        assert a_frak(m_two_state, s) == pytest.approx(3.0)


class TestA0OnIntegral:
    def test_t_zero(self, m_two_state):
        b = a0_on_integral(m_two_state, 0.0, e0)
        assert b.lo == b.hi == 0.0

    def test_two_state_closed_form(self, m_two_state):
        b = a0_on_integral(m_two_state, 1.0, e0)
        assert b.mid == pytest.approx(A_TWO_STATE, abs=1e-10)

    def test_yule_mass_preserving(self, m_yule):
        b = a0_on_integral(m_yule, 1.0, e0)
        assert b.lo >= 0.0 and b.hi <= 1e-6


class TestAbarResolvent:
    def test_conservative_identically_zero(self, m_quadratic):
        r = abar_resolvent(m_quadratic, 1.0, e0)
        assert r.bracket.lo == r.bracket.hi == 0.0

    def test_two_state_value(self, m_two_state):
        r = abar_resolvent(m_two_state, 1.0, e0)
        assert r.bracket.mid == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert r.converged

    def test_zero_kernel_single_term(self, m_pure_loss):
        r = abar_resolvent(m_pure_loss, 1.0, e0)
        assert r.bracket.mid == pytest.approx(0.5, abs=1e-12)  # deficit 1 at (1+1)^-1
        assert r.terms_used == 1


class TestXi:
    def test_quadratic_against_product_oracle(self, m_quadratic):
        lo, hi = product_oracle(1.0)
        assert lo <= XI_QUADRATIC <= hi and hi - lo < 1e-6
        assert math.pi / math.sinh(math.pi) == pytest.approx(XI_QUADRATIC, abs=1e-15)
        x = xi(m_quadratic, 1.0, e0)
        assert x.certification == "product-bracket"
        assert x.bracket.width <= 1e-6
        assert abs(x.bracket.mid - XI_QUADRATIC) <= 1e-6

    def test_yule_certified_zero(self, m_yule):
        x = xi(m_yule, 1.0, e0)
        assert x.bracket.hi <= 1e-6 and x.bracket.lo == 0.0
        # the norm trail follows the telescoping product 1/(n+1)
        for n, v in enumerate(x.j_norms[:6]):
            assert v == pytest.approx(1.0 / (n + 1), rel=1e-12)

    def test_zero_kernel(self, m_pure_loss):
        assert xi(m_pure_loss, 1.0, e0).bracket == type(xi(m_pure_loss, 1.0, e0).bracket)(0.0, 0.0)

    def test_lambda_dependence_on_dishonest_data(self, m_quadratic):
        # the defect values are genuinely lambda-dependent (only the zero set
        # is not): decreasing in lambda
        vals = [xi(m_quadratic, lam, e0).bracket.mid for lam in (0.5, 1.0, 2.0)]
        assert vals[0] > vals[1] > vals[2] > 0.0

    def test_closed_models_vanish(self, m_two_state, m_closed_chain):
        for m in (m_two_state, m_closed_chain):
            x = xi(m, 1.0, e0)
            assert x.bracket.hi <= 1e-9

    def test_norms_nonincreasing(self, m_bd_kill):
        x = xi(m_bd_kill, 1.0, PosSeq({0: 0.5, 2: 0.5}))
        assert all(b <= a + 1e-13 for a, b in zip(x.j_norms, x.j_norms[1:]))

    def test_thinned_cascade_certified_zero(self):
        # birth rate strictly below the diagonal tail: the per-step penalty
        # keeps the defect at zero even though the diagonal alone explodes
        from substochastic.models import Kernel, ModelSpec, RateFn

        m = ModelSpec(
            "thinned",
            RateFn.power(1.0, 2.0),
            Kernel("pure_birth", birth=RateFn.power(0.5, 2.0)),
            conservative=False,
        )
        x = xi(m, 1.0, e0)
        assert x.bracket.hi == 0.0 and x.certification == "divergent-rate-sum"

    def test_table_head_positive_defect(self):
        # diagonal with an inflated head but conservative quadratic tail:
        # the defect picks up the exact head factor r_0/(lam+a_0) = 1/6
        from substochastic.models import Kernel, ModelSpec, RateFn

        m = ModelSpec(
            "head_kill",
            RateFn.table([5.0], tail_c=1.0, tail_p=2.0),
            Kernel("pure_birth", birth=RateFn.power(1.0, 2.0)),
            conservative=False,
        )
        x = xi(m, 1.0, e0)
        # oracle: (1/6) * prod_{m>=1} m^2/(m^2+1) = (1/6) * (pi/sinh(pi)) / (1/2)
        expected = (1.0 / 6.0) * XI_QUADRATIC * 2.0
        assert x.certification == "product-bracket"
        assert x.bracket.lo <= expected <= x.bracket.hi
        assert x.bracket.width <= 1e-6
        assert honesty_verdict(m, e0).verdict == DISHONEST


class TestXiDual:
    def test_zero_kernel_dies_immediately(self, m_pure_loss):
        dw = xi_dual(m_pure_loss, 1.0, 16, 3)
        assert max(dw.values) == 0.0

    def test_quadratic_matches_primal(self, m_quadratic):
        n = 1 << 20
        dw = xi_dual(m_quadratic, 1.0, n, n)
        assert dw.residual <= 1e-8
        x = xi(m_quadratic, 1.0, e0).bracket.mid
        assert dw.values[0] == pytest.approx(x, abs=1e-6)

    def test_yule_vanishes_entrywise(self, m_yule):
        n = 200_000
        dw = xi_dual(m_yule, 1.0, n, n)
        assert max(dw.values[:10]) <= 1e-4

    def test_monotone_in_iterations(self, m_quadratic):
        a = xi_dual(m_quadratic, 1.0, 4096, 10)
        b = xi_dual(m_quadratic, 1.0, 4096, 100)
        assert all(y <= x + 1e-15 for x, y in zip(a.values, b.values))
        assert all(v <= 1.0 + 1e-15 for v in a.values)


class TestAhat:
    def test_conservative_zero(self, m_yule):
        r = ahat_dp(m_yule, 1.0, e0)
        assert r.bracket.lo == r.bracket.hi == 0.0

    def test_two_state_matches_a0(self, m_two_state):
        r = ahat_dp(m_two_state, 1.0, e0)
        assert r.bracket.mid == pytest.approx(A_TWO_STATE, abs=1e-8)
        assert r.bracket.width <= 1e-7

    def test_zero_kernel_single_term(self, m_pure_loss):
        r = ahat_dp(m_pure_loss, 1.0, e0)
        assert r.bracket.mid == pytest.approx(1.0 - EXP1, abs=1e-8)

    def test_dominated_by_a0(self, m_two_state, m_bd_kill):
        for m, t in ((m_two_state, 1.0), (m_bd_kill, 0.5), (m_bd_kill, 2.0)):
            ah = ahat_dp(m, t, e0)
            a0 = a0_on_integral(m, t, e0)
            assert ah.bracket.lo <= a0.hi + 1e-9


class TestMassLossDelta:
    def test_closed_model_honest(self, m_two_state):
        d = mass_loss_delta(m_two_state, 1.0, e0)
        assert d.bracket.lo >= -1e-8 and d.bracket.hi <= 0.0

    def test_yule_flat_zero(self, m_yule):
        for t in (0.5, 1.0, 2.0, 5.0):
            d = mass_loss_delta(m_yule, t, e0)
            assert d.bracket.lo >= -1e-6 and d.bracket.hi <= 0.0

    def test_quadratic_strictly_negative(self, m_quadratic):
        d = mass_loss_delta(m_quadratic, 1.0, e0, params=EvolveParams(step_budget=400_000))
        assert d.bracket.hi < -0.25

    def test_nonincreasing_in_t(self, m_bd_kill, m_two_state):
        for m in (m_bd_kill, m_two_state):
            brs = [mass_loss_delta(m, t, e0).bracket for t in (0.25, 0.75, 1.5)]
            for b1, b2 in zip(brs, brs[1:]):
                assert b2.lo <= b1.hi + 1e-9


class TestRouteEquivalence:
    def test_two_state(self, m_two_state):
        res, dp = delta_by_routes(m_two_state, 1.0, e0)
        assert abs(res.bracket.mid - dp.bracket.mid) <= 1e-8
        assert res.functional.mid == pytest.approx(A_TWO_STATE, abs=1e-8)
        assert dp.functional.mid == pytest.approx(A_TWO_STATE, abs=1e-8)

    def test_kill_walk(self, m_bd_kill):
        res, dp = delta_by_routes(m_bd_kill, 1.0, e0)
        assert abs(res.bracket.mid - dp.bracket.mid) <= 1e-6


class TestVerdicts:
    def test_yule_honest(self, m_yule):
        rep = honesty_verdict(m_yule, e0)
        assert rep.verdict == HONEST
        assert rep.evidence["lambda_sweep_consistent"]

    def test_quadratic_dishonest(self, m_quadratic):
        rep = honesty_verdict(m_quadratic, e0)
        assert rep.verdict == DISHONEST
        assert rep.xi_bracket.lo > 0.27 and rep.xi_bracket.hi < 0.28

    def test_zero_kernel_honest(self, m_pure_loss):
        assert honesty_verdict(m_pure_loss, e0).verdict == HONEST

    def test_rejects_zero_input(self, m_yule):
        with pytest.raises(ValueError):
            honesty_verdict(m_yule, PosSeq.zero())

    def test_flow_invariance_of_honesty(self, m_yule):
        for t in (0.5, 1.5):
            v, _, _ = semigroup_V(m_yule, t, e0)
            trimmed = PosSeq({k: x for k, x in v.entries.items() if x > 1e-12})
            assert honesty_verdict(m_yule, trimmed).verdict == HONEST

    def test_report_json_round_trip(self, m_quadratic):
        rep = honesty_verdict(m_quadratic, e0, dual_check=False)
        text = report_to_json(rep)
        again = report_from_json(text)
        assert again.xi_bracket == rep.xi_bracket
        assert again.verdict == rep.verdict
        assert report_to_json(again) == text


class TestSubsolution:
    def test_two_state_certificate(self, m_two_state):
        r = subsolution_check(m_two_state, 1.0, PosSeq({0: 1.0, 1: 1.0}))
        assert r.holds is True and r.implies_honest
        assert honesty_verdict(m_two_state, PosSeq({0: 1.0, 1: 1.0})).verdict == HONEST

    def test_support_mismatch_no_conclusion(self, m_quadratic):
        r = subsolution_check(m_quadratic, 1.0, e0)
        assert r.holds is False and not r.implies_honest

    def test_zero_kernel_holds(self, m_pure_loss):
        r = subsolution_check(m_pure_loss, 1.0, PosSeq({0: 0.5, 2: 0.5}))
        assert r.holds is True


class TestHereditary:
    def test_yule_subelements_honest(self, m_yule):
        rep = hereditary_audit(m_yule, 1.0, PosSeq.basis(0), samples=25, seed=2024)
        assert rep.all_honest and rep.samples == 25

    def test_vacuous_on_zero(self, m_yule):
        rep = hereditary_audit(m_yule, 1.0, PosSeq.zero(), samples=5, seed=1)
        assert rep.samples == 0

    def test_zero_kernel_subelements_honest(self, m_pure_loss):
        v = PosSeq({0: 0.5, 3: 0.5})
        rep = hereditary_audit(m_pure_loss, 1.0, v, samples=10, seed=3)
        assert rep.all_honest

    def test_rejects_dishonest_base(self, m_quadratic):
        with pytest.raises(ValueError):
            hereditary_audit(m_quadratic, 1.0, e0, samples=3, seed=1)


class TestHighSupportWindow:
    def test_delta_for_walk_started_away_from_origin(self, m_bd_kill):
        # exercises the expansion window when its floor sits above state 0
        u = PosSeq.basis(20)
        d = mass_loss_delta(m_bd_kill, 0.5, u)
        assert d.bracket.lo >= -1e-6 and d.bracket.hi <= 0.0
        ah = ahat_dp(m_bd_kill, 0.5, u)
        a0 = a0_on_integral(m_bd_kill, 0.5, u)
        assert ah.bracket.mid == pytest.approx(a0.mid, abs=1e-7)
