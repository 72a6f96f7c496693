import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magstark.errors import DomainError, InvalidParameterError
from magstark.model import (
    QUARTER_PI,
    DerivedGeometry,
    FieldParams,
    LocalField,
    PotentialModel,
    ScheduleParams,
    chi_A,
    eval_hF,
    eval_local_field,
    eval_potential,
    hF_envelope,
    logistic,
    potential_envelope,
    tanh_plateau,
    tanh_plateau_complement,
)

SCHED = ScheduleParams()
GEOM = SCHED.geometry(0.3, 1.0)


def hF_mp(x, b, g):
    """Direct extended-precision evaluation of the tanh half-difference."""
    mp.mp.dps = 50
    z = mp.mpc(x, b)
    return 0.5 * (mp.tanh(g.gammaF * (z + g.xbar)) - mp.tanh(g.gammaF * (z - g.xbar)))


class TestFieldParams:
    def test_rejects_nonpositive_B(self):
        with pytest.raises(InvalidParameterError):
            FieldParams(0.0)

    def test_rejects_negative_F_and_b(self):
        with pytest.raises(InvalidParameterError):
            FieldParams(1.0, -0.1)
        with pytest.raises(InvalidParameterError):
            FieldParams(1.0, 0.1, -1.0)

    def test_strip_check(self):
        m = PotentialModel(beta=0.5)
        FieldParams(1.0, 0.3, 0.4).check_strip(m)
        with pytest.raises(DomainError):
            FieldParams(1.0, 0.3, 0.5).check_strip(m)


class TestSchedule:
    def test_defaults_valid(self):
        assert SCHED.problems() == []

    def test_alpha_must_exceed_two(self):
        with pytest.raises(InvalidParameterError, match="alpha"):
            ScheduleParams(alpha=1.5)

    def test_ordering_message(self):
        s = object.__new__(ScheduleParams)
        for k, v in vars(SCHED).items():
            object.__setattr__(s, k, v)
        object.__setattr__(s, "C2", 0.6)
        assert "C2 >= C0 violates x2 < x0 ordering" in s.problems()

    def test_tau_constraint(self):
        with pytest.raises(InvalidParameterError, match="tau"):
            ScheduleParams(tau=4.0)

    @pytest.mark.parametrize("F", [0.05, 0.2, 0.3, 0.5, 0.6])
    def test_geometry_ordering(self, F):
        g = SCHED.geometry(F, 1.0)
        assert 0 < g.x2 < g.x0 < g.x1 < g.xbar
        assert 0 < g.y2 < g.y0 < g.y1 < g.ybar
        assert g.y2 == 2.0

    @pytest.mark.parametrize("F", [0.2, 0.3, 0.4, 0.5, 0.6])
    def test_schedule_b_inside_strip(self, F):
        g = SCHED.geometry(F, 1.0)
        assert g.gammaF * SCHED.b_of(F) < QUARTER_PI

    def test_F_xbar_vanishes(self):
        vals = [F * SCHED.geometry(F, 1.0).xbar for F in (1e-1, 1e-2, 1e-3)]
        assert vals[0] > vals[1] > vals[2]
        assert vals[2] == pytest.approx(SCHED.Cbar * 1e-3**SCHED.eps)


class TestHF:
    def test_center_value(self):
        assert eval_hF(0.0, 0.0, GEOM) == pytest.approx(math.tanh(GEOM.gammaF * GEOM.xbar), rel=1e-14)

    def test_at_edge(self):
        expect = 0.5 * math.tanh(2 * GEOM.gammaF * GEOM.xbar)
        assert eval_hF(GEOM.xbar, 0.0, GEOM) == pytest.approx(expect, rel=1e-14)

    def test_far_tail_against_mpmath(self):
        x = 10 * GEOM.xbar
        v = eval_hF(x, 0.0, GEOM)
        ref = float(mp.re(hF_mp(x, 0.0, GEOM)))
        assert v < math.exp(-2 * GEOM.gammaF * GEOM.xbar)
        assert v == pytest.approx(ref, rel=1e-12)

    def test_real_and_in_unit_interval(self):
        x = np.linspace(-5 * GEOM.xbar, 5 * GEOM.xbar, 2001)
        v = eval_hF(x, 0.0, GEOM)
        assert v.dtype.kind == "f"
        assert np.all((v > 0) & (v < 1))

    def test_domain_error(self):
        with pytest.raises(DomainError):
            eval_hF(0.0, GEOM.max_b(), GEOM)

    @settings(max_examples=60, deadline=None)
    @given(x=st.floats(-20, 20), frac=st.floats(0, 0.95))
    def test_continuation_matches_mpmath(self, x, frac):
        b = frac * GEOM.max_b()
        v = complex(eval_hF(x, b, GEOM))
        ref = complex(hF_mp(x, b, GEOM))
        assert abs(v - ref) <= 1e-12 * max(1.0, abs(ref)) + 1e-300

    def test_no_overflow_at_large_gamma_xbar(self):
        g = ScheduleParams(gamma0=5.0).geometry(0.05, 1.0)
        assert g.gammaF * g.xbar > 100
        x = np.linspace(-3 * g.xbar, 3 * g.xbar, 501)
        for b in (0.0, 0.5 * g.max_b()):
            with np.errstate(over="raise", invalid="raise"):
                v = tanh_plateau(x, b, g.gammaF, g.xbar)
                c = tanh_plateau_complement(x, b, g.gammaF, g.xbar)
            assert np.all(np.isfinite(v)) and np.all(np.isfinite(c))
            np.testing.assert_allclose(v + c, 1.0, atol=1e-14)

    @pytest.mark.parametrize("F", [0.2, 0.25, 0.3, 0.4, 0.5])
    def test_modulus_envelope(self, F):
        g = SCHED.geometry(F, 1.0)
        x = np.linspace(-3 * g.xbar, 3 * g.xbar, 4001)
        for b in (0.0, SCHED.b_of(F), 0.7 * g.max_b()):
            assert np.all(np.abs(eval_hF(x, b, g)) <= hF_envelope(x, b, g) * (1 + 1e-12))


class TestLogistic:
    def test_extremes(self):
        w = np.array([-1000.0, 0.0, 1000.0])
        np.testing.assert_array_equal(logistic(w), [0.0, 0.5, 1.0])

    def test_complex_matches_tanh(self):
        w = np.array([0.3 + 0.2j, -2.0 + 0.5j, 5.0 - 0.1j])
        np.testing.assert_allclose(logistic(w), 0.5 * (1 + np.tanh(w / 2)), rtol=1e-14)


class TestPotential:
    def test_bump_origin(self):
        m = PotentialModel(kind="gaussian-bump", V0=1.7)
        assert eval_potential(0.0, 0.0, 0.0, m) == pytest.approx(-1.7)

    @pytest.mark.parametrize("x,b", [(0.0, 0.0), (2.0, 0.3), (-1.0, 1.0)])
    def test_bump_compact_support(self, x, b):
        m = PotentialModel(kind="gaussian-bump")
        assert eval_potential(x, 1.5 * m.a1, b, m) == 0

    def test_continued_value(self):
        m = PotentialModel(V0=1.0, nu=1.0)
        expect = -math.exp(0.01) * math.exp(-1.0) * complex(math.cos(0.2), -math.sin(0.2))
        v = eval_potential(1.0, 0.0, 0.1, m)
        assert abs(v - expect) < 1e-15

    def test_continued_value_by_taylor_series(self):
        # independent route: sum_k f^(k)(1) (ib)^k / k! for f(x) = -exp(-x^2)
        mp.mp.dps = 40
        f = lambda t: -mp.exp(-t * t)
        ref = mp.taylor(f, 1, 40)
        ib = mp.mpc(0, 0.1)
        val = sum(c * ib**k for k, c in enumerate(ref))
        v = eval_potential(1.0, 0.0, 0.1, PotentialModel(V0=1.0, nu=1.0))
        assert abs(v - complex(val)) < 1e-14

    @pytest.mark.parametrize("kind", ["gaussian-bump", "gaussian-gaussian"])
    def test_b_zero_is_real_formula(self, kind):
        m = PotentialModel(kind=kind, V0=1.3, nu=0.7, a1=1.2)
        xs, ys = np.meshgrid(np.linspace(-4, 4, 40), np.linspace(-2, 2, 25))
        v = eval_potential(xs, ys, 0.0, m)
        assert np.isrealobj(v)
        np.testing.assert_allclose(v, -1.3 * np.exp(-0.7 * xs**2) * m.y_profile(ys), rtol=4e-15, atol=0)
        np.testing.assert_allclose(eval_potential(xs, ys, 1e-300, m), v, rtol=4e-15, atol=0)

    @pytest.mark.parametrize("kind", ["gaussian-bump", "gaussian-gaussian"])
    @pytest.mark.parametrize("b", [0.0, 0.3, 1.2])
    def test_envelope(self, kind, b):
        m = PotentialModel(kind=kind)
        x = np.linspace(-6, 6, 1201)
        for y in (0.0, 0.4, 0.99):
            assert np.all(np.abs(eval_potential(x, y, b, m)) <= potential_envelope(x, b, m) * (1 + 1e-14))
        if kind == "gaussian-bump":
            assert np.all(eval_potential(x, 1.0001 * m.a1, b, m) == 0)

    def test_beta_domain(self):
        with pytest.raises(DomainError):
            eval_potential(0.0, 0.0, 0.5, PotentialModel(beta=0.5))

    def test_invalid_kind(self):
        with pytest.raises(InvalidParameterError):
            PotentialModel(kind="square")

    def test_hash_is_stable_and_sensitive(self):
        assert PotentialModel().model_hash() == PotentialModel().model_hash()
        assert PotentialModel().model_hash() != PotentialModel(V0=2.0).model_hash()


class TestLocalField:
    def test_zero_outside_chi(self):
        assert eval_local_field(1.0, GEOM.ybar * 1.01, 0.0, 0.3, GEOM) == 0

    def test_zero_at_origin(self):
        assert eval_local_field(0.0, 0.0, 0.0, 0.3, GEOM) == 0

    def test_composition(self):
        assert eval_local_field(1.0, 0.0, 0.0, 0.3, GEOM) == pytest.approx(-0.3 * eval_hF(1.0, 0.0, GEOM), rel=1e-15)

    def test_chi_is_closed_indicator(self):
        assert chi_A(GEOM.ybar, GEOM) == 1.0
        assert chi_A(-GEOM.ybar, GEOM) == 1.0
        assert chi_A(np.nextafter(GEOM.ybar, np.inf), GEOM) == 0.0

    @pytest.mark.parametrize("F", [0.2, 0.3, 0.4, 0.5, 0.6])
    def test_sup_scales_like_F_eps(self, F):
        g = SCHED.geometry(F, 1.0)
        x = np.linspace(-4 * g.xbar, 4 * g.xbar, 20001)
        s = np.max(np.abs(F * x * eval_hF(x, 0.0, g)))
        assert s <= SCHED.Cbar * F**SCHED.eps

    def test_local_field_dataclass(self):
        lf = LocalField(0.3, GEOM)
        assert lf.F == 0.3 and isinstance(lf.geom, DerivedGeometry)
