import math
import warnings

import numpy as np
import pytest
from scipy.integrate import dblquad

from magstark.discretization import (
    BasisSpec,
    ComplexOperator,
    QuadratureWarning,
    assemble_H,
    assemble_H2,
    assemble_HL,
    hermite_functions,
    ladder_matrices,
    potential_block,
    quad_block_1d,
    separable_block,
)
from magstark.eigen import eigvals_dense
from magstark.errors import DomainError, InvalidParameterError
from magstark.model import DerivedGeometry, FieldParams, PotentialModel, ScheduleParams

from oracles import hermite_fn, separable_entry

SMALL = BasisSpec(Nx=12, Ny=12)
BUMP = PotentialModel(kind="gaussian-bump", V0=1.0)


class TestBasisSpec:
    def test_cap(self):
        with pytest.raises(InvalidParameterError, match="cap"):
            BasisSpec(Nx=60, Ny=60)

    def test_quadrature_order(self):
        with pytest.raises(InvalidParameterError, match="Qx"):
            BasisSpec(Nx=10, Ny=10, Qx=10)

    def test_minimum_size(self):
        with pytest.raises(InvalidParameterError):
            BasisSpec(Nx=1, Ny=4)

    def test_for_field_fills_scales(self):
        b = BasisSpec(Nx=6, Ny=8).for_field(4.0)
        assert b.lx == b.ly == 0.5
        assert (b.Qx, b.Qy) == (24, 32)

    def test_bump(self):
        b = BasisSpec(Nx=6, Ny=8).bumped(4)
        assert (b.Nx, b.Ny) == (10, 12)


class TestLadder:
    @pytest.mark.parametrize("l", [0.5, 1.0, 1.7])
    def test_elements(self, l):
        M = ladder_matrices(10, l)
        assert M["X"][0, 1] == pytest.approx(l / math.sqrt(2))
        n = np.arange(10)
        np.testing.assert_allclose(np.diag(M["X2"]), l * l * (n + 0.5), rtol=1e-15)
        np.testing.assert_allclose(np.diag(M["P2"]), (n + 0.5) / l**2, rtol=1e-15)

    def test_P_is_imaginary_antisymmetric(self):
        P = ladder_matrices(8, 1.3)["P"]
        assert np.all(P.real == 0)
        np.testing.assert_allclose(P, -P.T)

    def test_squares_agree_away_from_edge(self):
        M = ladder_matrices(9, 0.8)
        np.testing.assert_allclose((M["X"] @ M["X"])[:-1, :-1], M["X2"][:-1, :-1], atol=1e-14)
        np.testing.assert_allclose((M["P"] @ M["P"]).real[:-1, :-1], M["P2"][:-1, :-1], atol=1e-14)

    def test_rejects_small_N(self):
        with pytest.raises(InvalidParameterError):
            ladder_matrices(1, 1.0)

    def test_hermite_functions_match_textbook(self):
        t = np.linspace(-6, 6, 13)
        H = hermite_functions(8, t)
        ref = np.array([[hermite_fn(n, x, 1.0) for x in t] for n in range(8)])
        np.testing.assert_allclose(H, ref, atol=1e-14)

    def test_hermite_functions_far_tail_finite(self):
        H = hermite_functions(60, np.array([40.0, 200.0]))
        assert np.all(np.isfinite(H))
        assert np.all(np.abs(H) < 1e-100)


class TestLandau:
    def test_lowest_level_B1(self):
        lam = eigvals_dense(assemble_HL(BasisSpec(16, 16, lx=1.0, ly=1.0), 1.0)).real
        assert lam.min() == pytest.approx(1.0, abs=1e-6)

    def test_lowest_level_B2(self):
        l = 1 / math.sqrt(2)
        lam = eigvals_dense(assemble_HL(BasisSpec(16, 16, lx=l, ly=l), 2.0)).real
        assert lam.min() == pytest.approx(2.0, abs=1e-5)

    def test_degeneracy_grows(self):
        counts = []
        for N in (8, 16, 24):
            lam = eigvals_dense(assemble_HL(BasisSpec(N, N, lx=1.0, ly=1.0), 1.0)).real
            counts.append(int(np.sum(np.abs(lam - 1.0) < 0.05)))
        assert counts == sorted(counts) and counts[-1] > counts[0]

    def test_real_symmetric(self):
        H = assemble_HL(SMALL, 1.0)
        assert np.all(H.entries.imag == 0)
        assert H.symmetry_defect() == 0.0


class TestAssembleH:
    def test_free_problem_is_scalar_shift(self):
        F, b = 0.3, 0.4
        H = assemble_H(FieldParams(1.0, F, b), PotentialModel(V0=0.0), SMALL)
        H0 = assemble_H(FieldParams(1.0, F, 0.0), PotentialModel(V0=0.0), SMALL)
        np.testing.assert_array_equal(H.entries.real, H0.entries.real)
        np.testing.assert_array_equal(H.entries - H0.entries, -1j * F * b * np.eye(SMALL.dim))
        lam = eigvals_dense(H)
        assert np.max(np.abs(lam.imag + b * F)) <= 1e-12 * H.norm_max()

    def test_zero_field_real_symmetric(self, default_model):
        H = assemble_H(FieldParams(1.0), default_model, SMALL)
        assert np.all(H.entries.imag == 0)
        assert H.hermiticity_defect() <= 1e-12

    @pytest.mark.parametrize("model", [PotentialModel(), BUMP], ids=["gauss", "bump"])
    @pytest.mark.parametrize("b", [0.0, 0.3])
    def test_complex_symmetry(self, model, b):
        H = assemble_H(FieldParams(1.0, 0.3, b), model, SMALL)
        assert H.symmetry_defect() <= 1e-12
        if b == 0:
            assert H.hermiticity_defect() <= 1e-12

    def test_shift_identity(self, default_model):
        F, b = 0.35, 0.3
        Hb = assemble_H(FieldParams(1.0, F, b), default_model, SMALL)
        H0 = assemble_H(FieldParams(1.0, F, 0.0), default_model, SMALL)
        basis = SMALL.for_field(1.0)
        dV = potential_block(default_model, b, basis).entries - potential_block(default_model, 0.0, basis).entries
        diff = Hb.entries - H0.entries - dV
        np.testing.assert_allclose(diff, -1j * F * b * np.eye(SMALL.dim), atol=1e-14)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            assemble_H(FieldParams(1.0, 0.3, 0.6), PotentialModel(beta=0.5), SMALL)

    def test_ground_entry_against_2d_quadrature(self):
        b = 0.3
        m = PotentialModel()
        M = potential_block(m, b, SMALL.for_field(1.0)).entries
        phi2 = lambda t: hermite_fn(0, t, 1.0) ** 2
        f = lambda y, x, part: part(m.V0 * -np.exp(-m.nu * (x + 1j * b) ** 2)) * math.exp(-y * y) * phi2(x) * phi2(y)
        re = dblquad(lambda y, x: f(y, x, np.real), -12, 12, -12, 12, epsabs=1e-13, epsrel=1e-12)[0]
        im = dblquad(lambda y, x: f(y, x, np.imag), -12, 12, -12, 12, epsabs=1e-13, epsrel=1e-12)[0]
        assert abs(M[0, 0] - complex(re, im)) < 1e-9

    def test_basis_convergence(self, default_model):
        lows = []
        for N in (20, 24):
            lam = eigvals_dense(assemble_H(FieldParams(1.0), default_model, BasisSpec(N, N))).real
            lows.append(lam.min())
        assert abs(lows[0] - lows[1]) < 1e-6

    def test_metadata(self, default_model):
        H = assemble_H(FieldParams(1.0, 0.2, 0.1), default_model, SMALL)
        assert H.metadata["kind"] == "H"
        assert H.metadata["model_hash"] == default_model.model_hash()
        assert H.metadata["basis"].lx == 1.0


class TestPotentialBlock:
    def test_unit_function_is_identity(self):
        M = separable_block(np.ones_like, np.ones_like, SMALL.for_field(1.0))
        np.testing.assert_allclose(M, np.eye(SMALL.dim), atol=1e-12)

    def test_linear_function_is_X(self):
        basis = SMALL.for_field(1.3)
        M = separable_block(lambda x: x, np.ones_like, basis)
        X = ladder_matrices(basis.Nx, basis.lx)["X"]
        np.testing.assert_allclose(M, np.kron(X, np.eye(basis.Ny)), atol=1e-10)

    def test_bump_entry_against_adaptive_quadrature(self):
        basis = SMALL.for_field(1.0)
        M = potential_block(BUMP, 0.0, basis).entries
        fy = lambda y: BUMP.y_profile(np.array([y]))[0]
        ref = -BUMP.V0 * separable_entry(lambda x: math.exp(-x * x), fy, (0, 0), (0, 0), basis.Ny, 1.0,
                                         y_interval=(-1.0, 1.0))
        assert abs(M[0, 0] - ref) < 1e-9

    def test_block_is_symmetric(self):
        basis = SMALL.for_field(1.0)
        M = potential_block(BUMP, 0.4, basis).entries
        np.testing.assert_allclose(M, M.T, atol=1e-15)

    def test_doubling_panels_stable(self):
        basis = SMALL.for_field(1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("error", QuadratureWarning)
            M1 = potential_block(BUMP, 0.3, basis).entries
        doubled = BasisSpec(basis.Nx, basis.Ny, basis.lx, basis.ly, 2 * basis.Qx, 2 * basis.Qy)
        M2 = potential_block(BUMP, 0.3, doubled).entries
        assert np.max(np.abs(M1 - M2)) < 1e-8

    def test_underresolved_quadrature_warns(self):
        with pytest.warns(QuadratureWarning):
            quad_block_1d(20, 1.0, lambda x: np.cos(40 * x), panels=2)

    def test_unresolved_basis_rejected(self):
        with pytest.raises(InvalidParameterError):
            potential_block(BUMP, 0.0, SMALL)


class TestAssembleH2:
    def test_zero_field_matches_H(self, default_model, default_schedule):
        H2 = assemble_H2(FieldParams(1.0), default_model, default_schedule, SMALL)
        H = assemble_H(FieldParams(1.0), default_model, SMALL)
        np.testing.assert_array_equal(H2.entries, H.entries)

    def test_no_cutoff_limit_matches_H(self, default_model):
        inf = math.inf
        geom = DerivedGeometry(gammaF=1.0, xbar=inf, x0=inf, x1=inf, x2=inf,
                               y0=inf, y1=inf, y2=inf, ybar=inf)
        f = FieldParams(1.0, 0.3, 0.2)
        H2 = assemble_H2(f, default_model, None, SMALL, geometry=geom)
        H = assemble_H(f, default_model, SMALL)
        np.testing.assert_allclose(H2.entries, H.entries, atol=1e-12)

    def test_symmetry(self, default_model, default_schedule):
        F = 0.3
        for b in (0.0, default_schedule.b_of(F)):
            H2 = assemble_H2(FieldParams(1.0, F, b), default_model, default_schedule, SMALL)
            assert H2.symmetry_defect() <= 1e-12
            if b == 0:
                assert H2.hermiticity_defect() <= 1e-12

    def test_strip_enforced(self, default_model, default_schedule):
        g = default_schedule.geometry(0.3, 1.0)
        with pytest.raises(DomainError):
            assemble_H2(FieldParams(1.0, 0.3, g.max_b()), default_model, default_schedule, SMALL)


class TestDump:
    def test_round_trip(self, tmp_path, default_model):
        H = assemble_H(FieldParams(1.0, 0.3, 0.2), default_model, BasisSpec(4, 5))
        p = tmp_path / "h.bin"
        H.dump(p)
        raw = p.read_bytes()
        assert len(raw) == 16 + 16 * H.dim**2
        assert int.from_bytes(raw[:8], "little") == H.dim
        np.testing.assert_array_equal(ComplexOperator.load(p).entries, H.entries)

    def test_real_flag(self):
        op = ComplexOperator(np.eye(3))
        assert int.from_bytes(op.to_bytes()[8:16], "little") & 1 == 1

    def test_immutable(self):
        op = ComplexOperator(np.eye(2))
        with pytest.raises(ValueError):
            op.entries[0, 0] = 5
