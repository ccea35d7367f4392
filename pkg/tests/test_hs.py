import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modlab.errors import BasisMismatchError
from modlab.hs import (
    AntilinearMap,
    FactorizedSuperOp,
    apply_super,
    center_dimension,
    center_residual,
    conjugate_by,
    expand,
    hs_from_json,
    hs_inner,
    hs_norm,
    hs_to_json,
    lift_left,
    lift_right,
    matrix_unit,
    modular_conjugation,
    reconstruct,
    right_factor_fit,
    super_adjoint,
    super_bound_ok,
    super_compose,
    vec,
    vee,
)
from modlab.operators import build_ladder


def rand(rng, d):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 6)


class TestMatrixUnits:
    def test_single_entry(self):
        x = matrix_unit(0, 1, 3)
        assert x[0, 1] == 1 and np.count_nonzero(x) == 1

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            matrix_unit(3, 0, 3)
        with pytest.raises(IndexError):
            matrix_unit(0, -1, 3)

    def test_orthonormal_examples(self):
        assert hs_inner(matrix_unit(0, 1, 3), matrix_unit(0, 1, 3)) == 1
        assert hs_inner(matrix_unit(0, 1, 3), matrix_unit(1, 0, 3)) == 0

    def test_completeness(self):
        x = rand(np.random.default_rng(0), 5)
        assert np.array_equal(reconstruct(expand(x), 5), x)


class TestInner:
    def test_examples(self):
        assert hs_inner(matrix_unit(0, 0, 2), matrix_unit(0, 0, 2)) == 1
        x = matrix_unit(0, 0, 3) + 2j * matrix_unit(1, 1, 3)
        assert hs_inner(x, x) == 5
        y = rand(np.random.default_rng(1), 3)
        assert hs_inner(1j * x, y) == pytest.approx(-1j * hs_inner(x, y), abs=1e-14)

    def test_mismatch(self):
        with pytest.raises(BasisMismatchError):
            hs_inner(np.eye(2), np.eye(3))

    @settings(max_examples=30, deadline=None)
    @given(dims, seeds)
    def test_positive(self, d, seed):
        x = rand(np.random.default_rng(seed), d)
        v = hs_inner(x, x)
        assert v.imag == 0 and v.real >= 0
        assert hs_norm(x) == pytest.approx(np.sqrt(v.real))


class TestSuperOps:
    def test_identity_pair(self):
        x = rand(np.random.default_rng(2), 4)
        assert np.array_equal(vee(np.eye(4), np.eye(4))(x), x)

    def test_projector_pair(self):
        s = vee(matrix_unit(0, 0, 3), matrix_unit(1, 1, 3))
        assert np.array_equal(s(matrix_unit(0, 1, 3)), matrix_unit(0, 1, 3))

    def test_ladder_pair(self):
        a, _ = build_ladder(3)
        assert np.allclose(vee(a, a)(matrix_unit(1, 1, 3)), matrix_unit(0, 0, 3), atol=0)

    def test_adjoint_and_compose_of_ladders(self):
        a, ad = build_ladder(5)
        s = super_adjoint(lift_left(a))
        assert np.array_equal(s.left, ad) and np.array_equal(s.right, np.eye(5))
        c = super_compose(lift_left(a), lift_left(ad))
        assert np.array_equal(c.left, a @ ad)

    def test_dense_matches_action(self):
        rng = np.random.default_rng(3)
        a, b, x = rand(rng, 4), rand(rng, 4), rand(rng, 4)
        s = vee(a, b)
        assert np.allclose(s.dense() @ vec(x), vec(apply_super(s, x)), atol=1e-12)

    def test_mismatch(self):
        with pytest.raises(BasisMismatchError):
            FactorizedSuperOp(np.eye(2), np.eye(3))
        with pytest.raises(BasisMismatchError):
            apply_super(vee(np.eye(2), np.eye(2)), np.eye(3))

    @settings(max_examples=30, deadline=None)
    @given(dims, seeds)
    def test_adjoint_property(self, d, seed):
        rng = np.random.default_rng(seed)
        s = vee(rand(rng, d), rand(rng, d))
        x, y = rand(rng, d), rand(rng, d)
        lhs = hs_inner(s(x), y)
        rhs = hs_inner(x, super_adjoint(s)(y))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    @settings(max_examples=30, deadline=None)
    @given(dims, seeds)
    def test_compose_law_and_associativity(self, d, seed):
        rng = np.random.default_rng(seed)
        s1, s2, s3 = (vee(rand(rng, d), rand(rng, d)) for _ in range(3))
        x = rand(rng, d)
        assert np.allclose(super_compose(s1, s2)(x), s1(s2(x)), atol=1e-10)
        l = super_compose(super_compose(s1, s2), s3)
        r = super_compose(s1, super_compose(s2, s3))
        scale = max(1.0, np.abs(l.left).max(), np.abs(l.right).max())
        assert np.abs(l.left - r.left).max() <= 1e-12 * scale
        assert np.abs(l.right - r.right).max() <= 1e-12 * scale

    @settings(max_examples=30, deadline=None)
    @given(dims, seeds)
    def test_norm_bound(self, d, seed):
        rng = np.random.default_rng(seed)
        assert super_bound_ok(vee(rand(rng, d), rand(rng, d)), rand(rng, d))


class TestLeftRight:
    def test_lift_left_identity(self):
        x = rand(np.random.default_rng(4), 3)
        assert np.array_equal(lift_left(np.eye(3))(x), x)

    def test_lift_right_ladder(self):
        # (I v B) X = X B^H: X_00 a^H = |0><a 0| = 0, while X_00 (a^H)^H = X_00 a = X_01
        a, ad = build_ladder(3)
        x00 = matrix_unit(0, 0, 3)
        assert np.array_equal(lift_right(a)(x00), np.zeros((3, 3)))
        assert np.array_equal(lift_right(ad)(x00), matrix_unit(0, 1, 3))

    def test_commutant(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            l = lift_left(rand(rng, 4)).dense()
            r = lift_right(rand(rng, 4)).dense()
            assert np.abs(l @ r - r @ l).max() <= 1e-12

    def test_center_scalar_only(self):
        assert center_residual(3, 20, np.random.default_rng(0)) <= 1e-12
        assert center_dimension(2) == 1
        assert center_dimension(3) == 1

    def test_non_scalar_has_no_right_partner(self):
        a, _ = build_ladder(4)
        _, resid = right_factor_fit(lift_left(a).dense(), 4)
        assert resid > 0.1


class TestModularConjugation:
    def test_examples(self):
        j = modular_conjugation(3)
        assert np.array_equal(j(matrix_unit(0, 1, 3)), matrix_unit(1, 0, 3))
        assert np.array_equal(j(1j * matrix_unit(0, 0, 3)), -1j * matrix_unit(0, 0, 3))

    def test_is_adjoint_and_involution(self):
        j = modular_conjugation(4)
        x = rand(np.random.default_rng(6), 4)
        assert np.array_equal(j(x), x.conj().T)
        assert np.array_equal(j.squared(), np.eye(16))

    def test_swaps_algebras(self):
        rng = np.random.default_rng(7)
        j = modular_conjugation(4)
        a = rand(rng, 4)
        m = conjugate_by(j, lift_left(a))
        assert np.abs(m - lift_right(a).dense()).max() <= 1e-12

    @settings(max_examples=30, deadline=None)
    @given(dims, seeds)
    def test_antiunitary(self, d, seed):
        rng = np.random.default_rng(seed)
        j = modular_conjugation(d)
        x, y = rand(rng, d), rand(rng, d)
        assert abs(hs_inner(j(x), j(y)) - hs_inner(y, x)) <= 1e-12 * max(1.0, hs_norm(x) * hs_norm(y))
        assert hs_norm(j(x)) == pytest.approx(hs_norm(x), rel=1e-14)

    def test_adjoint_of_antilinear(self):
        rng = np.random.default_rng(8)
        t = AntilinearMap(rand(rng, 9))
        x, y = rand(rng, 3), rand(rng, 3)
        # <T x, y> = conj(<x, T* y>)
        assert hs_inner(t(x), y) == pytest.approx(np.conj(hs_inner(x, t.adjoint()(y))), abs=1e-10)

    def test_mismatch(self):
        with pytest.raises(BasisMismatchError):
            modular_conjugation(3)(np.eye(2))


def test_json_roundtrip():
    x = rand(np.random.default_rng(9), 3)
    assert np.array_equal(hs_from_json(hs_to_json(x)), x)
    assert hs_to_json(matrix_unit(0, 1, 2))[1] == [1.0, 0.0]
