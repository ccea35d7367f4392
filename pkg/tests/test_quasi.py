import json
import math
import warnings

import numpy as np
import pytest

from modlab.errors import DomainError, IdealMembershipWarning
from modlab.modular import density_matrix, gibbs_weights, interior_unit_pairs, kms_residual
from modlab.operators import build_ladder
from modlab.quasi import (
    SeminormSpec,
    boundedness_check,
    classify_sweep,
    flow_domain_check,
    ideal_membership,
    load_weight_family,
    operator_rule,
    quasi_dynamics,
    quasi_kms_residual,
    quasi_modular,
    quasi_state,
    quasi_states,
    rank_one,
    seminorm_eval,
    structure_property_checks,
    tomita_orbit_residual,
    weight_family,
)


def zeta2(**kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IdealMembershipWarning)
        return weight_family("zeta", {"s": 2}, **kw)


class TestSweep:
    def test_growing(self):
        d = [16, 32, 64, 128]
        assert classify_sweep(d, [x ** 1.0 for x in d]).verdict == "growing"

    def test_converged(self):
        d = [16, 32, 64, 128]
        s = classify_sweep(d, [1 - 1 / x ** 2 for x in d])
        assert s.verdict == "converged"

    def test_constant_and_zero(self):
        assert classify_sweep([1, 2, 3], [0, 0, 0]).verdict == "converged"
        assert classify_sweep([1, 2, 3], [5, 5, 5]).exponent == 0.0

    def test_bad_input(self):
        with pytest.raises(ValueError):
            classify_sweep([1, 2], [1, 2])
        with pytest.raises(ValueError):
            classify_sweep([3, 2, 1], [1, 2, 3])


class TestOperatorRules:
    def test_names(self):
        d = 5
        assert np.allclose(operator_rule("I")(d), np.eye(d))
        assert np.allclose(np.diag(operator_rule("N^2")(d)).real, np.arange(d) ** 2)
        assert np.allclose(operator_rule("a")(d), build_ladder(d)[0])
        assert operator_rule("X_{1,2}")(d)[1, 2] == 1
        assert operator_rule("diag((n+1)^-2)")(d)[1, 1] == pytest.approx(0.25)

    def test_unknown(self):
        with pytest.raises(DomainError):
            operator_rule("Q^7")

    def test_rank_one_support(self):
        with pytest.raises(DomainError):
            rank_one([1, 0, 0], [1])(2)


class TestWeightFamilies:
    def test_zeta_first_weight(self):
        fam = zeta2(check_phi=False)
        assert fam.raw(1)[0] == pytest.approx(6 / math.pi ** 2, abs=1e-14)
        w = fam.weights(16)
        assert w.weights.sum() == pytest.approx(1.0, abs=1e-14)

    def test_gibbs_matches_modular(self):
        fam = weight_family("gibbs", beta=1.5)
        assert np.abs(fam.weights(12).weights - gibbs_weights(12, 1.5).weights).max() <= 1e-15

    def test_rejections(self):
        with pytest.raises(DomainError):
            weight_family("zeta", {"s": 1.0})
        with pytest.raises(DomainError):
            weight_family("custom", {"weights": [0.5, 0.0, 0.5]})
        with pytest.raises(DomainError):
            weight_family("gibbs", beta=-1)
        with pytest.raises(DomainError):
            weight_family("mystery")

    def test_zeta_phi_outside_ideal_warns(self):
        with pytest.warns(IdealMembershipWarning):
            fam = weight_family("zeta", {"s": 2})
        assert fam.phi_diagnostic.verdict == "non-member"

    def test_require_phi_raises(self):
        with pytest.raises(DomainError):
            weight_family("zeta", {"s": 2}, require_phi_in_ideal=True)

    def test_gibbs_phi_in_ideal(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error", IdealMembershipWarning)
            fam = weight_family("gibbs", beta=1.0)
        assert fam.phi_diagnostic.verdict == "member"

    def test_custom_truncation(self):
        fam = weight_family("custom", {"weights": [3, 2, 1]}, check_phi=False)
        assert np.allclose(fam.weights(3).weights, [0.5, 1 / 3, 1 / 6])
        with pytest.raises(DomainError):
            fam.raw(4)

    def test_loader(self, tmp_path):
        p = tmp_path / "w.json"
        p.write_text(json.dumps({"kind": "gibbs", "beta": 2.0}))
        fam = load_weight_family(p)
        assert fam.beta == 2.0 and fam.kind == "gibbs"


class TestSeminorms:
    def test_identity_exp_bounded(self):
        assert seminorm_eval("I", SeminormSpec(k=1)).verdict == "converged"

    def test_number_power_family_grows(self):
        assert seminorm_eval("N", SeminormSpec("power", 0.5, k=1)).verdict == "growing"

    def test_ff_variant(self):
        s = seminorm_eval("N^2", SeminormSpec("exp", 1.0, variant="ff"))
        assert s.verdict == "converged"

    def test_spec_validation(self):
        with pytest.raises(DomainError):
            SeminormSpec("gauss")
        with pytest.raises(DomainError):
            SeminormSpec(param=0)
        with pytest.raises(DomainError):
            SeminormSpec(variant="kk")

    def test_flow_domain_reported(self):
        rep = flow_domain_check(weight_family("gibbs", beta=1.0), t=0.5)
        assert set(rep["sweeps"]) == {"k=0", "k=1", "k=2"}
        assert rep["sweeps"]["k=0"]["verdict"] == "converged"


class TestIdeal:
    def test_rank_one_member(self):
        assert ideal_membership(rank_one([1, 1], [0, 1])).verdict == "member"

    def test_inverse_square_non_member(self):
        d = ideal_membership("diag((n+1)^-2)", test_ops=["N"])
        assert d.verdict == "non-member"
        assert d.sweeps[0].exponent > 0.9

    def test_fast_decay_member(self):
        assert ideal_membership("diag((n+1)^-4)", test_ops=["I", "N"]).verdict == "member"

    def test_monotone_in_test_family(self):
        # enlarging the test family can only turn member into non-member
        small = ideal_membership("diag((n+1)^-2)", test_ops=["I"])
        big = ideal_membership("diag((n+1)^-2)", test_ops=["I", "N^2"])
        assert small.verdict == "member" and big.verdict == "non-member"

    def test_report(self):
        out = ideal_membership("X_00").to_dict()
        assert out["verdict"] == "member" and "not a proof" in out["note"]
        assert len(out["testPairs"]) == 25

    def test_empty_family(self):
        with pytest.raises(ValueError):
            ideal_membership("I", test_ops=[])


class TestStatesAndDynamics:
    def test_left_right_trace(self):
        w = zeta2(check_phi=False).weights(16)
        rng = np.random.default_rng(3)
        a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        rep = quasi_states(w, a)
        assert rep["leftRightGap"] <= 1e-12 and rep["traceGap"] <= 1e-12
        assert abs(np.trace(density_matrix(w)) - 1) <= 1e-10

    def test_bad_side(self):
        w = zeta2(check_phi=False).weights(4)
        with pytest.raises(DomainError):
            quasi_state(w, np.eye(4), "middle")

    def test_dynamics_preserves_state(self):
        w = zeta2(check_phi=False).weights(10)
        a = operator_rule("a")(10) + operator_rule("N")(10)
        for t in (-2.0, 0.3, 3.0):
            at = quasi_dynamics(w, t, a)
            assert abs(quasi_state(w, at) - quasi_state(w, a)) <= 1e-12

    def test_modular_data(self):
        rep = quasi_modular(zeta2(check_phi=False).weights(8))
        assert rep["passed"], rep["checks"]

    def test_kms_interior(self):
        w = zeta2(check_phi=False).weights(16)
        ts = np.linspace(-3, 3, 61)
        rep = quasi_kms_residual(w, interior_unit_pairs(16), ts)
        assert rep.max_residual <= 1e-9
        assert rep.extra["liouvilleFactorization"] <= 1e-10
        assert rep.extra["tomitaOnOrbit"] <= 1e-10

    def test_gibbs_kind_matches_modular(self):
        ts = np.linspace(-3, 3, 31)
        pairs = interior_unit_pairs(10, max_label=3)
        q = quasi_kms_residual(weight_family("gibbs", beta=1.0).weights(10), pairs, ts)
        m = kms_residual(gibbs_weights(10, 1.0), pairs, ts)
        assert np.abs(np.array(q.residuals) - np.array(m.residuals)).max() <= 1e-12

    def test_tomita_orbit(self):
        assert tomita_orbit_residual(zeta2(check_phi=False).weights(6)) <= 1e-10


class TestProperties:
    def test_boundedness(self):
        rep = boundedness_check(100, 10, np.random.default_rng(0))
        assert rep["passed"] and rep["maxNormMinusHsNorm"] <= 0
        assert rep["X01"] == [1.0, 1.0]
        assert rep["X00+X11"][1] == pytest.approx(math.sqrt(2))

    def test_structure(self):
        rep = structure_property_checks(zeta2(check_phi=False).weights(4))
        assert rep["passed"]

    def test_structure_dim_cap(self):
        with pytest.raises(DomainError):
            structure_property_checks(zeta2(check_phi=False).weights(9))
