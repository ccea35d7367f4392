"""One test per acceptance criterion, each at its stated tolerance."""

import json
import subprocess
import sys
import warnings

import numpy as np
import pytest

from modlab.cli import SUBCOMMANDS, results_json
from modlab.errors import IdealMembershipWarning
from modlab.hs import (
    conjugate_by,
    expand,
    hs_inner,
    lift_left,
    lift_right,
    matrix_unit,
    modular_conjugation,
    reconstruct,
)
from modlab.landau import (
    LandauBasis,
    build_cartesian,
    build_hamiltonians,
    cartesian_ccr_report,
    degeneracy_lift_check,
    second_rep_audit,
)
from modlab.modular import (
    default_kms_pairs,
    gibbs_weights,
    interior_unit_pairs,
    kms_residual,
    polar_check,
    structure_checks,
    weight_sequence,
)
from modlab.quasi import (
    boundedness_check,
    ideal_membership,
    quasi_kms_residual,
    quasi_states,
    rank_one,
    weight_family,
)
from modlab.wigner import GridSpec, ground_state_error, intertwining_check


def fmt(x):
    return f"{x:.2e}" if isinstance(x, float) else str(x)


def check(name, value, ok):
    return (name, bool(ok), fmt(value))


def test_criterion_01_hs_basis(criterion):
    d = 8
    units = [matrix_unit(i, j, d) for i in range(d) for j in range(d)]
    gram = np.array([[hs_inner(x, y) for y in units] for x in units])
    ortho = float(np.abs(gram - np.eye(d * d)).max())
    rng = np.random.default_rng(1)
    recon = 0.0
    for _ in range(10):
        x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        recon = max(recon, float(np.abs(reconstruct(expand(x), d) - x).max()))
    criterion(1, [check("orthonormality", ortho, ortho <= 1e-12),
                  check("reconstruction", recon, recon <= 1e-12)])


def test_criterion_02_commutant_and_conjugation(criterion):
    d = 6
    rng = np.random.default_rng(2)
    j = modular_conjugation(d)
    comm = conj = 0.0
    for _ in range(50):
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        la, rb = lift_left(a).dense(), lift_right(b).dense()
        comm = max(comm, float(np.linalg.norm(la @ rb - rb @ la, 2)))
        conj = max(conj, float(np.linalg.norm(conjugate_by(j, lift_left(a))
                                              - lift_right(a).dense(), 2)))
    j2 = float(np.abs(j.squared() - np.eye(d * d)).max())
    criterion(2, [check("commutator", comm, comm <= 1e-12),
                  check("JAJ-vs-right", conj, conj <= 1e-12),
                  check("J^2-I", j2, j2 == 0.0)])


def test_criterion_03_tomita_polar(criterion):
    checks = []
    for beta in (0.5, 1.0, 2.0):
        for d in (4, 10):
            rep = polar_check(gibbs_weights(d, beta), 1e-10)
            worst = max(rep.closed_form_residual, rep.j_delta_residual,
                        rep.polar_unitary_residual, rep.polar_positive_residual)
            checks.append(check(f"polar[b={beta:g},d={d}]", worst, worst <= 1e-10))
            checks.append(check(f"S*S=Delta[b={beta:g},d={d}]", rep.delta_residual,
                                rep.delta_residual <= 1e-10))
    criterion(3, checks)


def test_criterion_04_kms(criterion):
    d = 12
    rng = np.random.default_rng(4)
    ts = np.linspace(-5, 5, 101)
    checks = []
    for beta in (0.5, 1.0, 2.0):
        w = gibbs_weights(d, beta)
        pairs = default_kms_pairs(d, rng, 20)
        rep = kms_residual(w, pairs, ts)
        wrong = weight_sequence(gibbs_weights(d, 1.5 * beta).weights, beta)
        control = kms_residual(w, pairs[:4], ts[::10], flow=wrong, cr_points=1)
        checks += [
            check(f"kms[b={beta:g}]", rep.max_residual, rep.max_residual <= 1e-9),
            check(f"control[b={beta:g}]", control.max_residual, control.max_residual > 1e-3),
            check(f"invariance[b={beta:g}]", rep.max_invariance, rep.max_invariance <= 1e-12),
            check(f"flow[b={beta:g}]", rep.flow_invariance, rep.flow_invariance <= 1e-12),
        ]
    criterion(4, checks)


def test_criterion_05_structure(criterion):
    checks = []
    for d in (4, 5, 6):
        rep = structure_checks(gibbs_weights(d, 1.0))
        checks.append(check(f"dim{d}", f"cyclicRank={rep.cyclic_rank}", rep.passed
                            and rep.cyclic_rank == d * d and rep.separating_rank == d * d))
    criterion(5, checks)


def test_criterion_06_landau_spectra(criterion):
    basis = LandauBasis(12, 12)
    h = build_hamiltonians(basis)
    rep = degeneracy_lift_check(basis)
    up = np.sort(np.diag(h.up).real)
    expected = np.sort(np.repeat(np.arange(12) + 0.5, 12))
    offdiag = float(np.abs(h.up - np.diag(np.diag(h.up))).max())
    spec_dev = float(np.abs(up - expected).max())
    int_sum = float(np.abs(h.int_up + h.int_down).max())
    criterion(6, [
        check("H_up spectrum", spec_dev, spec_dev == 0.0 and offdiag == 0.0),
        check("multiplicities", rep.up_multiplicities,
              set(rep.up_multiplicities.values()) == {12} and len(rep.up_multiplicities) == 12),
        check("joint simple", rep.joint_pairs, rep.joint_simple),
        check("[H_up,H_down]", rep.commutator_norm, rep.commutator_norm == 0.0),
        check("Hint sum", int_sum, int_sum == 0.0),
    ])


def test_criterion_07_cartesian_ladder(criterion):
    ccr = cartesian_ccr_report(build_cartesian(24))
    audit = second_rep_audit(24)
    ax = abs(audit.fitted["A+"][0] - 0.75)
    emitted = {"fittedCoefficients", "printedCoefficients", "discrepancy"} <= set(audit.to_dict())
    criterion(7, [
        check("[Q+,P+]-i", ccr["[Q+,P+]-i"], ccr["[Q+,P+]-i"] <= 1e-8),
        check("[Q-,P-]-i", ccr["[Q-,P-]-i"], ccr["[Q-,P-]-i"] <= 1e-8),
        check("cross", ccr["maxCross"], ccr["maxCross"] <= 1e-8),
        check("fitted ladder CCR", audit.ccr_residual, audit.ccr_residual <= 1e-8),
        check("A+ a_x coefficient", ax, ax <= 1e-6),
        check("comparison emitted",
              {k: v["mismatched"] for k, v in audit.discrepancy.items()}, emitted),
    ])


def test_criterion_08_wigner(criterion):
    grid = GridSpec.square(3.0, 121)
    e32, e64 = ground_state_error(32, grid), ground_state_error(64, grid)
    inter = intertwining_check(2)
    criterion(8, [
        check("ground state dim64", e64, e64 <= 1e-4),
        check("intertwining (printed generator pairs)", inter.printed_max,
              inter.printed_max <= 1e-4),
        check("err32>err64", f"{e32:.2e}>{e64:.2e}", e32 > e64),
    ])


def test_criterion_09_quasi(criterion):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IdealMembershipWarning)
        w = weight_family("zeta", {"s": 2}).weights(16)
    ts = np.linspace(-3, 3, 61)
    kms = quasi_kms_residual(w, interior_unit_pairs(16), ts)

    pairs = interior_unit_pairs(12, max_label=4)
    q = quasi_kms_residual(weight_family("gibbs", beta=1.0).weights(12), pairs, ts)
    m = kms_residual(gibbs_weights(12, 1.0), pairs, ts)
    gibbs_gap = float(np.abs(np.array(q.residuals) - np.array(m.residuals)).max())
    gibbs_gap = max(gibbs_gap, float(np.abs(weight_family("gibbs", beta=1.0).weights(12).weights
                                            - gibbs_weights(12, 1.0).weights).max()))

    rng = np.random.default_rng(9)
    gap = 0.0
    for _ in range(10):
        a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        gap = max(gap, quasi_states(w, a)["leftRightGap"])
    trace = abs(float(np.sum(w.weights)) - 1.0)
    bound = boundedness_check(100, 10, np.random.default_rng(0))
    r1 = ideal_membership(rank_one([1, 2], [0, 1, 1])).verdict
    inv2 = ideal_membership("diag((n+1)^-2)", test_ops=["N"]).verdict
    criterion(9, [
        check("quasi KMS", kms.max_residual, kms.max_residual <= 1e-9),
        check("gibbs vs modular", gibbs_gap, gibbs_gap <= 1e-12),
        check("left=right state", gap, gap <= 1e-12),
        check("trace rho", trace, trace <= 1e-10),
        check("boundedness violations", bound["violations"], bound["passed"]),
        check("rank-one", r1, r1 == "member"),
        check("diag((n+1)^-2) with (N,N)", inv2, inv2 == "non-member"),
    ])


def _cli_results(cmd, out):
    subprocess.run([sys.executable, "-m", "modlab", cmd, "--out", str(out), "--seed", "5"],
                   capture_output=True, check=False)
    with open(out / "report.json") as fh:
        return results_json(json.load(fh)["results"])


def test_criterion_10_determinism(criterion, tmp_path):
    checks = []
    for cmd in SUBCOMMANDS:
        a = _cli_results(cmd, tmp_path / f"{cmd}-a")
        b = _cli_results(cmd, tmp_path / f"{cmd}-b")
        checks.append(check(cmd, f"{len(a)}B", a == b))
    criterion(10, checks)
