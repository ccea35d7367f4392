"""Landau levels in two independent finite representations.

*Ladder representation.*  Coordinates are the labels ``Psi_{n,l}`` with
``n < M`` (degeneracy) and ``l < L`` (level), flattened row-major over
``(n, l)``.  ``A_+`` lowers ``n`` and ``A_-`` lowers ``l``, so every operator
is a Kronecker product and the ladder identities hold exactly.

*Cartesian representation.*  Tensor Hermite basis ``zeta_j(x) zeta_k(y)``
with ``D`` levels per axis, flattened row-major over ``(j, k)``.  Here the
observables ``Q_+-``, ``P_+-`` are built from ``x, p_x, y, p_y`` as differential
expressions, and every identity is checked after discarding the top two
levels on each axis.

The audit functions compare the two pictures and the printed formulas; any
disagreement is returned as data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .config import DEFAULT
from .errors import DegeneracyError, InvalidBasisError
from .operators import build_ladder

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class LandauBasis:
    levels: int      # L, range of l
    degeneracy: int  # M, range of n

    def __post_init__(self):
        if self.levels < 2 or self.degeneracy < 2:
            raise InvalidBasisError("levels and degeneracy must both be >= 2")

    @property
    def size(self) -> int:
        return self.levels * self.degeneracy

    def index(self, n: int, l: int) -> int:
        return n * self.levels + l

    def labels(self) -> list[tuple[int, int]]:
        return [(n, l) for n in range(self.degeneracy) for l in range(self.levels)]

    def interior(self) -> np.ndarray:
        """Indices with ``n < M - 1`` and ``l < L - 1``."""
        return np.array([self.index(n, l) for n, l in self.labels()
                         if n < self.degeneracy - 1 and l < self.levels - 1])


def _restrict(m, idx: np.ndarray) -> np.ndarray:
    m = m.toarray() if sp.issparse(m) else np.asarray(m)
    return m[np.ix_(idx, idx)]


# ---------------------------------------------------------------------------
# ladder representation
# ---------------------------------------------------------------------------

def build_ladders(basis: LandauBasis) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """``(A_+, A_+^H, A_-, A_-^H)`` on the ``Psi_{n,l}`` coordinates."""
    a_n, _ = build_ladder(basis.degeneracy)
    a_l, _ = build_ladder(basis.levels)
    i_n = np.eye(basis.degeneracy)
    i_l = np.eye(basis.levels)
    ap = np.kron(a_n, i_l)
    am = np.kron(i_n, a_l)
    return ap, ap.conj().T.copy(), am, am.conj().T.copy()


def number_operators(basis: LandauBasis) -> tuple[np.ndarray, np.ndarray]:
    """``(N_+, N_-)`` with exact integer diagonals.

    ``A^H A`` reproduces these only up to rounding (``sqrt(n)**2 != n`` in
    floating point), so the exact diagonals are built directly.
    """
    n_plus = np.kron(np.arange(basis.degeneracy), np.ones(basis.levels))
    n_minus = np.kron(np.ones(basis.degeneracy), np.arange(basis.levels))
    return np.diag(n_plus).astype(complex), np.diag(n_minus).astype(complex)


@dataclass(frozen=True)
class LandauHamiltonians:
    up: np.ndarray        # N_- + 1/2
    down: np.ndarray      # N_+ + 1/2
    free: np.ndarray      # (N_+ + N_- + 1) / 2
    int_up: np.ndarray    # -(N_+ - N_-) / 2
    int_down: np.ndarray  # -int_up


def build_hamiltonians(basis: LandauBasis) -> LandauHamiltonians:
    """Hamiltonians in the ladder picture.

    ``int_up`` is chosen so that ``up = free + int_up``; the cartesian audit
    decides between the two signs found in print.
    """
    n_plus, n_minus = number_operators(basis)
    eye = np.eye(basis.size)
    int_up = -0.5 * (n_plus - n_minus)
    return LandauHamiltonians(
        up=n_minus + 0.5 * eye,
        down=n_plus + 0.5 * eye,
        free=0.5 * (n_plus + n_minus + eye),
        int_up=int_up,
        int_down=-int_up,
    )


def build_landau_pm(basis: LandauBasis) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """``(Q_+, P_+, Q_-, P_-)`` from ``A_+ = (Q_+ + iP_+)/sqrt2``, ``A_- = (iQ_- - P_-)/sqrt2``."""
    ap, apd, am, amd = build_ladders(basis)
    qp = (ap + apd) / SQRT2
    pp = (ap - apd) / (1j * SQRT2)
    qm = (am - amd) / (1j * SQRT2)
    pm = -(am + amd) / SQRT2
    return qp, pp, qm, pm


@dataclass
class DegeneracyReport:
    joint_pairs: int
    joint_simple: bool
    up_multiplicities: dict
    down_multiplicities: dict
    commutator_norm: float
    simultaneous_residual: float

    @property
    def passed(self) -> bool:
        return self.joint_simple and self.commutator_norm == 0.0

    def to_dict(self) -> dict:
        return {
            "jointPairs": self.joint_pairs,
            "jointSimple": self.joint_simple,
            "upMultiplicities": self.up_multiplicities,
            "downMultiplicities": self.down_multiplicities,
            "commutatorNorm": self.commutator_norm,
            "simultaneousResidual": self.simultaneous_residual,
            "passed": self.passed,
        }


def _multiplicities(values: np.ndarray) -> dict:
    uniq, counts = np.unique(np.round(values, 12), return_counts=True)
    return {f"{u:g}": int(c) for u, c in zip(uniq, counts)}


def degeneracy_lift_check(basis: LandauBasis) -> DegeneracyReport:
    """Joint spectrum of ``(H_down, H_up)`` is simple; each marginal is degenerate.

    The joint eigenbasis is obtained by diagonalizing the generic combination
    ``H_up + sqrt(2) H_down`` and then reading off both operators in it.
    """
    h = build_hamiltonians(basis)
    comm = h.up @ h.down - h.down @ h.up
    _, v = np.linalg.eigh(h.up + SQRT2 * h.down)
    up_d = v.conj().T @ h.up @ v
    down_d = v.conj().T @ h.down @ v
    off = max(float(np.abs(up_d - np.diag(np.diag(up_d))).max()),
              float(np.abs(down_d - np.diag(np.diag(down_d))).max()))
    pairs = {(round(float(a.real), 9), round(float(b.real), 9))
             for a, b in zip(np.diag(down_d), np.diag(up_d))}
    return DegeneracyReport(
        joint_pairs=len(pairs),
        joint_simple=len(pairs) == basis.size,
        up_multiplicities=_multiplicities(np.linalg.eigvalsh(h.up)),
        down_multiplicities=_multiplicities(np.linalg.eigvalsh(h.down)),
        commutator_norm=float(np.abs(comm).max()),
        simultaneous_residual=off,
    )


# ---------------------------------------------------------------------------
# cartesian representation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CartesianOps:
    """Sparse operators on the tensor Hermite basis (``D**2`` states)."""

    dim_per_axis: int
    x: sp.csr_matrix
    px: sp.csr_matrix
    y: sp.csr_matrix
    py: sp.csr_matrix
    ax: sp.csr_matrix
    ay: sp.csr_matrix

    def interior(self, drop: int = 2) -> np.ndarray:
        d = self.dim_per_axis
        k = d - drop
        return np.array([j * d + m for j in range(k) for m in range(k)])

    def identity(self) -> sp.csr_matrix:
        return sp.identity(self.dim_per_axis ** 2, dtype=complex, format="csr")


def build_cartesian(dim_per_axis: int) -> CartesianOps:
    if dim_per_axis < 4:
        raise InvalidBasisError("dimPerAxis must be >= 4")
    d = dim_per_axis
    a = sp.diags(np.sqrt(np.arange(1, d, dtype=float)), 1, format="csr").astype(complex)
    eye = sp.identity(d, dtype=complex, format="csr")
    ax = sp.kron(a, eye, format="csr")
    ay = sp.kron(eye, a, format="csr")
    axd = ax.conj().T.tocsr()
    ayd = ay.conj().T.tocsr()
    return CartesianOps(
        dim_per_axis=d,
        x=((ax + axd) / SQRT2).tocsr(),
        px=((ax - axd) / (1j * SQRT2)).tocsr(),
        y=((ay + ayd) / SQRT2).tocsr(),
        py=((ay - ayd) / (1j * SQRT2)).tocsr(),
        ax=ax,
        ay=ay,
    )


@dataclass(frozen=True)
class CartesianLandau:
    """``Q_+-``, ``P_+-`` as differential expressions and the ladders built from them."""

    qp: sp.csr_matrix
    pp: sp.csr_matrix
    qm: sp.csr_matrix
    pm: sp.csr_matrix
    ap: sp.csr_matrix
    am: sp.csr_matrix

    @property
    def apd(self):
        return self.ap.conj().T.tocsr()

    @property
    def amd(self):
        return self.am.conj().T.tocsr()


def cartesian_landau(ops: CartesianOps) -> CartesianLandau:
    """``Q_- = p_x + y/2``, ``P_- = p_y - x/2``, ``Q_+ = p_y + x/2``, ``P_+ = p_x - y/2``."""
    qm = (ops.px + 0.5 * ops.y).tocsr()
    pm = (ops.py - 0.5 * ops.x).tocsr()
    qp = (ops.py + 0.5 * ops.x).tocsr()
    pp = (ops.px - 0.5 * ops.y).tocsr()
    ap = ((qp + 1j * pp) / SQRT2).tocsr()
    am = ((1j * qm - pm) / SQRT2).tocsr()
    return CartesianLandau(qp, pp, qm, pm, ap, am)


def interior_ccr(q, p, idx: np.ndarray, value: complex = 1j) -> float:
    c = _restrict(q @ p - p @ q, idx)
    return float(np.abs(c - value * np.eye(idx.size)).max())


def interior_norm(m, idx: np.ndarray) -> float:
    return float(np.abs(_restrict(m, idx)).max())


def ground_state_coefficients(dim_per_axis: int, kernel_tol: float = 1e-4,
                              gap: float = 0.5) -> np.ndarray:
    """Coefficients of ``Psi_00`` as the common kernel of the cartesian ``A_+, A_-``.

    Solved as the lowest eigenvector of ``A_+^H A_+ + A_-^H A_-`` by
    shift-invert Lanczos.  Raises :class:`DegeneracyError` unless exactly one
    eigenvalue lies below ``kernel_tol`` and the next is above ``gap``.
    The phase is fixed so the coefficient of ``zeta_0 zeta_0`` is positive.
    """
    lad = cartesian_landau(build_cartesian(dim_per_axis))
    m = (lad.apd @ lad.ap + lad.amd @ lad.am).tocsc()
    # fixed start vector: ARPACK otherwise draws a random one and reruns differ in the last bits
    v0 = np.ones(m.shape[0]) / np.sqrt(m.shape[0])
    vals, vecs = spla.eigsh(m, k=3, sigma=-0.1, which="LM", v0=v0)
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    if not (vals[0] < kernel_tol and vals[1] > gap):
        raise DegeneracyError(
            f"kernel of A+/A- is not one-dimensional at dimPerAxis={dim_per_axis}: "
            f"lowest eigenvalues {vals.tolist()}")
    c = vecs[:, 0]
    c = c * (abs(c[0]) / c[0])
    return c / np.linalg.norm(c)


def eigenstate_coefficients(n: int, l: int, dim_per_axis: int,
                            ground: np.ndarray | None = None) -> np.ndarray:
    """``(n! l!)^(-1/2) (A_+^H)^n (A_-^H)^l Psi_00`` in cartesian coefficients."""
    lad = cartesian_landau(build_cartesian(dim_per_axis))
    c = ground_state_coefficients(dim_per_axis) if ground is None else ground
    apd, amd = lad.apd, lad.amd
    for _ in range(l):
        c = amd @ c
    for _ in range(n):
        c = apd @ c
    return c / math.sqrt(math.factorial(n) * math.factorial(l))


# ---------------------------------------------------------------------------
# audit of the second representation
# ---------------------------------------------------------------------------

LADDER_SPAN = ("a_x", "a_y", "a_x^H", "a_y^H")

# coefficients as printed, in the order of LADDER_SPAN
PRINTED_COEFFICIENTS = {
    "A+": (0.75, -0.75j, -0.25, -0.25j),
    "A+^H": (-0.25, 0.25j, 0.75, 0.75j),
    "A-": (0.75, 0.75j, -0.25, -0.25j),
    "A-^H": (-0.25, 0.25j, 0.75, -0.75j),
}


def _fit_span(target, span, idx: np.ndarray) -> tuple[np.ndarray, float]:
    """Least squares in the trace inner product on the interior block."""
    t = _restrict(target, idx).reshape(-1)
    cols = np.array([_restrict(b, idx).reshape(-1) for b in span]).T
    coef, *_ = np.linalg.lstsq(cols, t, rcond=None)
    return coef, float(np.linalg.norm(cols @ coef - t))


def _combine(coef, span):
    return sum(c * b for c, b in zip(coef, span)).tocsr()


def _cplx(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


@dataclass
class SecondRepAudit:
    dim_per_axis: int
    fitted: dict
    printed: dict
    discrepancy: dict
    fit_residual: float
    ccr_residual: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "dimPerAxis": self.dim_per_axis,
            "span": list(LADDER_SPAN),
            "fittedCoefficients": {k: [_cplx(z) for z in v] for k, v in self.fitted.items()},
            "printedCoefficients": {k: [_cplx(z) for z in v] for k, v in self.printed.items()},
            "discrepancy": self.discrepancy,
            "fitResidual": self.fit_residual,
            "ccrResidual": self.ccr_residual,
            **self.details,
        }


def second_rep_audit(dim_per_axis: int = 24, eigen_labels: int = 3) -> SecondRepAudit:
    """Fit ``A_+-`` and adjoints over ``{a_x, a_y, a_x^H, a_y^H}`` and audit the printed forms.

    Besides the fit, reports interior CCR and cross-commutator residuals of the
    cartesian ``Q_+-, P_+-``, the same commutators for the printed coefficients,
    the spectrum of the free Hamiltonian written with ``x^2/4``, the sign of the
    angular-momentum term, and agreement of the cartesian ladders with the
    exact ladder picture on ``Psi_{n,l}``, ``n, l < eigen_labels``.
    """
    if dim_per_axis < 8:
        raise InvalidBasisError("second_rep_audit needs dimPerAxis >= 8")
    ops = build_cartesian(dim_per_axis)
    lad = cartesian_landau(ops)
    idx = ops.interior()
    span = [ops.ax, ops.ay, ops.ax.conj().T.tocsr(), ops.ay.conj().T.tocsr()]
    targets = {"A+": lad.ap, "A+^H": lad.apd, "A-": lad.am, "A-^H": lad.amd}

    fitted, discrepancy, fit_res = {}, {}, 0.0
    for name, target in targets.items():
        coef, res = _fit_span(target, span, idx)
        fitted[name] = tuple(complex(c) for c in coef)
        fit_res = max(fit_res, res)
        diffs = [abs(c - p) for c, p in zip(coef, PRINTED_COEFFICIENTS[name])]
        discrepancy[name] = {
            "perCoefficient": diffs,
            "max": max(diffs),
            "mismatched": [LADDER_SPAN[k] for k, dv in enumerate(diffs) if dv > 1e-6],
        }

    a_plus = _combine(fitted["A+"], span)
    a_minus = _combine(fitted["A-"], span)
    ccr = max(interior_ccr(a_plus, a_plus.conj().T, idx, 1.0),
              interior_ccr(a_minus, a_minus.conj().T, idx, 1.0))
    mixed = max(interior_norm(a_plus @ a_minus - a_minus @ a_plus, idx),
                interior_norm(a_plus @ a_minus.conj().T - a_minus.conj().T @ a_plus, idx))

    printed_p = _combine(PRINTED_COEFFICIENTS["A+"], span)
    printed_m = _combine(PRINTED_COEFFICIENTS["A-"], span)
    printed = {
        "ccrPlus": interior_ccr(printed_p, printed_p.conj().T, idx, 1.0),
        "ccrMinus": interior_ccr(printed_m, printed_m.conj().T, idx, 1.0),
        "commutatorPlusMinus": interior_norm(printed_p @ printed_m - printed_m @ printed_p, idx),
        "commutatorPlusMinusDagger": interior_norm(
            printed_p @ printed_m.conj().T - printed_m.conj().T @ printed_p, idx),
        "adjointConsistent": bool(np.allclose(
            np.conj(PRINTED_COEFFICIENTS["A+"])[[2, 3, 0, 1]], PRINTED_COEFFICIENTS["A+^H"])),
    }

    details = {
        "cartesianCcr": cartesian_ccr_report(ops, lad),
        "fittedMixedCommutator": mixed,
        "printedCoefficientChecks": printed,
        "freeHamiltonian": free_hamiltonian_audit(ops, lad),
        "interactionSign": interaction_sign_audit(ops, lad),
        "ladderAgreement": ladder_agreement(dim_per_axis, eigen_labels, lad),
    }
    return SecondRepAudit(dim_per_axis, fitted, dict(PRINTED_COEFFICIENTS),
                          discrepancy, fit_res, ccr, details)


def cartesian_ccr_report(ops: CartesianOps, lad: CartesianLandau | None = None) -> dict:
    lad = lad or cartesian_landau(ops)
    idx = ops.interior()
    cross = {
        "[Q+,Q-]": interior_norm(lad.qp @ lad.qm - lad.qm @ lad.qp, idx),
        "[P+,Q-]": interior_norm(lad.pp @ lad.qm - lad.qm @ lad.pp, idx),
        "[Q+,P-]": interior_norm(lad.qp @ lad.pm - lad.pm @ lad.qp, idx),
        "[P+,P-]": interior_norm(lad.pp @ lad.pm - lad.pm @ lad.pp, idx),
    }
    herm = max(interior_norm(m - m.conj().T, idx) for m in (lad.qp, lad.pp, lad.qm, lad.pm))
    return {
        "[Q+,P+]-i": interior_ccr(lad.qp, lad.pp, idx),
        "[Q-,P-]-i": interior_ccr(lad.qm, lad.pm, idx),
        "cross": cross,
        "maxCross": max(cross.values()),
        "hermiticity": herm,
        "[a_x,a_x^H]-1": interior_ccr(ops.ax, ops.ax.conj().T, idx, 1.0),
        "[a_y,a_y^H]-1": interior_ccr(ops.ay, ops.ay.conj().T, idx, 1.0),
        "[a_x,a_y^H]": interior_norm(ops.ax @ ops.ay.conj().T - ops.ay.conj().T @ ops.ax, idx),
    }


def free_hamiltonian_audit(ops: CartesianOps, lad: CartesianLandau | None = None,
                           levels: int = 4) -> dict:
    """Spectrum of ``(p_x^2 + x^2/4)/2 + (p_y^2 + y^2/4)/2`` and of its ladder rewrite."""
    lad = lad or cartesian_landau(ops)
    idx = ops.interior()
    h0 = 0.5 * (ops.px @ ops.px + 0.25 * ops.x @ ops.x + ops.py @ ops.py + 0.25 * ops.y @ ops.y)
    rewrite = ops.ax.conj().T @ ops.ax + ops.ay.conj().T @ ops.ay + ops.identity()
    n_sum = lad.apd @ lad.ap + lad.amd @ lad.am
    count = levels * (levels + 1) // 2
    low = np.sort(np.linalg.eigvalsh(h0.toarray()))[:count]
    expected = np.concatenate([[0.5 * (k + 1)] * (k + 1) for k in range(levels)])[:count]
    rewrite_low = np.sort(np.linalg.eigvalsh(rewrite.toarray()))[:count]
    return {
        "lowestEigenvalues": low.tolist(),
        "expectedHalfNPlusLPlusOne": expected.tolist(),
        "spectrumDeviation": float(np.abs(low - expected).max()),
        "ladderRewriteLowest": rewrite_low.tolist(),
        "ladderRewriteDeviation": float(np.abs(rewrite_low - expected).max()),
        "operatorVsHalfNSum": interior_norm(h0 - 0.5 * (n_sum + ops.identity()), idx),
    }


def interaction_sign_audit(ops: CartesianOps, lad: CartesianLandau | None = None) -> dict:
    """Compare ``-(x p_y - y p_x)/2`` with ``-(N_+ - N_-)/2`` and ``+(N_+ - N_-)/2``."""
    lad = lad or cartesian_landau(ops)
    idx = ops.interior()
    h_int = -0.5 * (ops.x @ ops.py - ops.y @ ops.px)
    diff = lad.apd @ lad.ap - lad.amd @ lad.am
    h_up = 0.5 * (lad.pm @ lad.pm + lad.qm @ lad.qm)
    h0 = 0.5 * (ops.px @ ops.px + 0.25 * ops.x @ ops.x + ops.py @ ops.py + 0.25 * ops.y @ ops.y)
    minus = interior_norm(h_int + 0.5 * diff, idx)
    plus = interior_norm(h_int - 0.5 * diff, idx)
    return {
        "residualMinusHalfDiff": minus,
        "residualPlusHalfDiff": plus,
        "upEqualsFreePlusInt": interior_norm(h_up - h0 - h_int, idx),
        "matches": "-(N+ - N-)/2" if minus < plus else "+(N+ - N-)/2",
    }


def ladder_agreement(dim_per_axis: int, labels: int = 3,
                     lad: CartesianLandau | None = None) -> dict:
    """Matrices of the cartesian ``A_+-``, ``H_up``, ``H_down`` on ``Psi_{n,l}`` vs exact ladders."""
    lad = lad or cartesian_landau(build_cartesian(dim_per_axis))
    ground = ground_state_coefficients(dim_per_axis)
    basis = LandauBasis(labels, labels)
    states = np.array([eigenstate_coefficients(n, l, dim_per_axis, ground)
                       for n, l in basis.labels()]).T

    def block(op):
        return states.conj().T @ (op @ states)

    exact_ap, _, exact_am, _ = build_ladders(basis)
    h = build_hamiltonians(basis)
    h_up = 0.5 * (lad.pm @ lad.pm + lad.qm @ lad.qm)
    h_down = 0.5 * (lad.pp @ lad.pp + lad.qp @ lad.qp)
    # A+ maps the top retained n into n = labels, outside the block; compare lowering
    # matrix elements only, which stay inside.
    return {
        "labels": labels,
        "gram": float(np.abs(states.conj().T @ states - np.eye(basis.size)).max()),
        "A+": float(np.abs(block(lad.ap) - exact_ap).max()),
        "A-": float(np.abs(block(lad.am) - exact_am).max()),
        "Hup": float(np.abs(block(h_up) - h.up).max()),
        "Hdown": float(np.abs(block(h_down) - h.down).max()),
    }
