"""Modular data of a diagonal weight sequence on truncated ``B2(H)``.

Conventions (pinned by :func:`sign_audit`):

* ``Delta X_ij = (alpha_i / alpha_j) X_ij``, i.e. ``Delta X = rho X rho^-1``;
* ``S X_kl = (alpha_k / alpha_l)^(1/2) X_lk``, so ``S = J Delta^(1/2)``;
* the flow on the left algebra is ``alpha_t(A) = e^{i t H} A e^{-i t H}``
  with ``rho = e^{-beta H}``, which equals ``Delta^{-it/beta} A Delta^{it/beta}``.
  With this orientation the state satisfies the KMS boundary condition at
  ``t + i beta``.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .config import DEFAULT
from .errors import ConsistencyError, DomainError, WrongAlgebraError
from .hs import (
    AntilinearMap,
    FactorizedSuperOp,
    hs_inner,
    left_factor_fit,
    lift_left,
    matrix_unit,
    modular_conjugation,
)
from .operators import (
    BasisLike,
    OscillatorBasis,
    as_basis,
    build_ladder,
    matrix_function_hermitian,
    polar_decompose,
)


@dataclass(frozen=True)
class WeightSequence:
    """Strictly positive weights summing to one, plus an inverse temperature.

    ``normalization`` is the sum of the raw weights before rescaling, so for
    truncated Gibbs weights it equals ``1 - exp(-dim * beta)``.
    """

    weights: np.ndarray
    beta: float = 1.0
    normalization: float = 1.0

    @property
    def basis(self) -> OscillatorBasis:
        return OscillatorBasis(self.weights.size)

    @property
    def dim(self) -> int:
        return self.weights.size


def weight_sequence(raw: Sequence[float], beta: float = 1.0) -> WeightSequence:
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or raw.size < 2:
        raise DomainError("need at least two weights")
    if not np.all(np.isfinite(raw)) or np.any(raw <= 0):
        raise DomainError("weights must be finite and strictly positive")
    if not (beta > 0 and math.isfinite(beta)):
        raise DomainError(f"beta must be positive, got {beta}")
    total = float(raw.sum())
    w = raw / total
    w.setflags(write=False)
    return WeightSequence(w, float(beta), total)


def gibbs_weights(basis: BasisLike, beta: float) -> WeightSequence:
    """``(1 - e^-beta) e^{-n beta}`` renormalized over the truncation."""
    if not (beta > 0 and math.isfinite(beta)):
        raise DomainError(f"beta must be positive, got {beta}")
    n = as_basis(basis).levels()
    return weight_sequence(-math.expm1(-beta) * np.exp(-beta * n), beta)


def kms_vector(w: WeightSequence) -> np.ndarray:
    return np.diag(np.sqrt(w.weights)).astype(complex)


def density_matrix(w: WeightSequence) -> np.ndarray:
    return np.diag(w.weights).astype(complex)


def state_eval(w: WeightSequence, a: np.ndarray, tol: float = DEFAULT.identity) -> complex:
    """``<Phi, (A v I) Phi>``, cross-checked against ``Tr[rho A]``."""
    phi = kms_vector(w)
    vector_form = hs_inner(phi, a @ phi)
    trace_form = complex(np.trace(density_matrix(w) @ a))
    scale = max(1.0, float(np.abs(a).max()))
    if abs(vector_form - trace_form) > tol * scale:
        raise ConsistencyError(
            f"vector state {vector_form} disagrees with trace form {trace_form}")
    return vector_form


def modular_hamiltonian(w: WeightSequence) -> np.ndarray:
    """``-(1/beta) sum_i ln(alpha_i) P_i``."""
    return np.diag(-np.log(w.weights) / w.beta).astype(complex)


def liouvillian(w: WeightSequence) -> np.ndarray:
    """Dense ``H v I - I v H``; diagonal with ``-(1/beta) ln(alpha_i/alpha_j)``."""
    h = modular_hamiltonian(w)
    eye = np.eye(w.dim)
    return np.kron(h, eye) - np.kron(eye, h.conj())


def modular_operator(w: WeightSequence) -> np.ndarray:
    """Dense ``sum_ij (alpha_i/alpha_j) P_ij``."""
    ratios = np.outer(w.weights, 1.0 / w.weights)
    return np.diag(ratios.reshape(-1)).astype(complex)


def projector_pair(i: int, j: int, basis: BasisLike) -> FactorizedSuperOp:
    """``P_ij = X_ii v X_jj``."""
    return FactorizedSuperOp(matrix_unit(i, i, basis), matrix_unit(j, j, basis))


def delta_apply(w: WeightSequence, x: np.ndarray) -> np.ndarray:
    rho = density_matrix(w)
    return rho @ x @ np.diag(1.0 / w.weights)


def tomita_s(w: WeightSequence) -> AntilinearMap:
    """Basis action ``S X_kl = (alpha_k/alpha_l)^(1/2) X_lk``."""
    d = w.dim
    lin = np.zeros((d * d, d * d), dtype=complex)
    for k in range(d):
        for l in range(d):
            lin[l * d + k, k * d + l] = math.sqrt(w.weights[k] / w.weights[l])
    return AntilinearMap(lin)


def tomita_closed_form(w: WeightSequence, x: np.ndarray) -> np.ndarray:
    """``rho^(-1/2) X^H rho^(1/2)``."""
    r = np.sqrt(w.weights)
    return (x.conj().T / r[:, None]) * r[None, :]


@dataclass(frozen=True)
class ModularStructure:
    weights: WeightSequence
    phi: np.ndarray
    rho: np.ndarray
    hamiltonian: np.ndarray
    liouvillian: np.ndarray
    delta: np.ndarray
    jay: AntilinearMap
    tomita: AntilinearMap


def modular_structure(w: WeightSequence) -> ModularStructure:
    return ModularStructure(
        weights=w,
        phi=kms_vector(w),
        rho=density_matrix(w),
        hamiltonian=modular_hamiltonian(w),
        liouvillian=liouvillian(w),
        delta=modular_operator(w),
        jay=modular_conjugation(w.dim),
        tomita=tomita_s(w),
    )


# ---------------------------------------------------------------------------
# polar decomposition of S
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarReport:
    """Residuals relative to ``max(1, max|reference entry|)``."""

    closed_form_residual: float      # basis action vs rho^-1/2 X^H rho^1/2
    j_delta_residual: float          # S vs J o Delta^(1/2)
    polar_unitary_residual: float    # polar factor vs J's linear part
    polar_positive_residual: float   # |S| vs Delta^(1/2)
    delta_residual: float            # S* S vs Delta
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.closed_form_residual, self.j_delta_residual,
                   self.polar_unitary_residual, self.polar_positive_residual,
                   self.delta_residual) <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "closedFormResidual": self.closed_form_residual,
            "jDeltaResidual": self.j_delta_residual,
            "polarUnitaryResidual": self.polar_unitary_residual,
            "polarPositiveResidual": self.polar_positive_residual,
            "deltaResidual": self.delta_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def polar_check(w: WeightSequence, tol: float = DEFAULT.spectral) -> PolarReport:
    d = w.dim
    s = tomita_s(w)
    j = modular_conjugation(d)
    delta = modular_operator(w)
    sqrt_delta = matrix_function_hermitian(delta, math.sqrt)

    def rel(x, ref):
        return float(np.abs(x - ref).max()) / max(1.0, float(np.abs(ref).max()))

    closed = 0.0
    for k in range(d):
        for l in range(d):
            x = matrix_unit(k, l, d)
            closed = max(closed, rel(s(x), tomita_closed_form(w, x)))
    rng = np.random.default_rng(12345)
    for _ in range(4):
        x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        closed = max(closed, rel(s(x), tomita_closed_form(w, x)))

    # S x = J(Delta^1/2 x) = L_J conj(D x) = L_J conj(D) conj(x)
    j_delta = rel(s.linear, j.linear @ sqrt_delta.conj())

    factors = polar_decompose(s.linear)
    pu = rel(factors.unitary, j.linear)
    pp = rel(factors.positive, sqrt_delta)
    dr = rel(s.then(s.adjoint()), delta)  # S* o S
    return PolarReport(closed, j_delta, pu, pp, dr, tol)


# ---------------------------------------------------------------------------
# modular flow and KMS
# ---------------------------------------------------------------------------

def flow_unitaries(w: WeightSequence, z: complex) -> tuple[np.ndarray, np.ndarray]:
    """``(e^{izH}, e^{-izH})`` through the spectral calculus of ``H``.

    For complex ``z`` these are the analytic continuations
    ``Delta^{-iz/beta}`` restricted to the left factor.
    """
    h = modular_hamiltonian(w)
    plus = matrix_function_hermitian(h, lambda e: cmath.exp(1j * z * e))
    minus = matrix_function_hermitian(h, lambda e: cmath.exp(-1j * z * e))
    return plus, minus


def evolve(w: WeightSequence, t: complex, a: np.ndarray) -> np.ndarray:
    plus, minus = flow_unitaries(w, t)
    return plus @ a @ minus


def modular_flow(w: WeightSequence, t: float, s: FactorizedSuperOp) -> FactorizedSuperOp:
    """``alpha_t(A v I) = (e^{itH} A e^{-itH}) v I``."""
    if not s.is_left_lifted():
        raise WrongAlgebraError("modular flow acts on left-lifted operators A v I only")
    return lift_left(evolve(w, t, s.left))


def liouville_flow(w: WeightSequence, t: float) -> np.ndarray:
    """Dense ``e^{i t h}`` with ``h`` the Liouvillian; equals ``Delta^{-it/beta}``."""
    return matrix_function_hermitian(liouvillian(w), lambda e: cmath.exp(1j * t * e))


def left_flow_residual(w: WeightSequence, t: float, a: np.ndarray) -> float:
    """How far ``e^{ith} (A v I) e^{-ith}`` is from a left-lifted map."""
    u = liouville_flow(w, t)
    m = u @ lift_left(a).dense() @ u.conj().T
    _, resid = left_factor_fit(m, w.dim)
    return resid


def kms_function(w: WeightSequence, a: np.ndarray, b: np.ndarray, z: complex,
                 flow: WeightSequence | None = None) -> complex:
    """``F(z) = phi(A alpha_z(B))``, entire at finite truncation.

    ``flow`` optionally supplies a different weight sequence for the dynamics
    (used by negative controls).
    """
    evolved = evolve(flow or w, z, b)
    return complex(np.trace(density_matrix(w) @ a @ evolved))


def kms_boundary_pair(w: WeightSequence, a: np.ndarray, b: np.ndarray, t: float,
                      flow: WeightSequence | None = None) -> tuple[complex, complex]:
    fw = flow or w
    lhs = kms_function(w, a, b, t + 1j * fw.beta, flow=fw)
    rhs = complex(np.trace(density_matrix(w) @ evolve(fw, t, b) @ a))
    return lhs, rhs


@dataclass
class KmsReport:
    beta: float
    dim: int
    weights: list
    normalization: float
    t_grid: list
    pairs: list
    residuals: list
    invariance_residuals: list
    cauchy_riemann: list
    flow_invariance: float
    extra: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    @property
    def max_invariance(self) -> float:
        return max(self.invariance_residuals) if self.invariance_residuals else 0.0

    def to_dict(self) -> dict:
        out = {
            "beta": self.beta,
            "dim": self.dim,
            "weights": self.weights,
            "normalization": self.normalization,
            "tGrid": [self.t_grid[0], self.t_grid[-1], len(self.t_grid)],
            "pairs": self.pairs,
            "residuals": self.residuals,
            "maxResidual": self.max_residual,
            "invarianceResiduals": self.invariance_residuals,
            "maxInvarianceResidual": self.max_invariance,
            "cauchyRiemann": self.cauchy_riemann,
            "flowInvariance": self.flow_invariance,
        }
        out.update(self.extra)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _cauchy_riemann(w, a, b, t, flow, h=1e-4) -> float:
    """Relative mismatch of ``dF/dy = i dF/dx`` at the strip midline."""
    beta = (flow or w).beta
    z = t + 0.5j * beta
    f = lambda zz: kms_function(w, a, b, zz, flow=flow)
    dx = (f(z + h) - f(z - h)) / (2 * h)
    dy = (f(z + 1j * h) - f(z - 1j * h)) / (2 * h)
    return abs(dy - 1j * dx) / max(1.0, abs(dx))


def kms_residual(w: WeightSequence, pairs: Sequence[tuple[str, np.ndarray, np.ndarray]],
                 t_grid: Sequence[float], flow: WeightSequence | None = None,
                 cr_points: int = 3) -> KmsReport:
    """Max ``|phi(A alpha_{t+i beta}(B)) - phi(alpha_t(B) A)|`` per pair.

    ``pairs`` holds ``(label, A, B)`` triples.  Also reports
    ``|phi(alpha_t(A)) - phi(A)|``, ``||e^{ith} Phi - Phi||_2`` over the grid and a
    Cauchy-Riemann finite-difference check at a few interior strip points.
    """
    t_grid = [float(t) for t in t_grid]
    if not t_grid:
        raise ValueError("t grid must be nonempty")
    fw = flow or w
    rho = density_matrix(w)
    unitaries = [flow_unitaries(fw, t) for t in t_grid]
    analytic = [flow_unitaries(fw, t + 1j * fw.beta) for t in t_grid]
    residuals, invariance, cr, labels = [], [], [], []
    for label, a, b in pairs:
        labels.append(label)
        worst = 0.0
        inv = 0.0
        phi_a = complex(np.trace(rho @ a))
        for (up, um), (zp, zm) in zip(unitaries, analytic):
            lhs = complex(np.trace(rho @ a @ (zp @ b @ zm)))
            rhs = complex(np.trace(rho @ (up @ b @ um) @ a))
            worst = max(worst, abs(lhs - rhs))
            inv = max(inv, abs(complex(np.trace(rho @ (up @ a @ um))) - phi_a))
        residuals.append(worst)
        invariance.append(inv)
        idx = np.linspace(0, len(t_grid) - 1, min(cr_points, len(t_grid))).round().astype(int)
        cr.append(max(_cauchy_riemann(w, a, b, t_grid[i], flow) for i in idx))
    phi = kms_vector(w)
    flow_inv = max(float(np.linalg.norm(up @ phi @ up.conj().T - phi))
                   for up, _ in unitaries)
    return KmsReport(
        beta=fw.beta, dim=w.dim, weights=[float(x) for x in w.weights],
        normalization=w.normalization, t_grid=t_grid, pairs=labels,
        residuals=residuals, invariance_residuals=invariance,
        cauchy_riemann=cr, flow_invariance=flow_inv,
    )


def default_kms_pairs(basis: BasisLike, rng: np.random.Generator, count: int = 20,
                      edge: int = 2) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """Seeded test pairs supported away from the truncation edge.

    Half are Gaussian combinations of interior matrix units ``X_kl``
    (``k, l < dim - edge``); the rest are random polynomials of degree <= 2
    in ``a, a^H`` compressed to the interior block.
    """
    d = as_basis(basis).dim
    k = d - edge
    if k < 1:
        raise DomainError("no interior block left")
    a, ad = build_ladder(d)
    monomials = [np.eye(d), a, ad, a @ a, a @ ad, ad @ a, ad @ ad]
    mask = np.zeros((d, d))
    mask[:k, :k] = 1.0

    def units():
        c = np.zeros((d, d), dtype=complex)
        c[:k, :k] = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        return c

    def poly():
        coef = rng.normal(size=len(monomials)) + 1j * rng.normal(size=len(monomials))
        return sum(c * m for c, m in zip(coef, monomials)) * mask

    out = []
    for n in range(count):
        make = units if n % 2 == 0 else poly
        out.append((f"{'units' if n % 2 == 0 else 'poly'}-{n}", make(), make()))
    return out


def interior_unit_pairs(basis: BasisLike, edge: int = 2,
                        max_label: int | None = None) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """All ``(X_kl, X_lk)`` pairs with labels below the edge (and ``max_label``)."""
    d = as_basis(basis).dim
    top = d - edge if max_label is None else min(d - edge, max_label + 1)
    out = []
    for k in range(top):
        for l in range(top):
            out.append((f"X{k}{l}", matrix_unit(k, l, d), matrix_unit(l, k, d)))
    return out


# ---------------------------------------------------------------------------
# audits
# ---------------------------------------------------------------------------

def sign_audit(w: WeightSequence, t: float = 0.7, seed: int = 0) -> dict:
    """Pin the orientation of Delta against the Tomita basis action and KMS.

    Checks that ``Delta^(1/2) = J^-1 S`` has eigenvalue ``(alpha_i/alpha_j)^(1/2)``
    on ``X_ij``, and compares the two flow orientations
    ``Delta^{-it/beta} . Delta^{it/beta}`` and ``Delta^{it/beta} . Delta^{-it/beta}``
    against the KMS boundary condition.
    """
    d = w.dim
    j = modular_conjugation(d)
    s = tomita_s(w)
    recovered = s.then(j)  # J^-1 = J, so J^-1 S = J o S as a linear map
    expected = modular_operator(w)
    sqrt_delta = matrix_function_hermitian(expected, math.sqrt)
    orientation_residual = float(np.abs(recovered - sqrt_delta).max())
    inverse_residual = float(np.abs(recovered - np.linalg.inv(sqrt_delta)).max())

    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    lhs, rhs = kms_boundary_pair(w, a, b, t)
    # opposite orientation: B -> e^{-izH} B e^{izH} = Delta^{iz/beta} B Delta^{-iz/beta}
    rho = density_matrix(w)
    lhs_rev = complex(np.trace(rho @ a @ evolve(w, -(t + 1j * w.beta), b)))
    rhs_rev = complex(np.trace(rho @ evolve(w, -t, b) @ a))
    return {
        "deltaEigenvalueOnXij": "alpha_i/alpha_j",
        "sqrtDeltaFromJS": orientation_residual,
        "sqrtDeltaInverseFromJS": inverse_residual,
        "kmsResidualFlowMinusDelta": abs(lhs - rhs),
        "kmsResidualFlowPlusDelta": abs(lhs_rev - rhs_rev),
        "flowConvention": "alpha_t(A) = Delta^{-it/beta} A Delta^{it/beta} = e^{itH} A e^{-itH}",
    }


def faithfulness_gram(w: WeightSequence) -> np.ndarray:
    """Gram of ``A -> phi(A^H A)`` over the matrix-unit coefficients of ``A``."""
    d = w.dim
    units = [matrix_unit(k, l, d) for k in range(d) for l in range(d)]
    rho = density_matrix(w)
    return np.array([[np.trace(rho @ x.conj().T @ y) for y in units] for x in units])


def cyclic_gram(w: WeightSequence) -> np.ndarray:
    d = w.dim
    phi = kms_vector(w)
    vecs = [matrix_unit(k, l, d) @ phi for k in range(d) for l in range(d)]
    return np.array([[hs_inner(x, y) for y in vecs] for x in vecs])


def separating_matrix(w: WeightSequence) -> np.ndarray:
    """Matrix of the linear map ``A -> (A v I) Phi`` in matrix-unit coordinates."""
    d = w.dim
    phi = kms_vector(w)
    return np.kron(np.eye(d), phi.T)


@dataclass(frozen=True)
class StructureReport:
    dim: int
    faithful: bool
    faithful_min_eigenvalue: float
    cyclic_rank: int
    cyclic: bool
    separating_rank: int
    separating: bool
    lattice_zero_only: bool

    @property
    def passed(self) -> bool:
        return self.faithful and self.cyclic and self.separating and self.lattice_zero_only

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "faithful": self.faithful,
            "faithfulMinEigenvalue": self.faithful_min_eigenvalue,
            "cyclicRank": self.cyclic_rank,
            "cyclic": self.cyclic,
            "separatingRank": self.separating_rank,
            "separating": self.separating,
            "latticeZeroOnly": self.lattice_zero_only,
            "passed": self.passed,
        }


def _lattice_zero_only(w: WeightSequence, phi_of: Callable[[np.ndarray], float]) -> bool:
    """Brute force over ``A`` with entries in {-1, 0, 1} on the leading block."""
    d = w.dim
    d_scan = min(d, 3)  # 3**(d*d) points, so scan the leading block only
    for coeffs in product((-1, 0, 1), repeat=d_scan * d_scan):
        a = np.zeros((d, d), dtype=complex)
        a[:d_scan, :d_scan] = np.reshape(coeffs, (d_scan, d_scan))
        zero = not np.any(a)
        if (phi_of(a) <= 0.0) != zero:
            return False
    return True


def structure_checks(w: WeightSequence) -> StructureReport:
    """Faithfulness, cyclicity and separation of ``Phi`` by exhaustive linear algebra."""
    d = w.dim
    g = faithfulness_gram(w)
    evals = np.linalg.eigvalsh(0.5 * (g + g.conj().T))
    tol = d * d * np.finfo(float).eps * max(1.0, float(np.abs(g).max()))
    c = cyclic_gram(w)
    c_rank = int(np.linalg.matrix_rank(c, tol=tol))
    sep = separating_matrix(w)
    s_rank = int(np.linalg.matrix_rank(sep))
    rho = density_matrix(w)
    lattice = _lattice_zero_only(
        w, lambda a: float(np.trace(rho @ a.conj().T @ a).real))
    return StructureReport(
        dim=d,
        faithful=bool(evals.min() > tol),
        faithful_min_eigenvalue=float(evals.min()),
        cyclic_rank=c_rank,
        cyclic=c_rank == d * d,
        separating_rank=s_rank,
        separating=s_rank == d * d,
        lattice_zero_only=lattice,
    )
