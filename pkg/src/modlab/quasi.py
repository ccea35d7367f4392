"""Modular/KMS data for general weight families on a domain of unbounded operators.

Unbounded operators only exist here through their truncations, so properties
such as "``tr(AXB)`` is finite" or "``||f(N) X N^k||`` is finite" are decided
by a *truncation sweep*: evaluate at increasing dims, fit the log-log slope of
the last three points, and classify as ``converged``, ``growing`` or
``inconclusive``.  A finite sweep is evidence, not proof, and every verdict
says so.

The modular objects themselves are shared with :mod:`modlab.modular`; a
Gibbs family goes through exactly the same code path.
"""

from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import zeta as riemann_zeta

from .config import DEFAULT
from .errors import DomainError, IdealMembershipWarning
from .hs import matrix_unit, super_adjoint, super_compose
from .modular import (
    WeightSequence,
    density_matrix,
    evolve,
    flow_unitaries,
    gibbs_weights,
    kms_residual,
    kms_vector,
    liouvillian,
    modular_hamiltonian,
    modular_operator,
    projector_pair,
    structure_checks,
    tomita_s,
    weight_sequence,
)
from .operators import build_ladder, matrix_function_hermitian, number_operator

DEFAULT_SWEEP_DIMS = (16, 32, 64, 128)
DEFAULT_TEST_OPS = ("I", "N", "N^2", "a", "a^H")
EVIDENCE_NOTE = "finite truncation sweep over a fixed test family; not a proof"


# ---------------------------------------------------------------------------
# truncation sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncationSweep:
    dims: tuple
    values: tuple
    exponent: float
    verdict: str

    def to_dict(self) -> dict:
        return {"dims": list(self.dims), "values": list(self.values),
                "exponent": self.exponent, "verdict": self.verdict}


def classify_sweep(dims: Sequence[int], values: Sequence[float],
                   growth: float = DEFAULT.growth_exponent,
                   step: float = DEFAULT.converged_step) -> TruncationSweep:
    """Log-log slope of the last three points decides the verdict.

    Constant tails (including identically zero) are ``converged`` with
    exponent 0.  Otherwise slope > ``growth`` is ``growing``; slope <= ``growth``
    with last relative change <= ``step`` is ``converged``.
    """
    dims = tuple(int(d) for d in dims)
    values = tuple(float(v) for v in values)
    if len(dims) < 3 or len(dims) != len(values):
        raise ValueError("a sweep needs at least three (dim, value) points")
    if any(b <= a for a, b in zip(dims, dims[1:])):
        raise ValueError(f"sweep dims must be strictly ascending, got {dims}")
    tail = np.abs(np.array(values[-3:]))
    scale = max(float(tail.max()), 1e-300)
    if float(tail.max() - tail.min()) <= 1e-12 * scale:
        return TruncationSweep(dims, values, 0.0, "converged")
    if np.any(tail == 0.0):
        return TruncationSweep(dims, values, float("nan"), "inconclusive")
    slope = float(np.polyfit(np.log(dims[-3:]), np.log(tail), 1)[0])
    last_change = abs(tail[-1] - tail[-2]) / tail[-1]
    if slope > growth:
        verdict = "growing"
    elif last_change <= step:
        verdict = "converged"
    else:
        verdict = "inconclusive"
    return TruncationSweep(dims, values, slope, verdict)


# ---------------------------------------------------------------------------
# operator rules: name -> (dim -> matrix)
# ---------------------------------------------------------------------------

OperatorRule = Callable[[int], np.ndarray]

_UNIT = re.compile(r"^X_\{?(\d+),?(\d+)\}?$")
_DIAG = re.compile(r"^diag\(\(n\+1\)\^(-?[0-9.]+)\)$")


def diag_power(p: float) -> OperatorRule:
    return lambda d: np.diag((np.arange(d) + 1.0) ** p).astype(complex)


def rank_one(phi: Sequence[complex], psi: Sequence[complex]) -> OperatorRule:
    """``|phi><psi|`` for finitely supported coefficient vectors."""
    phi = np.asarray(phi, dtype=complex)
    psi = np.asarray(psi, dtype=complex)

    def build(d):
        if max(phi.size, psi.size) > d:
            raise DomainError("rank-one support exceeds the truncation")
        u = np.zeros(d, dtype=complex)
        v = np.zeros(d, dtype=complex)
        u[:phi.size] = phi
        v[:psi.size] = psi
        return np.outer(u, v.conj())
    return build


def operator_rule(spec: Union[str, OperatorRule]) -> OperatorRule:
    """Resolve ``I, N, N^2, N^k, a, a^H, X_kl, diag((n+1)^p)`` or pass a callable through."""
    if callable(spec):
        return spec
    s = spec.replace(" ", "")
    if s == "I":
        return lambda d: np.eye(d, dtype=complex)
    if s == "N":
        return number_operator
    m = re.fullmatch(r"N\^(\d+)", s)
    if m:
        k = int(m.group(1))
        return lambda d: np.diag(np.arange(d, dtype=float) ** k).astype(complex)
    if s == "a":
        return lambda d: build_ladder(d)[0]
    if s in ("a^H", "a^*", "a^dag"):
        return lambda d: build_ladder(d)[1]
    m = _UNIT.match(s)
    if m:
        i, j = int(m.group(1)), int(m.group(2))
        return lambda d: matrix_unit(i, j, d)
    m = _DIAG.match(s)
    if m:
        return diag_power(float(m.group(1)))
    raise DomainError(f"unknown operator rule {spec!r}")


# ---------------------------------------------------------------------------
# ideal membership
# ---------------------------------------------------------------------------

@dataclass
class IdealDiagnostic:
    candidate: str
    test_pairs: list
    sweeps: list
    verdict: str
    note: str = EVIDENCE_NOTE

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate,
            "testPairs": [list(p) for p in self.test_pairs],
            "traceSweeps": [s.to_dict() for s in self.sweeps],
            "verdict": self.verdict,
            "note": self.note,
        }


def ideal_membership(candidate, test_ops: Sequence = DEFAULT_TEST_OPS,
                     dims: Sequence[int] = DEFAULT_SWEEP_DIMS,
                     name: str | None = None) -> IdealDiagnostic:
    """Sweep ``|tr(A X B)|`` for all ordered pairs from ``test_ops``.

    ``member`` iff every sweep converges; ``non-member`` if any grows;
    ``inconclusive`` otherwise.
    """
    if not test_ops:
        raise ValueError("test_ops must be nonempty")
    x_rule = operator_rule(candidate)
    rules = {str(t): operator_rule(t) for t in test_ops}
    pairs, sweeps = [], []
    mats = {d: (x_rule(d), {k: r(d) for k, r in rules.items()}) for d in dims}
    for an in rules:
        for bn in rules:
            vals = [abs(complex(np.trace(ops[an] @ x @ ops[bn]))) for x, ops in mats.values()]
            pairs.append((an, bn))
            sweeps.append(classify_sweep(dims, vals))
    verdicts = {s.verdict for s in sweeps}
    if verdicts == {"converged"}:
        verdict = "member"
    elif "growing" in verdicts:
        verdict = "non-member"
    else:
        verdict = "inconclusive"
    label = name or (candidate if isinstance(candidate, str) else "custom")
    return IdealDiagnostic(label, pairs, sweeps, verdict)


# ---------------------------------------------------------------------------
# weight families
# ---------------------------------------------------------------------------

@dataclass
class WeightFamily:
    """Rule for ``lambda_n`` at any truncation, renormalized per truncation."""

    kind: str
    params: dict
    beta: float = 1.0
    phi_diagnostic: IdealDiagnostic | None = field(default=None, compare=False)

    def raw(self, dim: int) -> np.ndarray:
        n = np.arange(dim, dtype=float)
        if self.kind == "gibbs":
            return -math.expm1(-self.beta) * np.exp(-self.beta * n)
        if self.kind == "zeta":
            s = float(self.params["s"])
            return (n + 1.0) ** (-s) / float(riemann_zeta(s))
        w = np.asarray(self.params["weights"], dtype=float)
        if dim > w.size:
            raise DomainError(f"custom family has only {w.size} weights, asked for {dim}")
        return w[:dim]

    def weights(self, dim: int) -> WeightSequence:
        if self.kind == "gibbs":
            return gibbs_weights(dim, self.beta)
        return weight_sequence(self.raw(dim), self.beta)

    def phi_rule(self) -> OperatorRule:
        return lambda d: np.diag(np.sqrt(self.raw(d))).astype(complex)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "params": self.params, "beta": self.beta}
        if self.phi_diagnostic is not None:
            out["phiInIdeal"] = self.phi_diagnostic.verdict
        return out


def weight_family(kind: str, params: dict | None = None, beta: float = 1.0,
                  check_phi: bool = True, require_phi_in_ideal: bool = False,
                  dims: Sequence[int] = DEFAULT_SWEEP_DIMS) -> WeightFamily:
    """Validate and build a family; optionally diagnose ``Phi`` in the ideal.

    A ``growing`` verdict for ``Phi`` raises only if ``require_phi_in_ideal``;
    otherwise it emits :class:`IdealMembershipWarning` and the diagnostic is
    stored on the family.
    """
    params = dict(params or {})
    if not (beta > 0 and math.isfinite(beta)):
        raise DomainError(f"beta must be positive, got {beta}")
    if kind == "gibbs":
        params.setdefault("beta", beta)
        beta = float(params["beta"])
        if not (beta > 0 and math.isfinite(beta)):
            raise DomainError(f"beta must be positive, got {beta}")
    elif kind == "zeta":
        s = float(params.get("s", 2.0))
        if not (s > 1 and math.isfinite(s)):
            raise DomainError(f"zeta family needs s > 1 for summability, got {s}")
        params["s"] = s
    elif kind == "custom":
        w = np.asarray(params.get("weights", []), dtype=float)
        if w.ndim != 1 or w.size < 2:
            raise DomainError("custom family needs at least two weights")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DomainError("custom weights must be finite and strictly positive")
        params["weights"] = [float(v) for v in w]
        dims = [d for d in dims if d <= w.size]
    else:
        raise DomainError(f"unknown weight kind {kind!r}")
    fam = WeightFamily(kind, params, float(beta))
    if check_phi and len(dims) >= 3:
        diag = ideal_membership(fam.phi_rule(), dims=dims, name="Phi")
        fam.phi_diagnostic = diag
        if diag.verdict == "non-member":
            msg = f"Phi for {kind} weights looks outside the ideal (traces grow with truncation)"
            if require_phi_in_ideal:
                raise DomainError(msg)
            warnings.warn(msg, IdealMembershipWarning, stacklevel=2)
    return fam


def load_weight_family(path, **kwargs) -> WeightFamily:
    """Read ``{"kind": ..., ...}`` from a JSON file."""
    with open(path) as fh:
        data = json.load(fh)
    kind = data.pop("kind")
    beta = float(data.pop("beta", 1.0))
    if kind == "gibbs":
        data.setdefault("beta", beta)
    return weight_family(kind, data, beta=beta, **kwargs)


# ---------------------------------------------------------------------------
# seminorms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeminormSpec:
    family: str = "exp"      # "exp": e^{-c x};  "power": (1 + x)^{-p}
    param: float = 1.0
    k: int = 0
    variant: str = "fk"      # "fk": max(||f(N) X N^k||, ||N^k X f(N)||);  "ff": ||f(N) X f(N)||

    def __post_init__(self):
        if self.family not in ("exp", "power"):
            raise DomainError(f"unknown seminorm family {self.family!r}")
        if not self.param > 0:
            raise DomainError("seminorm parameter must be positive")
        if self.k < 0:
            raise DomainError("k must be nonnegative")
        if self.variant not in ("fk", "ff"):
            raise DomainError(f"unknown seminorm variant {self.variant!r}")

    def f(self, x: np.ndarray) -> np.ndarray:
        if self.family == "exp":
            return np.exp(-self.param * x)
        return (1.0 + x) ** (-self.param)


def seminorm_value(x: np.ndarray, spec: SeminormSpec) -> float:
    d = x.shape[0]
    n = np.arange(d, dtype=float)
    fn = spec.f(n)
    if spec.variant == "ff":
        return float(np.linalg.norm(fn[:, None] * x * fn[None, :], 2))
    nk = n ** spec.k
    left = np.linalg.norm(fn[:, None] * x * nk[None, :], 2)
    right = np.linalg.norm(nk[:, None] * x * fn[None, :], 2)
    return float(max(left, right))


def seminorm_eval(x, spec: SeminormSpec = SeminormSpec(),
                  dims: Sequence[int] = DEFAULT_SWEEP_DIMS) -> TruncationSweep:
    rule = operator_rule(x)
    dims = list(dims)
    if any(b <= a for a, b in zip(dims, dims[1:])):
        raise ValueError(f"sweep dims must be strictly ascending, got {dims}")
    return classify_sweep(dims, [seminorm_value(rule(d), spec) for d in dims])


def flow_domain_check(fam: WeightFamily, t: float = 1.0,
                      dims: Sequence[int] = DEFAULT_SWEEP_DIMS,
                      ks: Sequence[int] = (0, 1, 2)) -> dict:
    """Seminorm sweeps of the truncated ``e^{itH_phi}``; reported, never assumed."""
    out = {}
    for k in ks:
        spec = SeminormSpec(k=k)
        rule = lambda d: flow_unitaries(fam.weights(d), t)[0]
        out[f"k={k}"] = seminorm_eval(rule, spec, dims).to_dict()
    return {"t": t, "sweeps": out,
            "allConverged": all(v["verdict"] == "converged" for v in out.values())}


# ---------------------------------------------------------------------------
# states, modular data, dynamics
# ---------------------------------------------------------------------------

def quasi_state(w: WeightSequence, a: np.ndarray, side: str = "left") -> complex:
    """``phi(A v 1) = <Phi, A Phi>_2`` or ``phi~(1 v A) = conj <Phi, (1 v A) Phi>_2``."""
    phi = kms_vector(w)
    if side == "left":
        return complex(np.vdot(phi, a @ phi))
    if side == "right":
        return complex(np.vdot(phi, phi @ a.conj().T)).conjugate()
    raise DomainError(f"side must be 'left' or 'right', got {side!r}")


def quasi_states(w: WeightSequence, a: np.ndarray, tol: float = DEFAULT.identity) -> dict:
    left = quasi_state(w, a, "left")
    right = quasi_state(w, a, "right")
    trace = complex(np.trace(density_matrix(w) @ a))
    return {
        "left": left, "right": right, "trace": trace,
        "leftRightGap": abs(left - right), "traceGap": abs(left - trace),
        "agree": abs(left - right) <= tol and abs(left - trace) <= tol,
    }


def quasi_modular(w: WeightSequence, tol: float = DEFAULT.identity) -> dict:
    """Generalized modular data with the projector and spectral identities checked."""
    d = w.dim
    lam = w.weights
    h = modular_hamiltonian(w)
    lv = liouvillian(w)
    delta = modular_operator(w)
    expected_h = -np.log(lam) / w.beta
    expected_lv = -np.subtract.outer(np.log(lam), np.log(lam)).reshape(-1) / w.beta
    delta_exp = matrix_function_hermitian(lv, lambda x: math.exp(-w.beta * x))
    rho_exp = matrix_function_hermitian(h, lambda x: math.exp(-w.beta * x))

    # P_ij P_kl = (X_ii X_kk) v (X_jj X_ll): products checked in factorized form
    flat = [projector_pair(i, j, d) for i in range(d) for j in range(d)]
    idem = adj = orth = 0.0
    total = np.zeros(d * d)
    for a_idx, p in enumerate(flat):
        total += np.diag(p.dense()).real
        pp = super_compose(p, p)
        idem = max(idem, float(np.abs(pp.left - p.left).max()),
                   float(np.abs(pp.right - p.right).max()))
        padj = super_adjoint(p)
        adj = max(adj, float(np.abs(padj.left - p.left).max()),
                  float(np.abs(padj.right - p.right).max()))
        for q in flat[a_idx + 1:]:
            pq = super_compose(p, q)
            orth = max(orth, float(np.abs(pq.left).max() * np.abs(pq.right).max()))
    diag_fixed = max(float(np.abs(delta @ matrix_unit(i, i, d).reshape(-1)
                                  - matrix_unit(i, i, d).reshape(-1)).max()) for i in range(d))
    checks = {
        "hamiltonianSpectrum": float(np.abs(np.diag(h).real - expected_h).max()),
        "liouvillianSpectrum": float(np.abs(np.diag(lv).real - expected_lv).max()),
        "deltaEqualsExpMinusBetaH": float(np.abs(delta_exp - delta).max()
                                          / max(1.0, float(np.abs(delta).max()))),
        "rhoEqualsExpMinusBetaH": float(np.abs(rho_exp - density_matrix(w)).max()),
        "projectorIdempotent": idem,
        "projectorSelfAdjoint": adj,
        "projectorOrthogonal": orth,
        "projectorSum": float(np.abs(total - 1.0).max()),
        "deltaFixesDiagonalUnits": diag_fixed,
    }
    return {"dim": d, "beta": w.beta, "checks": checks,
            "passed": all(v <= max(tol, 1e-10) for v in checks.values())}


def quasi_dynamics(w: WeightSequence, t: float, a: np.ndarray) -> np.ndarray:
    """``alpha_t(A v 1) = (e^{itH} A e^{-itH}) v 1``; returns the left operator."""
    return evolve(w, t, a)


def liouville_factorization(w: WeightSequence, t: float) -> float:
    """``|| e^{ith} - e^{itH} v e^{itH} ||`` as dense maps."""
    u, _ = flow_unitaries(w, t)
    dense = matrix_function_hermitian(liouvillian(w), lambda x: np.exp(1j * t * x))
    return float(np.abs(dense - np.kron(u, u.conj())).max())


def quasi_kms_residual(w: WeightSequence, pairs, t_grid: Sequence[float]):
    report = kms_residual(w, pairs, t_grid)
    report.extra["liouvilleFactorization"] = max(
        liouville_factorization(w, t) for t in (t_grid[0], t_grid[len(t_grid) // 2], t_grid[-1]))
    report.extra["tomitaOnOrbit"] = tomita_orbit_residual(w)
    return report


def tomita_orbit_residual(w: WeightSequence) -> float:
    """``S((A v 1) Phi) = (A^H v 1) Phi`` over every matrix unit ``A``."""
    d = w.dim
    s = tomita_s(w)
    phi = kms_vector(w)
    worst = 0.0
    for i in range(d):
        for j in range(d):
            a = matrix_unit(i, j, d)
            worst = max(worst, float(np.abs(s(a @ phi) - a.conj().T @ phi).max()))
    return worst


# ---------------------------------------------------------------------------
# elementary properties of the ideal
# ---------------------------------------------------------------------------

def boundedness_check(samples: int, dim: int, rng: np.random.Generator | None = None,
                      tol: float = DEFAULT.identity) -> dict:
    """``||X|| <= ||X||_2`` for seeded random elements, plus two fixed cases."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    worst = -math.inf
    violations = 0
    for _ in range(samples):
        x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        gap = np.linalg.norm(x, 2) - np.linalg.norm(x)
        worst = max(worst, float(gap))
        violations += int(gap > tol)
    x01 = matrix_unit(0, 1, dim)
    x0011 = matrix_unit(0, 0, dim) + matrix_unit(1, 1, dim)
    return {
        "samples": samples, "dim": dim, "violations": violations,
        "maxNormMinusHsNorm": worst,
        "X01": [float(np.linalg.norm(x01, 2)), float(np.linalg.norm(x01))],
        "X00+X11": [float(np.linalg.norm(x0011, 2)), float(np.linalg.norm(x0011))],
        "passed": violations == 0,
    }


def structure_property_checks(w: WeightSequence) -> dict:
    d = w.dim
    if d > 8:
        raise DomainError("structure checks are brute force; use dim <= 8")
    base = structure_checks(w)
    units = np.array([matrix_unit(i, j, d).reshape(-1) for i in range(d) for j in range(d)])
    gram = units.conj() @ units.T
    ortho = float(np.abs(gram - np.eye(d * d)).max())
    # Z orthogonal to every X_ij: the stacked inner products are Z's coefficients,
    # so the complement is the null space of the unit matrix.
    complement = d * d - int(np.linalg.matrix_rank(units))
    rho = density_matrix(w)
    rng = np.random.default_rng(0)
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    lhs = complex(np.trace(rho @ a.conj().T @ a))
    rhs = sum(w.weights[n] * np.linalg.norm(a[:, n]) ** 2 for n in range(d))
    out = base.to_dict()
    out.update({
        "unitOrthonormality": ortho,
        "orthogonalComplementDim": complement,
        "faithfulSumIdentity": abs(lhs - rhs),
    })
    out["passed"] = bool(base.passed and ortho == 0.0 and complement == 0
                         and abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs)))
    return out
