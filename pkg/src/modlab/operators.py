"""Dense linear algebra on a truncated harmonic-oscillator basis.

Operators are plain complex ``numpy`` arrays indexed by oscillator level
``n = 0 .. dim-1``.  Truncation breaks canonical commutation relations on the
top level(s), so identities such as ``[a, a^H] = I`` are only exact on the
leading block; helpers :func:`interior` and :func:`ccr_defect` make that
explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .config import DEFAULT
from .errors import (
    ConditioningError,
    DomainError,
    InvalidBasisError,
    SymmetryError,
)

MAX_HERMITE_LEVEL = 10**6


@dataclass(frozen=True)
class OscillatorBasis:
    """First ``dim`` oscillator levels."""

    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or isinstance(self.dim, bool):
            raise InvalidBasisError(f"dim must be an integer, got {self.dim!r}")
        if self.dim < 2:
            raise InvalidBasisError(f"dim must be >= 2, got {self.dim}")

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def levels(self) -> np.ndarray:
        return np.arange(self.dim)


BasisLike = Union[OscillatorBasis, int]


def as_basis(basis: BasisLike) -> OscillatorBasis:
    return basis if isinstance(basis, OscillatorBasis) else OscillatorBasis(int(basis))


@dataclass(frozen=True)
class HermitianEigen:
    eigenvalues: np.ndarray   # ascending, real
    eigenvectors: np.ndarray  # columns, unitary

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclass(frozen=True)
class PolarFactors:
    unitary: np.ndarray
    positive: np.ndarray

    def product(self) -> np.ndarray:
        return self.unitary @ self.positive


# ---------------------------------------------------------------------------
# truncated oscillator operators
# ---------------------------------------------------------------------------

def build_ladder(basis: BasisLike) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation and creation matrices, ``a[n-1, n] = sqrt(n)``."""
    d = as_basis(basis).dim
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)
    return a, a.conj().T.copy()


def number_operator(basis: BasisLike) -> np.ndarray:
    return np.diag(np.arange(as_basis(basis).dim, dtype=float)).astype(complex)


def build_position_momentum(basis: BasisLike) -> tuple[np.ndarray, np.ndarray]:
    a, ad = build_ladder(basis)
    s = math.sqrt(2.0)
    return (a + ad) / s, (a - ad) / (1j * s)


def oscillator_hamiltonian(basis: BasisLike) -> np.ndarray:
    """``diag(n + 1/2)``; agrees with ``(P^2 + Q^2)/2`` below the top two levels."""
    d = as_basis(basis).dim
    return np.diag(np.arange(d) + 0.5).astype(complex)


def interior(m: np.ndarray, drop: int = 1) -> np.ndarray:
    """Leading block of ``m`` with the top ``drop`` levels removed."""
    k = m.shape[0] - drop
    if k < 1:
        raise InvalidBasisError("nothing left after dropping boundary levels")
    return m[:k, :k]


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def ccr_defect(q: np.ndarray, p: np.ndarray, drop: int = 1) -> float:
    """``max |([q, p] - iI)_ij|`` over the interior block."""
    c = interior(commutator(q, p), drop)
    return float(np.abs(c - 1j * np.eye(c.shape[0])).max())


# ---------------------------------------------------------------------------
# Hermite functions
# ---------------------------------------------------------------------------

def hermite_functions(nmax: int, x) -> np.ndarray:
    """Values of ``zeta_0 .. zeta_nmax`` at ``x``; shape ``(nmax + 1,) + x.shape``.

    Uses the normalized recurrence
    ``zeta_{n+1} = x sqrt(2/(n+1)) zeta_n - sqrt(n/(n+1)) zeta_{n-1}``,
    so no factorials or raw Hermite polynomials are formed.
    """
    if nmax < 0:
        raise DomainError(f"level must be >= 0, got {nmax}")
    if nmax > MAX_HERMITE_LEVEL:
        raise DomainError(f"level {nmax} exceeds supported range {MAX_HERMITE_LEVEL}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("hermite functions need finite arguments")
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if nmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, nmax):
        out[n + 1] = (math.sqrt(2.0 / (n + 1)) * x * out[n]
                      - math.sqrt(n / (n + 1)) * out[n - 1])
    return out


def hermite_function(n: int, x):
    """``pi^(-1/4) (2^n n!)^(-1/2) exp(-x^2/2) h_n(x)`` by stable recurrence.

    Only two levels are kept in memory, so large ``n`` is cheap.
    """
    if n < 0:
        raise DomainError(f"level must be >= 0, got {n}")
    if n > MAX_HERMITE_LEVEL:
        raise DomainError(f"level {n} exceeds supported range {MAX_HERMITE_LEVEL}")
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise DomainError("hermite functions need finite arguments")
    prev = np.zeros_like(xa)
    cur = np.pi ** -0.25 * np.exp(-0.5 * xa * xa)
    for k in range(n):
        prev, cur = cur, (math.sqrt(2.0 / (k + 1)) * xa * cur
                          - math.sqrt(k / (k + 1)) * prev)
    return float(cur) if np.ndim(x) == 0 else cur


# ---------------------------------------------------------------------------
# spectral calculus
# ---------------------------------------------------------------------------

def hermitian_asymmetry(m: np.ndarray) -> float:
    return float(np.linalg.norm(m - m.conj().T))


def hermitian_eig(m: np.ndarray, tol: float = DEFAULT.hermitian) -> HermitianEigen:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidBasisError(f"expected a square matrix, got shape {m.shape}")
    scale = max(float(np.linalg.norm(m)), 1.0)
    asym = hermitian_asymmetry(m)
    if asym > tol * scale:
        raise SymmetryError(asym, tol * scale)
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return HermitianEigen(w, v)


def matrix_function_hermitian(m: np.ndarray, f: Callable,
                              tol: float = DEFAULT.hermitian) -> np.ndarray:
    """``V f(L) V^H`` for Hermitian ``m = V L V^H``; ``f`` may be complex-valued."""
    eig = hermitian_eig(m, tol)
    vals = np.empty(eig.eigenvalues.shape, dtype=complex)
    with np.errstate(all="raise"):
        for k, lam in enumerate(eig.eigenvalues):
            try:
                vals[k] = complex(f(lam))
            except (ValueError, ZeroDivisionError, OverflowError,
                    FloatingPointError) as exc:
                raise DomainError(f"function undefined at eigenvalue {lam!r}: {exc}") from exc
            if not np.isfinite(vals[k]):
                raise DomainError(f"function undefined at eigenvalue {lam!r}")
    v = eig.eigenvectors
    return (v * vals) @ v.conj().T


def polar_decompose(m: np.ndarray,
                    singular_ratio: float = DEFAULT.singular_ratio) -> PolarFactors:
    """Right polar decomposition ``m = U |m|`` with ``|m| = (m^H m)^(1/2)``."""
    m = np.asarray(m, dtype=complex)
    w, s, vh = np.linalg.svd(m)
    ratio = s[-1] / s[0] if s[0] > 0 else 0.0
    if ratio <= singular_ratio:
        raise ConditioningError(float(ratio), singular_ratio)
    u = w @ vh
    pos = (vh.conj().T * s) @ vh
    pos = 0.5 * (pos + pos.conj().T)
    return PolarFactors(u, pos)


def operator_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2)) if m.size else 0.0
