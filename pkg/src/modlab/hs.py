"""Truncated Hilbert-Schmidt space ``B2(H)``.

Elements are ``dim x dim`` complex arrays.  Whenever they are flattened to
vectors of length ``dim**2`` the order is row-major over ``(i, j)`` of the
matrix unit ``X_ij = |i><j|``; this fixes the matrices of all superoperators
and antilinear maps below.

``A v B`` denotes the superoperator ``X -> A X B^H``.  In row-major
coordinates its matrix is ``kron(A, conj(B))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT
from .errors import BasisMismatchError, InvalidBasisError
from .operators import BasisLike, as_basis, operator_norm


def _check_pair(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise BasisMismatchError(f"shapes {x.shape} and {y.shape} differ")


def _square(x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise InvalidBasisError(f"expected a square matrix, got shape {x.shape}")
    return x


def matrix_unit(i: int, j: int, basis: BasisLike) -> np.ndarray:
    d = as_basis(basis).dim
    if not (0 <= i < d and 0 <= j < d):
        raise IndexError(f"matrix unit ({i}, {j}) outside dim {d}")
    x = np.zeros((d, d), dtype=complex)
    x[i, j] = 1.0
    return x


def hs_inner(x: np.ndarray, y: np.ndarray) -> complex:
    """``Tr[x^H y]``, conjugate-linear in the first slot."""
    x, y = _square(x), _square(y)
    _check_pair(x, y)
    return complex(np.vdot(x, y))


def hs_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x))


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=complex).reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise InvalidBasisError(f"vector length {v.size} is not a square")
    return np.asarray(v).reshape(d, d)


def expand(x: np.ndarray) -> np.ndarray:
    """Coefficients ``<X_ij, x>`` in the matrix-unit basis, row-major."""
    x = _square(x)
    d = x.shape[0]
    return np.array([hs_inner(matrix_unit(i, j, d), x)
                     for i in range(d) for j in range(d)])


def reconstruct(coeffs: np.ndarray, basis: BasisLike) -> np.ndarray:
    d = as_basis(basis).dim
    out = np.zeros((d, d), dtype=complex)
    for k, c in enumerate(coeffs):
        out += c * matrix_unit(k // d, k % d, d)
    return out


# ---------------------------------------------------------------------------
# factorized superoperators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactorizedSuperOp:
    """The map ``X -> left @ X @ right^H``."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        left, right = _square(self.left), _square(self.right)
        _check_pair(left, right)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @property
    def dim(self) -> int:
        return self.left.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return apply_super(self, x)

    def dense(self) -> np.ndarray:
        return np.kron(self.left, self.right.conj())

    def is_left_lifted(self, tol: float = DEFAULT.identity) -> bool:
        eye = np.eye(self.dim)
        return float(np.abs(self.right - eye).max()) <= tol

    def is_right_lifted(self, tol: float = DEFAULT.identity) -> bool:
        eye = np.eye(self.dim)
        return float(np.abs(self.left - eye).max()) <= tol


def vee(a: np.ndarray, b: np.ndarray) -> FactorizedSuperOp:
    return FactorizedSuperOp(a, b)


def apply_super(s: FactorizedSuperOp, x: np.ndarray) -> np.ndarray:
    x = _square(x)
    _check_pair(s.left, x)
    return s.left @ x @ s.right.conj().T


def super_adjoint(s: FactorizedSuperOp) -> FactorizedSuperOp:
    return FactorizedSuperOp(s.left.conj().T, s.right.conj().T)


def super_compose(s1: FactorizedSuperOp, s2: FactorizedSuperOp) -> FactorizedSuperOp:
    """``s1 o s2 = (A1 A2) v (B1 B2)``."""
    _check_pair(s1.left, s2.left)
    return FactorizedSuperOp(s1.left @ s2.left, s1.right @ s2.right)


def lift_left(a: np.ndarray) -> FactorizedSuperOp:
    a = _square(a)
    return FactorizedSuperOp(a, np.eye(a.shape[0], dtype=complex))


def lift_right(a: np.ndarray) -> FactorizedSuperOp:
    a = _square(a)
    return FactorizedSuperOp(np.eye(a.shape[0], dtype=complex), a)


def left_factor_fit(m: np.ndarray, dim: int) -> tuple[np.ndarray, float]:
    """Best ``A`` with ``kron(A, I) ~ m`` in Frobenius norm, and the residual."""
    t = m.reshape(dim, dim, dim, dim)
    a = np.einsum("ikjk->ij", t) / dim
    return a, float(np.linalg.norm(m - np.kron(a, np.eye(dim))))


def right_factor_fit(m: np.ndarray, dim: int) -> tuple[np.ndarray, float]:
    """Best ``C`` with ``kron(I, C) ~ m``; the right operator is ``B = conj(C)``."""
    t = m.reshape(dim, dim, dim, dim)
    c = np.einsum("kikj->ij", t) / dim
    return c, float(np.linalg.norm(m - np.kron(np.eye(dim), c)))


# ---------------------------------------------------------------------------
# antilinear maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AntilinearMap:
    """``x -> linear @ conj(vec(x))`` in row-major matrix-unit coordinates."""

    linear: np.ndarray

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.linear.shape[0])))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = _square(x)
        if x.size != self.linear.shape[1]:
            raise BasisMismatchError(
                f"map acts on dim {self.dim}, element has dim {x.shape[0]}")
        return unvec(self.linear @ vec(x).conj())

    def adjoint(self) -> "AntilinearMap":
        # <T x, y> = conj(<x, T* y>) forces T* = linear^T o conj
        return AntilinearMap(self.linear.T.copy())

    def then(self, other: "AntilinearMap") -> np.ndarray:
        """Matrix of the linear map ``other o self``."""
        return other.linear @ self.linear.conj()

    def squared(self) -> np.ndarray:
        return self.then(self)


def modular_conjugation(basis: BasisLike) -> AntilinearMap:
    """``J X_ij = X_ji`` extended antilinearly, i.e. ``J X = X^H``."""
    d = as_basis(basis).dim
    perm = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            perm[j * d + i, i * d + j] = 1.0
    return AntilinearMap(perm)


def conjugate_by(j: AntilinearMap, s: FactorizedSuperOp) -> np.ndarray:
    """Dense matrix of the linear map ``J o s o J``."""
    # J s J x = L conj(S L conj x) = L conj(S) conj(L) x
    return j.linear @ s.dense().conj() @ j.linear.conj()


def super_bound_ok(s: FactorizedSuperOp, x: np.ndarray) -> bool:
    """``||A X B^H||_2 <= ||A|| ||B|| ||X||_2`` (with rounding slack)."""
    lhs = hs_norm(apply_super(s, x))
    rhs = operator_norm(s.left) * operator_norm(s.right) * hs_norm(x)
    return lhs <= rhs * (1 + 1e-12) + 1e-300


# ---------------------------------------------------------------------------
# centre of the left/right algebras
# ---------------------------------------------------------------------------

def center_residual(basis: BasisLike, samples: int,
                    rng: np.random.Generator | None = None,
                    coincidence_tol: float = 1e-8) -> float:
    """Largest non-scalar part of any sampled ``A`` whose ``A v I`` is right-lifted.

    For each sample ``A`` the best ``B`` with ``A v I ~ I v B`` is found by
    projection; if it reproduces the map (a coincidence) the distance of ``A``
    from ``(tr A / d) I`` is recorded.  Returns 0 when no coincidence occurs.
    Half the samples are scalar multiples of the identity so that
    coincidences are actually exercised.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    d = as_basis(basis).dim
    rng = rng if rng is not None else np.random.default_rng(0)
    worst = 0.0
    for k in range(samples):
        if k % 2:
            a = (rng.normal() + 1j * rng.normal()) * np.eye(d)
        else:
            a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        m = lift_left(a).dense()
        _, resid = right_factor_fit(m, d)
        if resid <= coincidence_tol * max(1.0, np.linalg.norm(m)):
            scalar = np.trace(a) / d
            worst = max(worst, float(np.abs(a - scalar * np.eye(d)).max()))
    return worst


def center_dimension(basis: BasisLike, tol: float = 1e-10) -> int:
    """Dimension of ``{(A, C): kron(A, I) = kron(I, C)}`` by exhaustive solve.

    Columns enumerate every matrix unit for ``A`` and for ``C = conj(B)``; the
    null space of the stacked system is the intersection of the two algebras.
    """
    d = as_basis(basis).dim
    eye = np.eye(d)
    cols = []
    for k in range(d * d):
        e = np.zeros(d * d)
        e[k] = 1.0
        cols.append(np.kron(e.reshape(d, d), eye).reshape(-1))
    for k in range(d * d):
        e = np.zeros(d * d)
        e[k] = 1.0
        cols.append(-np.kron(eye, e.reshape(d, d)).reshape(-1))
    system = np.array(cols).T
    s = np.linalg.svd(system, compute_uv=False)
    return int(np.sum(s <= tol * s[0])) + (system.shape[1] - s.size)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def hs_to_json(x: np.ndarray) -> list[list[float]]:
    """Row-major list of ``[re, im]`` pairs."""
    return [[float(z.real), float(z.imag)] for z in vec(x)]


def hs_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("expected a list of [re, im] pairs")
    return unvec(arr[:, 0] + 1j * arr[:, 1])
