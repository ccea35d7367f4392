"""Wigner transform from truncated ``B2(H)`` to functions on a planar grid.

``(W X)(x, y) = (2 pi)^(-1/2) Tr[U(x, y)^H X]`` with the Weyl operator
``U(x, y) = exp(-i (x Q + y P))``.

Evaluation uses the rotation identity ``x Q + y P = r R^H Q R`` with
``R = exp(-i theta N)``, which holds exactly for the truncated matrices
(``N`` is diagonal, so ``R^H a R = e^{-i theta} a`` entry by entry).  One
eigendecomposition of ``Q`` therefore serves the whole grid:

    <l| U^H |n> = e^{i theta (l - n)} sum_k V[l, k] V[n, k] e^{i r q_k}.

:func:`weyl_operator` is the direct per-point eigendecomposition and is used
as the independent route in tests.

Grid differential operators (spectral FFT derivatives) act on
:class:`GridFunction` values indexed ``[x_index, y_index]``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT
from .errors import DomainError, InvalidBasisError, TailMassWarning, TruncationRiskError
from .landau import eigenstate_coefficients, ground_state_coefficients
from .operators import (
    as_basis,
    build_position_momentum,
    hermite_functions,
    matrix_function_hermitian,
    oscillator_hamiltonian,
)

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    points: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise DomainError("grid bounds must satisfy min < max")
        if self.points < 3:
            raise DomainError("pointsPerAxis must be >= 3")

    @classmethod
    def square(cls, half_width: float, points: int) -> "GridSpec":
        return cls(-half_width, half_width, -half_width, half_width, points)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.points)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.points)

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / (self.points - 1)

    @property
    def hy(self) -> float:
        return (self.y_max - self.y_min) / (self.points - 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def weights(self) -> np.ndarray:
        """Tensor trapezoid weights."""
        wx = np.full(self.points, self.hx)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.points, self.hy)
        wy[[0, -1]] *= 0.5
        return np.outer(wx, wy)

    def margin_mask(self, fraction: float = 0.1) -> np.ndarray:
        x, y = self.mesh()
        mx = fraction * (self.x_max - self.x_min)
        my = fraction * (self.y_max - self.y_min)
        return ((x < self.x_min + mx) | (x > self.x_max - mx)
                | (y < self.y_min + my) | (y > self.y_max - my))

    def to_dict(self) -> dict:
        return {"xMin": self.x_min, "xMax": self.x_max, "yMin": self.y_min,
                "yMax": self.y_max, "pointsPerAxis": self.points}


# Wide enough that every function used with labels <= 2 is below 1e-8 on the
# outer 10% and the quadrature tail is far below 1e-12.
DEFAULT_GRID = GridSpec.square(13.0, 209)


@dataclass
class GridFunction:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.points, self.grid.points):
            raise DomainError(f"values shape {self.values.shape} does not match grid")

    def inner(self, other: "GridFunction") -> complex:
        """Trapezoid ``int conj(self) other``."""
        return complex(np.sum(self.grid.weights() * self.values.conj() * other.values))

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self).real, 0.0))

    def at(self, x: float, y: float) -> complex:
        """Value at a grid node (nearest node; exact if ``(x, y)`` is one)."""
        i = int(round((x - self.grid.x_min) / self.grid.hx))
        j = int(round((y - self.grid.y_min) / self.grid.hy))
        return complex(self.values[i, j])

    def phase_fixed(self, threshold: float = 1e-3) -> "GridFunction":
        """Multiply by a unit phase so the first significant value (row-major) is positive."""
        flat = self.values.reshape(-1)
        big = np.flatnonzero(np.abs(flat) > threshold * np.abs(flat).max())
        if big.size == 0:
            return GridFunction(self.grid, self.values.copy())
        v = flat[big[0]]
        return GridFunction(self.grid, self.values * (abs(v) / v))

    def to_csv(self, path) -> None:
        x, y = self.grid.mesh()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "re", "im"])
            for xi, yi, v in zip(x.reshape(-1), y.reshape(-1), self.values.reshape(-1)):
                w.writerow([repr(float(xi)), repr(float(yi)),
                            repr(float(v.real)), repr(float(v.imag))])


# ---------------------------------------------------------------------------
# Weyl operators and the transform
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeylOperator:
    x: float
    y: float
    matrix: np.ndarray

    def unitarity_defect(self) -> float:
        u = self.matrix
        return float(np.abs(u @ u.conj().T - np.eye(u.shape[0])).max())


def weyl_operator(x: float, y: float, basis) -> WeylOperator:
    """``exp(-i (x Q + y P))`` by Hermitian eigendecomposition."""
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DomainError("Weyl operator needs finite arguments")
    q, p = build_position_momentum(basis)
    u = matrix_function_hermitian(x * q + y * p, lambda lam: np.exp(-1j * lam))
    return WeylOperator(float(x), float(y), u)


def _q_spectrum(dim: int) -> tuple[np.ndarray, np.ndarray]:
    q, _ = build_position_momentum(dim)
    w, v = np.linalg.eigh(q.real)
    return w, v


def _polar(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    x, y = grid.mesh()
    return np.hypot(x, y), np.arctan2(y, x)


def tail_mass(x: np.ndarray, levels: int = 2) -> float:
    """Fraction of ``||X||_2^2`` carried by rows/columns of the top ``levels`` levels."""
    total = float(np.sum(np.abs(x) ** 2))
    if total == 0.0:
        return 0.0
    inner = float(np.sum(np.abs(x[:-levels, :-levels]) ** 2))
    return (total - inner) / total


def wigner_transform(x: np.ndarray, grid: GridSpec,
                     tail_tol: float = DEFAULT.tail_mass) -> GridFunction:
    """``(2 pi)^(-1/2) Tr[U(x, y)^H X]`` at every grid node.

    Emits :class:`TailMassWarning` when the top two oscillator levels carry
    more than ``tail_tol`` of the Hilbert-Schmidt mass of ``x``.
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise InvalidBasisError(f"expected a square matrix, got shape {x.shape}")
    d = as_basis(x.shape[0]).dim
    frac = tail_mass(x)
    if frac > tail_tol:
        warnings.warn(f"top two levels carry {frac:.3e} of ||X||^2; enlarge the basis",
                      TailMassWarning, stacklevel=2)
    q, v = _q_spectrum(d)
    r, theta = _polar(grid)
    # C[m + d - 1, k] = sum_{l - n = m} X[n, l] V[l, k] V[n, k]
    coeff = np.zeros((2 * d - 1, d), dtype=complex)
    for n, l in zip(*np.nonzero(x)):
        coeff[l - n + d - 1] += x[n, l] * v[l] * v[n]
    active = np.flatnonzero(np.any(coeff != 0, axis=1))
    rr = r.reshape(-1)
    th = theta.reshape(-1)
    out = np.zeros(rr.size, dtype=complex)
    for start in range(0, rr.size, 4096):
        sl = slice(start, start + 4096)
        e = np.exp(1j * np.outer(rr[sl], q))
        for idx in active:
            m = idx - (d - 1)
            out[sl] += np.exp(1j * m * th[sl]) * (e @ coeff[idx])
    return GridFunction(grid, INV_SQRT_2PI * out.reshape(r.shape))


def wigner_direct(x: np.ndarray, xs, ys) -> np.ndarray:
    """Pointwise trace formula with a fresh Weyl operator per point (slow reference)."""
    out = np.empty((len(xs), len(ys)), dtype=complex)
    for i, a in enumerate(xs):
        for j, b in enumerate(ys):
            u = weyl_operator(a, b, x.shape[0]).matrix
            out[i, j] = INV_SQRT_2PI * np.trace(u.conj().T @ x)
    return out


def wigner_matrix_units(labels: list[tuple[int, int]], dim: int,
                        grid: GridSpec) -> dict:
    """``W X_{n,l}`` for each ``(n, l)`` in ``labels``, sharing one eigendecomposition."""
    q, v = _q_spectrum(dim)
    r, theta = _polar(grid)
    e = np.exp(1j * r[..., None] * q)
    out = {}
    for n, l in labels:
        if not (0 <= n < dim and 0 <= l < dim):
            raise IndexError(f"label ({n}, {l}) outside dim {dim}")
        vals = np.exp(1j * (l - n) * theta) * (e @ (v[l] * v[n]))
        out[(n, l)] = GridFunction(grid, INV_SQRT_2PI * vals)
    return out


def ground_state_closed_form(grid: GridSpec) -> GridFunction:
    x, y = grid.mesh()
    return GridFunction(grid, INV_SQRT_2PI * np.exp(-(x * x + y * y) / 4.0))


# ---------------------------------------------------------------------------
# Landau eigenfunctions on the grid
# ---------------------------------------------------------------------------

def _evaluate_tensor(coeffs: np.ndarray, dim_per_axis: int, grid: GridSpec) -> np.ndarray:
    c = coeffs.reshape(dim_per_axis, dim_per_axis)
    zx = hermite_functions(dim_per_axis - 1, grid.xs)
    zy = hermite_functions(dim_per_axis - 1, grid.ys)
    return zx.T @ c @ zy


def ground_state_grid(grid: GridSpec, dim_per_axis: int = 40) -> GridFunction:
    """``Psi_00`` from the common kernel of the cartesian ``A_+-``, sampled on ``grid``."""
    c = ground_state_coefficients(dim_per_axis)
    return GridFunction(grid, _evaluate_tensor(c, dim_per_axis, grid)).phase_fixed()


def landau_eigenfunction_grid(n: int, l: int, grid: GridSpec,
                              dim_per_axis: int = 40, ground=None) -> GridFunction:
    """``Psi_{n,l}`` built by ladder action on the kernel state; ladder phases kept."""
    if n < 0 or l < 0:
        raise DomainError("labels must be non-negative")
    if 4 * (n + l) > dim_per_axis:
        raise TruncationRiskError(
            f"n + l = {n + l} exceeds dimPerAxis/4 = {dim_per_axis / 4:g}")
    c = eigenstate_coefficients(n, l, dim_per_axis, ground)
    return GridFunction(grid, _evaluate_tensor(c, dim_per_axis, grid))


# ---------------------------------------------------------------------------
# grid differential operators
# ---------------------------------------------------------------------------

def _spectral_derivative(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    n = values.shape[axis]
    k = 2j * np.pi * np.fft.fftfreq(n, d=h)
    shape = [1, 1]
    shape[axis] = n
    return np.fft.ifft(k.reshape(shape) * np.fft.fft(values, axis=axis), axis=axis)


def grid_operator(name: str, f: GridFunction) -> GridFunction:
    """Apply one of ``Q+, P+, Q-, P-, Hup, Hdown`` as a differential expression."""
    g = f.grid
    x, y = g.mesh()
    v = f.values

    def px(u):
        return -1j * _spectral_derivative(u, g.hx, 0)

    def py(u):
        return -1j * _spectral_derivative(u, g.hy, 1)

    ops = {
        "Q+": lambda u: py(u) + 0.5 * x * u,
        "P+": lambda u: px(u) - 0.5 * y * u,
        "Q-": lambda u: px(u) + 0.5 * y * u,
        "P-": lambda u: py(u) - 0.5 * x * u,
    }
    if name in ops:
        return GridFunction(g, ops[name](v))
    if name == "Hup":
        return GridFunction(g, 0.5 * (ops["Q-"](ops["Q-"](v)) + ops["P-"](ops["P-"](v))))
    if name == "Hdown":
        return GridFunction(g, 0.5 * (ops["Q+"](ops["Q+"](v)) + ops["P+"](ops["P+"](v))))
    raise DomainError(f"unknown grid operator {name!r}")


# ---------------------------------------------------------------------------
# intertwining
# ---------------------------------------------------------------------------

# generator on B2 -> differential operator, as printed
PRINTED_CORRESPONDENCE = {
    "Q v I": "Q+", "P v I": "P+", "I v Q": "Q-", "I v P": "P-",
    "Hosc v I": "Hdown", "I v Hosc": "Hup",
}
# what the trace formula actually produces (derivable by differentiating under the trace)
TRANSFORM_CORRESPONDENCE = {
    "Q v I": "Q-", "P v I": "P-", "I v Q": "P+", "I v P": "Q+",
}


def _algebra_block(gen: str, labels, dim: int) -> np.ndarray:
    """``<X_a, G X_b>_2`` for the B2 generator ``gen`` and labels ``a, b``."""
    q, p = build_position_momentum(dim)
    h = oscillator_hamiltonian(dim)
    ops = {"Q": q, "P": p, "Hosc": h}
    left, _, right = gen.split(" ")
    out = np.zeros((len(labels), len(labels)), dtype=complex)
    for a, (n, l) in enumerate(labels):
        for b, (n2, l2) in enumerate(labels):
            if right == "I":     # A v I : X -> A X
                out[a, b] = ops[left][n, n2] if l == l2 else 0.0
            else:                # I v B : X -> X B^H, <X_nl, X_n'l' B^H> = conj(B)_{l l'}
                out[a, b] = np.conj(ops[right][l, l2]) if n == n2 else 0.0
    return out


def _grid_block(op: str, funcs: list[GridFunction]) -> np.ndarray:
    images = [grid_operator(op, f) for f in funcs]
    return np.array([[f.inner(g) for g in images] for f in funcs])


@dataclass
class IntertwiningReport:
    max_label: int
    dim: int
    dim_per_axis: int
    grid: GridSpec
    eigenfunction_deviation: dict
    printed_pairs: dict
    transform_pairs: dict
    isometry_deviation: float
    tail_margin_max: float
    extra: dict = field(default_factory=dict)

    @property
    def printed_max(self) -> float:
        return max(v for k, v in self.printed_pairs.items()
                   if k in ("Q v I", "P v I", "I v Q", "I v P"))

    @property
    def transform_max(self) -> float:
        return max(self.transform_pairs.values())

    def to_dict(self) -> dict:
        return {
            "maxLabel": self.max_label,
            "dim": self.dim,
            "dimPerAxis": self.dim_per_axis,
            "grid": self.grid.to_dict(),
            "eigenfunctionDeviation": self.eigenfunction_deviation,
            "printedCorrespondence": self.printed_pairs,
            "printedGeneratorsMax": self.printed_max,
            "transformCorrespondence": self.transform_pairs,
            "transformGeneratorsMax": self.transform_max,
            "isometryDeviation": self.isometry_deviation,
            "tailMarginMax": self.tail_margin_max,
            **self.extra,
        }


def intertwining_check(max_label: int = 2, grid: GridSpec = DEFAULT_GRID,
                       dim: int = 160, dim_per_axis: int = 40) -> IntertwiningReport:
    """Compare the ``B2`` algebra with the Landau picture through matrix elements.

    * ``printed_pairs``: ``<X_a, G X_b>_2`` against ``<Psi_a, D Psi_b>`` with the
      ladder-built ``Psi`` and the printed generator assignment.
    * ``transform_pairs``: the same algebra block against ``<W X_a, D W X_b>``
      with the assignment derived from the trace formula.
    * ``eigenfunction_deviation``: pointwise ``|W X_{n,l} - Psi_{n,l}|`` after
      phase fixing, and the same against ``i^{n+l} Psi_{l,n}``.
    """
    if max_label > 6:
        raise DomainError("maxLabel must be <= 6")
    labels = [(n, l) for n in range(max_label + 1) for l in range(max_label + 1)]
    with warnings.catch_warnings():
        warnings.simplefilter("error", TailMassWarning)
        transformed = wigner_matrix_units(labels, dim, grid)
    ground = ground_state_coefficients(dim_per_axis)
    psi = {lab: landau_eigenfunction_grid(*lab, grid, dim_per_axis, ground) for lab in labels}

    pointwise, swapped = {}, {}
    for n, l in labels:
        w = transformed[(n, l)]
        pointwise[f"{n},{l}"] = float(np.abs(w.phase_fixed().values
                                             - psi[(n, l)].phase_fixed().values).max())
        swapped[f"{n},{l}"] = float(np.abs(w.values - (1j) ** (n + l) * psi[(l, n)].values).max())

    psi_list = [psi[lab] for lab in labels]
    w_list = [transformed[lab] for lab in labels]
    printed = {}
    for gen, op in PRINTED_CORRESPONDENCE.items():
        printed[gen] = float(np.abs(_algebra_block(gen, labels, dim)
                                    - _grid_block(op, psi_list)).max())
    transform = {}
    for gen, op in TRANSFORM_CORRESPONDENCE.items():
        transform[gen] = float(np.abs(_algebra_block(gen, labels, dim)
                                      - _grid_block(op, w_list)).max())

    gram = np.array([[f.inner(g) for g in w_list] for f in w_list])
    margin = grid.margin_mask()
    tail = max(float(np.abs(f.values[margin]).max()) for f in w_list + psi_list)
    return IntertwiningReport(
        max_label=max_label, dim=dim, dim_per_axis=dim_per_axis, grid=grid,
        eigenfunction_deviation={"sameLabel": pointwise, "sameLabelMax": max(pointwise.values()),
                                 "swappedLabel": swapped, "swappedLabelMax": max(swapped.values())},
        printed_pairs=printed, transform_pairs=transform,
        isometry_deviation=float(np.abs(gram - np.eye(len(labels))).max()),
        tail_margin_max=tail,
    )


def ground_state_error(dim: int, grid: GridSpec) -> float:
    """``max |W X_00 - (2 pi)^(-1/2) e^{-(x^2+y^2)/4}|`` at truncation ``dim``."""
    x00 = np.zeros((dim, dim), dtype=complex)
    x00[0, 0] = 1.0
    w = wigner_transform(x00, grid)
    return float(np.abs(w.values - ground_state_closed_form(grid).values).max())
