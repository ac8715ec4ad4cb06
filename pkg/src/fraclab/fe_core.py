"""P1 finite elements on a uniform 1D mesh.

Interior nodes only: the hats at the endpoints are dropped, which is the
discrete form of the exterior condition u = 0 outside (a, b).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.linalg

from .kernel_analytic import FracParams, normalization_over_gap

__all__ = [
    "UniformMesh",
    "DiscreteFunction",
    "SymToeplitzMatrix",
    "TridiagMatrix",
    "stiffness_kernel",
    "assemble_fractional_stiffness",
    "assemble_classical_stiffness",
    "assemble_mass",
    "assemble_load",
    "gauss_points",
]

# 4th central difference of the cubic B-spline (the hat autocorrelation)
_FOURTH_DIFF = np.array([1.0, -4.0, 6.0, -4.0, 1.0])
_FOURTH_DIFF_SHIFTS = np.arange(-2, 3)

# Above this index the closed form cancels badly; entries are then a
# smooth integral over [k-2, k+2] done by Gauss-Legendre.
_CLOSED_FORM_MAX_K = 2
_FAR_GAUSS_ORDER = 16


@dataclass(frozen=True)
class UniformMesh:
    a: float
    b: float
    n: int

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("mesh needs a < b")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("mesh needs at least one interior node")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        """Interior node coordinates a + i h, i = 1..n."""
        x = self.a + self.h * np.arange(1, self.n + 1)
        x.flags.writeable = False
        return x

    @cached_property
    def all_nodes(self) -> np.ndarray:
        x = self.a + self.h * np.arange(0, self.n + 2)
        x[-1] = self.b
        x.flags.writeable = False
        return x


@dataclass(frozen=True, eq=False)
class DiscreteFunction:
    """Sum of values[i] * phi_i, extended by zero outside (a, b)."""

    mesh: UniformMesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.mesh.n,):
            raise ValueError(f"expected {self.mesh.n} nodal values, got shape {v.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def interpolate(cls, mesh, f):
        return cls(mesh, np.asarray(f(mesh.nodes), dtype=float))

    @classmethod
    def zeros(cls, mesh):
        return cls(mesh, np.zeros(mesh.n))

    def __call__(self, x):
        padded = np.concatenate(([0.0], self.values, [0.0]))
        return np.interp(x, self.mesh.all_nodes, padded, left=0.0, right=0.0)

    def _check(self, other):
        if other.mesh != self.mesh:
            raise ValueError("functions live on different meshes")

    def __add__(self, other):
        self._check(other)
        return DiscreteFunction(self.mesh, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return DiscreteFunction(self.mesh, self.values - other.values)

    def __mul__(self, c):
        return DiscreteFunction(self.mesh, c * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SymToeplitzMatrix:
    """Dense symmetric Toeplitz matrix stored by its first row."""

    first_row: np.ndarray

    def __post_init__(self):
        r = np.array(self.first_row, dtype=float)
        if r.ndim != 1 or r.size == 0:
            raise ValueError("first_row must be a non-empty vector")
        r.flags.writeable = False
        object.__setattr__(self, "first_row", r)

    @property
    def n(self):
        return self.first_row.size

    @property
    def shape(self):
        return (self.n, self.n)

    def entry(self, i, j):
        return self.first_row[abs(i - j)]

    @cached_property
    def dense(self) -> np.ndarray:
        m = scipy.linalg.toeplitz(self.first_row)
        m.flags.writeable = False
        return m

    def toarray(self):
        return np.array(self.dense)

    def __matmul__(self, v):
        return self.dense @ v

    def quadratic_form(self, v):
        v = np.asarray(v, dtype=float)
        return float(v @ (self.dense @ v))


@dataclass(frozen=True)
class TridiagMatrix:
    """Constant-coefficient symmetric tridiagonal matrix of size n."""

    n: int
    diag: float
    offdiag: float

    @property
    def shape(self):
        return (self.n, self.n)

    def entry(self, i, j):
        d = abs(i - j)
        return self.diag if d == 0 else (self.offdiag if d == 1 else 0.0)

    def toarray(self):
        m = np.diag(np.full(self.n, self.diag))
        if self.n > 1:
            off = np.full(self.n - 1, self.offdiag)
            m += np.diag(off, 1) + np.diag(off, -1)
        return m

    def banded(self):
        """Upper banded storage as expected by ``scipy.linalg.solveh_banded``."""
        ab = np.empty((2, self.n))
        ab[0, 0] = 0.0
        ab[0, 1:] = self.offdiag
        ab[1, :] = self.diag
        return ab

    def __matmul__(self, v):
        v = np.asarray(v, dtype=float)
        out = self.diag * v
        out[1:] += self.offdiag * v[:-1]
        out[:-1] += self.offdiag * v[1:]
        return out

    def quadratic_form(self, v):
        v = np.asarray(v, dtype=float)
        return float(v @ (self @ v))

    def scaled_sum(self, alpha, other: "TridiagMatrix", beta) -> "TridiagMatrix":
        return TridiagMatrix(self.n, alpha * self.diag + beta * other.diag,
                             alpha * self.offdiag + beta * other.offdiag)


def _hat_autocorrelation(t):
    # cubic B-spline centred at 0, support [-2, 2]
    t = np.abs(t)
    return np.where(
        t <= 1.0,
        2.0 / 3.0 - t * t + 0.5 * t**3,
        np.where(t < 2.0, (2.0 - t) ** 3 / 6.0, 0.0),
    )


def _near_kernel(s, k):
    """Closed form for small k.

    With a = 3 - 2s the entry is
        C/(4 s (1-s)) * sum_j w_j |k-j|^a / ((a-2)(3-2s)),
    and since sum_j w_j (k-j)^2 = 0 the ratio is rewritten with expm1 so the
    removable singularity at s = 1/2 (a = 2) needs no special branch.
    """
    t = np.abs(k - _FOURTH_DIFF_SHIFTS).astype(float)
    logt = np.log(np.where(t > 0, t, 1.0))
    x = (1.0 - 2.0 * s) * logt
    safe = np.where(x != 0.0, x, 1.0)
    expm1_ratio = np.where(x != 0.0, np.expm1(x) / safe, 1.0)
    d = float(np.sum(_FOURTH_DIFF * t * t * logt * expm1_ratio))
    pref = normalization_over_gap(FracParams(1, s)) / (4.0 * s)
    return pref * d / (3.0 - 2.0 * s)


@lru_cache(maxsize=None)
def _gauss_legendre(order):
    xg, wg = np.polynomial.legendre.leggauss(order)
    xg.flags.writeable = False
    wg.flags.writeable = False
    return xg, wg


def _far_kernel(s, ks):
    # -C * int_{k-2}^{k+2} z^(-1-2s) c(z-k) dz, four polynomial pieces
    xg, wg = _gauss_legendre(_FAR_GAUSS_ORDER)
    ks = np.asarray(ks, dtype=float)[:, None]
    total = np.zeros(ks.shape[0])
    for lo in (-2.0, -1.0, 0.0, 1.0):
        t = lo + 0.5 * (xg + 1.0)
        z = ks + t
        total += 0.5 * np.sum(wg * _hat_autocorrelation(t) * z ** (-1.0 - 2.0 * s), axis=1)
    c = normalization_over_gap(FracParams(1, s)) * (1.0 - s)
    return -c * total


def stiffness_kernel(s, k):
    """Reference entry eta_s(k) of the fractional stiffness matrix.

    a(phi_i, phi_j) = h^(1-2s) eta_s(|i-j|) for the bilinear form with
    constant C_{1,s}/2 integrated over the whole plane.  ``k`` may be an
    integer or an integer array.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s!r}")
    ka = np.asarray(k)
    if np.any(ka < 0) or np.any(ka != np.round(ka)):
        raise ValueError("k must be a non-negative integer")
    flat = ka.astype(int).ravel()
    out = np.empty(flat.shape, dtype=float)
    near = flat <= _CLOSED_FORM_MAX_K
    for idx in np.nonzero(near)[0]:
        out[idx] = _near_kernel(s, flat[idx])
    if np.any(~near):
        out[~near] = _far_kernel(s, flat[~near])
    if ka.ndim == 0:
        return float(out[0])
    return out.reshape(ka.shape)


@lru_cache(maxsize=64)
def assemble_fractional_stiffness(mesh: UniformMesh, s: float) -> SymToeplitzMatrix:
    """Galerkin matrix of the fractional form on the interior hats."""
    eta = stiffness_kernel(s, np.arange(mesh.n))
    return SymToeplitzMatrix(mesh.h ** (1.0 - 2.0 * s) * eta)


def assemble_classical_stiffness(mesh: UniformMesh) -> TridiagMatrix:
    return TridiagMatrix(mesh.n, 2.0 / mesh.h, -1.0 / mesh.h)


def assemble_mass(mesh: UniformMesh) -> TridiagMatrix:
    return TridiagMatrix(mesh.n, 2.0 * mesh.h / 3.0, mesh.h / 6.0)


def gauss_points(mesh: UniformMesh, order=3):
    """Quadrature nodes and weights on every element, shape (n+1, order).

    Also returns the reference coordinate in [0, 1] of each node, which is
    the value of the right-hand hat of the element there.
    """
    xg, wg = _gauss_legendre(order)
    t = 0.5 * (xg + 1.0)
    left = mesh.a + mesh.h * np.arange(mesh.n + 1)[:, None]
    x = left + mesh.h * t[None, :]
    w = np.broadcast_to(0.5 * mesh.h * wg, x.shape)
    return x, w, t


def assemble_load(mesh: UniformMesh, f) -> np.ndarray:
    """b_i = int f phi_i dx with 3-point Gauss-Legendre on each element.

    ``f`` must accept an array of points.
    """
    x, w, t = gauss_points(mesh, 3)
    fx = np.asarray(f(x), dtype=float)
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape)
    right = np.sum(w * fx * t, axis=1)          # contribution to node e+1
    left = np.sum(w * fx * (1.0 - t), axis=1)   # contribution to node e
    # element e spans nodes e and e+1; interior node i is array index i-1
    return right[:-1] + left[1:]
