"""Right-hand sides, the mollified divergence sequence, discrete norms and
convergence-rate fitting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .fe_core import (
    DiscreteFunction,
    UniformMesh,
    assemble_fractional_stiffness,
    assemble_load,
    assemble_mass,
    gauss_points,
)
from .kernel_analytic import FracParams, normalization_constant

__all__ = [
    "RhsSpec",
    "Constant",
    "SinPiX2",
    "PiecewiseConstant",
    "MollifiedDiv",
    "DivergenceOf",
    "Sampled",
    "load_vector",
    "mollifier_rho",
    "mollifier_normalizer",
    "mollify",
    "build_fs",
    "l2_norm",
    "gagliardo_seminorm",
    "hs_norm",
    "hs_error",
    "dual_norm",
    "fit_rate",
    "ConvergenceReport",
]


class RhsSpec:
    """Base class of the right-hand-side catalog.

    Subclasses are callables on arrays of points and know how to build
    their own load vector.
    """

    kind = "abstract"

    def __call__(self, x):
        raise NotImplementedError

    def check_mesh(self, mesh: UniformMesh) -> None:
        pass

    def load(self, mesh: UniformMesh) -> np.ndarray:
        return assemble_load(mesh, self)


def load_vector(mesh: UniformMesh, rhs) -> np.ndarray:
    """Load vector for an RhsSpec or a plain vectorized callable."""
    if isinstance(rhs, RhsSpec):
        return rhs.load(mesh)
    return assemble_load(mesh, rhs)


@dataclass(frozen=True)
class Constant(RhsSpec):
    c: float = 1.0
    kind = "constant"

    def __call__(self, x):
        return np.full(np.shape(x), float(self.c))


@dataclass(frozen=True)
class SinPiX2(RhsSpec):
    """f(x) = sin(pi x^2)."""

    kind = "sin-pi-x2"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.sin(np.pi * x * x)


def _hat_primitive(t):
    # integral of the unit hat from -inf to t
    t = np.clip(t, -1.0, 1.0)
    return np.where(t <= 0.0, 0.5 * (t + 1.0) ** 2, 1.0 - 0.5 * (1.0 - t) ** 2)


@dataclass(frozen=True)
class PiecewiseConstant(RhsSpec):
    """``levels[j]`` on the j-th piece cut out by ``breaks``.

    The default is the indicator of |x| < 1/2.  Pieces extend to the
    interval ends, so ``len(levels) == len(breaks) + 1``.
    """

    breaks: tuple = (-0.5, 0.5)
    levels: tuple = (0.0, 1.0, 0.0)
    kind = "piecewise-constant"

    def __post_init__(self):
        object.__setattr__(self, "breaks", tuple(float(b) for b in self.breaks))
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        if len(self.levels) != len(self.breaks) + 1:
            raise ValueError("need exactly one more level than breaks")
        if any(b2 <= b1 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breaks must be strictly increasing")

    def check_mesh(self, mesh):
        if self.breaks and not (mesh.a < self.breaks[0] and self.breaks[-1] < mesh.b):
            raise ValueError("breaks must lie inside the mesh interval")

    def __call__(self, x):
        idx = np.searchsorted(self.breaks, np.asarray(x, dtype=float), side="right")
        return np.asarray(self.levels)[idx]

    def load(self, mesh):
        # exact: integrate each hat against each constant piece
        edges = [mesh.a, *self.breaks, mesh.b]
        xi, h = mesh.nodes, mesh.h
        b = np.zeros(mesh.n)
        for lvl, lo, hi in zip(self.levels, edges[:-1], edges[1:]):
            if lvl:
                b += lvl * h * (_hat_primitive((hi - xi) / h) - _hat_primitive((lo - xi) / h))
        return b


@dataclass(frozen=True, eq=False)
class Sampled(RhsSpec):
    """Piecewise-linear f given by its values at the interior nodes of
    the uniform mesh on (a, b) with ``len(values)`` interior nodes."""

    a: float
    b: float
    values: np.ndarray
    kind = "sampled"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def mesh(self):
        return UniformMesh(self.a, self.b, self.values.size)

    def check_mesh(self, mesh):
        if mesh != self.mesh:
            raise ValueError(f"sampled rhs has {self.values.size} values on ({self.a}, {self.b}), "
                             f"mesh has {mesh.n} on ({mesh.a}, {mesh.b})")

    def __call__(self, x):
        return DiscreteFunction(self.mesh, self.values)(x)

    def load(self, mesh):
        self.check_mesh(mesh)
        return assemble_mass(mesh) @ self.values


@lru_cache(maxsize=None)
def mollifier_normalizer() -> float:
    """C such that C exp(1/(x^2 - 1)) has unit mass on (-1, 1)."""
    mass, _ = quad(lambda x: math.exp(1.0 / (x * x - 1.0)), -1.0, 1.0, epsabs=0.0, epsrel=1e-13)
    return 1.0 / mass


def mollifier_rho(eps, x):
    """Standard mollifier of radius ``eps``; vectorized in ``x``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < eps
    d = np.where(inside, x * x - eps * eps, -1.0)
    val = np.where(inside, mollifier_normalizer() / eps * np.exp(eps * eps / d), 0.0)
    return float(val) if val.ndim == 0 else val


_MOMENT_TABLE_SIZE = 4097


@lru_cache(maxsize=None)
def _unit_moments():
    """Hermite interpolants of int_{-1}^t rho_1 and int_{-1}^t u rho_1(u) du.

    Table values come from adaptive quadrature cell by cell; the slopes
    are exact, so the interpolation error is O(h^4) (about 5e-14).
    """
    c = mollifier_normalizer()
    u = np.linspace(-1.0, 1.0, _MOMENT_TABLE_SIZE)
    rho = mollifier_rho(1.0, u)
    m0 = np.zeros_like(u)
    m1 = np.zeros_like(u)
    for i, (a, b) in enumerate(zip(u[:-1], u[1:]), start=1):
        m0[i] = m0[i - 1] + quad(lambda v: c * math.exp(1.0 / (v * v - 1.0)), a, b,
                                 epsabs=1e-16, epsrel=1e-14)[0]
        m1[i] = m1[i - 1] + quad(lambda v: v * c * math.exp(1.0 / (v * v - 1.0)), a, b,
                                 epsabs=1e-16, epsrel=1e-14)[0]
    return CubicHermiteSpline(u, m0, rho), CubicHermiteSpline(u, m1, u * rho)


def _moments(t):
    # clipped so that the tables extend as constants outside [-1, 1]
    m0, m1 = _unit_moments()
    tc = np.clip(t, -1.0, 1.0)
    return m0(tc), m1(tc)


def _check_grid(grid, values):
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
        raise ValueError("grid and values must be matching 1D arrays")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    return grid, values


_CHUNK = 256


def _cellwise(grid, values, eps, x, derivative):
    """Convolution of the interpolant of (grid, values) with rho_eps.

    On each grid cell g is linear, and with y = x - eps u the cell
    integral only needs the two unit moments at the cell ends.  For the
    derivative the slopes of g are convolved instead, plus the jumps of
    the zero extension at the two grid ends.
    """
    slopes = np.diff(values) / np.diff(grid)
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.empty_like(flat)
    for lo in range(0, flat.size, _CHUNK):
        xs = flat[lo:lo + _CHUNK, None]
        m0, m1 = _moments((xs - grid[None, :]) / eps)
        d0 = m0[:, :-1] - m0[:, 1:]
        if derivative:
            val = d0 @ slopes
            val += values[0] * mollifier_rho(eps, xs[:, 0] - grid[0])
            val -= values[-1] * mollifier_rho(eps, xs[:, 0] - grid[-1])
        else:
            d1 = m1[:, :-1] - m1[:, 1:]
            intercept = values[:-1] - slopes * grid[:-1]
            # g(x - eps u) = intercept + slope (x - eps u)
            val = d0 @ intercept + xs[:, 0] * (d0 @ slopes) - eps * (d1 @ slopes)
        out[lo:lo + _CHUNK] = val
    return out.reshape(x.shape)


def mollify(grid, values, eps, x):
    """(g * rho_eps)(x) for g linearly interpolated on ``grid``, zero outside."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    grid, values = _check_grid(grid, values)
    return _cellwise(grid, values, eps, x, derivative=False)


@dataclass(frozen=True, eq=False)
class MollifiedDiv(RhsSpec):
    """f_s = d/dx (g * rho_{1-s}) for sampled g, with eps = 1 - s.

    Differentiating under the integral moves the derivative onto the
    piecewise-constant slope of g plus the end jumps of its zero extension.
    """

    grid: np.ndarray
    values: np.ndarray
    s: float
    kind = "mollified-div"

    def __post_init__(self):
        grid, values = _check_grid(self.grid, self.values)
        grid.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def eps(self):
        return 1.0 - self.s

    def check_mesh(self, mesh):
        tol = 1e-12 * (mesh.b - mesh.a)
        if self.grid[0] < mesh.a - tol or self.grid[-1] > mesh.b + tol:
            raise ValueError("g must be sampled inside the mesh interval")

    def __call__(self, x):
        return _cellwise(self.grid, self.values, self.eps, x, derivative=True)

    def limit(self) -> "DivergenceOf":
        return DivergenceOf(self.grid, self.values)


@dataclass(frozen=True, eq=False)
class DivergenceOf(RhsSpec):
    """f = g' in the weak sense; the load is -int g phi_i' dx."""

    grid: np.ndarray
    values: np.ndarray
    kind = "divergence"

    def __call__(self, x):
        dg = np.gradient(self.values, self.grid)
        return np.interp(x, self.grid, dg, left=0.0, right=0.0)

    def load(self, mesh):
        x, w, _ = gauss_points(mesh, 5)
        g = np.interp(x, self.grid, self.values, left=0.0, right=0.0)
        elem = np.sum(w * g, axis=1) / mesh.h     # (1/h) int_e g
        # phi_i' = +1/h on element i-1, -1/h on element i
        return elem[1:] - elem[:-1]


def build_fs(grid, values, s) -> MollifiedDiv:
    """The rhs sequence member f_s = div(g * rho_{1-s}) for sampled g.

    The sampling grid must resolve the mollifier: spacing <= (1-s)/4.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    grid, values = _check_grid(grid, values)
    if np.max(np.diff(grid)) > 0.25 * (1.0 - s):
        raise ValueError(f"grid too coarse for mollifier radius {1.0 - s:g}")
    return MollifiedDiv(grid, values, s)


def l2_norm(v: DiscreteFunction) -> float:
    q = assemble_mass(v.mesh).quadratic_form(v.values)
    return math.sqrt(max(q, 0.0))


def gagliardo_seminorm(v: DiscreteFunction, s: float) -> float:
    """Whole-line Gagliardo seminorm of the piecewise-linear function.

    The assembled form carries the factor C_{1,s}/2, divided out here.
    """
    q = assemble_fractional_stiffness(v.mesh, s).quadratic_form(v.values)
    c = normalization_constant(FracParams(1, s))
    return math.sqrt(max(2.0 * q / c, 0.0))


def hs_norm(v: DiscreteFunction, s: float) -> float:
    return math.hypot(l2_norm(v), gagliardo_seminorm(v, s))


def hs_error(u: DiscreteFunction, v: DiscreteFunction, s: float) -> float:
    if u.mesh != v.mesh:
        raise ValueError("functions live on different meshes")
    return hs_norm(u - v, s)


def dual_norm(mesh: UniformMesh, b, s: float) -> float:
    """Discrete H^{-s} norm sqrt(b^T A^{-1} b) of a load vector."""
    from .solvers import solve_spd

    b = np.asarray(b, dtype=float)
    x = solve_spd(assemble_fractional_stiffness(mesh, s), b)
    return math.sqrt(max(float(b @ x), 0.0))


def fit_rate(samples: Sequence[tuple]) -> tuple:
    """Least-squares slope of log(err) against log(1 - s).

    Returns ``(slope, residual)`` where the residual is the RMS misfit in
    log space.
    """
    if len(samples) < 3:
        raise ValueError("need at least three samples")
    s = np.array([p[0] for p in samples], dtype=float)
    err = np.array([p[1] for p in samples], dtype=float)
    if np.any(s >= 1.0) or np.any(err <= 0.0):
        raise ValueError("need s < 1 and err > 0 for every sample")
    lx = np.log1p(-s)
    if np.ptp(lx) == 0.0:
        raise ValueError("all samples share the same abscissa")
    ly = np.log(err)
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return float(coef[0]), float(math.sqrt(np.mean(resid**2)))


@dataclass
class ConvergenceReport:
    samples: list = field(default_factory=list)   # (s, err_Hs, err_L2)
    slope: float = float("nan")
    fit_residual: float = float("nan")

    @classmethod
    def from_samples(cls, samples):
        ordered = sorted((float(s), float(e1), float(e2)) for s, e1, e2 in samples)
        slope, resid = fit_rate([(s, e) for s, e, _ in ordered])
        return cls(ordered, slope, resid)
