"""SPD solves, the fractional Poisson pipeline and implicit-Euler heat steps."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg

from .fe_core import (
    DiscreteFunction,
    SymToeplitzMatrix,
    TridiagMatrix,
    UniformMesh,
    assemble_classical_stiffness,
    assemble_fractional_stiffness,
    assemble_load,
    assemble_mass,
)
from .kernel_analytic import FracParams
from .rhs_norms import RhsSpec, load_vector

__all__ = [
    "NotSPDError",
    "ConvergenceError",
    "EllipticProblem",
    "ParabolicProblem",
    "solve_spd",
    "conjugate_gradient",
    "solve_elliptic",
    "solve_parabolic",
]

DIRECT_MAX_N = 1024
RESIDUAL_TOL = 1e-10
REFINEMENT_STEPS = 3


class NotSPDError(ValueError):
    """Factorization broke down or CG met non-positive curvature."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual, iterations):
        super().__init__(f"{message}: relative residual {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


def _as_operator(A):
    if isinstance(A, (SymToeplitzMatrix, TridiagMatrix)):
        return A.__matmul__, A.shape[0]
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    return A.__matmul__, A.shape[0]


def conjugate_gradient(A, b, *, rtol=RESIDUAL_TOL, maxiter=None, x0=None):
    """Plain CG with a curvature check.

    Raises NotSPDError on a direction with p^T A p <= 0 and
    ConvergenceError if ``maxiter`` (default 10 n) is exhausted.
    """
    matvec, n = _as_operator(A)
    b = np.asarray(b, dtype=float)
    maxiter = 10 * n if maxiter is None else maxiter
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - matvec(x)
    p = r.copy()
    rr = r @ r
    for it in range(1, maxiter + 1):
        Ap = matvec(p)
        curv = p @ Ap
        if curv <= 0.0:
            raise NotSPDError(f"non-positive curvature {curv:.3e} at CG iteration {it}")
        alpha = rr / curv
        x += alpha * p
        r -= alpha * Ap
        rr_new = r @ r
        if math.sqrt(rr_new) <= rtol * bnorm:
            # guard against drift in the recursive residual
            true_res = np.linalg.norm(b - matvec(x)) / bnorm
            if true_res <= rtol:
                return x
            r = b - matvec(x)
            rr_new = r @ r
            p = r.copy()
            rr = rr_new
            continue
        p = r + (rr_new / rr) * p
        rr = rr_new
    res = np.linalg.norm(b - matvec(x)) / bnorm
    raise ConvergenceError("CG did not converge", res, maxiter)


def _cholesky(A):
    try:
        return scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotSPDError(f"Cholesky factorization failed: {exc}") from None


def solve_spd(A, b) -> np.ndarray:
    """Solve A x = b for symmetric positive definite A.

    ``A`` may be a dense array, a SymToeplitzMatrix or a TridiagMatrix.
    Tridiagonal systems use a banded Cholesky; dense systems up to
    ``DIRECT_MAX_N`` unknowns a dense Cholesky, larger ones CG.
    """
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if b.shape != (n,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({n},)")
    if isinstance(A, TridiagMatrix):
        ab = A.banded()

        def solve(rhs):
            return scipy.linalg.solveh_banded(ab, rhs, check_finite=False)

        try:
            x = solve(b)
        except np.linalg.LinAlgError as exc:
            raise NotSPDError(f"banded Cholesky failed: {exc}") from None
    elif n <= DIRECT_MAX_N:
        dense = A.dense if isinstance(A, SymToeplitzMatrix) else np.asarray(A, dtype=float)
        factor = _cholesky(dense)

        def solve(rhs):
            return scipy.linalg.cho_solve(factor, rhs, check_finite=False)

        x = solve(b)
    else:
        return conjugate_gradient(A, b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x
    # iterative refinement with the existing factor
    for _ in range(REFINEMENT_STEPS + 1):
        r = b - A @ x
        res = np.linalg.norm(r) / bnorm
        if res <= RESIDUAL_TOL:
            return x
        x = x + solve(r)
    raise ConvergenceError("direct solve lost accuracy", res, REFINEMENT_STEPS)


@dataclass(frozen=True)
class EllipticProblem:
    params: FracParams
    mesh: UniformMesh
    rhs: RhsSpec

    def __post_init__(self):
        if self.params.dim != 1:
            raise ValueError("finite elements are one-dimensional")
        self.rhs.check_mesh(self.mesh)


@dataclass(frozen=True)
class ParabolicProblem:
    """Fractional heat problem with zero initial datum.

    ``g`` is either a callable g(x, t) taking an array of points and a
    scalar time, or a time-independent RhsSpec.
    """

    params: FracParams
    mesh: UniformMesh
    g: Union[Callable, RhsSpec]
    T: float
    dt: float

    def __post_init__(self):
        if self.params.dim != 1:
            raise ValueError("finite elements are one-dimensional")
        if not self.dt > 0 or self.T < self.dt:
            raise ValueError("need dt > 0 and T >= dt")
        if isinstance(self.g, RhsSpec):
            self.g.check_mesh(self.mesh)

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def load_at(self, t) -> np.ndarray:
        if isinstance(self.g, RhsSpec):
            return load_vector(self.mesh, self.g)
        return assemble_load(self.mesh, lambda x: self.g(x, t))


def _stiffness(mesh, s, classical):
    if classical:
        return assemble_classical_stiffness(mesh)
    return assemble_fractional_stiffness(mesh, s)


def solve_elliptic(p: EllipticProblem, *, classical: bool = False) -> DiscreteFunction:
    """Galerkin solution of (-Delta)^s u = f with u = 0 outside the interval.

    ``classical=True`` solves the s = 1 limit problem -u'' = f with the
    tridiagonal P1 stiffness instead.
    """
    A = _stiffness(p.mesh, p.params.s, classical)
    b = load_vector(p.mesh, p.rhs)
    return DiscreteFunction(p.mesh, solve_spd(A, b))


def solve_parabolic(
    p: ParabolicProblem,
    *,
    classical: bool = False,
    initial: Optional[np.ndarray] = None,
) -> list[DiscreteFunction]:
    """Implicit Euler: (M + dt A) phi^{m+1} = M phi^m + dt b(t_{m+1}).

    Returns the snapshots phi^1 .. phi^M.  ``initial`` overrides the zero
    initial datum and exists for stability checks only.
    """
    mesh, dt = p.mesh, p.dt
    M = assemble_mass(mesh)
    A = _stiffness(mesh, p.params.s, classical)
    if isinstance(A, TridiagMatrix):
        system = M.scaled_sum(1.0, A, dt)
        ab = system.banded()

        def step_solve(rhs):
            return scipy.linalg.solveh_banded(ab, rhs, check_finite=False)
    else:
        system = A.toarray() * dt + M.toarray()
        factor = _cholesky(system)

        def step_solve(rhs):
            return scipy.linalg.cho_solve(factor, rhs, check_finite=False)

    phi = np.zeros(mesh.n) if initial is None else np.array(initial, dtype=float)
    if phi.shape != (mesh.n,):
        raise ValueError("initial datum has the wrong length")
    constant_load = isinstance(p.g, RhsSpec)
    b = p.load_at(0.0) if constant_load else None
    out = []
    for m in range(1, p.n_steps + 1):
        load = b if constant_load else p.load_at(m * dt)
        phi = step_solve(M @ phi + dt * load)
        out.append(DiscreteFunction(mesh, phi))
    return out
