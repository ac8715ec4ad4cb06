"""Acceptance gate: one test, and one PASS/FAIL line, per criterion."""
import math
import time

import numpy as np
from scipy.integrate import quad, trapezoid

from fraclab.fe_core import UniformMesh, stiffness_kernel
from fraclab.kernel_analytic import FracParams, pointwise_flap, stability_constant
from fraclab.lab.config import ExperimentConfig, rate_grid
from fraclab.lab.experiments import (
    convergence_report,
    parabolic_gap,
    smooth_bump,
    smooth_bump_second_derivative,
)
from fraclab.oracles import stiffness_entry_oracle
from fraclab.rhs_norms import Constant, hs_norm, mollifier_rho, mollify
from fraclab.solvers import EllipticProblem, solve_elliptic


def _kernel_limit(s, target):
    eta = stiffness_kernel(s, np.arange(63))
    near = max(abs(eta[0] - target[0]), abs(eta[1] - target[1]))
    far = float(np.max(np.abs(eta[2:])))
    return near, far


def test_c01_stiffness_limit_classical(verdict):
    t0 = time.perf_counter()
    near, far = _kernel_limit(0.9999, (2.0, -1.0))
    ok = near < 1e-2 and far < 1e-2
    assert verdict("1 stiffness limit s=0.9999", ok, f"near_dev={near:.3e} far_max={far:.3e} tol=1e-2",
                   time.perf_counter() - t0, 1.0)


def test_c02_stiffness_limit_mass_like(verdict):
    t0 = time.perf_counter()
    near, far = _kernel_limit(1e-4, (2.0 / 3.0, 1.0 / 6.0))
    ok = near < 1e-2 and far < 1e-2
    assert verdict("2 stiffness limit s=1e-4", ok, f"near_dev={near:.3e} far_max={far:.3e} tol=1e-2",
                   time.perf_counter() - t0, 1.0)


def test_c03_ball_validation(verdict):
    t0 = time.perf_counter()
    mesh = UniformMesh(-1.0, 1.0, 1023)
    x = mesh.nodes
    u_half = solve_elliptic(EllipticProblem(FracParams(1, 0.5), mesh, Constant(1.0)))
    u_one = solve_elliptic(EllipticProblem(FracParams(1, 0.9999), mesh, Constant(1.0)))
    e_half = float(np.max(np.abs(u_half.values - np.sqrt(1 - x * x))))
    e_one = float(np.max(np.abs(u_one.values - 0.5 * (1 - x * x))))
    ok = e_half < 1e-2 and e_one < 2e-2
    assert verdict("3 ball validation", ok, f"err_s=0.5={e_half:.3e} (<1e-2) err_s=0.9999={e_one:.3e} (<2e-2)",
                   time.perf_counter() - t0, 30.0)


def test_c04_rate_study(verdict):
    t0 = time.perf_counter()
    parts, ok = [], True
    for rhs in ("sin-pi-x2", "piecewise-constant"):
        cfg = ExperimentConfig.for_experiment("rate-study", n=511, s_grid=rate_grid(20, 5e-3, 0.5), rhs=rhs)
        rep = convergence_report(cfg)
        ok &= 0.4 <= rep.slope <= 0.6 and rep.fit_residual < 0.1
        parts.append(f"{rhs}: slope={rep.slope:.3f} resid={rep.fit_residual:.3f}")
    assert verdict("4 rate study", ok, "; ".join(parts) + " (slope in [0.4,0.6], resid<0.1)",
                   time.perf_counter() - t0, 300.0)


def test_c05_pointwise_limits(verdict):
    t0 = time.perf_counter()
    xs = np.linspace(-0.5, 0.5, 11)
    bump = lambda y: float(smooth_bump(y))
    small = max(abs(pointwise_flap(bump, x, FracParams(1, 0.01), support=(-1, 1)) / bump(x) - 1) for x in xs)
    large = max(
        abs(pointwise_flap(bump, x, FracParams(1, 0.999), support=(-1, 1))
            / -float(smooth_bump_second_derivative(x)) - 1)
        for x in xs
    )
    ok = small < 5e-2 and large < 1e-2
    assert verdict("5 pointwise limits", ok, f"rel_s=0.01={small:.3e} (<5e-2) rel_s=0.999={large:.3e} (<1e-2)",
                   time.perf_counter() - t0, 10.0)


def test_c06_uniform_stability(verdict):
    t0 = time.perf_counter()
    mesh = UniformMesh(-1.0, 1.0, 511)
    vals = []
    for s in np.linspace(0.5, 0.99, 50):
        u = solve_elliptic(EllipticProblem(FracParams(1, float(s)), mesh, Constant(1.0)))
        vals.append(math.sqrt(1 - s) * hs_norm(u, float(s)))
    ratio = max(vals) / min(vals)
    assert verdict("6 uniform stability", ratio < 10, f"max/min={ratio:.3f} (<10)",
                   time.perf_counter() - t0, 60.0)


def test_c07_stability_constant_monotone(verdict):
    t0 = time.perf_counter()
    grid = np.linspace(0.5, 1 - 1e-4, 100)
    worst = -math.inf
    for dim in (2, 4, 6, 8, 10):
        vals = np.array([stability_constant(FracParams(dim, float(s))) for s in grid])
        worst = max(worst, float(np.max(np.diff(vals))))
    assert verdict("7 stability constant decreasing", worst < 0, f"max_step={worst:.3e} (<0)",
                   time.perf_counter() - t0, 1.0)


def test_c08_parabolic_limit(verdict):
    t0 = time.perf_counter()
    cfg = ExperimentConfig.for_experiment("parabolic-study", n=255, dt=1e-3, T=0.5, rhs="constant")
    sup = float(parabolic_gap(cfg, 0.9999).max())
    assert verdict("8 parabolic limit", sup < 2e-2, f"sup_l2_gap={sup:.3e} (<2e-2)",
                   time.perf_counter() - t0, 120.0)


def test_c09_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    worst = max(
        abs(stiffness_kernel(s, k) / stiffness_entry_oracle(s, k) - 1)
        for s in (0.3, 0.5, 0.75)
        for k in (0, 1, 2, 5)
    )
    assert verdict("9 oracle equivalence", worst < 1e-6, f"max_rel={worst:.3e} (<1e-6)",
                   time.perf_counter() - t0, 60.0)


def test_c10_mollifier_suite(verdict):
    t0 = time.perf_counter()
    mass_err = max(
        abs(quad(lambda y: mollifier_rho(e, y), -e, e, epsabs=0, epsrel=1e-13, limit=200)[0] - 1)
        for e in (1.0, 0.2, 0.1, 0.05, 0.01)
    )
    grid = np.linspace(-1.0, 1.0, 4001)
    g = np.where(np.abs(grid) <= 0.5, 1.0, 0.0)
    lo, hi = -0.5 - 5e-4, 0.5 + 5e-4
    support_ok = True
    x = np.linspace(-1.0, 1.0, 8001)
    errs = []
    for eps in (0.2, 0.1, 0.05):
        outside = np.array([lo - eps - 1e-12, hi + eps + 1e-12, -2.0, 2.0])
        support_ok &= bool(np.all(mollify(grid, g, eps, outside) == 0.0))
        support_ok &= bool(np.all(mollifier_rho(eps, np.array([-eps, eps, 2 * eps])) == 0.0))
        d = mollify(grid, g, eps, x) - np.interp(x, grid, g)
        errs.append(math.sqrt(trapezoid(d * d, x)))
    trend = errs[0] > errs[1] > errs[2]
    ok = mass_err < 1e-10 and support_ok and trend
    detail = (f"mass_err={mass_err:.3e} (<1e-10) support_exact={support_ok} "
              f"l2={errs[0]:.3e}>{errs[1]:.3e}>{errs[2]:.3e}")
    assert verdict("10 mollifier suite", ok, detail, time.perf_counter() - t0, 10.0)
