"""Multiprecision reference values used to check the fast paths.

Nothing here is used by assembly or the solvers.  The bilinear form is
computed as a nested quadrature over (x, z = y - x): the inner x-integral
is exact (piecewise quadratic, two-point Gauss per piece) and the outer
z-integral uses tanh-sinh on unit intervals.  Near z = 0 the integrand is
written with difference quotients, ((U(x)-U(x+z))/z) ((V(x)-V(x+z))/z)
z^(1-2s), so the kernel singularity is removed before integrating.
"""
from __future__ import annotations

import mpmath as mp
import numpy as np

__all__ = ["bilinear_form_oracle", "stiffness_entry_oracle", "normalization_constant_oracle"]


def normalization_constant_oracle(dim, s, dps=40):
    with mp.workdps(dps):
        s = mp.mpf(s)
        n = mp.mpf(dim)
        return s * mp.power(2, 2 * s) * mp.gamma((n + 2 * s) / 2) / (
            mp.power(mp.pi, n / 2) * mp.gamma(1 - s))


class _UnitPL:
    """Piecewise-linear function with values at integer nodes, zero outside."""

    def __init__(self, first_node, values):
        self.lo = int(first_node) - 1
        self.vals = [mp.mpf(0)] + [mp.mpf(float(v)) for v in values] + [mp.mpf(0)]
        self.hi = self.lo + len(self.vals) - 1

    def cell(self, x):
        p = int(mp.floor(x))
        return p

    def value(self, x):
        p = self.cell(x)
        if p < self.lo or p >= self.hi:
            return mp.mpf(0)
        i = p - self.lo
        return self.vals[i] + (self.vals[i + 1] - self.vals[i]) * (x - p)

    def slope(self, p):
        if p < self.lo or p >= self.hi:
            return mp.mpf(0)
        i = p - self.lo
        return self.vals[i + 1] - self.vals[i]

    def quotient(self, x, z):
        """(U(x) - U(x+z)) / z, exact when x and x+z share a cell."""
        p, q = self.cell(x), self.cell(x + z)
        if p == q:
            return -self.slope(p)
        return (self.value(x) - self.value(x + z)) / z


_G2 = (-1 / mp.sqrt(3), 1 / mp.sqrt(3))


def _correlation_quotient(U, V, z, lo, hi):
    """int (U(x)-U(x+z))(V(x)-V(x+z)) / z^2 dx over the real line."""
    knots = set()
    for p in range(lo, hi + 1):
        knots.add(mp.mpf(p))
        knots.add(mp.mpf(p) - z)
    br = sorted(knots)
    total = mp.mpf(0)
    for a, b in zip(br[:-1], br[1:]):
        if b <= a:
            continue
        m, r = (a + b) / 2, (b - a) / 2
        for g in _G2:
            x = m + r * g
            total += r * U.quotient(x, z) * V.quotient(x, z)
    return total


def bilinear_form_oracle(u_values, v_values, s, h=1.0, dps=25):
    """(C_{1,s}/2) int int (U(x)-U(y))(V(x)-V(y)) / |x-y|^(1+2s) dx dy.

    U and V are the piecewise-linear functions with the given values at
    consecutive interior nodes of a uniform mesh of spacing ``h`` (both
    vectors start at the same node) and zero at the two boundary nodes.
    """
    with mp.workdps(dps):
        U = _UnitPL(1, u_values)
        V = _UnitPL(1, v_values)
        lo, hi = min(U.lo, V.lo), max(U.hi, V.hi)
        width = hi - lo
        sm = mp.mpf(s)

        def outer(z):
            return _correlation_quotient(U, V, z, lo, hi) * z ** (1 - 2 * sm)

        # on (0, 1) substitute z = w^beta, beta = 1/(2-2s): z^(1-2s) dz = beta dw
        beta = 1 / (2 - 2 * sm)

        def near(w):
            if w == 0:
                w = mp.mpf(10) ** (-dps)
            return beta * _correlation_quotient(U, V, w**beta, lo, hi)

        wbreaks = sorted({mp.mpf(0), mp.mpf(1)} | {mp.power(10, -mp.mpf(j) / beta) for j in range(1, 9)})
        total = mp.quad(near, wbreaks)
        for k in range(1, width):
            total += mp.quad(outer, [k, k + 1])
        # beyond the support width the correlation is 2 int U V
        g_far = _correlation_quotient(U, V, mp.mpf(width), lo, hi) * width**2
        total += g_far * mp.power(width, -2 * sm) / (2 * sm)
        c = normalization_constant_oracle(1, s, dps)
        val = c * total * mp.power(mp.mpf(h), 1 - 2 * sm)
        return float(val)


def stiffness_entry_oracle(s, k, dps=25):
    """eta_s(k) from the oracle: the form between unit hats k apart."""
    k = int(k)
    u = np.zeros(k + 1)
    v = np.zeros(k + 1)
    u[0] = 1.0
    v[k] = 1.0
    return bilinear_form_oracle(u, v, s, dps=dps)
