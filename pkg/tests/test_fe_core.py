import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraclab.fe_core import (
    DiscreteFunction,
    SymToeplitzMatrix,
    TridiagMatrix,
    UniformMesh,
    assemble_classical_stiffness,
    assemble_fractional_stiffness,
    assemble_load,
    assemble_mass,
    stiffness_kernel,
)
from fraclab.oracles import bilinear_form_oracle, stiffness_entry_oracle

# eta_s(k) frozen from the multiprecision oracle (dps=30)
FROZEN_ETA = {
    0.3: (0.7293414105902851, -0.041521327821776324, -0.09719539862746455, -0.018032755308031327),
    0.5: (0.8825424006106064, -0.19143861467394377, -0.11678794191483138, -0.013274781754282643),
    0.75: (1.2463732120272484, -0.4693922550079885, -0.09891271582233953, -0.005690033082525177),
}
KS = (0, 1, 2, 5)


# ------------------------------------------------------------------ mesh
def test_mesh_basics():
    m = UniformMesh(-1.0, 1.0, 3)
    assert m.h == 0.5
    np.testing.assert_allclose(m.nodes, [-0.5, 0.0, 0.5])
    np.testing.assert_allclose(m.all_nodes, [-1.0, -0.5, 0.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        m.nodes[0] = 3.0


@pytest.mark.parametrize("a,b,n", [(1.0, 0.0, 3), (0.0, 1.0, 0), (0.0, 0.0, 5)])
def test_mesh_rejects_bad_input(a, b, n):
    with pytest.raises(ValueError):
        UniformMesh(a, b, n)


def test_discrete_function_ops():
    m = UniformMesh(0.0, 1.0, 3)
    f = DiscreteFunction.interpolate(m, lambda x: x * (1 - x))
    g = DiscreteFunction.zeros(m)
    np.testing.assert_allclose((f - g).values, f.values)
    np.testing.assert_allclose((f + f).values, (f * 2.0).values)
    assert f(0.0) == 0.0 and f(1.0) == 0.0
    assert f(0.25) == pytest.approx(0.1875)
    with pytest.raises(ValueError):
        f + DiscreteFunction.zeros(UniformMesh(0.0, 1.0, 4))
    with pytest.raises(ValueError):
        DiscreteFunction(m, np.zeros(2))


# --------------------------------------------------------------- kernel
@pytest.mark.parametrize("s", sorted(FROZEN_ETA))
def test_kernel_matches_frozen_oracle(s):
    np.testing.assert_allclose(stiffness_kernel(s, np.array(KS)), FROZEN_ETA[s], rtol=1e-10)


@pytest.mark.parametrize("s,k", [(0.05, 1), (0.49999, 0), (0.5, 3), (0.9, 2), (0.9, 4), (0.999, 1)])
def test_kernel_matches_live_oracle(s, k):
    assert stiffness_kernel(s, k) == pytest.approx(stiffness_entry_oracle(s, k), rel=1e-8)


def test_kernel_continuous_across_half():
    below = stiffness_kernel(0.5 - 1e-9, np.arange(4))
    above = stiffness_kernel(0.5 + 1e-9, np.arange(4))
    np.testing.assert_allclose(below, above, rtol=1e-7)


def test_kernel_limit_classical():
    eta = stiffness_kernel(0.9999, np.arange(63))
    assert abs(eta[0] - 2) < 1e-2 and abs(eta[1] + 1) < 1e-2
    assert np.max(np.abs(eta[2:])) < 1e-2


def test_kernel_limit_mass_like():
    eta = stiffness_kernel(1e-4, np.arange(63))
    assert abs(eta[0] - 2 / 3) < 1e-2 and abs(eta[1] - 1 / 6) < 1e-2
    assert np.max(np.abs(eta[2:])) < 1e-2


def test_kernel_limits_monotone():
    dev = []
    for s in (0.9, 0.99, 0.999, 0.9999):
        eta = stiffness_kernel(s, np.arange(63))
        dev.append(max(abs(eta[0] - 2), abs(eta[1] + 1), np.max(np.abs(eta[2:]))))
    assert all(np.diff(dev) < 0)


def test_kernel_far_entries_negative_and_decaying():
    eta = stiffness_kernel(0.6, np.arange(2, 200))
    assert np.all(eta < 0)
    assert np.all(np.diff(np.abs(eta)) < 0)
    # |eta(k)| ~ C k^(-1-2s) for large k
    ratio = eta[-1] / eta[-50]
    assert ratio == pytest.approx((199 / 150) ** (-2.2), rel=1e-2)


def test_kernel_switch_from_closed_form_is_smooth():
    # k = 2 closed form vs k = 3 Gauss; compare neighbours to the asymptotic shape
    for s in (0.2, 0.5, 0.8):
        eta = stiffness_kernel(s, np.arange(2, 7))
        assert stiffness_kernel(s, 3) == pytest.approx(stiffness_entry_oracle(s, 3), rel=1e-9)
        assert np.all(np.diff(np.abs(eta)) < 0)


@pytest.mark.parametrize("bad", [-1, 1.5])
def test_kernel_rejects_bad_k(bad):
    with pytest.raises(ValueError):
        stiffness_kernel(0.5, bad)


# --------------------------------------------------------------- matrix
def test_fractional_matrix_scaling_and_toeplitz():
    m = UniformMesh(-1.0, 1.0, 31)
    A = assemble_fractional_stiffness(m, 0.3)
    dense = A.toarray()
    np.testing.assert_allclose(dense, dense.T)
    rng = np.random.default_rng(7)
    for _ in range(20):
        i, j = rng.integers(0, 31, size=2)
        k = abs(int(i) - int(j))
        assert dense[i, j] == pytest.approx(m.h ** 0.4 * stiffness_kernel(0.3, k), rel=1e-14)


@pytest.mark.parametrize("s", [0.3, 0.7])
def test_quadratic_form_against_oracle(s):
    rng = np.random.default_rng(11)
    v = rng.normal(size=5)
    m = UniformMesh(0.0, 6 * 0.5, 5)
    A = assemble_fractional_stiffness(m, s)
    ref = bilinear_form_oracle(v, v, s, h=m.h)
    assert A.quadratic_form(v) == pytest.approx(ref, rel=1e-8)


def test_spot_entries_against_oracle():
    m = UniformMesh(-1.0, 1.0, 63)
    A = assemble_fractional_stiffness(m, 0.45)
    rng = np.random.default_rng(3)
    for _ in range(3):
        i = int(rng.integers(0, 55))
        j = i + int(rng.integers(0, 8))
        u = np.zeros(j - i + 1)
        v = np.zeros(j - i + 1)
        u[0] = v[-1] = 1.0
        assert A.entry(i, j) == pytest.approx(bilinear_form_oracle(u, v, 0.45, h=m.h), rel=1e-8)


@pytest.mark.parametrize("n", [8, 64, 512])
@pytest.mark.parametrize("s", [0.3, 0.5, 0.75, 0.9])
def test_fractional_matrix_spd(n, s):
    A = assemble_fractional_stiffness(UniformMesh(-1.0, 1.0, n), s)
    assert np.linalg.eigvalsh(A.toarray()).min() > 0


def test_matvec_matches_dense():
    A = assemble_fractional_stiffness(UniformMesh(0.0, 1.0, 40), 0.6)
    v = np.random.default_rng(0).normal(size=40)
    np.testing.assert_allclose(A @ v, A.toarray() @ v, rtol=1e-12, atol=1e-12)
    assert A.quadratic_form(v) == pytest.approx(v @ A.toarray() @ v, rel=1e-12)


def test_toeplitz_rejects_empty():
    with pytest.raises(ValueError):
        SymToeplitzMatrix(np.array([]))


def test_classical_and_mass():
    m = UniformMesh(0.0, 1.0, 255)
    K = assemble_classical_stiffness(m)
    M = assemble_mass(m)
    v = np.sin(np.pi * m.nodes)
    # P1 energy of the interpolant tends to int (pi cos pi x)^2 = pi^2/2
    assert K.quadratic_form(v) == pytest.approx(math.pi**2 / 2, rel=1e-4)
    assert M.quadratic_form(v) == pytest.approx(0.5, rel=1e-4)
    ones = np.ones(m.n)
    assert M.quadratic_form(ones) == pytest.approx(1.0, abs=3 * m.h)
    np.testing.assert_allclose(K @ v, K.toarray() @ v, atol=1e-10)


def test_tridiag_scaled_sum_and_banded():
    T = TridiagMatrix(4, 2.0, -1.0)
    S = T.scaled_sum(2.0, TridiagMatrix(4, 1.0, 0.5), 3.0)
    np.testing.assert_allclose(S.toarray(), 2 * T.toarray() + 3 * TridiagMatrix(4, 1.0, 0.5).toarray())
    ab = T.banded()
    assert ab.shape == (2, 4)


# ------------------------------------------------------------------ load
def test_load_of_constant():
    m = UniformMesh(-1.0, 1.0, 15)
    np.testing.assert_allclose(assemble_load(m, lambda x: np.ones_like(x)), m.h, rtol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_load_exact_for_quadratics(c0, c1, c2):
    m = UniformMesh(0.0, 1.0, 7)
    f = lambda x: c0 + c1 * x + c2 * x * x
    b = assemble_load(m, f)
    # int x^2 phi_i = h x_i^2 + h^3/6
    x = m.nodes
    h = m.h
    exact = c0 * h + c1 * x * h + c2 * (x * x * h + h**3 / 6)
    np.testing.assert_allclose(b, exact, atol=1e-13)
