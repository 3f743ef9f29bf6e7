"""Tests for the discrete Floquet-Bloch transform."""

import numpy as np
import pytest

from blochlap import floquet as fl
from blochlap import planewave as pw


def random_sampled(rng, d=2, m=6):
    """A random compactly supported function, vanishing on the box edge."""
    lo = tuple(int(v) for v in rng.integers(-2, 1, size=d))
    n_cells = tuple(int(v) for v in rng.integers(1, 4, size=d))
    shape = tuple(n * m + 1 for n in n_cells)
    vals = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    for a in range(d):
        idx = [slice(None)] * d
        idx[a] = 0
        vals[tuple(idx)] = 0.0
        idx[a] = -1
        vals[tuple(idx)] = 0.0
    return fl.SampledFunction(lo=lo, m=m, values=vals)


def test_isometry_many_random_functions():
    rng = np.random.default_rng(7)
    for _ in range(100):
        f = random_sampled(rng, d=2, m=5)
        g = fl.transform(f, n_k=8)
        assert fl.field_l2_norm(g) == pytest.approx(fl.l2_norm(f), rel=1e-12)


def test_isometry_1d():
    rng = np.random.default_rng(3)
    for _ in range(20):
        f = random_sampled(rng, d=1, m=8)
        g = fl.transform(f, n_k=16)
        assert fl.field_l2_norm(g) == pytest.approx(fl.l2_norm(f), rel=1e-12)


def test_round_trip():
    rng = np.random.default_rng(11)
    f = random_sampled(rng, d=2, m=6)
    # n_k must cover the support width for the inverse to be exact.
    g = fl.transform(f, n_k=8)
    back = fl.inverse(g, f.lo, f.n_cells)
    assert np.abs(back.values - f.values).max() < 1e-12


def test_inverse_vanishes_off_support():
    rng = np.random.default_rng(13)
    f = random_sampled(rng, d=2, m=6)
    g = fl.transform(f, n_k=16)
    lo = (f.lo[0] - 5, f.lo[1] - 5)
    back = fl.inverse(g, lo, (1, 1))
    assert np.abs(back.values).max() < 1e-12


def test_transform_periodicity_in_x():
    """Uf(x + e_j, k) = e^{i k_j} Uf(x, k) links opposite faces of Omega
    when the support allows both evaluations; here we check the defining
    sum directly at a shifted point."""
    rng = np.random.default_rng(5)
    m = 4
    vals = rng.normal(size=(2 * m + 1, 2 * m + 1)) + 0j
    vals[0, :] = vals[-1, :] = 0
    vals[:, 0] = vals[:, -1] = 0
    f = fl.SampledFunction(lo=(0, 0), m=m, values=vals)

    def uf(x, k):
        total = 0.0
        for n1 in range(-3, 4):
            for n2 in range(-3, 4):
                y = (x[0] - n1, x[1] - n2)
                i = round((y[0] - f.lo[0]) * m)
                j = round((y[1] - f.lo[1]) * m)
                if 0 <= i < vals.shape[0] and 0 <= j < vals.shape[1]:
                    total += vals[i, j] * np.exp(1j * (n1 * k[0] + n2 * k[1]))
        return total / (2 * np.pi)

    k = np.array([0.7, -1.3])
    x = np.array([0.25, 0.5])
    lhs = uf(x + np.array([1.0, 0.0]), k)
    rhs = np.exp(1j * k[0]) * uf(x, k)
    assert abs(lhs - rhs) < 1e-12
    # and the sampled transform agrees with the defining sum on the grid
    g = fl.transform(f, n_k=8)
    ks = fl.k_axis(8)
    got = g.values[m // 2, m // 2, 2, 5]
    want = uf(np.array([0.5, 0.5]), np.array([ks[2], ks[5]]))
    assert abs(got - want) < 1e-12


def test_coefficient_routes_agree():
    rng = np.random.default_rng(17)
    f = random_sampled(rng, d=2, m=6)
    field = pw.FourierField(pw.PotentialSpec.free(2), S=3)
    labels = np.array([[0, 0], [1, 0], [0, -1], [2, 1]])
    kpts1, C1 = fl.coefficients(f, field, labels, n_k=4)
    kpts2, C2 = fl.coefficients_direct(f, field, labels, n_k=4)
    assert np.abs(kpts1 - kpts2).max() == 0
    assert np.abs(C1 - C2).max() < 1e-12


def test_free_field_coefficients_analytic():
    """For V = 0, psi_s(x, k) = e^{i <k + 2 pi s, x>}, so
    c_s(k) = (2 pi)^{-d/2} hat f(k + 2 pi s)."""
    m = 8
    f = fl.SampledFunction.from_callable(
        lambda x: np.sin(np.pi * x) ** 2 * np.exp(1j * x), (0,), (1,), m)
    field = pw.FourierField(pw.PotentialSpec.free(1), S=4)
    labels = np.array([[0], [1], [-1]])
    kpts, C = fl.coefficients_direct(f, field, labels, n_k=6)
    xs = f.axis(0)
    w = np.full(xs.size, 1.0 / m)
    w[0] = w[-1] = 0.5 / m
    for ik, k in enumerate(kpts):
        for js, s in enumerate(labels):
            kap = k[0] + 2 * np.pi * s[0]
            want = np.sum(w * f.values * np.exp(-1j * kap * xs))
            want *= (2 * np.pi) ** (-0.5)
            assert abs(C[ik, js] - want) < 1e-12


def test_plancherel_for_coefficients():
    """Summing |c_s(k)|^2 over enough labels recovers ||f||^2."""
    m = 8
    win = lambda t, a, b: (np.clip((t - a) * (b - t), 0, None)
                           / (((b - a) / 2) ** 2)) ** 2
    f = fl.SampledFunction.from_callable(
        lambda x, y: np.exp(-4 * ((x - 0.5) ** 2 + (y - 1.5) ** 2))
        * np.cos(3 * x + y) * win(x, -1, 2) * win(y, 0, 3),
        (-1, 0), (3, 3), m)
    field = pw.FourierField(pw.PotentialSpec.free(2), S=3)
    labels = pw.box_indices(3, 2)
    _, C = fl.coefficients_direct(f, field, labels, n_k=6)
    assert fl.mixed_norm(C, 6, 2, 2) == pytest.approx(fl.l2_norm(f), rel=1e-4)


def test_mixed_norm_sup():
    C = np.array([[1.0, -2.0], [0.5, 1.5]])
    assert fl.mixed_norm(C, 4, 1, np.inf) == 2.0


def test_coefficients_to_csv(tmp_path):
    rng = np.random.default_rng(23)
    f = random_sampled(rng, d=2, m=4)
    field = pw.FourierField(pw.PotentialSpec.free(2), S=2)
    labels = np.array([[0, 0], [1, -1]])
    kpts, C = fl.coefficients(f, field, labels, n_k=3)
    path = tmp_path / "coeffs.csv"
    fl.coefficients_to_csv(kpts, labels, C, path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "k1,k2,s1,s2,re,im"
    assert len(rows) == 1 + len(kpts) * len(labels)
    first = rows[1].split(",")
    assert float(first[0]) == pytest.approx(kpts[0, 0])
    assert float(first[4]) == pytest.approx(C[0, 0].real, abs=1e-10)
