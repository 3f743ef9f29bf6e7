"""Tests for the resolvent kernel evaluations."""

import numpy as np
import pytest
from scipy.special import hankel1

from blochlap import oscillatory as osc
from blochlap import planewave as pw
from blochlap import resolvent as res
from blochlap.errors import EpsilonZero, IrregularFrequency, TailDominant
from blochlap.hill1d import Potential1D


def free_field():
    return pw.FreeField(2)


def perturbed_parts(delta=0.1):
    p = Potential1D.from_function(lambda x: delta * np.cos(2 * np.pi * x),
                                  n=64)
    return [p, p]


@pytest.fixture(scope="module")
def cfg_free():
    """Coarse k-grid free-field config (resonant-part and transform work,
    where the density route does the heavy lifting)."""
    return res.ResolventConfig(free_field(), 5.0, n_k=64, S=8)


@pytest.fixture(scope="module")
def cfg_free_fine():
    """Fine k-grid config for full-kernel oracle comparisons (the grid sum
    needs n_k * eps large against the band gradient)."""
    return res.ResolventConfig(free_field(), 5.0, n_k=512, S=8)


@pytest.fixture(scope="module")
def cfg_fourier():
    """Small plane-wave Galerkin field on a genuinely 2-D potential."""
    pot = pw.PotentialSpec.from_fourier(2, {
        (0, 0): 0.0, (1, 0): 0.05, (-1, 0): 0.05,
        (0, 1): 0.05, (0, -1): 0.05})
    return res.ResolventConfig(pw.FourierField(pot, S=3), 5.0, n_k=24, S=3)


@pytest.fixture(scope="module")
def cfg_sep():
    return res.ResolventConfig(pw.make_field(
        pw.PotentialSpec.from_separable(perturbed_parts())), 5.0,
        n_k=64, S=8)


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

def test_rho_selection_free(cfg_free):
    # lambda = 5 is far from every band edge: the full default radius works
    assert cfg_free.rho == pytest.approx(0.5)
    assert cfg_free.tau_grid[0] == pytest.approx(4.5)
    assert cfg_free.tau_grid[-1] == pytest.approx(5.5)
    assert len(cfg_free.tau_grid) == 129
    # cubic grading clusters samples toward lambda
    mid = np.abs(cfg_free.tau_grid - 5.0) < 0.05
    assert mid.sum() > 50


def test_irregular_frequency_rejected():
    with pytest.raises(IrregularFrequency):
        res.ResolventConfig(free_field(), -1.0)


# ---------------------------------------------------------------------------
# full kernel vs the closed-form Green's function (V = 0)
# ---------------------------------------------------------------------------

class TestHankelOracle:
    def test_eps_kernel_matches_hankel(self, cfg_free_fine):
        """K^eps vs (i/4) H_0^(1)(sqrt(lambda + i eps) |x-y|), relative
        error < 1% for eps in {0.1, 0.05}."""
        y = np.array([0.25, 0.4])
        for eps in (0.1, 0.05):
            for sigma in (1.0, 2.0, 5.0):
                x = y + np.array([sigma, 0.0])
                kv = res.kernel_eps(cfg_free_fine, x, y, eps)
                exact = 0.25j * hankel1(0, np.sqrt(5.0 + 1j * eps) * sigma)
                assert abs(kv.value - exact) / abs(exact) < 0.01

    def test_limit_kernel_matches_hankel(self, cfg_free_fine):
        """K^+ = K_1^0 + K_2^+ vs (i/4) H_0^(1)(sqrt(lambda) |x-y|) < 2%."""
        y = np.array([0.25, 0.4])
        for sigma in (1.0, 2.0):
            x = y + np.array([sigma, 0.0])
            lv = res.kernel_limit(cfg_free_fine, x, y, +1)
            exact = 0.25j * hankel1(0, np.sqrt(5.0) * sigma)
            assert abs(lv.value - exact) / abs(exact) < 0.02
            # K* is the real part of the standing-wave combination
            assert lv.k_star == pytest.approx(exact.real, abs=2e-3)

    def test_im_limit_carried_by_resonant_part(self, cfg_free_fine):
        """For V = 0 the nonresonant part K_1^0 is real, so
        Im K^+ = Im K_2^+."""
        x = np.array([2.25, 0.4])
        y = np.array([0.25, 0.4])
        lv = res.kernel_limit(cfg_free_fine, x, y, +1)
        assert abs(lv.k1.imag) < 1e-10
        assert lv.value.imag == pytest.approx(lv.k2.imag, abs=1e-12)

    def test_resonant_im_is_pi_density(self, cfg_free):
        """Im K_2^+ = pi a(lambda) = J_0(sqrt(lambda) sigma) / 4."""
        from scipy.special import j0
        y = np.array([0.25, 0.4])
        x = y + np.array([3.0, 0.0])
        k2 = res.kernel_resonant_limit(cfg_free, x, y, +1)
        assert k2.imag == pytest.approx(j0(np.sqrt(5.0) * 3.0) / 4.0,
                                        abs=1e-8)


# ---------------------------------------------------------------------------
# split, symmetries, covariance
# ---------------------------------------------------------------------------

class TestSplitAndSymmetry:
    def test_split_additivity(self, cfg_fourier):
        rng = np.random.default_rng(0)
        for _ in range(5):
            x = rng.uniform(-1, 1, 2)
            y = rng.uniform(-1, 1, 2)
            kv = res.kernel_eps(cfg_fourier, x, y, 0.1)
            assert abs(kv.value - kv.k1 - kv.k2) < 1e-8 * abs(kv.value)

    def test_eps_conjugate_symmetry(self, cfg_fourier):
        """K^eps(x, y) = conj(K^{-eps}(y, x))."""
        rng = np.random.default_rng(1)
        for _ in range(5):
            x = rng.uniform(-1, 1, 2)
            y = rng.uniform(-1, 1, 2)
            a = res.kernel_eps(cfg_fourier, x, y, 0.1).value
            b = res.kernel_eps(cfg_fourier, y, x, -0.1).value
            assert abs(a - np.conj(b)) < 1e-8 * abs(a)

    def test_lattice_covariance(self, cfg_fourier):
        """K(x + m, y) = K(x, y - m) for lattice m."""
        rng = np.random.default_rng(2)
        for m in ([1, 0], [0, -1], [2, 1]):
            m = np.asarray(m, dtype=float)
            x = rng.uniform(0, 1, 2)
            y = rng.uniform(0, 1, 2)
            a = res.kernel_eps(cfg_fourier, x + m, y, 0.1).value
            b = res.kernel_eps(cfg_fourier, x, y - m, 0.1).value
            assert abs(a - b) < 1e-8 * abs(a)

    def test_resonant_limit_side_conjugation(self, cfg_free):
        """K_2^+(x, y) = conj(K_2^-(y, x))."""
        rng = np.random.default_rng(3)
        for _ in range(3):
            x = rng.uniform(-2, 2, 2)
            y = rng.uniform(-2, 2, 2)
            a = res.kernel_resonant_limit(cfg_free, x, y, +1)
            b = res.kernel_resonant_limit(cfg_free, y, x, -1)
            assert abs(a - np.conj(b)) < 1e-8 * max(abs(a), 1e-6)

    def test_k_star_real_symmetric(self, cfg_free_fine):
        rng = np.random.default_rng(4)
        for _ in range(3):
            x = rng.uniform(0, 2, 2)
            y = x + rng.uniform(1.0, 2.0) * np.array([1.0, 0.0])
            a = res.kernel_limit(cfg_free_fine, x, y, +1)
            b = res.kernel_limit(cfg_free_fine, y, x, +1)
            assert np.isreal(a.k_star)
            assert a.k_star == pytest.approx(b.k_star, rel=1e-8)

    def test_eps_zero_rejected(self, cfg_free):
        with pytest.raises(EpsilonZero):
            res.kernel_eps(cfg_free, np.zeros(2), np.ones(2), 0.0)

    def test_tail_guard(self, cfg_free):
        with pytest.raises(TailDominant):
            res.kernel_eps(cfg_free, np.array([1.2, 0.3]), np.zeros(2), 0.1,
                           tail_fraction=0.0)

    def test_k1_at_zero_eps_allowed(self, cfg_free_fine):
        K1, K2 = res.kernel_split(cfg_free_fine, np.array([2.25, 0.4]),
                                  np.array([0.25, 0.4]), 0.0)
        assert K2 is None
        assert np.isfinite(K1.real) and abs(K1.imag) < 1e-10


# ---------------------------------------------------------------------------
# eps -> 0 convergence of the resonant part
# ---------------------------------------------------------------------------

def test_eps_convergence_rate_matches_holder(cfg_free):
    """|K_2^eps - K_2^+| decays with the rate of the density's Hoelder
    exponent (up to the eps log eps cap on Lipschitz densities)."""
    x = np.array([1.75, 0.9])
    y = np.array([0.25, 0.4])
    lim = res.kernel_resonant_limit(cfg_free, x, y, +1)
    beta, _ = cfg_free.density(x, y).holder_fit()
    eps_list = np.logspace(-7, -5, 5)
    errs = [abs(res.kernel_resonant_eps(cfg_free, x, y, e, +1) - lim)
            for e in eps_list]
    rate = np.polyfit(np.log(eps_list), np.log(errs), 1)[0]
    assert abs(rate - beta) < 0.1


# ---------------------------------------------------------------------------
# decay and farfield
# ---------------------------------------------------------------------------

class TestDecay:
    sigma_grid = np.arange(5, 101, 5.0)

    def test_free_decay_exponent(self, cfg_free):
        slope, _, _ = res.decay_fit(cfg_free, +1, self.sigma_grid, (1.0, 0.3))
        assert abs(slope + 0.5) < 0.15

    def test_perturbed_decay_exponent(self, cfg_sep):
        slope, _, _ = res.decay_fit(cfg_sep, +1, self.sigma_grid, (1.0, 0.3))
        assert abs(slope + 0.5) < 0.15

    def test_farfield_im_ratio(self, cfg_free):
        """At sigma = 50 the imaginary part of K_2^+ matches the Hankel
        asymptotic imaginary part to 5%."""
        lam, sigma = 5.0, 50.0
        y = np.array([0.25, 0.4])
        x = y + np.array([sigma, 0.0])
        k2 = res.kernel_resonant_limit(cfg_free, x, y, +1)
        z = np.sqrt(lam) * sigma
        asym = 0.25 * np.sqrt(2.0 / (np.pi * z)) * np.cos(z - np.pi / 4.0)
        assert k2.imag / asym == pytest.approx(1.0, abs=0.05)


# ---------------------------------------------------------------------------
# shells
# ---------------------------------------------------------------------------

class TestShells:
    def test_same_cell_is_shell_zero(self, cfg_free):
        kv = res.kernel_eps(cfg_free, np.array([0.7, 0.2]),
                            np.array([0.1, 0.9]), 0.1)
        assert abs(res.shell_restrict(kv, 0).value - kv.value) < 1e-14
        assert res.shell_restrict(kv, 1).value == 0.0

    def test_offset_three_one_lands_in_shell_two(self, cfg_free):
        kv = res.kernel_eps(cfg_free, np.array([3.3, 1.4]),
                            np.array([0.3, 0.4]), 0.1)
        assert res.shell_restrict(kv, 2).value == kv.value
        for j in (0, 1, 3, 4):
            assert res.shell_restrict(kv, j).value == 0.0

    def test_shell_partition_of_unity(self, cfg_free):
        rng = np.random.default_rng(5)
        kv = res.kernel_eps(cfg_free, np.array([2.2, 0.3]),
                            np.array([0.3, 0.4]), 0.1)
        for _ in range(100):
            m = rng.integers(-40, 41, 2)
            shifted = res.KernelValue(x=kv.x + m, y=kv.y, value=kv.value,
                                      k1=kv.k1, k2=kv.k2, tail=kv.tail)
            hits = [res.shell_restrict(shifted, j).value != 0.0
                    for j in range(8)]
            assert sum(hits) == 1


# ---------------------------------------------------------------------------
# Floquet-Bloch transform of the shell kernels
# ---------------------------------------------------------------------------

class TestShellTransform:
    x = np.array([0.3, 0.45])
    y = np.array([0.1, -0.2])
    l = np.array([0.7, -1.1])

    def test_two_routes_agree_free(self, cfg_free):
        for j in (0, 1, 2, 3):
            a = res.floquet_kernel_transform(cfg_free, j, self.x, self.y,
                                             self.l, 0.05, method="coarea")
            b = res.floquet_kernel_transform(cfg_free, j, self.x, self.y,
                                             self.l, 0.05, method="direct")
            assert abs(a - b) < 1e-4 * max(abs(a), 1.0)

    def test_two_routes_agree_perturbed(self, cfg_sep):
        a = res.floquet_kernel_transform(cfg_sep, 1, self.x, self.y,
                                         self.l, 0.05, method="coarea")
        b = res.floquet_kernel_transform(cfg_sep, 1, self.x, self.y,
                                         self.l, 0.05, method="direct")
        assert abs(a - b) < 1e-4 * max(abs(a), 1.0)

    def test_growth_exponent(self, cfg_free):
        rng = np.random.default_rng(6)
        triples = [(rng.uniform(0, 1, 2), rng.uniform(0, 1, 2),
                    rng.uniform(-np.pi, np.pi, 2)) for _ in range(4)]
        slope, vals = res.shell_growth_fit(cfg_free, triples, 0.05)
        assert np.all(vals > 0)
        assert slope <= 1.35

    def test_direct_route_tail_guard(self, cfg_free):
        with pytest.raises(TailDominant):
            res.floquet_kernel_transform(cfg_free, 5, self.x, self.y,
                                         self.l, 0.05, method="direct")

    def test_eps_zero_rejected(self, cfg_free):
        with pytest.raises(EpsilonZero):
            res.floquet_kernel_transform(cfg_free, 1, self.x, self.y,
                                         self.l, 0.0)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def test_kernel_scan_csv(tmp_path, cfg_free):
    kv = res.kernel_eps(cfg_free, np.array([1.2, 0.3]),
                        np.array([0.2, 0.3]), 0.1)
    path = tmp_path / "scan.csv"
    res.kernel_scan_to_csv([kv], path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x1,x2,y1,y2,re,im,re_K1,im_K1,re_K2,im_K2,err"
    row = lines[1].split(",")
    assert len(row) == 11
    assert float(row[0]) == pytest.approx(1.2)
    assert float(row[4]) + 1j * float(row[5]) == pytest.approx(kv.value,
                                                               rel=1e-9)
