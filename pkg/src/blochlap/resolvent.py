"""Resolvent kernels of a periodic Schrödinger operator near a regular
frequency.

For -Delta + V with 1-periodic V and a frequency lambda inside the spectrum,
the resolvent (L - lambda - i eps)^{-1} acts by the kernel

    K^eps(x, y) = avg_B sum_s psi_s(x,k) conj(psi_s(y,k))
                  / (lambda_s(k) - lambda - i eps) dk

(avg_B the normalized Brillouin-zone integral).  A smooth cutoff chi splits
this into a nonresonant part K_1 (weight 1 - chi(Lambda - lambda), regular
down to eps = 0) and a resonant part K_2 (weight chi), which by the coarea
formula reduces to a one-dimensional Plemelj-Sokhotski integral of the
Fermi-surface density

    a_{x,y}(tau) = int_{F_tau} Psi(x,k) conj(Psi(y,k))
                   / (|B| |grad Lambda|) dH^1.

This module evaluates K^eps on a k-grid, the limits K_2^+/-, K^+/-, the
symmetrized K*, dyadic-shell restrictions, pointwise decay fits, and the
Floquet-Bloch transform of the shell-restricted resonant kernel by two
independent routes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import integrate, interpolate

from . import fermi, oscillatory, planewave
from .errors import (EpsilonZero, IrregularFrequency, TailDominant)
from .oscillatory import CutoffChi, SampledDensity

__all__ = [
    "ResolventConfig",
    "KernelValue",
    "kernel_eps",
    "kernel_split",
    "kernel_resonant_limit",
    "kernel_limit",
    "shell_restrict",
    "decay_fit",
    "floquet_kernel_transform",
    "kernel_scan_to_csv",
]

_ZONE_VOLUME = (2 * np.pi) ** 2


class ResolventConfig:
    """Frequency, cutoff, and grid data for kernel evaluations, with shared
    read-only caches (eigen-data per grid momentum, Fermi curves per level,
    sampled densities per point pair).

    The cutoff radius rho is the largest value <= rho_max such that every
    level set in [lambda - rho, lambda + rho] traces cleanly with
    |grad Lambda| and curvature above their thresholds.
    """

    def __init__(self, field, lam, rho_max=0.5, S=8, n_k=64, n_tau=129,
                 tail_shells=4, center=(0.0, 0.0), grad_tol=1e-3,
                 curv_tol=1e-3):
        self.field = field
        self.lam = float(lam)
        self.S = int(S)
        self.n_k = int(n_k)
        self.n_tau = int(n_tau)
        self.tail_shells = int(tail_shells)
        self.center = np.asarray(center, dtype=float)
        self._curves = {}
        self._densities = {}
        self._eigs = {}
        self.rho = self._select_rho(rho_max, grad_tol, curv_tol)
        self.chi = CutoffChi(self.rho)
        t = np.linspace(-1.0, 1.0, self.n_tau)
        self.tau_grid = self.lam + self.rho * t ** 3

    def _select_rho(self, rho_max, grad_tol, curv_tol):
        rho = float(rho_max)
        for _ in range(12):
            ok = True
            for tau in (self.lam - rho, self.lam - rho / 2, self.lam,
                        self.lam + rho / 2, self.lam + rho):
                try:
                    curve = fermi.radial_trace(self.field, tau, n=128,
                                               center=self.center)
                except Exception:
                    ok = False
                    break
                if (np.min(np.linalg.norm(curve.grads, axis=1)) < grad_tol
                        or np.min(curve.curvature) < curv_tol):
                    ok = False
                    break
            if ok:
                return rho
            rho /= 2.0
        raise IrregularFrequency(
            "no admissible cutoff radius at lambda = %g" % self.lam)

    # ---- shared caches -----------------------------------------------
    def curve(self, tau, n):
        key = (round(tau, 12), n)
        hit = self._curves.get(key)
        if hit is None:
            hit = fermi.radial_trace(self.field, tau, n=n, center=self.center)
            self._curves[key] = hit
        return hit

    def density(self, x, y, tol=1e-8):
        """SampledDensity tau -> a_{x,y}(tau) on the graded tau grid."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        key = (x.tobytes(), y.tobytes())
        hit = self._densities.get(key)
        if hit is None:
            vals = np.array([
                oscillatory.fermi_oscillatory(self.field, x, y, tau, tol=tol,
                                              trace=self.curve)
                for tau in self.tau_grid])
            hit = SampledDensity.from_samples(self.tau_grid, vals, self.lam,
                                              self.rho)
            self._densities[key] = hit
        return hit

    def eigen(self, ik):
        """(w, V, idx, k) eigen-data at grid momentum index ik (cached)."""
        hit = self._eigs.get(ik)
        if hit is None:
            k = self.k_axis[list(np.unravel_index(ik, (self.n_k, self.n_k)))]
            w, V, idx = self.field.eigen_at(k)
            self._eigs[ik] = (w, V, idx, k)
            hit = self._eigs[ik]
        return hit

    @property
    def k_axis(self):
        return -np.pi + 2 * np.pi * np.arange(self.n_k) / self.n_k


@dataclass
class KernelValue:
    """A kernel evaluation with its nonresonant/resonant parts and the
    truncation-tail error estimate."""

    x: np.ndarray
    y: np.ndarray
    value: complex
    k1: complex
    k2: complex
    tail: float
    shell: int = None


def _free_tail_estimate(cfg, delta, eps):
    """V = 0 surrogate for the plane-wave truncation tail: the same k-grid
    quadrature of e^{i <kappa, delta>}/(|kappa|^2 - lambda) summed over the
    max-norm shells S < ||s||_inf <= S + tail_shells."""
    N = cfg.n_k
    k1 = cfg.k_axis
    KX, KY = np.meshgrid(k1, k1, indexing="ij")
    Ek = np.exp(1j * (KX * delta[0] + KY * delta[1]))
    S, S2 = cfg.S, cfg.S + cfg.tail_shells
    total = 0.0 + 0.0j
    for s1 in range(-S2, S2 + 1):
        for s2 in range(-S2, S2 + 1):
            if max(abs(s1), abs(s2)) <= S:
                continue
            L = (KX + 2 * np.pi * s1) ** 2 + (KY + 2 * np.pi * s2) ** 2
            ph = np.exp(2j * np.pi * (s1 * delta[0] + s2 * delta[1]))
            total += ph * np.sum(Ek / (L - cfg.lam - 1j * eps))
    return abs(total) / N ** 2


def _grid_sums(cfg, x, y, eps):
    """(K, K1, K2) by the periodic-trapezoid k-quadrature and band sum, with
    the partition of unity 1 = (1 - chi) + chi applied inside the integrand
    so K = K1 + K2 holds to rounding."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lam, chi = cfg.lam, cfg.chi
    N = cfg.n_k
    field = cfg.field

    if isinstance(field, planewave.FreeField):
        # Lambda = |kappa|^2, Psi = plane waves: phases factor over s
        delta = x - y
        k1 = cfg.k_axis
        KX, KY = np.meshgrid(k1, k1, indexing="ij")
        Ek = np.exp(1j * (KX * delta[0] + KY * delta[1]))
        tot = np.zeros(3, dtype=complex)
        for s1 in range(-cfg.S, cfg.S + 1):
            for s2 in range(-cfg.S, cfg.S + 1):
                L = (KX + 2 * np.pi * s1) ** 2 + (KY + 2 * np.pi * s2) ** 2
                ph = np.exp(2j * np.pi * (s1 * delta[0] + s2 * delta[1]))
                c = chi(L - lam)
                if eps == 0.0:
                    base = np.zeros_like(L, dtype=complex)
                    mask = c < 1.0
                    base[mask] = 1.0 / (L[mask] - lam)
                    tot[1] += ph * np.sum((1 - c) * base * Ek)
                else:
                    w = Ek / (L - lam - 1j * eps)
                    tot[0] += ph * np.sum(w)
                    tot[1] += ph * np.sum((1 - c) * w)
                    tot[2] += ph * np.sum(c * w)
        tot /= N ** 2
        if eps == 0.0:
            tot[0] = tot[1]
        return tot[0], tot[1], tot[2]

    # general route: one eigensolve per grid momentum, sum over all bands
    if not hasattr(field, "eigen_at"):
        raise NotImplementedError(
            "full kernel sums need a spectral backend exposing eigen_at "
            "(plane-wave Galerkin) or a free field")
    tot = np.zeros(3, dtype=complex)
    for ik in range(N * N):
        w, V, idx, k = cfg.eigen(ik)
        px = np.exp(1j * (x @ (k[None, :] + 2 * np.pi * idx).T)) @ V
        py = np.exp(1j * (y @ (k[None, :] + 2 * np.pi * idx).T)) @ V
        prod = px * np.conj(py)
        c = chi(w - lam)
        if eps == 0.0:
            denom = np.where(c < 1.0, w - lam, 1.0)
            tot[1] += np.sum(np.where(c < 1.0, (1 - c) * prod / denom, 0.0))
        else:
            base = prod / (w - lam - 1j * eps)
            tot[0] += np.sum(base)
            tot[1] += np.sum((1 - c) * base)
            tot[2] += np.sum(c * base)
    tot /= N ** 2
    if eps == 0.0:
        tot[0] = tot[1]
    return tot[0], tot[1], tot[2]


def kernel_eps(cfg: ResolventConfig, x, y, eps, tail_fraction=0.1):
    """Full kernel K^eps(x, y), eps != 0, with its chi-split parts and the
    V = 0 surrogate tail estimate.  Raises TailDominant when the tail
    estimate exceeds tail_fraction of |K|."""
    if eps == 0.0:
        raise EpsilonZero("use kernel_limit / kernel_split for eps = 0")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    K, K1, K2 = _grid_sums(cfg, x, y, eps)
    tail = _free_tail_estimate(cfg, x - y, eps)
    if tail > tail_fraction * abs(K):
        raise TailDominant("tail estimate %.3e vs |K| = %.3e" % (tail, abs(K)))
    return KernelValue(x=x, y=y, value=K, k1=K1, k2=K2, tail=tail)


def kernel_split(cfg: ResolventConfig, x, y, eps):
    """(K_1^eps, K_2^eps); eps = 0 is allowed for K_1 only (its integrand is
    supported where |Lambda - lambda| >= rho/2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if eps == 0.0:
        _, K1, _ = _grid_sums(cfg, x, y, 0.0)
        return K1, None
    _, K1, K2 = _grid_sums(cfg, x, y, eps)
    return K1, K2


def kernel_resonant_limit(cfg: ResolventConfig, x, y, side):
    """K_2^+/-(x, y) = p.v. int chi(tau - lambda) a_{x,y}(tau)/(tau - lambda)
    d tau +- i pi a_{x,y}(lambda), via the sampled Fermi-surface density."""
    dens = cfg.density(x, y)
    return oscillatory.plemelj_limit(dens, cfg.lam, cfg.chi, side)


def kernel_resonant_eps(cfg: ResolventConfig, x, y, eps, side):
    """Regularized resonant kernel K_2^eps through the same coarea density
    (for eps-convergence studies against kernel_resonant_limit)."""
    dens = cfg.density(x, y)
    return oscillatory.plemelj_regularized(dens, cfg.lam, cfg.chi, eps, side)


@dataclass
class LimitValue:
    """K^+/- = K_1^0 + K_2^+/- together with the symmetrized K*."""

    x: np.ndarray
    y: np.ndarray
    side: int
    value: complex
    k1: complex
    k2: complex
    k_star: float
    tail: float


def kernel_limit(cfg: ResolventConfig, x, y, side, tail_fraction=None):
    """Limiting kernel K^side = K_1^0 + K_2^side and
    K* = Re(K^+ + K^-)/2 = Re(K_1^0 + p.v. part)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    K1, _ = kernel_split(cfg, x, y, 0.0)
    k2p = kernel_resonant_limit(cfg, x, y, +1)
    k2 = k2p if side > 0 else kernel_resonant_limit(cfg, x, y, -1)
    pv = k2p - 1j * np.pi * complex(cfg.density(x, y)(cfg.lam))
    k_star = float(np.real(K1 + pv))
    tail = _free_tail_estimate(cfg, x - y, 0.0)
    value = K1 + k2
    if tail_fraction is not None and tail > tail_fraction * abs(value):
        raise TailDominant("tail estimate %.3e vs |K| = %.3e"
                           % (tail, abs(value)))
    return LimitValue(x=x, y=y, side=int(np.sign(side)), value=value,
                      k1=K1, k2=k2, k_star=k_star, tail=tail)


def shell_restrict(value: KernelValue, j):
    """K^{., j}(x, y) = K(x, y) 1_{R_j}([x] - [y]) with the dyadic max-norm
    shells R_j; each lattice offset lands in exactly one shell."""
    m = np.floor(value.x).astype(int) - np.floor(value.y).astype(int)
    jm = oscillatory.shell_id(m)
    restricted = value.value if jm == j else 0.0j
    return KernelValue(x=value.x, y=value.y, value=restricted,
                       k1=value.k1 if jm == j else 0.0j,
                       k2=value.k2 if jm == j else 0.0j,
                       tail=value.tail, shell=j)


def decay_fit(cfg: ResolventConfig, side, sigma_list, v, y0=(0.25, 0.4)):
    """Fit |K_2^side(y0 + sigma v, y0)| ~ C sigma^slope over sigma_list;
    returns (slope, residual, values)."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    y0 = np.asarray(y0, dtype=float)
    sigma_list = np.asarray(sigma_list, dtype=float)
    vals = np.array([abs(kernel_resonant_limit(cfg, y0 + s * v, y0, side))
                     for s in sigma_list])
    X = np.stack([np.log(sigma_list), np.ones_like(sigma_list)], axis=1)
    coef, res, _, _ = np.linalg.lstsq(X, np.log(vals), rcond=None)
    resid = float(np.sqrt(np.mean((X @ coef - np.log(vals)) ** 2)))
    return float(coef[0]), resid, vals


# ---------------------------------------------------------------------------
# Floquet-Bloch transform of the shell-restricted resonant kernel
# ---------------------------------------------------------------------------

def _shell_lattice(j):
    r = 2 ** j
    lo = 1 if j == 0 else 2 ** (j - 1)
    ms = []
    hi = 1 if j == 0 else r
    for m1 in range(-hi, hi + 1):
        for m2 in range(-hi, hi + 1):
            n = max(abs(m1), abs(m2))
            if (j == 0 and n <= 1) or (j >= 1 and lo < n <= hi):
                ms.append((m1, m2))
    return np.asarray(ms, dtype=float)


def _tau_weight_integral(cfg, samples, eps, side):
    """int chi(tau - lambda) f(tau)/(tau - lambda - i side eps) d tau for f
    given by samples on cfg.tau_grid (cubic interpolation)."""
    sp_re = interpolate.CubicSpline(cfg.tau_grid, samples.real)
    sp_im = interpolate.CubicSpline(cfg.tau_grid, samples.imag)
    lam, chi = cfg.lam, cfg.chi

    def f(t):
        return ((sp_re(lam + t) + 1j * sp_im(lam + t)) * chi(t)
                / (t - 1j * side * eps))

    pts = sorted({min(eps, cfg.rho / 2), min(10 * eps, cfg.rho * 0.99)})
    re = integrate.quad(lambda t: f(t).real, -cfg.rho, cfg.rho,
                        points=[-p for p in pts] + pts, limit=400)[0]
    im = integrate.quad(lambda t: f(t).imag, -cfg.rho, cfg.rho,
                        points=[-p for p in pts] + pts, limit=400)[0]
    return re + 1j * im


def floquet_kernel_transform(cfg: ResolventConfig, j, x, y, l, eps,
                             method="coarea", n_curve=256):
    """Floquet-Bloch transform of the shell-restricted resonant kernel,
    U(K_2^{eps,j}(., y))(x, l) for x in the unit cell and l in the zone.

    method="coarea" evaluates
        int chi(tau - lambda)/(tau - lambda - i eps)
            (int_{F_tau} Psi(x,k) conj(Psi(y,k)) g_j(l - k)
             / (|B| |grad Lambda|) dH^1) d tau,
    method="direct" sums e^{i <m, l>} K_2^eps(x - m, y) over the shell R_j,
    each kernel value from its own density via the quasiperiodic phase
    Psi(x - m, k) = e^{-i <k, m>} Psi(x, k).
    """
    if eps == 0.0:
        raise EpsilonZero("shell transform needs eps != 0 (or take limits)")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    l = np.asarray(l, dtype=float)
    side = 1 if eps > 0 else -1
    eps = abs(eps)
    field = cfg.field

    if method == "coarea":
        vals = np.empty(cfg.n_tau, dtype=complex)
        for i, tau in enumerate(cfg.tau_grid):
            curve = cfg.curve(tau, n_curve)
            gn = np.linalg.norm(curve.grads, axis=1)
            base = (field.psi(x, curve.kappas) * np.conj(field.psi(y, curve.kappas))
                    / (_ZONE_VOLUME * gn))
            g = oscillatory.dirichlet_shell(l[None, :] - curve.kappas, j)
            vals[i] = curve.integrate(base * g)
        return _tau_weight_integral(cfg, vals, eps, side)

    if method == "direct":
        if j > 3:
            raise TailDominant(
                "direct lattice sum over shell %d: truncation tails of the "
                "per-point kernels dominate; use method='coarea'" % j)
        total = 0.0 + 0.0j
        for m in _shell_lattice(j):
            k2m = kernel_resonant_eps(cfg, x - m, y, eps, side)
            total += np.exp(1j * (m @ l)) * k2m
        return total

    raise ValueError("method must be 'coarea' or 'direct'")


def shell_growth_fit(cfg: ResolventConfig, triples, eps, j_list=range(1, 7)):
    """Fit log2 sup_{(x,y,l) in triples} |U(K_2^{eps,j})(x, l)| against j
    over j_list (coarea route, curve resolution scaled with the shell
    frequency); returns (exponent, sup values)."""
    j_list = list(j_list)
    vals = []
    for j in j_list:
        n = max(256, 64 * 2 ** j)
        vals.append(max(
            abs(floquet_kernel_transform(cfg, j, np.asarray(x, dtype=float),
                                         np.asarray(y, dtype=float),
                                         np.asarray(l, dtype=float), eps,
                                         method="coarea", n_curve=n))
            for x, y, l in triples))
    vals = np.asarray(vals)
    slope = np.polyfit(np.asarray(j_list, dtype=float), np.log2(vals), 1)[0]
    return float(slope), vals


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def kernel_scan_to_csv(values, path):
    """CSV rows x1,x2,y1,y2,re,im,re_K1,im_K1,re_K2,im_K2,err."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x1", "x2", "y1", "y2", "re", "im",
                     "re_K1", "im_K1", "re_K2", "im_K2", "err"])
        for v in values:
            wr.writerow(["%.12g" % t for t in (
                v.x[0], v.x[1], v.y[0], v.y[1], v.value.real, v.value.imag,
                v.k1.real, v.k1.imag, v.k2.real, v.k2.imag, v.tail)])
