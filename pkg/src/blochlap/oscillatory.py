"""Oscillatory-integral building blocks for the limiting-absorption kernels.

Contents:
  * smooth cutoff profiles and Plemelj-Sokhotski limits
        int chi(t) a(lam + t) / (t -+ i eps) dt
            ->  int chi(t) (a(lam+t) - a(lam)) / t dt  +- i pi a(lam),
    together with convergence-rate fits in eps,
  * the Fresnel-phase Fourier transform
        F(e^{i sigma <x, Ax>})(xi)
            = (2 sigma)^{-n/2} |det A|^{-1/2} e^{i pi sgn(A)/4}
              e^{-i <xi, A^{-1} xi> / (4 sigma)},
    (n the dimension of the form, F with the (2 pi)^{-n/2} convention) and
    the stationary-phase correction
        Xi(f) = int f e^{i sigma <x,Ax>} dx
                - f(0) (pi/sigma)^{n/2} |det A|^{-1/2} e^{i pi sgn(A)/4},
  * level-set oscillatory densities
        a_{x,y}(tau) = int_{F_tau} Psi(x,k) conj(Psi(y,k))
                       / (|B| |grad Lambda(k)|) dH^1(k)
    and their stationary-phase (farfield) leading term,
  * Dirichlet-kernel shell functions g_j on dyadic max-norm shells of Z^d,
  * a Hankel-function front end for the free Green-function oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, interpolate, optimize, special

from . import fermi
from .errors import (CurvatureVanishes, NoResonantPoint, OriginSingularity,
                     QuadratureNotConverged, SingularForm, WindowMismatch)

__all__ = [
    "CutoffChi",
    "SampledDensity",
    "QuadraticForm",
    "plemelj_limit",
    "plemelj_regularized",
    "plemelj_rate",
    "fresnel_ft",
    "fresnel_ft_quadrature",
    "oscillatory_integral",
    "xi_correction",
    "fermi_oscillatory",
    "farfield_leading",
    "resonant_points",
    "dirichlet_kernel",
    "dirichlet_shell",
    "shell_id",
    "shell_integral_bound",
    "hankel_h1",
]


# ---------------------------------------------------------------------------
# cutoff profiles
# ---------------------------------------------------------------------------

def _smooth_step(u):
    """C^infinity step: 0 for u <= 0, 1 for u >= 1, built from exp(-1/u)."""
    u = np.asarray(u, dtype=float)
    a = np.zeros_like(u)
    pos = u > 0
    a[pos] = np.exp(-1.0 / u[pos])
    b = np.zeros_like(u)
    neg = u < 1
    b[neg] = np.exp(-1.0 / (1.0 - u[neg]))
    return a / (a + b)


class CutoffChi:
    """Even smooth bump: chi = 1 on [-rho/2, rho/2], supp chi = [-rho, rho].

    Profile chi(t) = step((rho - |t|) / (rho/2)) with the exp(-1/u) smooth
    step, so chi is C^infinity, 0 <= chi <= 1.  profile="flat" degrades to
    the sharp indicator of [-rho, rho] (useful for closed-form checks).
    """

    def __init__(self, rho, profile="bump"):
        if rho <= 0:
            raise ValueError("rho must be positive")
        if profile not in ("bump", "flat"):
            raise ValueError("profile must be 'bump' or 'flat'")
        self.rho = float(rho)
        self.profile = profile

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.profile == "flat":
            return (np.abs(t) <= self.rho).astype(float)
        return _smooth_step((self.rho - np.abs(t)) / (self.rho / 2.0))


# ---------------------------------------------------------------------------
# sampled densities and Plemelj-Sokhotski limits
# ---------------------------------------------------------------------------

@dataclass
class SampledDensity:
    """Density a(tau) on a grid covering [lam - rho, lam + rho].

    When built from a callable the callable is kept and used directly in
    quadratures; otherwise values are interpolated with a cubic spline.
    """

    lam: float
    rho: float
    taus: np.ndarray
    values: np.ndarray
    fn: object = None

    @classmethod
    def from_callable(cls, fn, lam, rho, n=129):
        if n < 65:
            raise ValueError("need at least 65 samples")
        taus = lam + np.linspace(-rho, rho, n)
        return cls(lam=lam, rho=rho, taus=taus,
                   values=np.asarray(fn(taus), dtype=complex), fn=fn)

    @classmethod
    def from_samples(cls, taus, values, lam, rho):
        taus = np.asarray(taus, dtype=float)
        if len(taus) < 65:
            raise ValueError("need at least 65 samples")
        if taus[0] > lam - rho + 1e-12 or taus[-1] < lam + rho - 1e-12:
            raise WindowMismatch("samples do not cover [lam - rho, lam + rho]")
        return cls(lam=lam, rho=rho, taus=taus,
                   values=np.asarray(values, dtype=complex))

    def __call__(self, tau):
        if self.fn is not None:
            return np.asarray(self.fn(tau), dtype=complex)
        if not hasattr(self, "_spline"):
            self._spline = interpolate.CubicSpline(self.taus, self.values)
        return self._spline(tau)

    def holder_fit(self, t_min=None, t_max=None):
        """Fit |a(lam + t) - a(lam)| ~ coeff * |t|^beta from the samples;
        returns (beta, coeff)."""
        a0 = complex(self(self.lam))
        t = np.abs(self.taus - self.lam)
        diff = np.abs(self.values - a0)
        lo = t_min if t_min is not None else self.rho / len(self.taus)
        hi = t_max if t_max is not None else self.rho / 2.0
        mask = (t >= lo) & (t <= hi) & (diff > 0)
        if mask.sum() < 4:
            return 1.0, 0.0
        slope, icpt = np.polyfit(np.log(t[mask]), np.log(diff[mask]), 1)
        return float(min(slope, 1.0)), float(np.exp(icpt))


def _check_window(a: SampledDensity, lam, chi):
    if abs(a.lam - lam) > 1e-12:
        raise WindowMismatch("density sampled around a different frequency")
    if chi.rho > a.rho + 1e-12:
        raise WindowMismatch("cutoff support exceeds the sampled window")


def _quad_complex(f, lo, hi, points=None, limit=200):
    re = integrate.quad(lambda t: f(t).real, lo, hi, points=points,
                        limit=limit)[0]
    im = integrate.quad(lambda t: f(t).imag, lo, hi, points=points,
                        limit=limit)[0]
    return re + 1j * im


def plemelj_limit(a: SampledDensity, lam, chi: CutoffChi, side):
    """Two-sided Plemelj-Sokhotski limit of int chi(t) a(lam+t)/(t -+ i eps) dt
    as eps -> 0 with sign(eps) = side:

        limit = int chi(t) (a(lam+t) - a(lam)) / t dt  +  i pi side a(lam).

    The principal-value term uses that chi is even, so the a(lam)-multiple of
    p.v. int chi(t)/t dt vanishes identically.
    """
    _check_window(a, lam, chi)
    side = int(np.sign(side))
    if side == 0:
        raise ValueError("side must be +1 or -1")
    a0 = complex(a(lam))
    rho = chi.rho

    def folded(t):
        # (a(lam+t) - a0)/t + (a(lam-t) - a0)/(-t), integrated over t > 0
        return chi(t) * (complex(a(lam + t)) - complex(a(lam - t))) / t

    pv = _quad_complex(folded, 0.0, rho, points=[rho / 2.0])
    return pv + 1j * np.pi * side * a0


def plemelj_regularized(a: SampledDensity, lam, chi: CutoffChi, eps, side):
    """The regularized integral int chi(t) a(lam+t) / (t - i side eps) dt,
    eps > 0, split as a bounded difference term plus the closed-track
    arctangent term carrying a(lam)."""
    _check_window(a, lam, chi)
    if eps <= 0:
        raise ValueError("eps must be positive")
    side = int(np.sign(side))
    a0 = complex(a(lam))
    rho = chi.rho

    def folded(t):
        dp = complex(a(lam + t)) - a0
        dm = complex(a(lam - t)) - a0
        # (t + i side eps)/(t^2 + eps^2) against dp at +t and dm at -t
        return chi(t) * ((dp - dm) * t + 1j * side * eps * (dp + dm)) / (t * t + eps * eps)

    pts = sorted({min(eps, rho / 2), min(10 * eps, rho * 0.99)})
    diff = _quad_complex(folded, 0.0, rho, points=pts)

    # a0 * int chi(t) (t + i side eps)/(t^2+eps^2) dt: odd part vanishes,
    # substitute t = eps tan(u) in the even part.
    u_max = np.arctan(rho / eps)
    arc = integrate.quad(lambda u: chi(eps * np.tan(u)), -u_max, u_max,
                         limit=200)[0]
    return diff + 1j * side * a0 * arc


def plemelj_rate(a: SampledDensity, lam, chi: CutoffChi, eps_list, side=1):
    """Log-log fit of |regularized(eps) - limit| vs eps; returns
    (slope, errors)."""
    limit = plemelj_limit(a, lam, chi, side)
    eps_list = np.asarray(eps_list, dtype=float)
    errs = np.array([abs(plemelj_regularized(a, lam, chi, e, side) - limit)
                     for e in eps_list])
    mask = errs > 0
    slope = np.polyfit(np.log(eps_list[mask]), np.log(errs[mask]), 1)[0]
    return float(slope), errs


# ---------------------------------------------------------------------------
# Fresnel-phase Fourier transform and the stationary-phase correction
# ---------------------------------------------------------------------------

@dataclass
class QuadraticForm:
    """Symmetric invertible form <x, Ax> on R^n with its signature data."""

    matrix: np.ndarray
    signature: int
    det_abs: float

    @classmethod
    def from_matrix(cls, A, det_tol=1e-10):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if not np.allclose(A, A.T, atol=0):
            raise ValueError("form matrix must be exactly symmetric")
        w = np.linalg.eigvalsh(A)
        det_abs = float(np.prod(np.abs(w)))
        if det_abs <= det_tol or np.min(np.abs(w)) <= det_tol:
            raise SingularForm("quadratic form is numerically singular")
        sig = int(np.sum(w > 0) - np.sum(w < 0))
        return cls(matrix=A, signature=sig, det_abs=det_abs)

    @property
    def dim(self):
        return self.matrix.shape[0]


def fresnel_ft(form: QuadraticForm, sigma, xi=None):
    """Closed-form Fourier transform ((2 pi)^{-n/2} convention) of the
    Fresnel phase e^{i sigma <x, Ax>}:

        (2 sigma)^{-n/2} |det A|^{-1/2} e^{i pi sgn(A)/4}
        e^{-i <xi, A^{-1} xi>/(4 sigma)}.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    n = form.dim
    val = ((2.0 * sigma) ** (-n / 2.0) * form.det_abs ** -0.5
           * np.exp(1j * np.pi * form.signature / 4.0))
    if xi is not None:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        q = float(xi @ np.linalg.solve(form.matrix, xi))
        val *= np.exp(-1j * q / (4.0 * sigma))
    return complex(val)


def _gl_panels(lo, hi, sigma, order=10, panels_per_wave=8.0, min_panels=24):
    """Gauss-Legendre nodes/weights resolving the phase scale sigma: panel
    width at most (2 pi / sigma) / panels_per_wave."""
    width = (2 * np.pi / max(sigma, 1.0)) / panels_per_wave
    n_panel = max(min_panels, int(np.ceil((hi - lo) / width)))
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, n_panel + 1)
    h = (edges[1:] - edges[:-1]) / 2.0
    mid = (edges[1:] + edges[:-1]) / 2.0
    nodes = (mid[:, None] + h[:, None] * xg[None, :]).ravel()
    weights = (h[:, None] * wg[None, :]).ravel()
    return nodes, weights


def oscillatory_integral(f, lo, hi, sigma, order=16, panels_per_wave=8.0,
                         tol=1e-7):
    """int_lo^hi f(t) dt by phase-resolving Gauss-Legendre panels for an
    integrand oscillating on scale 1/sigma, with a doubling certificate."""
    nodes, weights = _gl_panels(lo, hi, sigma, order, panels_per_wave)
    val = np.sum(weights * f(nodes))
    nodes2, weights2 = _gl_panels(lo, hi, sigma, order, 2 * panels_per_wave)
    val2 = np.sum(weights2 * f(nodes2))
    if abs(val2 - val) > tol * max(1.0, abs(val2)):
        raise QuadratureNotConverged(
            "panel doubling changed the value by %.3e" % abs(val2 - val))
    return val2


def fresnel_ft_quadrature(form: QuadraticForm, sigma, xi=None, eta=1e-2,
                          order=10):
    """Independent check of fresnel_ft for diagonal A: damped truncated
    quadrature of (2 pi)^{-n/2} int e^{i sigma <x,Ax> - eta |x|^2 - i<x,xi>} dx
    with 3-point Richardson extrapolation eta -> 0.  Factorizes over axes."""
    A = form.matrix
    n = form.dim
    if not np.allclose(A, np.diag(np.diagonal(A))):
        raise ValueError("quadrature oracle only supports diagonal forms")
    if xi is None:
        xi = np.zeros(n)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))

    def damped(eta_v):
        total = 1.0 + 0.0j
        R = np.sqrt(40.0 / eta_v)
        for p in range(n):
            mu = A[p, p]
            freq = sigma * abs(mu) * 2 * R + abs(xi[p])

            def g(t, mu=mu, xp=xi[p]):
                return np.exp(1j * sigma * mu * t * t - eta_v * t * t
                              - 1j * xp * t)

            nodes, weights = _gl_panels(-R, R, freq, order)
            total *= np.sum(weights * g(nodes)) / np.sqrt(2 * np.pi)
        return total

    etas = np.array([eta, eta / 2.0, eta / 4.0])
    vals = np.array([damped(e) for e in etas])
    # quadratic extrapolation to eta = 0
    coef_re = np.polyfit(etas, vals.real, 2)
    coef_im = np.polyfit(etas, vals.imag, 2)
    return complex(np.polyval(coef_re, 0.0) + 1j * np.polyval(coef_im, 0.0))


def xi_correction(f, form: QuadraticForm, sigma, radius, order=16,
                  panels_per_wave=8.0):
    """Stationary-phase correction
        Xi(f) = int f(x) e^{i sigma <x, Ax>} dx
                - f(0) (pi/sigma)^{n/2} |det A|^{-1/2} e^{i pi sgn(A)/4}
    for f supported in the centered box of half-width `radius`.  The integral
    term uses phase-resolving panels with a doubling certificate."""
    n = form.dim
    A = form.matrix
    freq = sigma * float(np.max(np.abs(np.linalg.eigvalsh(A)))) * 2 * radius

    if n == 1:
        def g(t):
            return np.asarray(f(t), dtype=complex) * np.exp(1j * sigma * A[0, 0] * t * t)

        full = oscillatory_integral(g, -radius, radius, freq, order,
                                    panels_per_wave)
        f0 = complex(np.asarray(f(0.0), dtype=complex))
    elif n == 2:
        nodes, weights = _gl_panels(-radius, radius, freq, order,
                                    panels_per_wave)
        X, Y = np.meshgrid(nodes, nodes, indexing="ij")
        phase = A[0, 0] * X ** 2 + 2 * A[0, 1] * X * Y + A[1, 1] * Y ** 2
        vals = np.asarray(f(X, Y), dtype=complex) * np.exp(1j * sigma * phase)
        full = weights @ vals @ weights
        nodes2, weights2 = _gl_panels(-radius, radius, freq, order,
                                      2 * panels_per_wave)
        X2, Y2 = np.meshgrid(nodes2, nodes2, indexing="ij")
        phase2 = A[0, 0] * X2 ** 2 + 2 * A[0, 1] * X2 * Y2 + A[1, 1] * Y2 ** 2
        vals2 = np.asarray(f(X2, Y2), dtype=complex) * np.exp(1j * sigma * phase2)
        full2 = weights2 @ vals2 @ weights2
        if abs(full2 - full) > 1e-8 * max(1.0, abs(full2)):
            raise QuadratureNotConverged("2d panel doubling did not settle")
        full = full2
        f0 = complex(np.asarray(f(0.0, 0.0), dtype=complex))
    else:
        raise ValueError("xi_correction supports form dimensions 1 and 2")

    leading = (f0 * (np.pi / sigma) ** (n / 2.0) * form.det_abs ** -0.5
               * np.exp(1j * np.pi * form.signature / 4.0))
    return complex(full - leading)


# ---------------------------------------------------------------------------
# Fermi-surface oscillatory densities
# ---------------------------------------------------------------------------

_ZONE_VOLUME_2D = (2 * np.pi) ** 2


def fermi_oscillatory(field, x, y, tau, n0=64, tol=1e-6, abs_tol=1e-10,
                      center=(0.0, 0.0), max_n=4096, trace=None):
    """a_{x,y}(tau) = int_{F_tau} Psi(x,k) conj(Psi(y,k))
    / (|B| |grad Lambda(k)|) dH^1(k) over the star-shaped component of F_tau,
    by periodic-trapezoid quadrature in angle with doubling until the change
    is below tol * |a| (or abs_tol).  `trace(tau, n)` may supply (cached)
    StarCurve geometry in place of fermi.radial_trace."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if trace is None:
        trace = lambda t, m: fermi.radial_trace(field, t, n=m, center=center)
    prev = None
    n = n0
    while n <= max_n:
        curve = trace(tau, n)
        gn = np.linalg.norm(curve.grads, axis=1)
        px = field.psi(x, curve.kappas)
        py = field.psi(y, curve.kappas)
        dens = px * np.conj(py) / (_ZONE_VOLUME_2D * gn)
        val = complex(curve.integrate(dens))
        if prev is not None and abs(val - prev) <= max(tol * abs(val), abs_tol):
            return val
        prev = val
        n *= 2
    raise QuadratureNotConverged("angular doubling did not settle a_{x,y}")


def resonant_points(field, lam, v, n_scan=256, center=(0.0, 0.0), tol=1e-12):
    """Points on the star-shaped component of F_lam whose outward unit normal
    equals +v or -v; returns a list of (kappa, sign).  Found by sign changes
    of the cross product normal x v in angle, refined by bisection."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    center = np.asarray(center, dtype=float)
    curve = fermi.radial_trace(field, lam, n=n_scan, center=center)
    rmax = 2.0 * float(np.max(curve.radii))

    def normal_at(theta):
        e = np.array([np.cos(theta), np.sin(theta)])

        def f(r):
            return float(field.lam((center + r * e)[None, :])[0] - lam)

        r = optimize.brentq(f, 1e-9, rmax, xtol=1e-14)
        kap = center + r * e
        g = field.grad(kap[None, :])[0]
        return kap, g / np.linalg.norm(g)

    cross = curve.normals[:, 0] * v[1] - curve.normals[:, 1] * v[0]
    out = []
    n = n_scan
    for i in range(n):
        j = (i + 1) % n
        if cross[i] == 0.0:
            sgn = 1 if curve.normals[i] @ v > 0 else -1
            out.append((curve.kappas[i].copy(), sgn))
            continue
        if cross[i] * cross[j] >= 0:
            continue
        lo = curve.theta[i]
        hi = curve.theta[j] if j != 0 else 2 * np.pi
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            kap, nu = normal_at(mid)
            c = nu[0] * v[1] - nu[1] * v[0]
            if cross[i] * c > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo < tol:
                break
        kap, nu = normal_at(0.5 * (lo + hi))
        sgn = 1 if nu @ v > 0 else -1
        out.append((kap, sgn))
    if not any(s > 0 for _, s in out) or not any(s < 0 for _, s in out):
        raise NoResonantPoint("normal never aligns with the requested direction")
    return out


def farfield_leading(field, lam, x, y, min_curvature=1e-6, **kw):
    """Stationary-phase leading term of a_{x,y}(lam) for |x - y| large:

        (2 pi / sigma)^{1/2} sum over resonant points k* of
        e^{-i sgn pi/4} Psi(x,k*) conj(Psi(y,k*))
        / (|B| |grad Lambda(k*)|) * curvature(k*)^{-1/2},

    where sigma = |x - y|, sgn = +1 at the point with outward normal
    +(x-y)/sigma and -1 at the antipodal point (the d = 2 convex case, where
    the Morse signature is d - 1 = 1)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma = float(np.linalg.norm(x - y))
    if sigma < 1.0:
        raise ValueError("farfield expansion needs |x - y| >= 1")
    v = (x - y) / sigma
    total = 0.0 + 0.0j
    for kap, sgn in resonant_points(field, lam, v, **kw):
        g = field.grad(kap[None, :])[0]
        gn = float(np.linalg.norm(g))
        H = field.hess(kap[None, :])[0]
        curv = float((H[0, 0] * g[1] ** 2 - 2 * H[0, 1] * g[0] * g[1]
                      + H[1, 1] * g[0] ** 2) / gn ** 3)
        if curv < min_curvature:
            raise CurvatureVanishes("curvature %.3e at a resonant point" % curv)
        px = complex(field.psi(x, kap[None, :])[0])
        py = complex(field.psi(y, kap[None, :])[0])
        total += (np.exp(-1j * sgn * np.pi / 4.0) * px * np.conj(py)
                  / (_ZONE_VOLUME_2D * gn) / np.sqrt(curv))
    return complex(np.sqrt(2 * np.pi / sigma) * total)


# ---------------------------------------------------------------------------
# Dirichlet shells
# ---------------------------------------------------------------------------

def dirichlet_kernel(z, N):
    """D_N(z) = sin((N + 1/2) z)/sin(z/2) = sum_{|n| <= N} e^{i n z}, with the
    removable value 2N + 1 evaluated by the direct sum near z in 2 pi Z."""
    z = np.asarray(z, dtype=float)
    s = np.sin(z / 2.0)
    out = np.empty_like(z)
    safe = np.abs(s) >= 1e-8
    out[safe] = np.sin((N + 0.5) * z[safe]) / s[safe]
    if np.any(~safe):
        zs = z[~safe]
        acc = np.ones_like(zs)
        for m in range(1, N + 1):
            acc += 2.0 * np.cos(m * zs)
        out[~safe] = acc
    return out


def shell_id(m):
    """Dyadic max-norm shell index of a lattice vector: 0 for ||m||_inf <= 1,
    else the j >= 1 with 2^{j-1} < ||m||_inf <= 2^j.  The shells partition
    Z^d and match the dirichlet_shell sums."""
    m = np.atleast_2d(np.asarray(m))
    r = np.max(np.abs(m), axis=1)
    out = np.zeros(r.shape, dtype=int)
    pos = r > 1
    out[pos] = np.ceil(np.log2(r[pos])).astype(int)
    return out if len(out) > 1 else int(out[0])


def dirichlet_shell(xi, j):
    """g_j(xi) = prod_p D_{2^j}(xi_p) - prod_p D_{2^{j-1}}(xi_p), j >= 1: the
    lattice exponential sum sum_m e^{i <m, xi>} over the dyadic max-norm shell
    {m in Z^d : 2^{j-1} < max|m_p| <= 2^j}.  j = 0 gives the inner block
    ||m||_inf <= 1, i.e. prod_p D_1(xi_p)."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if j == 0:
        return np.prod(np.stack([dirichlet_kernel(xi[:, p], 1)
                                 for p in range(xi.shape[1])]), axis=0)
    big = np.prod(np.stack([dirichlet_kernel(xi[:, p], 2 ** j)
                            for p in range(xi.shape[1])]), axis=0)
    small = np.prod(np.stack([dirichlet_kernel(xi[:, p], 2 ** (j - 1))
                              for p in range(xi.shape[1])]), axis=0)
    return big - small


def shell_integral_bound(j_list, lo, hi, s, delta, n_base=800):
    """Fit the growth exponent of I_j = int_lo^hi |g_j(xi', s)| d xi' (d = 2,
    so xi = (xi', s)) against 2^j; returns (exponent, I_j values, ok) with
    ok = exponent <= 1 + delta + 0.1."""
    j_list = list(j_list)
    vals = []
    for j in j_list:
        n = n_base * 2 ** max(0, j - 3)
        t = np.linspace(lo, hi, n + 1)
        pts = np.stack([t, np.full_like(t, s)], axis=1)
        g = np.abs(dirichlet_shell(pts, j))
        vals.append(float(np.trapezoid(g, t)))
    vals = np.array(vals)
    slope = np.polyfit(np.array(j_list, dtype=float), np.log2(vals), 1)[0]
    return float(slope), vals, bool(slope <= 1.0 + delta + 0.1)


# ---------------------------------------------------------------------------
# Hankel front end
# ---------------------------------------------------------------------------

def hankel_h1(nu, z):
    """Hankel function of the first kind H^(1)_nu(z), principal branch."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise OriginSingularity("H^(1) diverges at the origin")
    out = special.hankel1(nu, z)
    if out.ndim == 0:
        return complex(out)
    return out
