"""One-dimensional periodic Schroedinger operators with piecewise-constant cells.

The operator is -u'' + V(x) u on the real line with V periodic of period 1.
Everything is driven by the 2x2 transfer (monodromy) matrix over one period,
assembled exactly from closed-form cell propagators, and by its trace, the
discriminant D(E).  Dispersion: D(E_l(k)) = 2 cos k.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    BandEdgeSingularity,
    BandNotResolved,
    DegenerateEdge,
    OutOfBand,
)

__all__ = [
    "Potential1D",
    "monodromy",
    "discriminant",
    "band_edges",
    "band_function",
    "band_derivatives",
    "inverse_band",
    "bloch_eigenfunction",
    "bloch_wave",
    "HillSolver",
]


@dataclass(frozen=True)
class Potential1D:
    """Periodic potential of period 1, stored as piecewise-constant cells.

    cells: tuple of (length, value); lengths sum to 1.
    """

    cells: tuple

    def __post_init__(self):
        total = sum(h for h, _ in self.cells)
        if abs(total - 1.0) > 1e-12:
            raise ValueError("cell lengths must sum to 1, got %r" % total)

    @classmethod
    def constant(cls, mu):
        return cls(cells=((1.0, float(mu)),))

    @classmethod
    def from_cells(cls, cells):
        return cls(cells=tuple((float(h), float(v)) for h, v in cells))

    @classmethod
    def from_samples(cls, samples):
        """Samples on a uniform grid over one period become equal cells."""
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        return cls(cells=tuple((1.0 / n, float(v)) for v in samples))

    @classmethod
    def from_function(cls, f, n=64):
        """Midpoint-sample a callable into n equal piecewise-constant cells."""
        x = (np.arange(n) + 0.5) / n
        return cls.from_samples([f(xi) for xi in x])

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        if "cells" in obj:
            return cls.from_cells(obj["cells"])
        if "samples" in obj:
            return cls.from_samples(obj["samples"])
        raise ValueError("potential JSON needs 'cells' or 'samples'")

    def to_json(self):
        return {"cells": [[h, v] for h, v in self.cells]}

    @property
    def min_value(self):
        return min(v for _, v in self.cells)

    @property
    def mean_value(self):
        return sum(h * v for h, v in self.cells)


def _cell_entries(E, h, v):
    """Closed-form propagator entries over one cell, vectorized in E.

    Returns (c, s) with the cell matrix [[c, s], [-(E-v)*s, c]] where
    c = cos(omega h), s = sin(omega h)/omega, omega = sqrt(E - v)
    (imaginary omega handled through complex trig; results are real).
    """
    E = np.asarray(E, dtype=float)
    omega = np.sqrt(E - v + 0j)
    oh = omega * h
    c = np.cos(oh).real
    small = np.abs(oh) < 1e-6
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(small, h * (1.0 - oh * oh / 6.0), np.sin(oh) / np.where(omega == 0, 1, omega)).real
    return c, s


def monodromy(pot, E):
    """Transfer matrix over one period at energy E (scalar or array).

    Returns an array of shape E.shape + (2, 2); det = 1 exactly up to rounding.
    """
    E = np.asarray(E, dtype=float)
    a = np.ones_like(E)
    b = np.zeros_like(E)
    c = np.zeros_like(E)
    d = np.ones_like(E)
    for h, v in pot.cells:
        mc, ms = _cell_entries(E, h, v)
        mcp = -(E - v) * ms
        a, b, c, d = mc * a + ms * c, mc * b + ms * d, mcp * a + mc * c, mcp * b + mc * d
    M = np.empty(E.shape + (2, 2))
    M[..., 0, 0] = a
    M[..., 0, 1] = b
    M[..., 1, 0] = c
    M[..., 1, 1] = d
    return M


def discriminant(pot, E):
    """Hill discriminant D(E) = tr M(E)."""
    M = monodromy(pot, E)
    return M[..., 0, 0] + M[..., 1, 1]


def _discriminant_derivs(pot, E):
    """D'(E), D''(E) by fourth-order central differences (D is entire in E)."""
    E = np.asarray(E, dtype=float)
    h = 1e-4 * (1.0 + np.sqrt(np.abs(E)))
    Dm2 = discriminant(pot, E - 2 * h)
    Dm1 = discriminant(pot, E - h)
    D0 = discriminant(pot, E)
    Dp1 = discriminant(pot, E + h)
    Dp2 = discriminant(pot, E + 2 * h)
    d1 = (-Dp2 + 8 * Dp1 - 8 * Dm1 + Dm2) / (12 * h)
    d2 = (-Dp2 + 16 * Dp1 - 30 * D0 + 16 * Dm1 - Dm2) / (12 * h * h)
    return d1, d2


def band_edges(pot, n_bands, scan_step=0.02, tangent_tol=1e-9):
    """Edges E_l(0), E_l(pi) for l = 1..n_bands.

    Roots of D = +2 are the periodic eigenvalues (k=0 edges), roots of
    D = -2 the antiperiodic ones (k=pi edges):
        E_1(0) < E_1(pi) <= E_2(pi) < E_2(0) <= E_3(0) < ...
    Tangent roots (closed gaps) are counted twice.  Returns (at0, atpi) arrays.
    """
    E_hi = pot.mean_value + (n_bands + 1.5) ** 2 * np.pi**2
    E_lo = pot.min_value - 1.0
    # grid fine enough to see gaps; widen near-degenerate detection below
    n_grid = int((E_hi - E_lo) / scan_step) + 2
    grid = np.linspace(E_lo, E_hi, n_grid)
    D = discriminant(pot, grid)

    def roots_of(target, sign):
        """Roots of D - target; tangencies approached from side `sign`."""
        f = D - target
        roots = []
        cross = np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]
        for i in cross:
            roots.append(brentq(lambda E: discriminant(pot, E) - target,
                                grid[i], grid[i + 1], xtol=1e-13, rtol=8.9e-16))
        # tangencies: local extremum of f on the `sign` side touching zero
        g = sign * f
        idx = np.nonzero((g[1:-1] < g[:-2]) & (g[1:-1] < g[2:]) & (g[1:-1] < 0.5))[0] + 1
        for i in idx:
            if np.sign(f[i - 1]) * np.sign(f[i + 1]) < 0:
                continue  # already caught as a crossing pair
            res = minimize_scalar(
                lambda E: (discriminant(pot, E) - target) ** 2,
                bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                options={"xatol": 1e-13})
            if res.fun < tangent_tol**2:
                # polish the double root: D' vanishes at the tangency and
                # changes sign there, so root-find it for full accuracy
                root = res.x
                lo_b, hi_b = grid[i - 1], grid[i + 1]
                dlo = _discriminant_derivs(pot, lo_b)[0]
                dhi = _discriminant_derivs(pot, hi_b)[0]
                if dlo * dhi < 0:
                    root = brentq(lambda E: _discriminant_derivs(pot, E)[0],
                                  lo_b, hi_b, xtol=1e-13, rtol=8.9e-16)
                roots.extend([root, root])
        return sorted(roots)

    r_per = roots_of(2.0, -1.0)   # D-2 <= 0 inside bands: maxima touch from below
    r_anti = roots_of(-2.0, 1.0)  # D+2 >= 0 inside bands: minima touch from above
    if len(r_per) < n_bands or len(r_anti) < n_bands:
        raise BandNotResolved(
            "found %d periodic / %d antiperiodic eigenvalues below E=%g, need %d"
            % (len(r_per), len(r_anti), E_hi, n_bands))
    return np.array(r_per[:n_bands]), np.array(r_anti[:n_bands])


class HillSolver:
    """Caches band edges and gives vectorized band-function evaluation."""

    def __init__(self, pot, n_bands=8):
        self.pot = pot
        self.at0, self.atpi = band_edges(pot, n_bands)
        self.n_bands = n_bands

    def _ensure(self, l):
        if l > self.n_bands:
            n = max(l, 2 * self.n_bands)
            self.at0, self.atpi = band_edges(self.pot, n)
            self.n_bands = n

    def band_interval(self, l):
        self._ensure(l)
        a, b = self.at0[l - 1], self.atpi[l - 1]
        return (a, b) if a <= b else (b, a)

    def band(self, l, k):
        """E_l(k), vectorized over k.  Even and 2pi-periodic in k."""
        self._ensure(l)
        k = np.asarray(k, dtype=float)
        kr = np.abs((k + np.pi) % (2 * np.pi) - np.pi)
        target = 2.0 * np.cos(kr)
        lo, hi = self.band_interval(l)
        if hi - lo < 1e-13:
            return np.full_like(kr, lo)  # collapsed band (theoretical only)
        a = np.full(kr.shape, lo)
        b = np.full(kr.shape, hi)
        fa = discriminant(self.pot, a) - target
        # the low edge carries D = +2 (odd bands) or -2 (even bands), so the
        # sign of fa is known analytically; computed values drown in rounding
        # when k is within ~1e-8 of a band edge
        fa = np.abs(fa) if l % 2 == 1 else -np.abs(fa)
        # bisection on D(E) - 2 cos k, monotone across each band
        for _ in range(62):
            m = 0.5 * (a + b)
            fm = discriminant(self.pot, m) - target
            left = fa * fm <= 0
            b = np.where(left, m, b)
            a = np.where(left, a, m)
            fa = np.where(left, fa, fm)
        E = 0.5 * (a + b)
        # exact edges at the zone center/boundary (bisection loses digits on
        # the double roots of D -+ 2 when the adjacent gap is closed)
        E = np.where(kr < 1e-12, self.at0[l - 1], E)
        E = np.where(np.abs(kr - np.pi) < 1e-12, self.atpi[l - 1], E)
        return E if E.shape else float(E)

    def band_derivs(self, l, k):
        """(E, E', E'') for band l at k, via implicit differentiation of
        D(E(k)) = 2 cos k."""
        k = np.asarray(k, dtype=float)
        kr = (k + np.pi) % (2 * np.pi) - np.pi
        E = np.asarray(self.band(l, kr))
        d1, d2 = _discriminant_derivs(self.pot, E)
        if np.any(np.abs(d1) < 1e-10):
            raise BandEdgeSingularity(
                "D'(E) ~ 0 on band %d; dispersion not invertible there" % l)
        Ep = -2.0 * np.sin(np.abs(kr)) / d1
        Epp = (-2.0 * np.cos(kr) - d2 * Ep**2) / d1
        Ep = Ep * np.sign(kr)  # odd in k
        if not k.shape:
            return float(E), float(Ep), float(Epp)
        return E, Ep, Epp

    def extended(self, kappa):
        """Extended-zone band function: Lambda(kappa) with Lambda = kappa^2
        for V = 0.  Band l = floor(|kappa|/pi) + 1, vectorized."""
        kappa = np.asarray(kappa, dtype=float)
        u = np.abs(kappa)
        l = np.minimum(np.floor(u / np.pi).astype(int) + 1, 10**6)
        out = np.empty(u.shape)
        for li in np.unique(l):
            sel = l == li
            kr = u[sel] - (li - 1) * np.pi if li % 2 == 1 else li * np.pi - u[sel]
            out[sel] = self.band(li, kr)
        return out if out.shape else float(out)

    def extended_derivs(self, kappa):
        """(Lambda, dLambda/dkappa, d2Lambda/dkappa2) in the extended zone."""
        kappa = np.asarray(kappa, dtype=float)
        u = np.abs(kappa)
        l = np.floor(u / np.pi).astype(int) + 1
        lam = np.empty(u.shape)
        d1 = np.empty(u.shape)
        d2 = np.empty(u.shape)
        for li in np.unique(l):
            sel = l == li
            sgn = 1.0 if li % 2 == 1 else -1.0  # dk_red/d|kappa|
            kr = u[sel] - (li - 1) * np.pi if li % 2 == 1 else li * np.pi - u[sel]
            E, Ep, Epp = self.band_derivs(li, kr)
            lam[sel] = E
            d1[sel] = sgn * Ep
            d2[sel] = Epp
        d1 = d1 * np.sign(kappa)  # Lambda is even in kappa
        if not kappa.shape:
            return float(lam), float(d1), float(d2)
        return lam, d1, d2

    def inverse_first_band(self, E):
        """Z(E): the inverse of E_1 on [0, pi), from k = arccos(D(E)/2)."""
        self._ensure(1)
        E = np.asarray(E, dtype=float)
        lo, hi = self.band_interval(1)
        if np.any(E < lo - 1e-10) or np.any(E >= hi + 1e-10):
            raise OutOfBand("energy outside first band [%g, %g)" % (lo, hi))
        D = discriminant(self.pot, E)
        k = np.arccos(np.clip(D / 2.0, -1.0, 1.0))
        return k if k.shape else float(k)


def band_function(pot, l, k, solver=None):
    """E_l(k) for the 1-band dispersion D(E_l(k)) = 2 cos k."""
    solver = solver or HillSolver(pot, n_bands=max(l, 4))
    return solver.band(l, k)


def band_derivatives(pot, l, k, solver=None):
    """(E, dE/dk, d2E/dk2) on band l."""
    solver = solver or HillSolver(pot, n_bands=max(l, 4))
    return solver.band_derivs(l, k)


def inverse_band(pot, E, solver=None):
    """Inverse of the first band function on [E_1(0), E_1(pi))."""
    solver = solver or HillSolver(pot, n_bands=4)
    return solver.inverse_first_band(E)


def _propagate(pot, E, state, x):
    """Propagate (u, u') from 0 to x in [0, 1], exactly per cell.

    E: (n,) array; state: (2, n) complex; x: scalar in [0, 1].
    """
    E = np.asarray(E, dtype=float)
    u, up = state
    pos = 0.0
    for h, v in pot.cells:
        step = min(h, max(0.0, x - pos))
        if step > 0:
            c, s = _cell_entries(E, step, v)
            u, up = c * u + s * up, -(E - v) * s * u + c * up
        pos += h
        if pos >= x - 1e-15:
            break
    return u, up


def _bloch_state(pot, E, k):
    """Eigenvector (u(0), u'(0)) of the monodromy matrix for e^{ik}.

    Vectorized over arrays E, k (same shape).  k >= 0 expected.
    """
    M = monodromy(pot, E)
    mu = np.exp(1j * k)
    v1 = np.stack([M[..., 0, 1], mu - M[..., 0, 0]])
    v2 = np.stack([mu - M[..., 1, 1], M[..., 1, 0]])
    n1 = np.abs(v1).sum(axis=0)
    n2 = np.abs(v2).sum(axis=0)
    v = np.where(n1 >= n2, v1, v2)
    scale = np.maximum(np.abs(v).max(axis=0), 1e-300)
    return v / scale


def _norm_factor(pot, E, k, n_quad=256):
    """L^2(0,1) norm of the un-normalized Bloch state, Simpson on n_quad+1 pts."""
    E = np.asarray(E, dtype=float)
    xs = np.linspace(0.0, 1.0, n_quad + 1)
    state = _bloch_state(pot, E, k)
    vals = np.empty((n_quad + 1,) + E.shape)
    u, up = state
    pos = 0.0
    ci = 0
    cell_end = pot.cells[0][0]
    for j, x in enumerate(xs):
        while x > cell_end + 1e-15 and ci + 1 < len(pot.cells):
            h, v = pot.cells[ci]
            c, s = _cell_entries(E, cell_end - pos, v)
            u, up = c * u + s * up, -(E - v) * s * u + c * up
            pos = cell_end
            ci += 1
            cell_end += pot.cells[ci][0]
        h, v = pot.cells[ci]
        c, s = _cell_entries(E, x - pos, v)
        vals[j] = np.abs(c * u + s * up) ** 2
    w = np.ones(n_quad + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w /= 3.0 * n_quad
    return np.sqrt(np.tensordot(w, vals, axes=(0, 0)))


class BlochWaveBatch:
    """Normalized Bloch waves for a fixed band and a fixed array of momenta,
    evaluated at many positions without re-solving the band problem."""

    def __init__(self, pot, l, k, solver=None, n_quad=256):
        self.pot = pot
        solver = solver or HillSolver(pot, n_bands=max(l, 4))
        k = np.atleast_1d(np.asarray(k, dtype=float))
        self.kr = (k + np.pi) % (2 * np.pi) - np.pi
        self.ka = np.abs(self.kr)
        self.E = np.asarray(solver.band(l, self.ka))
        state = _bloch_state(pot, self.E, self.ka)
        u0, up0 = state
        ref = np.where(np.abs(u0) > 1e-9 * np.abs(up0), u0, up0)
        phase = ref / np.maximum(np.abs(ref), 1e-300)
        state = state * np.conj(phase)
        self.state = state / _norm_factor(pot, self.E, self.ka, n_quad=n_quad)

    def at(self, x):
        """phi(x) for scalar x, vectorized over the momentum array."""
        xf = np.floor(x)
        u, _ = _propagate(self.pot, self.E, self.state, float(x - xf))
        u = u * np.exp(1j * self.ka * xf)
        return np.where(self.kr < 0, np.conj(u), u)


def bloch_wave(pot, l, k, x, solver=None, n_quad=256):
    """Bloch eigenfunction phi_l(x, k), normalized to ||phi||_{L^2(0,1)} = 1.

    Quasiperiodic: phi(x + n, k) = e^{ikn} phi(x, k).  Vectorized over k
    (array); x scalar.  phi(0) is made real nonnegative (phase convention);
    for k < 0 the complex conjugate of the k > 0 wave is returned, which
    matches E_l(-k) = E_l(k).
    """
    batch = BlochWaveBatch(pot, l, k, solver=solver, n_quad=n_quad)
    u = batch.at(x)
    return u if np.asarray(k).shape else complex(u[0])


def bloch_eigenfunction(pot, l, k, n_samples=256, solver=None):
    """Samples of the normalized Bloch wave on x = linspace(0, 1, n_samples+1)."""
    solver = solver or HillSolver(pot, n_bands=max(l, 4))
    k = float(k)
    kr = (k + np.pi) % (2 * np.pi) - np.pi
    ka = abs(kr)
    E = np.asarray([solver.band(l, ka)])
    xs = np.linspace(0.0, 1.0, n_samples + 1)
    state = _bloch_state(pot, E, np.asarray([ka]))
    u, up = state
    vals = np.empty(n_samples + 1, dtype=complex)
    pos = 0.0
    ci = 0
    cell_end = pot.cells[0][0]
    for j, x in enumerate(xs):
        while x > cell_end + 1e-15 and ci + 1 < len(pot.cells):
            h, v = pot.cells[ci]
            c, s = _cell_entries(E, cell_end - pos, v)
            u, up = c * u + s * up, -(E - v) * s * u + c * up
            pos = cell_end
            ci += 1
            cell_end += pot.cells[ci][0]
        h, v = pot.cells[ci]
        c, s = _cell_entries(E, x - pos, v)
        vals[j] = (c * u + s * up)[0]
    w = np.ones(n_samples + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w /= 3.0 * n_samples
    vals /= np.sqrt(np.dot(w, np.abs(vals) ** 2))
    ref = vals[0] if abs(vals[0]) > 1e-9 else (vals[1] - vals[0])
    if abs(ref) > 0:
        vals *= np.conj(ref) / abs(ref)
    if kr < 0:
        vals = np.conj(vals)
    return xs, vals


def degenerate_edge_check(pot, l, solver=None):
    """Raise DegenerateEdge if band l touches a neighbour at k = 0 or pi."""
    solver = solver or HillSolver(pot, n_bands=l + 1)
    for other in (l - 1, l + 1):
        if other < 1 or other > solver.n_bands:
            continue
        for arr in (solver.at0, solver.atpi):
            if abs(arr[l - 1] - arr[other - 1]) < 1e-9:
                raise DegenerateEdge("bands %d and %d touch" % (l, other))
