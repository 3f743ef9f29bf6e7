"""Plane-wave discretization of -Laplace + V on the torus, Bloch families,
and extended-zone band functions.

For quasimomentum k in B = [-pi, pi]^d the Bloch eigenvalue problem is solved
in the Fourier basis e^{i(k + 2 pi s) x}, s in the truncation box ||s||_inf <= S:

    H(k)_{s s'} = |k + 2 pi s|^2 delta_{s s'} + Vhat(s - s').

Eigenbranches are mapped to the extended zone by the dominant-coefficient
labeling: the pair labeled s is the one whose eigenvector concentrates on the
s-th plane wave, and Lambda(k + 2 pi s) := lambda_s(k), Psi(x, k + 2 pi s) :=
psi_s(x, k).  For V = 0 this gives Lambda(kappa) = |kappa|^2 exactly.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (AmbiguousLabeling, BandEdgeSingularity,
                     TruncationNotConverged)
from .hill1d import BlochWaveBatch, HillSolver, Potential1D, bloch_wave

__all__ = [
    "PotentialSpec",
    "box_indices",
    "fourier_coefficients_1d",
    "assemble",
    "eigensolve",
    "label_extended_zone",
    "wrap_to_zone",
    "FourierField",
    "SeparableField",
    "make_field",
    "growth_bounds_check",
    "a3_check",
    "truncation_check",
]


def fourier_coefficients_1d(pot: Potential1D, n_max: int) -> dict:
    """Fourier coefficients Vhat(n) = int_0^1 V(x) e^{-2 pi i n x} dx for a
    piecewise-constant potential, exactly."""
    out = {}
    bounds = np.concatenate([[0.0], np.cumsum([h for h, _ in pot.cells])])
    vals = np.array([v for _, v in pot.cells])
    for n in range(-n_max, n_max + 1):
        if n == 0:
            out[0] = complex(pot.mean_value)
            continue
        w = -2j * np.pi * n
        seg = (np.exp(w * bounds[1:]) - np.exp(w * bounds[:-1])) / w
        out[n] = complex(np.dot(vals, seg))
    return out


@dataclass(frozen=True)
class PotentialSpec:
    """Periodic potential on the unit torus in d dimensions.

    mode "fourier":   coeffs maps integer tuples to complex coefficients;
                      hermitian symmetry Vhat(-n) = conj(Vhat(n)) is required
                      for a real potential.
    mode "separable": parts is a tuple of d Potential1D, V(x) = sum V_i(x_i).
    """

    d: int
    mode: str
    coeffs: tuple = ()       # ((n_tuple, complex), ...)
    parts: tuple = ()

    @classmethod
    def from_fourier(cls, d, coeffs: dict):
        items = tuple(sorted((tuple(int(i) for i in n), complex(c))
                             for n, c in coeffs.items()))
        return cls(d=d, mode="fourier", coeffs=items)

    @classmethod
    def from_separable(cls, parts):
        return cls(d=len(parts), mode="separable", parts=tuple(parts))

    @classmethod
    def free(cls, d):
        return cls.from_fourier(d, {})

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        d = int(obj["d"])
        if obj["mode"] == "fourier":
            coeffs = {}
            for row in obj.get("coeffs", []):
                *n, re, im = row
                coeffs[tuple(int(i) for i in n)] = re + 1j * im
            return cls.from_fourier(d, coeffs)
        if obj["mode"] == "separable":
            return cls.from_separable([Potential1D.from_json(p) for p in obj["parts"]])
        raise ValueError("unknown potential mode %r" % obj["mode"])

    def to_json(self):
        if self.mode == "fourier":
            return {"d": self.d, "mode": "fourier",
                    "coeffs": [[*n, c.real, c.imag] for n, c in self.coeffs]}
        return {"d": self.d, "mode": "separable",
                "parts": [p.to_json() for p in self.parts]}

    def coeff_dict(self, n_max=None):
        """Fourier coefficients as a dict of integer tuples."""
        if self.mode == "fourier":
            return dict(self.coeffs)
        n_max = n_max if n_max is not None else 64
        out = {}
        for axis, p in enumerate(self.parts):
            c1 = fourier_coefficients_1d(p, n_max)
            for n, c in c1.items():
                key = tuple(n if a == axis else 0 for a in range(self.d))
                out[key] = out.get(key, 0.0) + c
        return out


def box_indices(S: int, d: int) -> np.ndarray:
    """All integer vectors with ||s||_inf <= S, shape ((2S+1)^d, d)."""
    ranges = [range(-S, S + 1)] * d
    return np.array(list(itertools.product(*ranges)), dtype=int)


def wrap_to_zone(kappa):
    """Split extended momentum kappa = k + 2 pi s with k in [-pi, pi)^d."""
    kappa = np.asarray(kappa, dtype=float)
    s = np.round(kappa / (2 * np.pi)).astype(int)
    k = kappa - 2 * np.pi * s
    adjust = k >= np.pi - 1e-15  # half-open convention at the zone edge
    s = s + adjust.astype(int)
    k = kappa - 2 * np.pi * s
    return k, s


def assemble(pot: PotentialSpec, k, S: int):
    """Plane-wave matrix H(k) on the box ||s||_inf <= S.  Hermitian."""
    idx = box_indices(S, pot.d)
    k = np.asarray(k, dtype=float)
    kin = ((k[None, :] + 2 * np.pi * idx) ** 2).sum(axis=1)
    n = idx.shape[0]
    H = np.zeros((n, n), dtype=complex)
    coeffs = pot.coeff_dict(n_max=2 * S)
    diff = idx[:, None, :] - idx[None, :, :]
    for nvec, c in coeffs.items():
        if abs(c) < 1e-300:
            continue
        mask = np.all(diff == np.asarray(nvec), axis=2)
        H[mask] += c
    H[np.arange(n), np.arange(n)] += kin
    return H, idx


def eigensolve(H):
    """Eigenpairs of a Hermitian matrix, ascending.  Thin wrapper kept as a
    single seam so the contract (residual, orthonormality) is testable."""
    w, V = np.linalg.eigh(H)
    return w, V


def label_extended_zone(w, V, idx, strict=False, margin_tol=1e-6):
    """Dominant-coefficient labeling.

    Returns (labels, margins): labels[j] is the row (into idx) whose plane
    wave dominates eigenvector j; margins[j] the gap between the largest and
    second-largest |coefficient|.  strict=True raises AmbiguousLabeling when
    a margin falls below margin_tol.
    """
    A = np.abs(V)
    labels = A.argmax(axis=0)
    part = np.partition(A, -2, axis=0)
    margins = part[-1] - part[-2]
    if strict and np.any(margins < margin_tol):
        j = int(np.argmin(margins))
        raise AmbiguousLabeling(
            "eigenvector %d has labeling margin %.2e < %.2e"
            % (j, margins[j], margin_tol))
    return labels, margins


class _BaseField:
    """Extended-zone band function Lambda and Bloch family Psi.

    Lambda(kappa) and Psi(x, kappa) satisfy
        Lambda(k + 2 pi s) = lambda_s(k),  Psi(x, k + 2 pi s) = psi_s(x, k),
        Psi(x + n, kappa) = e^{i <kappa, n>} Psi(x, kappa).
    Subclasses implement lam/psi; derivative helpers are shared.
    """

    d = 2

    def lam(self, kappas):
        raise NotImplementedError

    def psi(self, x, kappas):
        raise NotImplementedError

    def grad(self, kappas, h=1e-3):
        """4th-order central differences of Lambda, componentwise."""
        kappas = np.atleast_2d(np.asarray(kappas, dtype=float))
        out = np.empty_like(kappas)
        for a in range(self.d):
            e = np.zeros(self.d)
            e[a] = 1.0
            out[:, a] = (-self.lam(kappas + 2 * h * e) + 8 * self.lam(kappas + h * e)
                         - 8 * self.lam(kappas - h * e) + self.lam(kappas - 2 * h * e)) / (12 * h)
        return out

    def hess(self, kappas, h=1e-3):
        kappas = np.atleast_2d(np.asarray(kappas, dtype=float))
        n = kappas.shape[0]
        out = np.empty((n, self.d, self.d))
        f0 = self.lam(kappas)
        for a in range(self.d):
            ea = np.zeros(self.d)
            ea[a] = 1.0
            out[:, a, a] = (-self.lam(kappas + 2 * h * ea) + 16 * self.lam(kappas + h * ea)
                            - 30 * f0 + 16 * self.lam(kappas - h * ea)
                            - self.lam(kappas - 2 * h * ea)) / (12 * h * h)
            for b in range(a + 1, self.d):
                eb = np.zeros(self.d)
                eb[b] = 1.0
                mixed = (self.lam(kappas + h * (ea + eb)) - self.lam(kappas + h * (ea - eb))
                         - self.lam(kappas - h * (ea - eb)) + self.lam(kappas - h * (ea + eb))) / (4 * h * h)
                out[:, a, b] = out[:, b, a] = mixed
        return out

    def evaluate(self, x, kappa):
        """(Lambda(kappa), Psi(x, kappa)) for a single extended momentum."""
        kappas = np.atleast_2d(np.asarray(kappa, dtype=float))
        return float(self.lam(kappas)[0]), complex(self.psi(np.asarray(x, float), kappas)[0])


class FourierField(_BaseField):
    """Plane-wave backend.  Eigensolves are cached per wrapped quasimomentum,
    so momentum grids aligned to multiples of 2 pi / M reuse M^d solves."""

    def __init__(self, pot: PotentialSpec, S: int = 12, strict_labels=False):
        self.pot = pot
        self.d = pot.d
        self.S = S
        self.strict_labels = strict_labels
        self.idx = box_indices(S, pot.d)
        self._rowmap = {tuple(s): i for i, s in enumerate(self.idx)}
        self._lam_cache = {}
        self._solve_cache = {}

    def _key(self, k):
        return tuple(np.round(k / (2 * np.pi) * 1e12).astype(np.int64))

    def _solve(self, k):
        key = self._key(np.atleast_1d(np.asarray(k, dtype=float)))
        hit = self._solve_cache.get(key)
        if hit is not None:
            return hit
        H, idx = assemble(self.pot, k, self.S)
        w, V = eigensolve(H)
        if len(self._solve_cache) < 4096:
            self._solve_cache[key] = (w, V)
        return w, V

    def _labeled(self, k):
        key = self._key(k)
        hit = self._lam_cache.get(key)
        if hit is not None:
            return hit
        w, V = self._solve(k)
        labels, margins = label_extended_zone(w, V, self.idx,
                                              strict=self.strict_labels)
        # lam_by_row[i]: eigenvalue of the branch whose vector concentrates
        # on plane wave i (choose, per row, the column maximizing |V[i, :]|)
        cols = np.abs(V).argmax(axis=1)
        lam_by_row = w[cols]
        row_margin = np.empty(len(cols))
        A = np.abs(V)
        part = np.partition(A, -2, axis=1)
        row_margin = part[:, -1] - part[:, -2]
        self._lam_cache[key] = (lam_by_row, row_margin, cols)
        return self._lam_cache[key]

    def lam(self, kappas):
        kappas = np.atleast_2d(np.asarray(kappas, dtype=float))
        k, s = wrap_to_zone(kappas)
        out = np.empty(kappas.shape[0])
        for i in range(kappas.shape[0]):
            row = self._rowmap.get(tuple(s[i]))
            if row is None:
                raise TruncationNotConverged(
                    "label %s outside truncation box S=%d" % (s[i], self.S))
            lam_by_row, _, _ = self._labeled(k[i])
            out[i] = lam_by_row[row]
        return out

    def psi(self, x, kappas):
        x = np.asarray(x, dtype=float)
        kappas = np.atleast_2d(np.asarray(kappas, dtype=float))
        k, s = wrap_to_zone(kappas)
        out = np.empty(kappas.shape[0], dtype=complex)
        for i in range(kappas.shape[0]):
            row = self._rowmap.get(tuple(s[i]))
            if row is None:
                raise TruncationNotConverged(
                    "label %s outside truncation box S=%d" % (s[i], self.S))
            w, V = self._solve(k[i])
            j = int(np.abs(V[row]).argmax())
            c = V[:, j]
            # phase convention: dominant coefficient real positive
            ph = c[row] / max(abs(c[row]), 1e-300)
            c = c * np.conj(ph)
            phases = np.exp(1j * ((k[i] + 2 * np.pi * self.idx) @ x))
            out[i] = c @ phases
        return out

    def eigen_at(self, k):
        """(eigenvalues, eigenvectors, box) at wrapped momentum k."""
        w, V = self._solve(np.asarray(k, dtype=float))
        return w, V, self.idx

    def psi_many_x(self, xs, kappa):
        """Psi(x, kappa) for one extended momentum at many positions (n_x, d)."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        k, s = wrap_to_zone(np.asarray(kappa, dtype=float))
        row = self._rowmap.get(tuple(s))
        if row is None:
            raise TruncationNotConverged(
                "label %s outside truncation box S=%d" % (s, self.S))
        w, V = self._solve(k)
        j = int(np.abs(V[row]).argmax())
        c = V[:, j]
        ph = c[row] / max(abs(c[row]), 1e-300)
        c = c * np.conj(ph)
        return np.exp(1j * (xs @ (k + 2 * np.pi * self.idx).T)) @ c


class SeparableField(_BaseField):
    """Tensor backend for V(x) = sum_i V_i(x_i): Lambda and Psi factor into
    1-D Hill quantities evaluated through the discriminant.  Much faster than
    plane-wave eigensolves and exact to root-finding accuracy."""

    def __init__(self, parts, n_bands=8, n_spline=2049):
        self.parts = tuple(parts)
        self.d = len(self.parts)
        self.solvers = [HillSolver(p, n_bands) for p in self.parts]
        self.pot = PotentialSpec.from_separable(self.parts)
        self.n_spline = int(n_spline)
        self._disp_cache = {}
        self._profile_cache = {}

    # Every 1-D band quantity is a smooth even function of the reduced
    # momentum on [0, pi], so it is tabulated once per (axis, band) on a
    # fine grid and interpolated; the table values themselves come from the
    # exact discriminant root-finding / implicit differentiation.  This
    # turns the per-call cost from a bisection per momentum into a spline
    # evaluation.
    def _disp(self, a, l):
        key = (a, l)
        hit = self._disp_cache.get(key)
        if hit is None:
            from scipy.interpolate import CubicSpline
            s = self.solvers[a]
            kg = np.linspace(0.0, np.pi, self.n_spline)
            E = np.asarray(s.band(l, kg))
            # derivatives on an edge-nudged grid: D'(E) degenerates exactly
            # at closed-gap band edges (e.g. the free potential)
            kd = kg.copy()
            kd[0] = 1e-6
            kd[-1] = np.pi - 1e-6
            spE = CubicSpline(kg, E)
            try:
                _, Ep, Epp = s.band_derivs(l, kd)
                hit = (spE, CubicSpline(kd, Ep), CubicSpline(kd, Epp))
            except BandEdgeSingularity:
                # nearly closed gap (e.g. high near-free bands): implicit
                # differentiation of the discriminant degenerates, so
                # differentiate the dispersion table instead
                hit = (spE, spE.derivative(), spE.derivative(2))
            self._disp_cache[key] = hit
        return hit

    def _fold(self, u):
        """(band index, reduced momentum in [0, pi]) for |kappa| = u."""
        l = np.minimum(np.floor(u / np.pi).astype(int) + 1, 10 ** 6)
        kr = np.where(l % 2 == 1, u - (l - 1) * np.pi, l * np.pi - u)
        return l, np.clip(kr, 0.0, np.pi)

    def _axis_derivs(self, a, ka):
        u = np.abs(ka)
        l, kr = self._fold(u)
        lam = np.empty(u.shape)
        d1 = np.empty(u.shape)
        d2 = np.empty(u.shape)
        for li in np.unique(l):
            sel = l == li
            spE, spEp, spEpp = self._disp(a, int(li))
            sgn = 1.0 if li % 2 == 1 else -1.0  # dk_red/d|kappa|
            lam[sel] = spE(kr[sel])
            d1[sel] = sgn * spEp(kr[sel])
            d2[sel] = spEpp(kr[sel])
        return lam, d1 * np.sign(ka), d2

    def lam(self, kappas):
        kappas = np.atleast_2d(np.asarray(kappas, dtype=float))
        out = np.zeros(kappas.shape[0])
        for a in range(self.d):
            out += self._axis_derivs(a, kappas[:, a])[0]
        return out

    def grad(self, kappas, h=None):
        kappas = np.atleast_2d(np.asarray(kappas, dtype=float))
        out = np.empty_like(kappas)
        for a in range(self.d):
            out[:, a] = self._axis_derivs(a, kappas[:, a])[1]
        return out

    def hess(self, kappas, h=None):
        kappas = np.atleast_2d(np.asarray(kappas, dtype=float))
        n = kappas.shape[0]
        out = np.zeros((n, self.d, self.d))
        for a in range(self.d):
            out[:, a, a] = self._axis_derivs(a, kappas[:, a])[2]
        return out

    def _profile(self, a, li, xfrac):
        """Splines of the 1-D Bloch wave k -> phi_li(xfrac, k) on [0, pi]."""
        key = (a, li, round(xfrac, 12))
        hit = self._profile_cache.get(key)
        if hit is None:
            from scipy.interpolate import CubicSpline
            kg = np.linspace(0.0, np.pi, (self.n_spline - 1) // 2 + 1)
            batch = BlochWaveBatch(self.parts[a], li, kg,
                                   solver=self.solvers[a])
            u = batch.at(xfrac)
            hit = (CubicSpline(kg, u.real), CubicSpline(kg, u.imag))
            if len(self._profile_cache) > 512:
                self._profile_cache.clear()
            self._profile_cache[key] = hit
        return hit

    def psi(self, x, kappas):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        kappas = np.atleast_2d(np.asarray(kappas, dtype=float))
        out = np.ones(kappas.shape[0], dtype=complex)
        for a in range(self.d):
            ka = kappas[:, a]
            kw = (ka + np.pi) % (2 * np.pi) - np.pi  # wrapped momentum
            kr = np.abs(kw)
            l = np.floor(np.abs(ka) / np.pi).astype(int) + 1
            xf = np.floor(x[a])
            vals = np.empty(kappas.shape[0], dtype=complex)
            for li in np.unique(l):
                sel = l == li
                sp_re, sp_im = self._profile(a, int(li), float(x[a] - xf))
                u = (sp_re(kr[sel]) + 1j * sp_im(kr[sel])) \
                    * np.exp(1j * kr[sel] * xf)
                vals[sel] = np.where(kw[sel] < 0, np.conj(u), u)
            out *= vals
        return out

    def psi_many_x(self, xs, kappa):
        """Psi(x, kappa) for one extended momentum at many positions (n_x, d)."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        kappa = np.asarray(kappa, dtype=float)
        out = np.ones(xs.shape[0], dtype=complex)
        for a, (pot, solver) in enumerate(zip(self.parts, self.solvers)):
            li = int(np.floor(abs(kappa[a]) / np.pi)) + 1
            batch = BlochWaveBatch(pot, li, np.array([kappa[a]]), solver=solver)
            uniq, inv = np.unique(xs[:, a], return_inverse=True)
            vals = np.array([batch.at(float(u))[0] for u in uniq])
            out *= vals[inv]
        return out


class FreeField(_BaseField):
    """Closed-form extended-zone data for V = 0: Lambda(kappa) = |kappa|^2,
    Psi(x, kappa) = e^{i <kappa, x>}.  Useful as an exact fast backend when
    potential-free formulas are the oracle side of a comparison."""

    def __init__(self, d=2):
        self.d = d

    def lam(self, kappas):
        kappas = np.atleast_2d(np.asarray(kappas, dtype=float))
        return np.sum(kappas ** 2, axis=1)

    def grad(self, kappas, h=None):
        return 2.0 * np.atleast_2d(np.asarray(kappas, dtype=float))

    def hess(self, kappas, h=None):
        kappas = np.atleast_2d(np.asarray(kappas, dtype=float))
        n = kappas.shape[0]
        return np.broadcast_to(2.0 * np.eye(self.d), (n, self.d, self.d)).copy()

    def psi(self, x, kappas):
        kappas = np.atleast_2d(np.asarray(kappas, dtype=float))
        return np.exp(1j * kappas @ np.asarray(x, dtype=float))

    def psi_many_x(self, xs, kappa):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return np.exp(1j * xs @ np.asarray(kappa, dtype=float))


def make_field(pot: PotentialSpec, S: int = 12, **kw):
    """Pick the natural backend for a potential spec."""
    if pot.mode == "separable":
        return SeparableField(pot.parts, **{k: v for k, v in kw.items() if k == "n_bands"})
    if not pot.coeff_dict():
        return FreeField(pot.d)
    return FourierField(pot, S=S, **{k: v for k, v in kw.items() if k != "n_bands"})


def growth_bounds_check(field, S=3, n_k=5, seed=0):
    """Fit constants for c |s|^2 - C <= lambda_s(k) <= C |s|^2 + C over a
    sample of labels and quasimomenta.  Returns (c, C, ok)."""
    rng = np.random.default_rng(seed)
    ks = rng.uniform(-np.pi, np.pi, size=(n_k, field.d))
    labels = box_indices(S, field.d)
    lams = []
    s2 = []
    for k in ks:
        kap = k[None, :] + 2 * np.pi * labels
        lams.append(field.lam(kap))
        s2.append((labels**2).sum(axis=1))
    lams = np.concatenate(lams)
    s2 = np.concatenate(s2).astype(float)
    big = s2 > 0
    c = min(0.5 * (2 * np.pi) ** 2, np.min(lams[big] / s2[big]) if big.any() else np.inf)
    c = max(c, 1e-6)
    C = max((2 * np.pi) ** 2 * 1.5,
            np.max(lams - c * s2),
            np.max(c * s2 - lams))
    ok = np.all(lams >= c * s2 - C - 1e-9) and np.all(lams <= C * s2 + C + 1e-9)
    return float(c), float(C), bool(ok)


def a3_check(field, kappas, n_x=24):
    """Uniform bound check: max_x |Psi(x, kappa)| over a grid, for each kappa.
    Psi is L^2(Omega)-normalized, so the returned ratios are the sup/L2 ratios."""
    kappas = np.atleast_2d(np.asarray(kappas, dtype=float))
    axes = [np.linspace(0, 1, n_x, endpoint=False)] * field.d
    if hasattr(field, "psi_many_x"):
        X = np.array(list(itertools.product(*axes)))
        return np.array([np.abs(field.psi_many_x(X, kap)).max()
                         for kap in kappas])
    ratios = np.zeros(kappas.shape[0])
    for x in itertools.product(*axes):
        ratios = np.maximum(ratios, np.abs(field.psi(np.array(x), kappas)))
    return ratios


def truncation_check(pot, k, S_small, S_large, tol=1e-6):
    """Compare lambda_{(0,...,0)}(k) between two box sizes."""
    fa = FourierField(pot, S=S_small)
    fb = FourierField(pot, S=S_large)
    kap = np.atleast_2d(np.asarray(k, dtype=float))
    da = fa.lam(kap)
    db = fb.lam(kap)
    drift = float(np.max(np.abs(da - db)))
    if drift > tol:
        raise TruncationNotConverged(
            "lambda_0 drifts by %.3e between S=%d and S=%d" % (drift, S_small, S_large))
    return drift
