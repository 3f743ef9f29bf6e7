"""Discrete Floquet-Bloch transform on the unit lattice.

For f with compact support,
    Uf(x, k) = |B|^{-1/2} sum_n f(x - n) e^{i <n, k>},   x in Omega = [0,1]^d,
with B = [-pi, pi)^d, |B| = (2 pi)^d, which makes U an isometry
L^2(R^d) -> L^2(Omega x B) with inverse
    (U^{-1} g)(x + n) = |B|^{-1/2} int_B g(x, k) e^{i <n, k>} dk.

Functions are sampled on uniform grids with m subdivisions per unit cell
(inclusive endpoints); lattice-aligned supports make f(x - n) exact on the
Omega grid.  k-quadrature is the periodic trapezoid rule, which is exact for
the trigonometric polynomials produced by finitely supported f.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SampledFunction",
    "FloquetField",
    "transform",
    "inverse",
    "coefficients",
    "coefficients_direct",
    "mixed_norm",
    "l2_norm",
    "field_l2_norm",
    "k_axis",
    "coefficients_to_csv",
]


@dataclass
class SampledFunction:
    """Complex samples on the grid lo + index / m over an integer box.

    values has shape (n_1 m + 1, ..., n_d m + 1) for a box of n_i cells per
    axis, endpoints included.
    """

    lo: tuple
    m: int
    values: np.ndarray

    @property
    def d(self):
        return len(self.lo)

    @property
    def n_cells(self):
        return tuple((s - 1) // self.m for s in self.values.shape)

    @classmethod
    def from_callable(cls, f, lo, n_cells, m):
        lo = tuple(int(v) for v in lo)
        axes = [l + np.arange(n * m + 1) / m for l, n in zip(lo, n_cells)]
        grid = np.meshgrid(*axes, indexing="ij")
        return cls(lo=lo, m=m, values=np.asarray(f(*grid), dtype=complex))

    def axis(self, a):
        return self.lo[a] + np.arange(self.values.shape[a]) / self.m


def _trap_weights(shape, m):
    """Product trapezoid weights (step 1/m per axis, halved endpoints)."""
    w = 1.0
    for n in shape:
        wa = np.ones(n) / m
        wa[0] *= 0.5
        wa[-1] *= 0.5
        w = np.multiply.outer(w, wa) if np.ndim(w) else wa
    return w


def l2_norm(f: SampledFunction):
    w = _trap_weights(f.values.shape, f.m)
    return float(np.sqrt(np.sum(w * np.abs(f.values) ** 2)))


def k_axis(n_k):
    """Periodic k-grid on [-pi, pi): n_k equispaced points."""
    return -np.pi + 2 * np.pi * np.arange(n_k) / n_k


@dataclass
class FloquetField:
    """Uf sampled on the Omega grid (m+1 points per axis, inclusive) times
    the periodic k-grid (n_k points per axis)."""

    m: int
    n_k: int
    d: int
    values: np.ndarray   # shape (m+1,)*d + (n_k,)*d

    @property
    def k_weight(self):
        return (2 * np.pi / self.n_k) ** self.d


def _shifts(f: SampledFunction):
    """Integer n with [ -n, -n + 1 ]^d inside the support box, i.e. the cell
    of f seen by Omega - n, together with the slice of f covering it."""
    out = []
    for cell in itertools.product(*[range(n) for n in f.n_cells]):
        n_vec = tuple(-(l + c) for l, c in zip(f.lo, cell))
        sl = tuple(slice(c * f.m, c * f.m + f.m + 1) for c in cell)
        out.append((np.array(n_vec, dtype=float), sl))
    return out


def transform(f: SampledFunction, n_k=16):
    """Floquet-Bloch transform, sampled.  Exact on the grid for lattice-
    aligned supports."""
    d = f.d
    ks = k_axis(n_k)
    kgrids = np.meshgrid(*([ks] * d), indexing="ij")
    out = np.zeros((f.m + 1,) * d + (n_k,) * d, dtype=complex)
    for n_vec, sl in _shifts(f):
        phase = np.zeros((n_k,) * d)
        for a in range(d):
            phase = phase + n_vec[a] * kgrids[a]
        block = f.values[sl]
        out += block.reshape(block.shape + (1,) * d) * np.exp(1j * phase)
    out *= (2 * np.pi) ** (-d / 2.0)
    return FloquetField(m=f.m, n_k=n_k, d=d, values=out)


def inverse(g: FloquetField, lo, n_cells):
    """U^{-1} g reconstructed on the box [lo, lo + n_cells]."""
    d = g.d
    ks = k_axis(g.n_k)
    kgrids = np.meshgrid(*([ks] * d), indexing="ij")
    shape = tuple(n * g.m + 1 for n in n_cells)
    vals = np.zeros(shape, dtype=complex)
    kw = g.k_weight
    pref = (2 * np.pi) ** (-d / 2.0) * kw
    for cell in itertools.product(*[range(n) for n in n_cells]):
        n_vec = np.array([l + c for l, c in zip(lo, cell)], dtype=float)
        phase = np.zeros((g.n_k,) * d)
        for a in range(d):
            phase = phase + n_vec[a] * kgrids[a]
        block = np.tensordot(g.values, np.exp(1j * phase), axes=(tuple(range(d, 2 * d)), tuple(range(d))))
        sl = tuple(slice(c * g.m, c * g.m + g.m + 1) for c in cell)
        vals[sl] = pref * block
    return SampledFunction(lo=tuple(int(v) for v in lo), m=g.m, values=vals)


def field_l2_norm(g: FloquetField):
    """L^2(Omega x B) norm: trapezoid in x, periodic trapezoid in k."""
    w = _trap_weights((g.m + 1,) * g.d, g.m)
    w = w.reshape(w.shape + (1,) * g.d)
    return float(np.sqrt(np.sum(w * np.abs(g.values) ** 2) * g.k_weight))


def coefficients(f: SampledFunction, field, labels, n_k=16):
    """Bloch coefficients c_s(k) = <Uf(., k), psi_s(., k)>_{L^2(Omega)}.

    labels: (n_s, d) integer array of extended-zone labels s.  Returns
    (ks, C) with C of shape (n_k^d, n_s).  Quadrature: trapezoid on the
    Omega grid of f, periodic k-grid.
    """
    d = f.d
    g = transform(f, n_k=n_k)
    ks = k_axis(n_k)
    kpts = np.array(list(itertools.product(*([ks] * d))))
    labels = np.atleast_2d(np.asarray(labels, dtype=int))
    w = _trap_weights((f.m + 1,) * d, f.m)
    axes = [np.arange(f.m + 1) / f.m] * d
    xs = np.array(list(itertools.product(*axes)))
    C = np.empty((len(kpts), len(labels)), dtype=complex)
    gflat = g.values.reshape((-1, n_k ** d))
    wflat = w.reshape(-1)
    for ik, k in enumerate(kpts):
        uf = gflat[:, ik]
        for js, s in enumerate(labels):
            psi = field.psi_many_x(xs, k + 2 * np.pi * s)
            C[ik, js] = np.sum(wflat * uf * np.conj(psi))
    return kpts, C


def coefficients_direct(f: SampledFunction, field, labels, n_k=16):
    """Same coefficients through the identity
    c_s(k) = |B|^{-1/2} int_{R^d} f(y) conj(psi_s(y, k)) dy
    (quadrature over the support of f, quasiperiodic extension of psi)."""
    d = f.d
    ks = k_axis(n_k)
    kpts = np.array(list(itertools.product(*([ks] * d))))
    labels = np.atleast_2d(np.asarray(labels, dtype=int))
    w = _trap_weights(f.values.shape, f.m).reshape(-1)
    axes = [f.axis(a) for a in range(d)]
    ys = np.array(list(itertools.product(*axes)))
    fv = f.values.reshape(-1)
    C = np.empty((len(kpts), len(labels)), dtype=complex)
    for ik, k in enumerate(kpts):
        for js, s in enumerate(labels):
            psi = field.psi_many_x(ys, k + 2 * np.pi * s)
            C[ik, js] = (2 * np.pi) ** (-d / 2.0) * np.sum(w * fv * np.conj(psi))
    return kpts, C


def mixed_norm(C, n_k, d, r):
    """|| c ||_{L^r(B x Z^d)}: ( int_B sum_s |c_s(k)|^r dk )^{1/r}, periodic
    trapezoid in k; r = inf gives the sup."""
    kw = (2 * np.pi / n_k) ** d
    A = np.abs(C)
    if np.isinf(r):
        return float(A.max())
    return float((np.sum(A ** r) * kw) ** (1.0 / r))


def coefficients_to_csv(kpts, labels, C, path):
    """CSV rows: k_1..k_d, s_1..s_d, re, im."""
    labels = np.atleast_2d(np.asarray(labels, dtype=int))
    d = kpts.shape[1]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k%d" % (a + 1) for a in range(d)]
                    + ["s%d" % (a + 1) for a in range(d)] + ["re", "im"])
        for ik, k in enumerate(kpts):
            for js, s in enumerate(labels):
                wr.writerow(["%.12g" % v for v in k] + list(s)
                            + ["%.12g" % C[ik, js].real, "%.12g" % C[ik, js].imag])
