"""Fermi surfaces F_tau = {kappa : Lambda(kappa) = tau} of extended-zone band
functions in d = 2: extraction (marching squares + root refinement), normals
and Gaussian curvature via the level-set formula, folding into the reduced
zone, closed-form arcs for separable potentials, and a spectral radial trace
for star-shaped components.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import IrregularFrequency, OutOfBand

__all__ = [
    "FermiComponent",
    "FermiSurface",
    "extract",
    "curvature_check",
    "reduce_zone",
    "SeparableArcs",
    "separable_arcs",
    "StarCurve",
    "radial_trace",
    "surface_to_csv",
    "surface_to_svg",
]


@dataclass
class FermiComponent:
    vertices: np.ndarray      # (n, 2)
    normals: np.ndarray       # (n, 2) unit, along grad Lambda
    grad_norms: np.ndarray    # (n,)
    curvature: np.ndarray     # (n,), level-set formula
    closed: bool = True

    def __len__(self):
        return len(self.vertices)

    @property
    def arclength(self):
        v = self.vertices
        if self.closed:
            v = np.vstack([v, v[:1]])
        return float(np.linalg.norm(np.diff(v, axis=0), axis=1).sum())


@dataclass
class FermiSurface:
    tau: float
    components: list
    grid_step: float

    @property
    def n_vertices(self):
        return sum(len(c) for c in self.components)

    def all_vertices(self):
        return np.vstack([c.vertices for c in self.components]) \
            if self.components else np.zeros((0, 2))


def _vector_illinois(f, a, b, fa, fb, tol, max_iter=60):
    """Regula falsi (Illinois variant), vectorized: roots of scalar-in-t
    functions bracketed on [a, b] with f(a) = fa, f(b) = fb."""
    a = a.copy(); b = b.copy(); fa = fa.copy(); fb = fb.copy()
    x = 0.5 * (a + b)
    for _ in range(max_iter):
        denom = np.where(fb - fa == 0, 1.0, fb - fa)
        x = b - fb * (b - a) / denom
        x = np.clip(x, np.minimum(a, b) + 0.0, np.maximum(a, b))
        fx = f(x)
        done = np.abs(fx) < tol
        if done.all():
            break
        left = fa * fx <= 0
        # Illinois weighting keeps the stale endpoint moving
        fb = np.where(left, fx, fb * np.where(fa * fx > 0, 0.5, 1.0))
        b_new = np.where(left, x, b)
        a_new = np.where(left, a, x)
        fa_new = np.where(left, fa, fx)
        a, b, fa = a_new, b_new, fa_new
    return x


def _fd_tables(F, h):
    """4th-order first/second derivative arrays on the interior (2 ghost
    layers consumed).  Input F[ix, iy]; returns dict on the trimmed grid."""
    def d1(A, axis):
        s = [slice(2, -2)] * A.ndim
        def sh(o):
            sl = list(s); sl[axis] = slice(2 + o, A.shape[axis] - 2 + o or None)
            return A[tuple(sl)]
        return (-sh(2) + 8 * sh(1) - 8 * sh(-1) + sh(-2)) / (12 * h)

    def d2(A, axis):
        s = [slice(2, -2)] * A.ndim
        def sh(o):
            sl = list(s); sl[axis] = slice(2 + o, A.shape[axis] - 2 + o or None)
            return A[tuple(sl)]
        return (-sh(2) + 16 * sh(1) - 30 * sh(0) + 16 * sh(-1) - sh(-2)) / (12 * h * h)

    Fx = d1(F, 0)
    Fy = d1(F, 1)
    Fxx = d2(F, 0)
    Fyy = d2(F, 1)
    Fxy = d1(np.pad(d1(F, 1), 2, mode="edge"), 0)  # cross: d/dx of d/dy
    return {"x": Fx, "y": Fy, "xx": Fxx, "yy": Fyy, "xy": Fxy}


def _bilinear(A, u, v):
    """Interpolate array A at fractional indices (u, v)."""
    i = np.clip(np.floor(u).astype(int), 0, A.shape[0] - 2)
    j = np.clip(np.floor(v).astype(int), 0, A.shape[1] - 2)
    fu = u - i
    fv = v - j
    return (A[i, j] * (1 - fu) * (1 - fv) + A[i + 1, j] * fu * (1 - fv)
            + A[i, j + 1] * (1 - fu) * fv + A[i + 1, j + 1] * fu * fv)


def _estimate_radius(field, tau):
    """Window radius guaranteed to contain F_tau, from |kappa|^2 ~ Lambda."""
    try:
        coeffs = field.pot.coeff_dict(n_max=8)
        vnorm = sum(abs(c) for c in coeffs.values())
    except Exception:
        vnorm = 0.0
    return np.sqrt(max(tau + vnorm + 2.0, 1.0)) + 0.5


def extract(field, tau, subdiv=24, radius=None, refine_tol=1e-6,
            grad_tol=1e-4, min_vertices=4):
    """Extract F_tau by marching squares on an aligned momentum grid, with
    vertices refined along grid edges until |Lambda - tau| < refine_tol.

    The grid step is 2 pi / subdiv so plane-wave backends can reuse wrapped-k
    eigensolves across the extended-zone window.  Raises IrregularFrequency
    if any refined vertex has |grad Lambda| < grad_tol.
    """
    step = 2 * np.pi / subdiv
    radius = radius if radius is not None else _estimate_radius(field, tau)
    N = int(np.ceil(radius / step)) + 3   # includes 2 ghost layers for FD
    ii = np.arange(-N, N + 1)
    xs = step * ii
    grid = np.stack(np.meshgrid(xs, xs, indexing="ij"), axis=-1)
    F = field.lam(grid.reshape(-1, 2)).reshape(grid.shape[:2]) - tau
    tabs = _fd_tables(F + tau, step)   # derivative tables on trimmed grid

    # ---- marching squares over the trimmed interior ----
    n = F.shape[0]
    lo, hi = 2, n - 3                 # trimmed cell range (cells [lo, hi-1])
    pts = {}                          # edge key -> crossing parameters
    segs = []                         # list of (edge_key, edge_key)

    def edge(kind, i, j):
        return (kind, i, j)

    pos = F >= 0
    for i in range(lo, hi):
        for j in range(lo, hi):
            c = (int(pos[i, j]) | int(pos[i + 1, j]) << 1
                 | int(pos[i + 1, j + 1]) << 2 | int(pos[i, j + 1]) << 3)
            if c in (0, 15):
                continue
            b = edge("h", i, j)
            r = edge("v", i + 1, j)
            t = edge("h", i, j + 1)
            le = edge("v", i, j)
            table = {1: [(le, b)], 2: [(b, r)], 3: [(le, r)], 4: [(r, t)],
                     6: [(b, t)], 7: [(le, t)]}
            cc = min(c, 15 - c)
            if cc == 5:
                center = 0.25 * (F[i, j] + F[i + 1, j] + F[i, j + 1] + F[i + 1, j + 1])
                inner_pos = (c == 5 and center >= 0) or (c == 10 and center < 0)
                pair = [(b, r), (t, le)] if inner_pos else [(le, b), (r, t)]
                segs.extend(pair)
                for e, _ in pair:
                    pts[e] = None
                for _, e in pair:
                    pts[e] = None
                continue
            for e1, e2 in table[cc]:
                segs.append((e1, e2))
                pts[e1] = None
                pts[e2] = None

    if not pts:
        return FermiSurface(tau=tau, components=[], grid_step=step)

    # ---- refine all crossing points along their grid edges, vectorized ----
    keys = list(pts.keys())
    p0 = np.empty((len(keys), 2))
    p1 = np.empty((len(keys), 2))
    for m, (kind, i, j) in enumerate(keys):
        p0[m] = (xs[i], xs[j])
        p1[m] = (xs[i + 1], xs[j]) if kind == "h" else (xs[i], xs[j + 1])
    f0 = F[[k[1] for k in keys], [k[2] for k in keys]]
    f1 = F[[k[1] + (1 if k[0] == "h" else 0) for k in keys],
           [k[2] + (1 if k[0] == "v" else 0) for k in keys]]

    def along(t):
        return field.lam(p0 + t[:, None] * (p1 - p0)) - tau

    tstar = _vector_illinois(along, np.zeros(len(keys)), np.ones(len(keys)),
                             f0, f1, tol=refine_tol)
    P = p0 + tstar[:, None] * (p1 - p0)
    point_of = {k: P[m] for m, k in enumerate(keys)}

    # ---- chain segments into components ----
    neigh = {}
    for e1, e2 in segs:
        neigh.setdefault(e1, []).append(e2)
        neigh.setdefault(e2, []).append(e1)
    unused = set(neigh.keys())
    chains = []
    while unused:
        start = unused.pop()
        chain = [start]
        closed = False
        # extend forward
        while True:
            nxt = [e for e in neigh[chain[-1]] if e in unused]
            if not nxt:
                if len(chain) > 2 and chain[0] in neigh[chain[-1]]:
                    closed = True
                break
            chain.append(nxt[0])
            unused.discard(nxt[0])
        if not closed:
            while True:  # extend backward for open chains
                prv = [e for e in neigh[chain[0]] if e in unused]
                if not prv:
                    break
                chain.insert(0, prv[0])
                unused.discard(prv[0])
        if len(chain) >= min_vertices:
            chains.append((chain, closed))

    # ---- per-vertex geometry from the FD tables ----
    components = []
    for chain, closed in chains:
        V = np.array([point_of[e] for e in chain])
        u = V[:, 0] / step + N - 2   # fractional index into trimmed tables
        v = V[:, 1] / step + N - 2
        gx = _bilinear(tabs["x"], u, v)
        gy = _bilinear(tabs["y"], u, v)
        gxx = _bilinear(tabs["xx"], u, v)
        gyy = _bilinear(tabs["yy"], u, v)
        gxy = _bilinear(tabs["xy"], u, v)
        gn = np.hypot(gx, gy)
        if np.any(gn < grad_tol):
            raise IrregularFrequency(
                "|grad Lambda| = %.2e < %.2e on F_%g" % (gn.min(), grad_tol, tau))
        curv = (gxx * gy**2 - 2 * gxy * gx * gy + gyy * gx**2) / gn**3
        normals = np.stack([gx, gy], axis=-1) / gn[:, None]
        # orient positively: outward normal on the grad-Lambda side
        if closed and len(V) > 2:
            area = 0.5 * np.sum(V[:, 0] * np.roll(V[:, 1], -1)
                                - np.roll(V[:, 0], -1) * V[:, 1])
            tang = np.roll(V, -1, axis=0) - V
            right = np.stack([tang[:, 1], -tang[:, 0]], axis=-1)
            score = np.sum(right * normals)
            if score < 0:
                V = V[::-1]
                normals = normals[::-1]
                gn = gn[::-1]
                curv = curv[::-1]
        components.append(FermiComponent(vertices=V, normals=normals,
                                         grad_norms=gn, curvature=curv,
                                         closed=closed))
    return FermiSurface(tau=tau, components=components, grid_step=step)


def curvature_check(surface, min_curvature=1e-3):
    """(min curvature over all vertices, positivity verdict)."""
    if not surface.components:
        return 0.0, False
    m = min(c.curvature.min() for c in surface.components)
    return float(m), bool(m > min_curvature)


def reduce_zone(surface):
    """Fold a surface into B = [-pi, pi)^2.  Folding may cut components:
    each is split where consecutive folded vertices jump by more than half a
    period.  Returns (list of folded polylines, piece count)."""
    pieces = []
    for comp in surface.components:
        W = (comp.vertices + np.pi) % (2 * np.pi) - np.pi
        if len(W) == 0:
            continue
        jumps = np.linalg.norm(np.diff(W, axis=0), axis=1) > np.pi
        idx = np.nonzero(jumps)[0]
        start = 0
        parts = []
        for i in idx:
            parts.append(W[start:i + 1])
            start = i + 1
        parts.append(W[start:])
        if len(parts) > 1 and not jumps.any():
            parts = [W]
        # merge first and last if the original loop did not cut there
        if comp.closed and len(parts) > 1 and \
                np.linalg.norm(W[0] - W[-1]) < np.pi:
            parts[0] = np.vstack([parts[-1], parts[0]])
            parts = parts[:-1]
        pieces.extend(p for p in parts if len(p) >= 2)
    return pieces, len(pieces)


# ---------------------------------------------------------------------------
# separable closed-form arcs
# ---------------------------------------------------------------------------

@dataclass
class SeparableArcs:
    """F_lambda of Lambda(k) = E_1(k_1) + E_2(k_2) as four graph arcs."""

    lam: float
    solvers: tuple
    window: tuple   # (lower, upper) admissible window for lam

    def _Z(self, axis, E):
        return self.solvers[axis].inverse_first_band(E)

    def arc(self, i, r):
        """Arc i in {1,2,3,4} at parameter(s) r; see sample() for ranges."""
        lam = self.lam
        r = np.asarray(r, dtype=float)
        if i == 1:
            return np.stack([self._Z(0, lam - r), self._Z(1, r)], axis=-1)
        if i == 2:
            return np.stack([-self._Z(0, r), self._Z(1, lam - r)], axis=-1)
        if i == 3:
            return np.stack([-self._Z(0, lam - r), -self._Z(1, r)], axis=-1)
        if i == 4:
            return np.stack([self._Z(0, r), -self._Z(1, lam - r)], axis=-1)
        raise ValueError("arc index must be 1..4")

    def parameter_range(self, i):
        E10 = self.solvers[0].at0[0]
        E20 = self.solvers[1].at0[0]
        if i in (1, 3):
            return E20, self.lam - E10
        return E10, self.lam - E20

    def sample(self, i, n):
        a, b = self.parameter_range(i)
        r = np.linspace(a, b, n)
        return r, self.arc(i, r)

    def curvature(self, k):
        """Gaussian curvature at points k (n, 2) on the surface, from the
        separable closed form (E1'' E2'^2 + E2'' E1'^2) / (E1'^2 + E2'^2)^{3/2}."""
        k = np.atleast_2d(np.asarray(k, dtype=float))
        _, d1a, d2a = self.solvers[0].band_derivs(1, k[:, 0])
        _, d1b, d2b = self.solvers[1].band_derivs(1, k[:, 1])
        num = d2a * d1b**2 + d2b * d1a**2
        den = (d1a**2 + d1b**2) ** 1.5
        return num / den


def separable_arcs(field, lam):
    """Closed-form arcs of F_lambda for a separable field (first-band window).

    Requires E_1^{(1)}(0) + E_1^{(2)}(0) < lam < min(E_1^{(1)}(0) + E_1^{(2)}(pi),
    E_1^{(1)}(pi) + E_1^{(2)}(0)); outside that window the four-arc picture of
    the surface breaks down and OutOfBand is raised.
    """
    s1, s2 = field.solvers
    lo = s1.at0[0] + s2.at0[0]
    hi = min(s1.at0[0] + s2.atpi[0], s1.atpi[0] + s2.at0[0])
    if not (lo < lam < hi):
        raise OutOfBand("lambda=%g outside separable window (%g, %g)" % (lam, lo, hi))
    return SeparableArcs(lam=lam, solvers=(s1, s2), window=(lo, hi))


# ---------------------------------------------------------------------------
# spectral radial trace (star-shaped components)
# ---------------------------------------------------------------------------

@dataclass
class StarCurve:
    """A closed Fermi component parametrized by angle around a center.

    Supports spectrally accurate line integrals int_F g dH^1 via
    sum g(kappa_i) * w_i (periodic trapezoid in theta).
    """

    tau: float
    center: np.ndarray
    theta: np.ndarray
    radii: np.ndarray
    kappas: np.ndarray      # (n, 2)
    weights: np.ndarray     # |gamma'(theta)| * dtheta
    grads: np.ndarray       # grad Lambda at kappas
    normals: np.ndarray
    curvature: np.ndarray

    def integrate(self, values):
        return np.sum(values * self.weights, axis=-1)


def radial_trace(field, tau, n=128, center=(0.0, 0.0), rmax=None,
                 tol=1e-10):
    """Trace the star-shaped component of F_tau around `center` with n equally
    spaced angles; radii solved by bracketed secant iteration, derivatives of
    r(theta) computed spectrally (FFT), geometry via field.grad/hess."""
    center = np.asarray(center, dtype=float)
    theta = 2 * np.pi * np.arange(n) / n
    e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    if rmax is None:
        rmax = _estimate_radius(field, tau)

    def f(r):
        return field.lam(center[None, :] + r[:, None] * e) - tau

    a = np.full(n, 1e-9)
    b = np.full(n, rmax)
    fa = f(a)
    fb = f(b)
    if np.any(fa * fb > 0):
        raise OutOfBand("center does not see F_tau in all directions")
    r = _vector_illinois(f, a, b, fa, fb, tol=tol)
    kap = center[None, :] + r[:, None] * e

    # spectral derivative of r(theta)
    rh = np.fft.rfft(r)
    freqs = np.arange(len(rh))
    rp = np.fft.irfft(1j * freqs * rh, n)
    gamma_p = rp[:, None] * e + r[:, None] * np.stack([-e[:, 1], e[:, 0]], axis=-1)
    speed = np.linalg.norm(gamma_p, axis=1)
    w = speed * (2 * np.pi / n)

    G = field.grad(kap)
    gn = np.linalg.norm(G, axis=1)
    H = field.hess(kap)
    gx, gy = G[:, 0], G[:, 1]
    curv = (H[:, 0, 0] * gy**2 - 2 * H[:, 0, 1] * gx * gy + H[:, 1, 1] * gx**2) / gn**3
    return StarCurve(tau=tau, center=center, theta=theta, radii=r,
                     kappas=kap, weights=w, grads=G, normals=G / gn[:, None],
                     curvature=curv)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def surface_to_csv(surface, path):
    """CSV rows: component, k1, k2, nu1, nu2, grad_norm, curvature."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["component", "k1", "k2", "nu1", "nu2", "grad_norm", "curvature"])
        for ci, comp in enumerate(surface.components):
            for v, nv, g, c in zip(comp.vertices, comp.normals,
                                   comp.grad_norms, comp.curvature):
                wr.writerow([ci, "%.12g" % v[0], "%.12g" % v[1],
                             "%.9g" % nv[0], "%.9g" % nv[1],
                             "%.9g" % g, "%.9g" % c])


def _svg_polyline(points, scale, offset, color, closed):
    pts = " ".join("%.2f,%.2f" % (scale * p[0] + offset, offset - scale * p[1])
                   for p in points)
    tag = "polygon" if closed else "polyline"
    return '<%s points="%s" fill="none" stroke="%s" stroke-width="1.2"/>' % (tag, pts, color)


def surface_to_svg(surfaces, path, size=480):
    """Plot one or more surfaces (list of FermiSurface) as a standalone SVG."""
    if not isinstance(surfaces, (list, tuple)):
        surfaces = [surfaces]
    rmax = 1.0
    for s in surfaces:
        for c in s.components:
            if len(c.vertices):
                rmax = max(rmax, np.abs(c.vertices).max())
    scale = (size / 2 - 10) / rmax
    offset = size / 2
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = ['<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d">' % (size, size)]
    parts.append('<rect width="100%" height="100%" fill="white"/>')
    # axes
    parts.append('<line x1="0" y1="%.1f" x2="%d" y2="%.1f" stroke="#ccc"/>' % (offset, size, offset))
    parts.append('<line x1="%.1f" y1="0" x2="%.1f" y2="%d" stroke="#ccc"/>' % (offset, offset, size))
    for si, s in enumerate(surfaces):
        col = colors[si % len(colors)]
        for c in s.components:
            parts.append(_svg_polyline(c.vertices, scale, offset, col, c.closed))
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
