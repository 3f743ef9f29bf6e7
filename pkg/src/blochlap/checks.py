"""Hypothesis verifiers for the limiting-absorption setting.

Exact rational-arithmetic evaluation of the admissible (p, q) exponent
regions of the L^p -> L^q resolvent bounds, structural checks of the three
standing assumptions

    (A1) L = -Delta + V with real bounded Z^d-periodic V,
    (A2) (a) Lambda and Psi smooth near the Fermi surface,
         (b) F_lambda compact with positive Gaussian curvature,
    (A3) sup-norm equiboundedness of the Bloch eigenfunctions,

a numerical verifier for the two-dimensional separable perturbation lemma
(almost-constant potentials keep (A1)-(A3) on a frequency window of length
pi^2), and the sign test of the mountain-pass geometry integral behind the
nonlinear Helmholtz application.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import fermi, planewave
from .errors import EmptyLevelSet, OutOfBand
from .hill1d import HillSolver

__all__ = [
    "ExponentRegion",
    "AssumptionReport",
    "exponent_region",
    "region_equivalence_scan",
    "verify_assumptions",
    "lemma13_verify",
    "mountain_pass_sign",
]

INF = Fraction(0)  # reciprocal encoding: 1/q = 0 means q = infinity


def _recip(e):
    """Exact reciprocal 1/e of an exponent; infinity maps to 0."""
    if e in (None, "inf") or e == float("inf"):
        return Fraction(0)
    f = Fraction(e)
    if f < 1:
        raise ValueError("exponents must satisfy 1 <= e <= infinity")
    return 1 / f


@dataclass(frozen=True)
class ExponentRegion:
    """Membership verdicts of one (d, p, q) triple in each exponent family.

    All inequalities are evaluated in exact rational arithmetic on the
    reciprocals u = 1/p, v = 1/q (with 1/infinity = 0), so verdicts are
    deterministic and boundary cases exact.
    """

    d: int
    p: object
    q: object
    admissible: bool                # full resolvent region, both branches
    nonresonant: bool               # Riesz window of the nonresonant part
    resonant_admissible: bool       # interpolated resonant region
    resonant_riesz: bool            # its Riesz-diagram reformulation
    gutierrez: bool                 # constant-coefficient Helmholtz region
    corollary_selfdual: bool        # q' -> q window of the NLH corollary


def _branch_bounds(d, u):
    """Lower bounds v < ... of the two resonant branches at u = 1/p."""
    low1 = u / d + Fraction(d - 3, 2 * d)        # q > 2dp / (2 + p(d-3))
    low2 = d * u - Fraction(d + 1, 2)            # q > 2p / (2d - p(d+1))
    return low1, low2


def _verdict_admissible(d, u, v):
    split = Fraction(d + 3, 2 * (d + 1))   # 1/p at p = 2(d+1)/(d+3)
    pmax = Fraction(d + 1, 2 * d)          # 1/p at p = 2d/(d+1)
    low1, low2 = _branch_bounds(d, u)
    if u > split:                          # 1 <= p < 2(d+1)/(d+3)
        if u > 1:
            return False
        below = v < low1
    elif u > pmax:                         # 2(d+1)/(d+3) <= p < 2d/(d+1)
        below = v < low2
    else:
        return False
    if not below:
        return False
    if u >= Fraction(2, d):                # p <= d/2: q < pd/(d - 2p)
        return v > u - Fraction(2, d)
    return v >= 0                          # p > d/2: q <= infinity


def _verdict_nonresonant(d, u, v):
    return (0 <= u - v < Fraction(2, d)
            and 1 >= u >= Fraction(1, 2) >= v >= 0)


def _verdict_resonant(d, u, v):
    split = Fraction(d + 3, 2 * (d + 1))
    pmax = Fraction(d + 1, 2 * d)
    low1, low2 = _branch_bounds(d, u)
    if 1 >= u >= split:                    # 1 <= p <= 2(d+1)/(d+3)
        return v < low1
    if split > u > pmax:                   # 2(d+1)/(d+3) < p < 2d/(d+1)
        return v < low2
    return False


def _verdict_riesz(d, u, v):
    return (1 >= u and v >= 0
            and Fraction(d + 1, 2) - d * u + v < 0
            and Fraction(3 - d, 2) + d * v - u < 0)


def _verdict_gutierrez(d, u, v):
    return (u > Fraction(d + 1, 2 * d) and v < Fraction(d - 1, 2 * d)
            and Fraction(2, d + 1) <= u - v <= Fraction(2, d) and u <= 1)


def _verdict_corollary(d, u, v):
    if u + v != 1:
        return False
    upper = Fraction(d - 2, 2 * d)         # 1/q at q = 2d/(d-2); 0 for d = 2
    return Fraction(d - 1, 2 * (d + 1)) > v > upper


def exponent_region(d, p, q):
    """Exact membership of (p, q) in every exponent family at dimension d."""
    d = int(d)
    if d < 2:
        raise ValueError("d >= 2 required")
    u, v = _recip(p), _recip(q)
    region = ExponentRegion(
        d=d, p=p, q=q,
        admissible=_verdict_admissible(d, u, v),
        nonresonant=_verdict_nonresonant(d, u, v),
        resonant_admissible=_verdict_resonant(d, u, v),
        resonant_riesz=_verdict_riesz(d, u, v),
        gutierrez=_verdict_gutierrez(d, u, v),
        corollary_selfdual=_verdict_corollary(d, u, v),
    )
    if region.resonant_admissible != region.resonant_riesz:
        raise AssertionError(
            "resonant region characterizations disagree at d=%d, p=%s, q=%s"
            % (d, p, q))
    return region


def region_equivalence_scan(d, n_points=10000, seed=0, max_den=97):
    """Brute-force the equivalence of the two resonant-region descriptions
    over random rational (p, q); returns (points tested, disagreements)."""
    rng = np.random.default_rng(seed)
    bad = []
    tested = 0
    while tested < n_points:
        pu = Fraction(int(rng.integers(1, max_den)), int(rng.integers(1, 4 * max_den)))
        qv = Fraction(int(rng.integers(0, max_den)), int(rng.integers(1, 4 * max_den)))
        if not (0 < pu <= 1 and 0 <= qv <= 1):
            continue
        tested += 1
        a = _verdict_resonant(d, pu, qv)
        b = _verdict_riesz(d, pu, qv)
        if a != b:
            bad.append((pu, qv, a, b))
    return tested, bad


# ---------------------------------------------------------------------------
# assumption verification
# ---------------------------------------------------------------------------

@dataclass
class AssumptionReport:
    """Structured (A1)/(A2)/(A3) verdicts; every failure carries a witness."""

    a1_pass: bool
    a1_reasons: list
    a2b_pass: bool
    a2b_min_curvature: float
    a2b_witness: object
    a2a_stable: bool
    a2a_ratios: dict
    a2a_caveat: str
    a3_pass: bool
    a3_max_ratio: float
    a3_witness: object
    regular_frequency: bool
    details: dict = field(default_factory=dict)

    @property
    def all_pass(self):
        return (self.a1_pass and self.a2b_pass and self.a2a_stable
                and self.a3_pass and self.regular_frequency)

    def to_json(self):
        def clean(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, np.integer, np.bool_)):
                return v.item()
            return v
        return {
            "A1": {"pass": self.a1_pass, "reasons": self.a1_reasons},
            "A2b": {"pass": self.a2b_pass,
                    "min_curvature": self.a2b_min_curvature,
                    "witness": clean(self.a2b_witness)},
            "A2a": {"stable": self.a2a_stable,
                    "ratios": {k: clean(v) for k, v in self.a2a_ratios.items()},
                    "caveat": self.a2a_caveat},
            "A3": {"pass": self.a3_pass, "max_ratio": self.a3_max_ratio,
                   "witness": clean(self.a3_witness)},
            "regular_frequency": self.regular_frequency,
            "all_pass": self.all_pass,
        }


_A2A_CAVEAT = ("Hoelder smoothness of Lambda and Psi cannot be certified "
               "numerically; reported is the stability of divided "
               "differences up to order 3 under one grid refinement, a "
               "necessary-condition proxy only.")


def _check_a1(pot):
    """(A1) structurally: the operator is -Delta + V with real bounded
    periodic V, i.e. the coefficient table is finite and hermitian."""
    reasons = []
    coeffs = pot.coeff_dict()
    for n, c in coeffs.items():
        m = tuple(-i for i in n)
        if abs(np.conj(coeffs.get(m, 0.0)) - c) > 1e-12:
            reasons.append("V is not real: Vhat%s != conj(Vhat%s)" % (n, m))
        if not np.isfinite(c):
            reasons.append("Vhat%s is not finite" % (n,))
    return len(reasons) == 0, reasons


def _divided_difference_stability(field, lam, rho, n0=48):
    """Max |finite difference| of Lambda up to order 3 and of Psi up to
    order 1 (in k) on a window covering F_lambda, at two resolutions; the
    stability ratio should stay O(1) under refinement for a smooth field."""
    r = np.sqrt(lam + rho)
    out = {}
    for tag, n in (("coarse", n0), ("fine", 2 * n0)):
        t = np.linspace(-r - 0.2, r + 0.2, n)
        h = t[1] - t[0]
        K = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1).reshape(-1, 2)
        L = field.lam(K).reshape(n, n)
        d3 = np.diff(L, n=3, axis=0) / h ** 3
        x = np.array([0.3, 0.7])
        line = np.stack([t, np.full_like(t, 0.37)], axis=-1)
        P = field.psi(x, line)
        d1 = np.diff(P) / h
        out[tag] = {"lam_d3": float(np.max(np.abs(d3))),
                    "psi_d1": float(np.max(np.abs(d1)))}
    # a quantity at rounding-noise level on both grids is trivially stable
    ratios = {k: (1.0 if max(out["fine"][k], out["coarse"][k]) < 1e-6
                  else out["fine"][k] / max(out["coarse"][k], 1e-300))
              for k in out["coarse"]}
    stable = all(0.1 < rv < 10.0 for rv in ratios.values())
    return stable, {"coarse": out["coarse"], "fine": out["fine"],
                    "ratios": ratios}


def verify_assumptions(pot, lam, rho=0.25, grad_tol=1e-4, a3_bound=10.0,
                       n_kappa=64, seed=0, S=None):
    """AssumptionReport for the potential at frequency lambda."""
    field = planewave.make_field(pot) if S is None else planewave.make_field(pot, S=S)
    a1_pass, a1_reasons = _check_a1(pot)

    # (A2)(b): every F_tau with |tau - lambda| <= rho has positive curvature
    a2b_pass, a2b_min, a2b_witness = True, np.inf, None
    regular = True
    for tau in (lam - rho, lam, lam + rho):
        try:
            surf = fermi.extract(field, tau)
        except Exception as exc:
            a2b_pass, a2b_witness, regular = False, str(exc), False
            a2b_min = 0.0
            break
        m, ok = fermi.curvature_check(surf)
        if m < a2b_min:
            a2b_min = m
        if not ok:
            a2b_pass = False
            comp = min(surf.components, key=lambda c: c.curvature.min())
            a2b_witness = comp.vertices[int(np.argmin(comp.curvature))]
        gmin = min(c.grad_norms.min() for c in surf.components)
        if gmin < grad_tol:
            regular = False

    # (A2)(a) proxy: divided-difference stability under refinement
    a2a_stable, a2a_ratios = _divided_difference_stability(field, lam, rho)

    # (A3): sup/L2 ratio of Psi over sampled extended momenta
    rng = np.random.default_rng(seed)
    rmax = np.sqrt(lam + rho)
    kap = rng.uniform(-rmax, rmax, size=(n_kappa, field.d))
    ratios = planewave.a3_check(field, kap)
    a3_pass = bool(np.max(ratios) < a3_bound)
    a3_witness = None if a3_pass else kap[int(np.argmax(ratios))]

    return AssumptionReport(
        a1_pass=a1_pass, a1_reasons=a1_reasons,
        a2b_pass=a2b_pass, a2b_min_curvature=float(a2b_min),
        a2b_witness=a2b_witness,
        a2a_stable=a2a_stable, a2a_ratios=a2a_ratios,
        a2a_caveat=_A2A_CAVEAT,
        a3_pass=a3_pass, a3_max_ratio=float(np.max(ratios)),
        a3_witness=a3_witness,
        regular_frequency=regular)


# ---------------------------------------------------------------------------
# the separable perturbation lemma (d = 2)
# ---------------------------------------------------------------------------

def lemma13_verify(V1, V2, mu1, mu2, eps, n_sample=257, lam_samples=5):
    """Verify the numerical content of the almost-constant separable
    criterion: on I = [-pi + eps/(8 pi), pi - eps/(8 pi)],

      * || E_1^{V_i} - (mu_i + k^2) ||_{C^2(I)} < min(eps/4, 1),
      * (E_1^{V_i})'' > 0 on I,
      * the window (mu1 + mu2 + eps, mu1 + mu2 + pi^2 - eps) sits inside
        the separable admissibility window
        (E_1^{V_1}(0) + E_1^{V_2}(0),
         min{E_1^{V_1}(0) + E_1^{V_2}(pi), E_1^{V_1}(pi) + E_1^{V_2}(0)}),
      * F_lambda is contained in I x I for sampled lambda in the window.

    Returns a nested report dict with an overall "pass" flag.
    """
    edge = np.pi - eps / (8 * np.pi)
    kk = np.linspace(-edge, edge, n_sample)
    mus = (mu1, mu2)
    solvers = [HillSolver(V1), HillSolver(V2)]
    report = {"interval": (-edge, edge), "bands": [], "pass": True}
    bound = min(eps / 4.0, 1.0)
    for s, mu in zip(solvers, mus):
        E, Ep, Epp = s.band_derivs(1, np.abs(kk))
        Ep = Ep * np.sign(kk)
        dev = max(np.max(np.abs(E - (mu + kk ** 2))),
                  np.max(np.abs(Ep - 2 * kk)),
                  np.max(np.abs(Epp - 2.0)))
        convex = bool(np.all(Epp > 0))
        entry = {"c2_deviation": float(dev), "c2_bound": bound,
                 "deviation_ok": bool(dev < bound), "convex_on_I": convex}
        if not (entry["deviation_ok"] and convex):
            bad = int(np.argmax(np.abs(E - (mu + kk ** 2))))
            entry["witness_k"] = float(kk[bad])
            report["pass"] = False
        report["bands"].append(entry)

    E0 = [float(s.band(1, 0.0)) for s in solvers]
    Epi = [float(s.band(1, np.pi)) for s in solvers]
    window = (mu1 + mu2 + eps, mu1 + mu2 + np.pi ** 2 - eps)
    admissible = (E0[0] + E0[1], min(E0[0] + Epi[1], Epi[0] + E0[1]))
    contained = (admissible[0] < window[0] and window[1] < admissible[1])
    report["window"] = {"target": window, "admissible": admissible,
                        "contained": bool(contained)}
    if not contained:
        report["pass"] = False

    if report["pass"] and window[0] < window[1]:
        field = planewave.SeparableField([V1, V2])
        inside = True
        min_curv = np.inf
        lams = np.linspace(window[0], window[1], lam_samples + 2)[1:-1]
        for lv in lams:
            curve = fermi.radial_trace(field, float(lv), n=128)
            min_curv = min(min_curv, float(curve.curvature.min()))
            if np.max(np.abs(curve.kappas)) >= edge:
                inside = False
                report["fermi_witness"] = {
                    "lambda": float(lv),
                    "kappa": curve.kappas[
                        int(np.argmax(np.max(np.abs(curve.kappas),
                                             axis=1)))].tolist()}
                break
        report["fermi_in_Ixx"] = bool(inside)
        report["fermi_min_curvature"] = min_curv
        report["fermi_curvature_positive"] = bool(min_curv > 0)
        if not inside or min_curv <= 0:
            report["pass"] = False
    return report


# ---------------------------------------------------------------------------
# mountain-pass geometry sign
# ---------------------------------------------------------------------------

def mountain_pass_sign(field, lam, delta, side, n_tau=16, n_curve=128,
                       n_x=12, center=(0.0, 0.0)):
    """I_side = -side * (2 pi)^{-d} int_Omega int_{K_side}
    |Psi(x, k)|^2 / (Lambda(k) - lambda) dk dx over the annular region
    K_side = {delta <= side (Lambda - lambda) <= 2 delta}, by the coarea
    formula in Lambda; strictly negative whenever K_side is nonempty."""
    side = int(np.sign(side))
    if side == 0:
        raise ValueError("side must be +1 or -1")
    taus = lam + side * np.linspace(delta, 2 * delta, n_tau)
    ax = np.linspace(0.0, 1.0, n_x, endpoint=False)
    X = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)
    vals = np.empty(n_tau)
    for i, tau in enumerate(taus):
        try:
            curve = fermi.radial_trace(field, float(tau), n=n_curve,
                                       center=np.asarray(center, dtype=float))
        except OutOfBand as exc:
            raise EmptyLevelSet(
                "no level set at tau = %g (K_%+d empty)" % (tau, side)) \
                from exc
        # cell-average of |Psi|^2 at each curve momentum (equals 1 for
        # normalized Bloch waves; computed rather than assumed)
        dens = np.zeros(len(curve.kappas))
        for x in X:
            dens += np.abs(field.psi(x, curve.kappas)) ** 2
        dens /= len(X)
        gn = np.linalg.norm(curve.grads, axis=1)
        vals[i] = curve.integrate(dens / gn) / (tau - lam)
    integral = np.trapezoid(vals, taus)
    return -side * integral / (2 * np.pi) ** field.d
