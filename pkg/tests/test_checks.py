import json
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from blochlap import checks, planewave as pw
from blochlap.errors import EmptyLevelSet
from blochlap.hill1d import Potential1D


# ---------------------------------------------------------------------------
# exponent regions (exact rational arithmetic)
# ---------------------------------------------------------------------------


class TestExponentRegion:
    def test_selfdual_helmholtz_pair_d3(self):
        # the classical self-dual L^{4/3} -> L^4 pair in three dimensions
        r = checks.exponent_region(3, Fraction(4, 3), 4)
        assert r.gutierrez
        # the pair sits exactly on the strict lower q-boundary of the
        # periodic-resolvent region (q > 4 required there), so only the
        # closed constant-coefficient bounds contain it
        assert not r.admissible
        assert checks.exponent_region(3, Fraction(4, 3), 5).admissible

    def test_corollary_window_d2(self):
        # d=2 self-dual window reads 6 < q < infinity
        r = checks.exponent_region(2, Fraction(7, 6), 7)
        assert r.corollary_selfdual
        assert not checks.exponent_region(2, Fraction(6, 5), 6).corollary_selfdual
        assert not checks.exponent_region(2, "inf", "inf").corollary_selfdual

    def test_p_equals_q_equals_2_all_false(self):
        r = checks.exponent_region(2, 2, 2)
        assert not r.admissible
        assert not r.resonant_admissible
        assert not r.gutierrez
        assert not r.corollary_selfdual
        r3 = checks.exponent_region(3, 2, 2)
        assert not r3.admissible and not r3.resonant_admissible

    def test_infinity_encoding(self):
        # q = infinity is admissible for small p when p > d/2 has no upper
        # constraint; encoded as 1/q = 0
        r = checks.exponent_region(2, Fraction(10, 9), "inf")
        assert r.resonant_admissible  # v=0 < u/d + (d-3)/(2d) = 9/20 - 1/4
        assert checks.exponent_region(3, 1, "inf").d == 3

    def test_invalid_exponent_rejected(self):
        with pytest.raises(ValueError):
            checks.exponent_region(2, Fraction(1, 2), 4)
        with pytest.raises(ValueError):
            checks.exponent_region(1, 2, 2)

    def test_float_agreement_away_from_boundary(self):
        # rational verdicts agree with a plain floating-point evaluation of
        # the same inequalities at points kept away from region boundaries
        rng = np.random.default_rng(3)
        margin = 1e-6
        checked = 0
        for d in (2, 3, 4):
            split = (d + 3) / (2 * (d + 1))
            pmax = (d + 1) / (2 * d)
            while checked < 200 * d:
                u = rng.uniform(0.01, 1.0)
                v = rng.uniform(0.0, 1.0)
                low1 = u / d + (d - 3) / (2 * d)
                low2 = d * u - (d + 1) / 2
                dists = [abs(u - split), abs(u - pmax), abs(u - 1),
                         abs(v - low1), abs(v - low2)]
                if min(dists) < margin:
                    continue
                if 1 >= u >= split:
                    f = v < low1
                elif split > u > pmax:
                    f = v < low2
                else:
                    f = False
                uf = Fraction(u).limit_denominator(10 ** 12)
                vf = Fraction(v).limit_denominator(10 ** 12)
                assert checks._verdict_resonant(d, uf, vf) == f
                checked += 1

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_equivalence_scan(self, d):
        tested, bad = checks.region_equivalence_scan(d, n_points=10000,
                                                     seed=11 * d)
        assert tested == 10000
        assert bad == []

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_boundary_adjacent_consistency(self, d):
        # just inside / outside p = 2(d+1)/(d+3): both characterizations flip
        # together (the equivalence assertion inside exponent_region holds)
        split_p = Fraction(2 * (d + 1), d + 3)
        eps = Fraction(1, 10 ** 6)
        for p in (split_p - eps, split_p, split_p + eps):
            u = 1 / p
            # pick q strictly inside the branch bound at this u
            low1, low2 = checks._branch_bounds(d, u)
            low = low1 if u >= Fraction(d + 3, 2 * (d + 1)) else low2
            if low <= 0:
                continue
            q = 1 / (low / 2)
            r = checks.exponent_region(d, p, q)
            assert r.resonant_admissible == r.resonant_riesz


# ---------------------------------------------------------------------------
# assumption verification
# ---------------------------------------------------------------------------


def figure_potential(scale=1.0):
    """2 scale sin^2(2 pi x1) cos(2 pi x2) / 10 as a cosine table."""
    a = 0.05 * scale
    c = {(0, 1): a, (0, -1): a,
         (2, 1): -a / 2, (2, -1): -a / 2, (-2, 1): -a / 2, (-2, -1): -a / 2}
    return pw.PotentialSpec.from_fourier(2, c)


class TestVerifyAssumptions:
    def test_free_all_pass(self):
        rep = checks.verify_assumptions(pw.PotentialSpec.free(2), 5.0)
        assert rep.all_pass
        assert rep.regular_frequency
        assert rep.a2b_min_curvature > 0.1
        assert rep.a3_max_ratio == pytest.approx(1.0, abs=1e-8)
        assert all(0.1 < r < 10.0 for r in rep.a2a_ratios["ratios"].values())
        # report serializes
        blob = json.dumps(rep.to_json())
        assert "caveat" in blob

    def test_weak_separable_pass(self):
        # almost-constant separable potential, frequency inside the window
        parts = [Potential1D.from_function(
            lambda x: 0.05 * np.cos(2 * np.pi * x), 64)] * 2
        pot = pw.PotentialSpec.from_separable(parts)
        rep = checks.verify_assumptions(pot, 4.0)
        assert rep.a1_pass
        assert rep.a2b_pass and rep.a2b_min_curvature > 0.0
        assert rep.a3_pass
        assert rep.all_pass

    def test_strong_potential_negative_curvature_witness(self):
        rep = checks.verify_assumptions(figure_potential(10.0), 15.0, S=6)
        assert not rep.a2b_pass
        assert rep.a2b_min_curvature < 0.0
        assert rep.a2b_witness is not None
        w = np.asarray(rep.a2b_witness, dtype=float)
        assert w.shape == (2,)
        assert not rep.all_pass

    def test_nonreal_potential_fails_a1(self):
        pot = pw.PotentialSpec.from_fourier(2, {(1, 0): 0.1})  # no (-1,0)
        ok, reasons = checks._check_a1(pot)
        assert not ok
        assert any("not real" in r for r in reasons)


# ---------------------------------------------------------------------------
# separable perturbation criterion
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def cos_part(delta):
    return Potential1D.from_function(
        lambda x: delta * np.cos(2 * np.pi * x), 64)


class TestSeparableCriterion:
    def test_constant_exact(self):
        V = Potential1D.constant(0.3)
        rep = checks.lemma13_verify(V, V, 0.3, 0.3, eps=1.0)
        assert rep["pass"]
        for band in rep["bands"]:
            assert band["c2_deviation"] < 1e-4
            assert band["convex_on_I"]
        assert rep["fermi_in_Ixx"]
        assert rep["fermi_min_curvature"] > 0

    def test_cos_perturbation_passes_wide_margin(self):
        # delta = 0.1 cosine perturbation with eps = 3: the excluded
        # neighbourhood of the zone edge is wide enough that the band stays
        # within min(eps/4, 1) of mu + k^2 in C^2
        V = cos_part(0.1)
        rep = checks.lemma13_verify(V, V, 0.0, 0.0, eps=3.0)
        assert rep["pass"]
        assert rep["window"]["contained"]
        dev = max(b["c2_deviation"] for b in rep["bands"])
        assert dev < 0.75

    def test_cos_perturbation_edge_blowup(self):
        # at eps = 1 the interval I reaches within 1/(8 pi) of the zone
        # edge, where the delta = 0.1 gap forces |E'' - 2| ~ a^2 v^2 /
        # (a^2 t^2 + v^2)^{3/2} with a = 2 pi, v = delta/2, t = 1/(8 pi):
        # about 5.96, far above the allowed min(eps/4, 1) = 0.25.  The
        # check must report this honestly.
        rep = checks.lemma13_verify(cos_part(0.1), cos_part(0.1),
                                    0.0, 0.0, eps=1.0)
        assert not rep["pass"]
        dev = max(b["c2_deviation"] for b in rep["bands"])
        a, v, t = 2 * np.pi, 0.05, 1 / (8 * np.pi)
        predicted = a * a * v * v / (a * a * t * t + v * v) ** 1.5
        assert dev == pytest.approx(predicted, rel=0.1)
        assert "witness_k" in rep["bands"][0]

    def test_large_delta_fails_convexity(self):
        rep = checks.lemma13_verify(cos_part(10.0), cos_part(10.0),
                                    0.0, 0.0, eps=1.0)
        assert not rep["pass"]
        assert not all(b["deviation_ok"] and b["convex_on_I"]
                       for b in rep["bands"])

    def test_monotone_in_delta(self):
        # pass at delta implies pass at delta / 2, and the C^2 deviation
        # shrinks monotonically along delta -> delta/2 -> delta/4
        devs = []
        for delta in (0.015, 0.0075, 0.00375):
            rep = checks.lemma13_verify(cos_part(delta), cos_part(delta),
                                        0.0, 0.0, eps=1.0)
            assert rep["pass"]
            devs.append(max(b["c2_deviation"] for b in rep["bands"]))
        assert devs[0] > devs[1] > devs[2]


# ---------------------------------------------------------------------------
# mountain-pass geometry sign
# ---------------------------------------------------------------------------


class TestMountainPass:
    def test_free_closed_form(self):
        # V=0: int_{K+} dk/(|k|^2-lam) = pi log 2 by polar coordinates,
        # independent of lam and delta while K+ stays inside the ball
        field = pw.FreeField(2)
        val = checks.mountain_pass_sign(field, 5.0, 0.1, +1)
        oracle = -np.pi * np.log(2.0) / (2 * np.pi) ** 2
        assert val == pytest.approx(oracle, rel=1e-3)

    def test_side_mirror_free(self):
        field = pw.FreeField(2)
        plus = checks.mountain_pass_sign(field, 5.0, 0.1, +1)
        minus = checks.mountain_pass_sign(field, 5.0, 0.1, -1)
        # |k|^2 has no reflection symmetry about the level set, but both
        # integrals take the closed polar form -pi log((lam+2d)/(lam+d))
        # resp. -pi log((lam-d)/(lam-2d)) ... both strictly negative and
        # close for delta << lam
        assert plus < 0 and minus < 0
        assert minus == pytest.approx(plus, rel=0.05)

    def test_sign_negative_over_grid(self):
        fields = [
            pw.FreeField(2),
            pw.SeparableField([cos_part(0.1)] * 2),
        ]
        for field in fields:
            for lam in (3.0, 5.0, 8.0):
                for delta in (0.05, 0.1, 0.2):
                    val = checks.mountain_pass_sign(field, lam, delta, +1,
                                                    n_tau=8, n_curve=64,
                                                    n_x=8)
                    assert val < 0.0

    def test_empty_level_set(self):
        field = pw.FreeField(2)
        with pytest.raises(EmptyLevelSet):
            checks.mountain_pass_sign(field, -3.0, 0.1, -1)

    def test_invalid_side(self):
        with pytest.raises(ValueError):
            checks.mountain_pass_sign(pw.FreeField(2), 5.0, 0.1, 0)
