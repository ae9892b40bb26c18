import cmath
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from stokesheaf.continuation import (
    ContinuationReport,
    Parallelogram,
    borel_singularity_table,
    brute_small_count,
    compute_U_set,
    compute_singularities,
    fiber_apex,
    frame_coords,
    frame_point,
    largest_parallelogram,
    locate_fiber,
    sheet_set,
)
from stokesheaf.cover import build_strip_complex, intersect_complexes
from stokesheaf.errors import DegenerateInput, InvariantFailure
from stokesheaf.potential import Polynomial
from stokesheaf.sheafcalc import build_i_psi_phi, section_table
from stokesheaf.stokes import trace_geometry
from stokesheaf.words import ConeK, c_hat_word


@pytest.fixture(scope="module")
def airy():
    V = Polynomial((0, 1))
    alpha = 0.3
    geom = trace_geometry(V, alpha)
    depth = 3
    x0 = 0.9 + 0.4j
    plus = build_strip_complex(geom, "plus", x0, depth)
    minus = build_strip_complex(geom, "minus", x0, depth)
    cells = intersect_complexes(plus, minus)
    system = build_i_psi_phi(plus, minus, cells, depth)
    return system


@pytest.fixture(scope="module")
def airy_report(airy):
    strip_id, z = locate_fiber(airy.plus, 1.6 + 0.2j)
    return compute_singularities(airy, strip_id, z)


class TestFrame:
    @given(
        st.floats(min_value=-5, max_value=5),
        st.floats(min_value=-5, max_value=5),
        st.floats(min_value=0.05, max_value=math.pi / 2 - 0.05),
    )
    @settings(max_examples=60, deadline=None)
    def test_roundtrip(self, p, q, alpha):
        origin = 0.3 - 0.8j
        s = frame_point(p, q, origin, alpha)
        p2, q2 = frame_coords(s, origin, alpha)
        assert abs(p2 - p) < 1e-9 and abs(q2 - q) < 1e-9

    def test_degenerate_alpha(self):
        with pytest.raises(DegenerateInput):
            frame_coords(1 + 1j, 0j, 0.0)


class TestParallelogram:
    def test_side_directions(self):
        par = Parallelogram(center=1 + 2j, alpha=0.4, half_minus=1.5,
                            half_plus=0.7)
        a, b, c, d = par.vertices
        assert abs((b - a) / cmath.exp(-0.4j) - 3.0) < 1e-12
        assert abs((c - b) / cmath.exp(0.4j) - 1.4) < 1e-12
        assert abs((d - a) - (c - b)) < 1e-12

    def test_contains_center(self):
        par = Parallelogram(center=1j, alpha=0.4, half_minus=1.0,
                            half_plus=1.0)
        assert par.contains(1j)
        assert not par.contains(1j + 3 * cmath.exp(-0.4j))

    def test_homothety_fixes_A(self):
        par = Parallelogram(center=2 - 1j, alpha=0.6, half_minus=2.0,
                            half_plus=1.0)
        sub = par.homothety(0.5)
        assert abs(sub.corner_A - par.corner_A) < 1e-12
        assert abs(sub.half_minus - 1.0) < 1e-12

    def test_largest_avoids_cuts(self):
        rng = random.Random(7)
        alpha = 0.5
        for _ in range(50):
            minus_cuts = [
                complex(rng.uniform(-4, 4), rng.uniform(-4, 4))
                for _ in range(5)
            ]
            plus_cuts = [
                complex(rng.uniform(-4, 4), rng.uniform(-4, 4))
                for _ in range(3)
            ]
            try:
                par = largest_parallelogram(0j, alpha, minus_cuts, plus_cuts)
            except DegenerateInput:
                continue
            for g in minus_cuts:
                assert not par.cut_meets(g)
            for g in plus_cuts:
                # a ray in direction e^{i alpha} from g misses the box
                for t in [0.0, 0.5, 1.0, 2.0, 5.0, 20.0]:
                    assert not par.contains(g + t * cmath.exp(1j * alpha))

    def test_cut_through_center_rejected(self):
        with pytest.raises(DegenerateInput):
            largest_parallelogram(0j, 0.5, [0j], [])


class TestUSet:
    def test_root_depth_zero_rays(self, airy):
        z = 0.3 + 0.1j
        sections = section_table(airy.basis)
        root = airy.plus.root
        rays = compute_U_set(airy.plus, sections, z, strips=[root])[root]
        assert len(rays) == 2
        z0 = complex(airy.plus.x0_action)
        apexes = sorted((r["apex"] for r in rays),
                        key=lambda a: (a.real, a.imag))
        want = sorted((z0 - z, -z0 + z), key=lambda a: (a.real, a.imag))
        assert all(abs(a - w) < 1e-12 for a, w in zip(apexes, want))

    def test_ray_count_matches_support(self, airy):
        sections = section_table(airy.basis)
        removed = compute_U_set(airy.plus, sections, 0.2j)
        for sid, rays in removed.items():
            assert len(rays) == len(sections[sid].coeffs)

    def test_apexes_match_direct_formula(self, airy):
        z = 0.15 - 0.4j
        sections = section_table(airy.basis)
        removed = compute_U_set(airy.plus, sections, z)
        for rays in removed.values():
            for r in rays:
                w = r["word"]
                c = c_hat_word(w.letters, w.terminal, airy.plus)
                want = c - z if w.sign == "plus" else c + z
                assert abs(r["apex"] - complex(want)) < 1e-9


class TestSingularities:
    def test_disjointness(self, airy_report):
        rep = airy_report
        for e in rep.singular_apexes:
            assert not rep.base_U.cut_meets(e["point"])

    def test_smallness_certified(self, airy_report):
        assert airy_report.smallness_certified

    def test_contains_section_support_words(self, airy_report, airy):
        sections = section_table(airy.basis)
        labels = {e["word"].label() for e in airy_report.singular_apexes}
        for w in sections[airy_report.strip].coeffs:
            assert w.label() in labels

    def test_two_path_agreement(self, airy_report, airy):
        z = airy_report.fiber_point
        for e in airy_report.singular_apexes:
            w = e["word"]
            c = complex(c_hat_word(w.letters, w.terminal, airy.plus))
            want = c - z if w.sign == "plus" else c + z
            assert abs(e["point"] - want) < 1e-9

    def test_depth_monotone(self, airy):
        V = Polynomial((0, 1))
        geom = trace_geometry(V, 0.3)
        x0 = 0.9 + 0.4j
        base = None
        gammas = []
        for depth in (1, 2, 3):
            plus = build_strip_complex(geom, "plus", x0, depth)
            minus = build_strip_complex(geom, "minus", x0, depth)
            cells = intersect_complexes(plus, minus)
            system = build_i_psi_phi(plus, minus, cells, depth)
            sid, z = locate_fiber(plus, 1.6 + 0.2j)
            rep = compute_singularities(system, sid, z, base_U=base)
            base = rep.base_U
            gammas.append(rep.gamma)
        for small, big in zip(gammas, gammas[1:]):
            for g in small:
                assert min(abs(g - h) for h in big) < 1e-8

    def test_smallness_probe_counts(self, airy, airy_report):
        rng = random.Random(11)
        z = airy_report.fiber_point
        words = [e["word"] for e in airy_report.singular_apexes]
        points = airy_report.gamma
        K = ConeK(airy.plus.alpha)
        for _ in range(30):
            s = complex(rng.uniform(-6, 6), rng.uniform(-6, 6))
            direct = sum(1 for g in points if K.contains(s - g))
            assert direct == brute_small_count(airy.plus, airy.depth,
                                              words, z, s)

    def test_cut_meeting_U_raises(self, airy):
        sid, z = locate_fiber(airy.plus, 1.6 + 0.2j)
        sections = section_table(airy.basis)
        w = next(iter(sections[sid].coeffs))
        bad = Parallelogram(center=fiber_apex(w, z), alpha=airy.plus.alpha,
                            half_minus=0.5, half_plus=0.5)
        with pytest.raises(InvariantFailure):
            compute_singularities(airy, sid, z, base_U=bad)


class TestSheetSet:
    def test_connected(self, airy_report):
        sh = sheet_set(airy_report)
        assert sh.is_connected()

    def test_membership(self, airy_report):
        sh = sheet_set(airy_report)
        a = sh.apex
        deep = frame_point(0.3, 0.3, a, sh.alpha)
        assert sh.contains(deep)
        assert not sh.contains(a - 1.0)
        for g in sh.cuts:
            assert not sh.contains(g + 0.2 * cmath.exp(-1j * sh.alpha))


class TestPipeline:
    def test_airy_table(self):
        table, rep = borel_singularity_table([0, 1], 0.3, 0.9 + 0.4j,
                                             1.6 + 0.2j, 2)
        assert rep.smallness_certified
        labels = {e["word"].label() for e in table}
        assert "L" in labels and "R" in labels
        assert len(table) == len({
            (round(e["apex"].real, 9), round(e["apex"].imag, 9),
             e["word"].label())
            for e in table
        })
