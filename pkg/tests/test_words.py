import cmath
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stokesheaf.cover import (
    QC,
    Strip,
    build_strip_complex,
    intersect_complexes,
    load_synthetic,
    make_cell,
)
from stokesheaf.errors import MalformedWord, RegionMismatch
from stokesheaf.potential import Polynomial
from stokesheaf.stokes import trace_geometry
from stokesheaf.words import (
    ConeK,
    ConeSet,
    Region,
    align_ray,
    align_word,
    all_words,
    c_hat_word,
    cone_inclusion,
    enumerate_small,
    make_word,
    region_from_cell,
    region_from_ray,
    region_slice,
    validate_word,
    word_sign,
)

ALPHA = 0.7

SYNTH = {
    "alpha": ALPHA,
    "x0_action": "1/4+1/4i",
    "root": "P0",
    "strips": [
        {"id": "P0", "family": "plus", "shape": {"kind": "half_plane", "side": "above"}},
        {"id": "P1", "family": "plus", "shape": "strip"},
        {"id": "P2", "family": "plus", "shape": {"kind": "half_plane", "side": "below"}},
    ],
    "rays": [
        {"id": "r1", "c_hat": "1+2i", "handedness": "right", "strips": ["P0", "P1"]},
        {"id": "g1", "c_hat": "-1i", "handedness": "left", "strips": ["P1", "P2"]},
    ],
}


@pytest.fixture(scope="module")
def cx():
    return load_synthetic(SYNTH)["plus"]


class TestConeK:
    def test_contains(self):
        K = ConeK(0.5)
        assert K.contains(1.0)
        assert K.contains(0.0)
        assert K.contains(cmath.exp(0.5j))  # boundary counts as inside
        assert not K.contains(cmath.exp(0.51j))
        assert not K.contains(-1.0)

    def test_interior(self):
        K = ConeK(0.5)
        assert K.interior_contains(1.0)
        assert not K.interior_contains(cmath.exp(0.5j))
        assert not K.interior_contains(0.0)


class TestWords:
    def test_sign_rules(self, cx):
        assert word_sign((), "L", cx) == "plus"
        assert word_sign((), "R", cx) == "minus"
        assert word_sign(("r1",), "L", cx) == "minus"  # leftmost right-going
        assert word_sign(("g1",), "R", cx) == "plus"

    def test_alternation_enforced(self, cx):
        validate_word(("r1",), "L", cx)
        validate_word(("g1", "r1"), "L", cx)
        validate_word(("g1",), "R", cx)
        with pytest.raises(MalformedWord):
            validate_word(("g1",), "L", cx)
        with pytest.raises(MalformedWord):
            validate_word(("r1", "r1"), "L", cx)
        with pytest.raises(MalformedWord):
            validate_word(("nope",), "L", cx)

    def test_c_hat_terminals(self, cx):
        z0 = QC(Fraction(1, 4), Fraction(1, 4))
        assert c_hat_word((), "L", cx) == z0
        assert c_hat_word((), "R", cx) == -z0

    def test_c_hat_two_letters(self, cx):
        # g1 r1 L with r1 right-going (1+2i), g1 left-going (-i):
        # z(x0) - 2(1+2i) + 2(-i)
        want = QC(Fraction(1, 4), Fraction(1, 4)) + QC(-2, -4) + QC(0, -2)
        assert c_hat_word(("g1", "r1"), "L", cx) == want

    def test_word_equality_ignores_apex(self, cx):
        a = make_word(("r1",), "L", cx)
        b = make_word(("r1",), "L", cx, x0_action=QC(9, 9))
        assert a == b


class TestEnumeration:
    def test_all_words_depth2(self, cx):
        ws = all_words(cx, 2)
        labels = {w.label() for w in ws}
        assert labels == {"L", "R", "r1L", "g1R", "g1r1L", "r1g1R"}

    def test_sorted_by_length_then_lex(self, cx):
        ws = all_words(cx, 3)
        key = [(len(w.letters), w.letters, w.terminal) for w in ws]
        assert key == sorted(key)

    def test_enumerate_small_matches_bruteforce(self, cx):
        rng = random.Random(7)
        K = ConeK(cx.alpha)
        for _ in range(25):
            s = complex(rng.uniform(-8, 8), rng.uniform(-8, 8))
            got = enumerate_small(cx, s, 3)
            want = [w for w in all_words(cx, 3) if K.contains(s - complex(w.c_hat))]
            assert [w.label() for w in got] == [w.label() for w in want]

    def test_smallness_monotone(self, cx):
        rng = random.Random(11)
        for _ in range(25):
            s = complex(rng.uniform(-6, 6), rng.uniform(-6, 6))
            kappa = rng.uniform(0, 3) * cmath.exp(1j * rng.uniform(-cx.alpha, cx.alpha))
            small = {w.label() for w in enumerate_small(cx, s, 3)}
            bigger = {w.label() for w in enumerate_small(cx, s + kappa, 3)}
            assert small <= bigger

    def test_far_negative_s_empty(self, cx):
        assert enumerate_small(cx, -1e6, 3) == []


def _cone_set(word, region, alpha=ALPHA):
    return ConeSet(word=word, alpha=alpha, region=region)


def _fake_word(sign, apex):
    from stokesheaf.words import Word

    return Word(letters=(), terminal="L" if sign == "plus" else "R",
                family="plus", sign=sign, c_hat=apex)


class TestConeInclusion:
    def test_reflexive(self, cx):
        w = make_word((), "L", cx)
        r = region_slice(0j)
        assert cone_inclusion(_cone_set(w, r), _cone_set(w, r))

    def test_same_sign_real_shift(self):
        r = Region(kind="strip", label="P")
        inner = _cone_set(_fake_word("plus", 1.0), r)
        outer = _cone_set(_fake_word("plus", 0.0), r)
        assert cone_inclusion(inner, outer)
        assert not cone_inclusion(outer, inner)

    def test_mixed_sign_needs_corner(self):
        no_corner = Region(kind="strip", label="P")
        inner = _cone_set(_fake_word("minus", 0.0), no_corner)
        outer = _cone_set(_fake_word("plus", 0.0), no_corner)
        assert not cone_inclusion(inner, outer)
        with_A = Region(kind="cell", corner_A=5.0)
        inner2 = _cone_set(_fake_word("minus", 0.0), with_A)
        outer2 = _cone_set(_fake_word("plus", 0.0), with_A)
        assert cone_inclusion(inner2, outer2)  # 2A in K

    def test_mixed_sign_reverse_uses_C(self):
        with_C = Region(kind="cell", corner_C=-3.0)
        inner = _cone_set(_fake_word("plus", 0.0), with_C)
        outer = _cone_set(_fake_word("minus", 0.0), with_C)
        assert cone_inclusion(inner, outer)  # -2C = 6 in K
        with_C2 = Region(kind="cell", corner_C=3.0)
        assert not cone_inclusion(
            _cone_set(_fake_word("plus", 0.0), with_C2),
            _cone_set(_fake_word("minus", 0.0), with_C2),
        )

    def test_region_mismatch(self):
        a = Region(kind="strip", label="P")
        b = Region(kind="strip", label="Q")
        with pytest.raises(RegionMismatch):
            cone_inclusion(
                _cone_set(_fake_word("plus", 0.0), a),
                _cone_set(_fake_word("plus", 0.0), b),
            )

    def test_strict_excludes_equal_apex(self):
        r = Region(kind="strip", label="P")
        inner = _cone_set(_fake_word("plus", 0.0), r)
        outer = _cone_set(_fake_word("plus", 0.0), r)
        assert cone_inclusion(inner, outer)
        assert not cone_inclusion(inner, outer, strict=True)

    def test_partial_order_on_lattice(self):
        rng = random.Random(3)
        r = Region(kind="cell", corner_A=-1 - 0.2j, corner_C=1 + 0.2j)
        sets = []
        for _ in range(30):
            sign = rng.choice(["plus", "minus"])
            apex = complex(rng.randint(-4, 4), rng.randint(-4, 4))
            sets.append(_cone_set(_fake_word(sign, apex), r))
        for a in sets:
            assert cone_inclusion(a, a)
            for b in sets:
                ab = cone_inclusion(a, b)
                if ab and cone_inclusion(b, a):
                    assert a.word.sign == b.word.sign
                    assert abs(complex(a.word.c_hat - b.word.c_hat)) < 1e-9
                for c in sets:
                    if ab and cone_inclusion(b, c):
                        assert cone_inclusion(a, c)


def grid_oracle(inner, outer, n=60, margin=1e-6, extent=12.0):
    """Counterexample search for cone inclusion by dense sampling."""
    alpha = inner.alpha
    region = inner.region
    zs = []
    A, C = region.corner_A, region.corner_C
    if A is not None:
        zs.append(complex(A))
    if C is not None:
        zs.append(complex(C))
    if A is not None and C is not None:
        for t in np.linspace(0, 1, 7):
            zs.append(complex(A) + t * (complex(C) - complex(A)))
    re = np.linspace(-extent, extent, n)
    s = re[None, :] + 1j * re[:, None]

    def member(z, word, slack):
        sigma = 1 if word.sign == "plus" else -1
        rel = s + sigma * z - complex(word.c_hat)
        ang = np.abs(np.angle(rel))
        return (ang <= alpha + slack) | (np.abs(rel) < 1e-12)

    for z in zs:
        strictly_in = member(z, inner.word, -margin)
        strictly_out = ~member(z, outer.word, margin)
        if np.any(strictly_in & strictly_out):
            return False  # found a genuine counterexample
    return True


class TestInclusionVsGrid:
    def test_random_instances(self):
        rng = random.Random(17)
        agree = 0
        for _ in range(200):
            alpha = rng.uniform(0.3, 1.2)
            span = rng.uniform(0.5, 3.0)
            A = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            C = A + span * cmath.exp(1j * rng.uniform(-alpha * 0.9, alpha * 0.9))
            region = Region(kind="cell", corner_A=A, corner_C=C)
            inner = ConeSet(
                word=_fake_word(rng.choice(["plus", "minus"]),
                                complex(rng.randint(-3, 3), rng.randint(-3, 3))),
                alpha=alpha, region=region)
            outer = ConeSet(
                word=_fake_word(rng.choice(["plus", "minus"]),
                                complex(rng.randint(-3, 3), rng.randint(-3, 3))),
                alpha=alpha, region=region)
            decision = cone_inclusion(inner, outer)
            # skip instances whose decision quantity sits on the K boundary
            if _marginal(inner, outer, alpha):
                continue
            assert decision == grid_oracle(inner, outer), (inner, outer, alpha)
            agree += 1
        assert agree > 100


def _marginal(inner, outer, alpha, band=1e-3):
    a, b = inner.word.c_hat, outer.word.c_hat
    si, so = inner.word.sign, outer.word.sign
    if si == so:
        q = a - b
    elif si == "minus":
        if inner.region.corner_A is None:
            return False
        q = 2 * inner.region.corner_A + a - b
    else:
        if inner.region.corner_C is None:
            return False
        q = -2 * inner.region.corner_C + a - b
    qc = complex(q)
    if abs(qc) < band:
        return True
    return abs(abs(cmath.phase(qc)) - alpha) < band


AIRY = Polynomial((0, 1))


@pytest.fixture(scope="module")
def airy():
    geom = trace_geometry(AIRY, 0.3)
    x0 = 0.9 + 0.4j
    cp = build_strip_complex(geom, "plus", x0, 3)
    cm = build_strip_complex(geom, "minus", x0, 3)
    cells = intersect_complexes(cp, cm)
    return cp, cm, cells


class TestAlign:

    def test_align_ray_matches_apex_and_handedness(self, airy):
        cp, cm, cells = airy
        for ell in cm.rays.values():
            try:
                out = align_ray(ell, cp, cells)
            except Exception:
                continue
            assert out.family == "plus"
            assert out.handedness == ell.handedness
            assert abs(complex(out.c_hat) - complex(ell.c_hat)) < 1e-8

    def test_align_word_preserves_length_sign_apex(self, airy):
        cp, cm, cells = airy
        candidates = [w for w in all_words(cm, 2) if len(w.letters) > 0]
        checked = 0
        for w in candidates:
            try:
                out = align_word(w, cm, cp, cells)
            except Exception:
                continue
            assert len(out.letters) == len(w.letters)
            assert out.terminal == w.terminal
            assert out.sign == w.sign
            assert abs(complex(out.c_hat) - complex(w.c_hat)) < 1e-8
            checked += 1
        assert checked > 0
