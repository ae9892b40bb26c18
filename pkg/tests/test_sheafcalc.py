import math
import random

import numpy as np
import pytest

from stokesheaf.cover import (
    build_regions,
    build_strip_complex,
    intersect_complexes,
    load_synthetic,
)
from stokesheaf.errors import NotLocallyNilpotent, SupportViolation
from stokesheaf.potential import Polynomial
from stokesheaf.sheafcalc import (
    Basis,
    MorphismMatrix,
    build_i_psi_phi,
    compose,
    filtration_degree,
    gluing_matrix,
    identity_matrix,
    make_matrix,
    matrix_add,
    matrix_scale,
    neumann_invert,
    nilpotent_matrix,
    section_table,
    strip_side,
    theta_sign,
)
from stokesheaf.stokes import trace_geometry
from stokesheaf.words import (
    ConeSet,
    cone_inclusion,
    make_word,
    region_from_ray,
    region_from_strip,
)

SYNTH = {
    "alpha": 0.7,
    "x0_action": "1/4+1/4i",
    "root": "P1",
    "strips": [
        {"id": "P0", "family": "plus"},
        {"id": "P1", "family": "plus"},
        {"id": "P2", "family": "plus",
         "shape": {"kind": "half_plane", "side": "below"}},
    ],
    "rays": [
        {"id": "r1", "c_hat": "1+2i", "handedness": "right",
         "strips": ["P0", "P1"]},
        {"id": "g1", "c_hat": "-1i", "handedness": "left",
         "strips": ["P1", "P2"]},
    ],
}

FILT = {
    "alpha": 0.7,
    "x0_action": "0",
    "root": "P0",
    "strips": [
        {"id": "P0", "family": "plus"},
        {"id": "P1", "family": "plus"},
    ],
    "rays": [
        {"id": "r1", "c_hat": "-1", "handedness": "right",
         "strips": ["P0", "P1"]},
        {"id": "g1", "c_hat": "-3", "handedness": "left",
         "strips": ["P0", "P1"]},
    ],
}


@pytest.fixture(scope="module")
def synth():
    return load_synthetic(SYNTH)["plus"]


@pytest.fixture(scope="module")
def filt():
    return load_synthetic(FILT)["plus"]


class TestMatrices:
    def test_support_violation_mixed_over_strip(self, synth):
        basis = Basis(synth, 2)
        wl = basis.empty("L")
        wr = basis.empty("R")
        region = region_from_strip("P1")
        with pytest.raises(SupportViolation):
            make_matrix(region, synth.alpha, {(wl, wr): 1})

    def test_identity_passes_support(self, synth):
        basis = Basis(synth, 2)
        m = identity_matrix(region_from_strip("P1"), synth.alpha, basis.words)
        make_matrix(m.region, m.alpha, m.entries)  # no raise

    def test_compose_matches_dense_product(self, synth):
        basis = Basis(synth, 3)
        words = basis.words
        idx = {w: i for i, w in enumerate(words)}
        rng = random.Random(7)
        region = region_from_strip("P1")
        for _ in range(20):
            def rand_mat():
                entries = {}
                for _ in range(25):
                    s, d = rng.choice(words), rng.choice(words)
                    entries[(s, d)] = rng.randint(-3, 3)
                return MorphismMatrix(region, synth.alpha,
                                      {k: v for k, v in entries.items() if v})
            f, g = rand_mat(), rand_mat()
            h = compose(f, g, check=False)
            df = np.zeros((len(words), len(words)), dtype=int)
            dg = np.zeros_like(df)
            for (s, d), c in f.entries.items():
                df[idx[d], idx[s]] = c
            for (s, d), c in g.entries.items():
                dg[idx[d], idx[s]] = c
            dh = df @ dg
            for (s, d), c in h.entries.items():
                assert dh[idx[d], idx[s]] == c
            assert np.count_nonzero(dh) == len(h.entries)

    def test_add_scale(self, synth):
        basis = Basis(synth, 2)
        region = region_from_strip("P1")
        m = identity_matrix(region, synth.alpha, basis.words)
        z = matrix_add(m, matrix_scale(m, -1))
        assert z.entries == {}


class TestGluing:
    def test_nilpotent_prepends_letter(self, synth):
        basis = Basis(synth, 3)
        ray = synth.rays["r1"]
        n = nilpotent_matrix(basis, ray, region_from_ray(ray))
        for (src, dst), coeff in n.entries.items():
            assert coeff == 1
            assert src.sign == "plus"
            assert dst.letters == (ray.id,) + src.letters
            assert dst.terminal == src.terminal

    def test_nilpotent_squares_to_zero(self, synth):
        basis = Basis(synth, 3)
        for rid in ("r1", "g1"):
            ray = synth.rays[rid]
            n = nilpotent_matrix(basis, ray, region_from_ray(ray))
            assert compose(n, n, check=False).entries == {}

    def test_theta_antisymmetric(self, synth):
        for rid in ("r1", "g1"):
            ray = synth.rays[rid]
            a, b = ray.strips
            assert theta_sign(synth, ray, a, b) == -theta_sign(synth, ray, b, a)
            assert strip_side(synth, a, ray) == -strip_side(synth, b, ray)

    def test_involution_exact(self, synth):
        basis = Basis(synth, 3)
        for rid in ("r1", "g1"):
            ray = synth.rays[rid]
            a, b = ray.strips
            fwd = gluing_matrix(basis, ray, a, b)
            bwd = gluing_matrix(basis, ray, b, a)
            assert fwd.theta == -bwd.theta
            both = compose(fwd.base, bwd.base)
            ident = identity_matrix(both.region, synth.alpha, basis.words)
            assert both.entries == ident.entries


class TestFiltration:
    def test_degree_examples(self, filt):
        basis = Basis(filt, 3)
        wl = basis.empty("L")
        w = make_word(("g1", "r1"), "L", filt)
        # apex of w is -4, apex of L is 0: the drop is 4 along the real axis
        region = region_from_strip("P0")
        m = make_matrix(region, filt.alpha, {(w, wl): 1})
        assert filtration_degree(m, 1.0)
        assert filtration_degree(m, 4.0)
        assert not filtration_degree(m, 4.5)
        assert not filtration_degree(m, complex(3.0, 2.9))

    def test_identity_not_in_interior_filtration(self, filt):
        basis = Basis(filt, 2)
        region = region_from_strip("P0")
        m = identity_matrix(region, filt.alpha, basis.words)
        assert filtration_degree(m, 0.0)
        assert not filtration_degree(m, 0.5)


class TestNeumann:
    def test_gluing_inverse(self, synth):
        basis = Basis(synth, 3)
        eps = complex(0.5, 0.0)
        for rid in ("r1", "g1"):
            ray = synth.rays[rid]
            a, b = ray.strips
            gm = gluing_matrix(basis, ray, a, b)
            inv = neumann_invert(gm.base, eps)
            prod = compose(inv, gm.base)
            for (s, d), c in prod.entries.items():
                assert (s == d) == (c == 1)
            n = nilpotent_matrix(basis, ray, gm.base.region)
            expect = matrix_add(
                identity_matrix(gm.base.region, synth.alpha, basis.words),
                matrix_scale(n, -gm.theta))
            assert inv.entries == expect.entries

    def test_random_products(self, synth):
        basis = Basis(synth, 3)
        region = region_from_strip("P1")
        rng = random.Random(11)
        eps = complex(0.5, 0.0)
        rays = [synth.rays["r1"], synth.rays["g1"]]
        ident = identity_matrix(region, synth.alpha, basis.words)
        for _ in range(30):
            m = ident
            for _ in range(rng.randint(1, 4)):
                ray = rng.choice(rays)
                n = nilpotent_matrix(basis, ray, region, check=False)
                g = matrix_add(ident, matrix_scale(n, rng.choice((-1, 1))),
                               check=False)
                m = compose(m, g, check=False)
            inv = neumann_invert(m, eps, check=False)
            prod = compose(inv, m, check=False)
            assert prod.entries == ident.entries

    def test_not_locally_nilpotent(self, synth):
        basis = Basis(synth, 2)
        region = region_from_strip("P1")
        wl = basis.empty("L")
        m = MorphismMatrix(region, synth.alpha, {(wl, wl): 2})
        with pytest.raises(NotLocallyNilpotent):
            neumann_invert(m, complex(0.5, 0.0), check=False)


class TestSections:
    def test_synthetic_propagation(self, synth):
        basis = Basis(synth, 3)
        table = section_table(basis)
        e1 = table["P1"]
        assert {w.label() for w in e1.coeffs} == {"L", "R"}
        e0 = table["P0"]
        assert {w.label() for w in e0.coeffs} == {"L", "R", "r1L"}
        e2 = table["P2"]
        assert {w.label() for w in e2.coeffs} == {"L", "R", "g1R"}
        for e in table.values():
            assert all(c in (-1, 1) for c in e.coeffs.values())


@pytest.fixture(scope="module")
def airy_system():
    V = Polynomial((0, 1))
    alpha = 0.3
    geom = trace_geometry(V, alpha)
    depth = 3
    x0 = 0.9 + 0.4j
    plus = build_strip_complex(geom, "plus", x0, depth)
    minus = build_strip_complex(geom, "minus", x0, depth)
    cells = intersect_complexes(plus, minus)
    return build_i_psi_phi(plus, minus, cells, depth)


class TestSystem:
    def test_neumann_identities(self, airy_system):
        sys = airy_system
        for data in sys.pi_data.values():
            for p in data.strips:
                prod = compose(data.i_invs[p], data.i_mats[p], check=False)
                for (s, d), c in prod.entries.items():
                    assert s == d and c == 1

    def test_cell_matrix_diagonal(self, airy_system):
        sys = airy_system
        for mat in sys.cell_matrices.values():
            words = {w for pair in mat.entries for w in pair}
            for w in words:
                diag = mat.entries.get((w, w), 0)
                if diag:
                    assert diag == (-1) ** len(w.letters)

    def test_off_diagonal_strict(self, airy_system):
        sys = airy_system
        for mat in sys.cell_matrices.values():
            for (src, dst), coeff in mat.entries.items():
                if src == dst:
                    continue
                inner = ConeSet(word=dst, alpha=mat.alpha, region=mat.region)
                outer = ConeSet(word=src, alpha=mat.alpha, region=mat.region)
                assert cone_inclusion(inner, outer, strict=True)

    def test_u_block_diagonal(self, airy_system):
        sys = airy_system
        for data in sys.pi_data.values():
            for (src, dst) in data.U.entries:
                assert src.sign == dst.sign

    def test_base_diagonal_units(self, airy_system):
        sys = airy_system
        basis = sys.basis
        wl, wr = basis.empty("L"), basis.empty("R")
        for data in sys.pi_data.values():
            assert data.U.entries.get((wl, wl)) == 1
            assert data.U.entries.get((wr, wr)) == 1


@pytest.fixture(scope="module")
def weber_system():
    V = Polynomial((-1, 0, 1))
    alpha = 0.3
    geom = trace_geometry(V, alpha)
    depth = 2
    x0 = 0.2 + 0.9j
    plus = build_strip_complex(geom, "plus", x0, depth)
    minus = build_strip_complex(geom, "minus", x0, depth)
    cells = intersect_complexes(plus, minus)
    return build_i_psi_phi(plus, minus, cells, depth)


class TestTwoTurningPoints:
    """A minus strip here can cross several alpha-strips, so the boundary
    alignment has to search beyond the leftmost shared strip."""

    def test_cell_count(self, weber_system):
        assert len(weber_system.cell_matrices) == 19

    def test_neumann_identities(self, weber_system):
        for data in weber_system.pi_data.values():
            for p in data.strips:
                prod = compose(data.i_invs[p], data.i_mats[p], check=False)
                for (s, d), c in prod.entries.items():
                    assert s == d and c == 1

    def test_cell_matrix_diagonal(self, weber_system):
        for mat in weber_system.cell_matrices.values():
            words = {w for pair in mat.entries for w in pair}
            for w in words:
                diag = mat.entries.get((w, w), 0)
                if diag:
                    assert diag == (-1) ** len(w.letters)

    def test_off_diagonal_strict(self, weber_system):
        for mat in weber_system.cell_matrices.values():
            for (src, dst), coeff in mat.entries.items():
                if src == dst:
                    continue
                inner = ConeSet(word=dst, alpha=mat.alpha, region=mat.region)
                outer = ConeSet(word=src, alpha=mat.alpha, region=mat.region)
                assert cone_inclusion(inner, outer, strict=True)
