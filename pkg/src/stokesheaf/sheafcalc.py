"""Integer morphism calculus on word-indexed cone-set families.

Morphisms between direct sums of cone sheaves are sparse integer matrices
whose every entry must satisfy the cone-inclusion support condition over
the region it lives on.  Gluing across a boundary ray is Id + theta N_ell
with N_ell nilpotent; inverses come from finite Neumann series because
every non-identity term strictly raises word length and the bases are
depth-truncated.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .cover import Ray, StripComplex, ray_level
from .errors import (
    NotAdjacent,
    NotLocallyNilpotent,
    RegionMismatch,
    SupportViolation,
)
from .words import (
    ConeSet,
    Region,
    Word,
    _required_handedness,
    align_ray,
    all_words,
    cone_inclusion,
    make_word,
    region_from_cell,
    region_from_ray,
    region_from_strip,
)


class Basis:
    """Depth-truncated word basis of one strip complex."""

    def __init__(self, cx: StripComplex, depth: int, x0_action=None):
        self.cx = cx
        self.depth = depth
        self.x0_action = cx.x0_action if x0_action is None else x0_action
        self.words = all_words(cx, depth, self.x0_action)
        self._known = set(self.words)

    def prepend(self, ray: Ray, word: Word):
        """The word ray*word, or None when it exceeds depth or breaks
        alternation."""
        n = len(word.letters) + 1
        if n > self.depth:
            return None
        if ray.handedness != _required_handedness(word.terminal, n):
            return None
        return make_word((ray.id,) + word.letters, word.terminal, self.cx,
                         self.x0_action)

    def empty(self, terminal: str) -> Word:
        return make_word((), terminal, self.cx, self.x0_action)


@dataclass
class MorphismMatrix:
    region: Region
    alpha: float
    entries: dict  # (source Word, target Word) -> nonzero int


def _check_support(region, alpha, entries):
    for (src, dst), coeff in entries.items():
        if coeff == 0:
            continue
        inner = ConeSet(word=dst, alpha=alpha, region=region)
        outer = ConeSet(word=src, alpha=alpha, region=region)
        if not cone_inclusion(inner, outer):
            raise SupportViolation(
                f"entry {src.label()} -> {dst.label()} (coeff {coeff}) violates "
                f"cone inclusion over region {region.label!r}"
            )


def make_matrix(region: Region, alpha: float, entries: dict,
                check: bool = True) -> MorphismMatrix:
    clean = {k: int(v) for k, v in entries.items() if v != 0}
    if check:
        _check_support(region, alpha, clean)
    return MorphismMatrix(region=region, alpha=alpha, entries=clean)


def identity_matrix(region: Region, alpha: float, words) -> MorphismMatrix:
    return MorphismMatrix(region=region, alpha=alpha,
                          entries={(w, w): 1 for w in words})


def matrix_add(f: MorphismMatrix, g: MorphismMatrix, check: bool = True):
    if f.region != g.region:
        raise RegionMismatch("cannot add matrices over different regions")
    entries = dict(f.entries)
    for k, v in g.entries.items():
        entries[k] = entries.get(k, 0) + v
    return make_matrix(f.region, f.alpha, entries, check=check)


def matrix_scale(f: MorphismMatrix, c: int) -> MorphismMatrix:
    if c == 0:
        return MorphismMatrix(f.region, f.alpha, {})
    return MorphismMatrix(f.region, f.alpha,
                          {k: c * v for k, v in f.entries.items()})


def compose(f: MorphismMatrix, g: MorphismMatrix,
            check: bool = True) -> MorphismMatrix:
    """f after g: sources of g, targets of f."""
    if f.region != g.region:
        raise RegionMismatch(
            f"compose over different regions: {f.region.label!r} vs "
            f"{g.region.label!r}"
        )
    by_mid = {}
    for (mid, dst), coeff in f.entries.items():
        by_mid.setdefault(mid, []).append((dst, coeff))
    out = {}
    for (src, mid), cg in g.entries.items():
        for dst, cf in by_mid.get(mid, []):
            key = (src, dst)
            out[key] = out.get(key, 0) + cf * cg
    return make_matrix(f.region, f.alpha, out, check=check)


def restrict(f: MorphismMatrix, region: Region,
             check: bool = True) -> MorphismMatrix:
    """Region relabel (extension/restriction step); coefficients are kept,
    support is re-verified on the new region."""
    return make_matrix(region, f.alpha, f.entries, check=check)


def submatrix(f: MorphismMatrix, src_sign=None, dst_sign=None) -> MorphismMatrix:
    entries = {
        (s, d): c
        for (s, d), c in f.entries.items()
        if (src_sign is None or s.sign == src_sign)
        and (dst_sign is None or d.sign == dst_sign)
    }
    return MorphismMatrix(f.region, f.alpha, entries)


def _shifted(word: Word, eps) -> Word:
    return dataclasses.replace(word, c_hat=word.c_hat + eps)


def filtration_degree(f: MorphismMatrix, eps) -> bool:
    """True iff f factors through the apex shift by eps in Int K."""
    for (src, dst), coeff in f.entries.items():
        if coeff == 0:
            continue
        inner = ConeSet(word=dst, alpha=f.alpha, region=f.region)
        outer = ConeSet(word=_shifted(src, eps), alpha=f.alpha, region=f.region)
        if not cone_inclusion(inner, outer):
            return False
    return True


def neumann_invert(m: MorphismMatrix, eps, order: int | None = None,
                   check: bool = True) -> MorphismMatrix:
    """Inverse of Id + n via the alternating Neumann series.

    Requires some power of n to enter the eps filtration; with
    depth-truncated word bases n is nilpotent outright, so the series is
    finite and the inverse is exact on the basis.
    """
    words = sorted(
        {w for pair in m.entries for w in pair},
        key=lambda w: (len(w.letters), w.letters, w.terminal),
    )
    n_entries = dict(m.entries)
    for w in words:
        n_entries[(w, w)] = n_entries.get((w, w), 0) - 1
    n = make_matrix(m.region, m.alpha, n_entries, check=check)
    if order is None:
        order = max((len(w.letters) for w in words), default=0) + 1
    result = identity_matrix(m.region, m.alpha, words)
    power = identity_matrix(m.region, m.alpha, words)
    sign = -1
    reached = not n.entries
    for _ in range(order):
        power = compose(power, n, check=False)
        if not power.entries:
            reached = True
            break
        if filtration_degree(power, eps):
            reached = True
        result = matrix_add(result, matrix_scale(power, sign), check=False)
        sign = -sign
    if not reached:
        raise NotLocallyNilpotent(
            f"no power of the perturbation up to {order} enters the filtration"
        )
    return result


# ---------------------------------------------------------------------------
# gluing maps


@dataclass
class GluingMap:
    ray: str
    theta: int
    base: MorphismMatrix


def strip_side(cx: StripComplex, strip_id: str, ray: Ray) -> int:
    """+1 if the strip lies above the ray's supporting line, else -1."""
    strip = cx.strips[strip_id]
    lv = ray.level(cx.alpha)
    if strip.anchor_z is not None:
        return 1 if ray_level(strip.anchor_z, cx.family, cx.alpha) > lv else -1
    lo, hi = strip.band
    if lo >= lv - 1e-9:
        return 1
    if hi <= lv + 1e-9:
        return -1
    raise NotAdjacent(f"strip {strip_id} does not border ray {ray.id}")


def theta_sign(cx: StripComplex, ray: Ray, source: str, target: str) -> int:
    """Sign of the gluing from the source strip to the target strip."""
    if set((source, target)) != set(ray.strips):
        raise NotAdjacent(f"ray {ray.id} does not join {source} and {target}")
    above = strip_side(cx, target, ray) > 0
    if ray.handedness == "left":
        return 1 if above else -1
    return 1 if not above else -1


def nilpotent_matrix(basis: Basis, ray: Ray, region: Region,
                     check: bool = True) -> MorphismMatrix:
    """N_ell: prepend ell to the words of the sign component it consumes."""
    src_sign = "minus" if ray.handedness == "left" else "plus"
    entries = {}
    for w in basis.words:
        if w.sign != src_sign:
            continue
        out = basis.prepend(ray, w)
        if out is not None:
            entries[(w, out)] = 1
    return make_matrix(region, basis.cx.alpha, entries, check=check)


def gluing_matrix(basis: Basis, ray: Ray, source: str, target: str,
                  region: Region | None = None,
                  check: bool = True) -> GluingMap:
    """Gamma^{source,target} = Id + theta(source,target) N_ell."""
    if region is None:
        region = region_from_ray(ray)
    theta = theta_sign(basis.cx, ray, source, target)
    n = nilpotent_matrix(basis, ray, region, check=check)
    base = matrix_add(identity_matrix(region, basis.cx.alpha, basis.words),
                      matrix_scale(n, theta), check=check)
    return GluingMap(ray=ray.id, theta=theta, base=base)


# ---------------------------------------------------------------------------
# section propagation


@dataclass
class SectionVector:
    strip: str
    coeffs: dict  # Word -> int


def propagate_section(e: SectionVector, across: GluingMap,
                      target: str) -> SectionVector:
    out = {}
    for (src, dst), coeff in across.base.entries.items():
        c = e.coeffs.get(src, 0)
        if c:
            out[dst] = out.get(dst, 0) + coeff * c
    return SectionVector(strip=target, coeffs={w: c for w, c in out.items() if c})


def section_table(basis: Basis) -> dict:
    """e_P for every built strip, propagated from e_root = L + R."""
    cx = basis.cx
    root = cx.root
    table = {
        root: SectionVector(
            strip=root,
            coeffs={basis.empty("L"): 1, basis.empty("R"): 1},
        )
    }
    queue = [root]
    while queue:
        sid = queue.pop(0)
        for rid in cx.strips[sid].rays:
            ray = cx.rays[rid]
            other = ray.other_strip(sid)
            if other in table:
                continue
            gm = gluing_matrix(basis, ray, sid, other)
            table[other] = propagate_section(table[sid], gm, other)
            queue.append(other)
    return table


# ---------------------------------------------------------------------------
# the i / U / J construction


@dataclass
class PiData:
    pi: str
    strips: list  # P_1..P_n left to right
    chain: list  # rays between consecutive strips
    i_mats: dict  # P -> MorphismMatrix over the cell P cap Pi
    i_invs: dict  # P -> inverse
    U: MorphismMatrix
    eps_pi: complex


@dataclass
class SheafSystem:
    plus: StripComplex
    minus: StripComplex
    cells: list
    depth: int
    basis: Basis
    pi_data: dict  # minus strip id -> PiData
    cell_matrices: dict  # (P, Pi) -> MorphismMatrix (J = i o U over the cell)


def _cell_lookup(cells):
    return {(c.alpha_strip, c.minus_alpha_strip): c for c in cells}


def _eps_pi(cells, pi, alpha):
    bounded = [c.epsilon for c in cells
               if c.minus_alpha_strip == pi and c.epsilon is not None]
    if not bounded:
        # no bounded cells: any interior direction of K works
        return complex(2.0 * math.cos(alpha) * 0.5, 0.0)
    # componentwise minimum in the K-frame coordinates
    s = math.sin(2.0 * alpha)
    xs, ys = [], []
    for eps in bounded:
        h = (eps * complex(math.cos(alpha), math.sin(alpha)).conjugate()).imag
        # decompose eps = x e^{i a} + y e^{-i a}
        x = (eps * complex(math.cos(alpha), -math.sin(alpha))).imag / s
        y = -(eps * complex(math.cos(alpha), math.sin(alpha))).imag / s
        xs.append(x)
        ys.append(y)
    x, y = min(xs), min(ys)
    ea = complex(math.cos(alpha), math.sin(alpha))
    return x * ea + y * ea.conjugate()


def _i_recursion(basis: Basis, plus: StripComplex, pi: str, ps, chain, lookup):
    """Left-to-right i^+ and right-to-left i^- with unique extensions."""
    alpha = plus.alpha
    regions = {p: region_from_cell(lookup[(p, pi)]) for p in ps}
    plus_words = [w for w in basis.words if w.sign == "plus"]
    minus_words = [w for w in basis.words if w.sign == "minus"]

    i_plus = {ps[0]: identity_matrix(regions[ps[0]], alpha, plus_words)}
    for k in range(len(chain)):
        src, dst = ps[k], ps[k + 1]
        gm = gluing_matrix(basis, chain[k], src, dst, regions[dst], check=False)
        i_plus[dst] = compose(gm.base, restrict(i_plus[src], regions[dst],
                                                check=False), check=False)
    i_minus = {ps[-1]: identity_matrix(regions[ps[-1]], alpha, minus_words)}
    for k in range(len(chain) - 1, -1, -1):
        src, dst = ps[k + 1], ps[k]
        gm = gluing_matrix(basis, chain[k], src, dst, regions[dst], check=False)
        i_minus[dst] = compose(gm.base, restrict(i_minus[src], regions[dst],
                                                 check=False), check=False)
    i_mats = {}
    for p in ps:
        i_mats[p] = matrix_add(i_plus[p], i_minus[p], check=True)
    return regions, i_mats


def _a_tilde(basis, plus, pi1, pi2, ell, pis, lookup):
    """A~_{pi1 pi2} = i_{pi2 P}^{-1} i_{pi1 P} on the leftmost shared strip,
    over the ray ell."""
    shared = [p for p in pis[pi1].strips if p in set(pis[pi2].strips)]
    if not shared:
        raise NotAdjacent(f"{pi1} and {pi2} share no alpha-strip")
    BIG = 1e18
    p = max(shared, key=lambda q: (min(plus.strips[q].band[1], BIG),
                                   max(plus.strips[q].band[0], -BIG)))
    region = region_from_ray(ell)
    left = restrict(pis[pi2].i_invs[p], region, check=False)
    right = restrict(pis[pi1].i_mats[p], region, check=False)
    return compose(left, right, check=False)


def build_i_psi_phi(plus: StripComplex, minus: StripComplex, cells,
                    depth: int, check: bool = True) -> SheafSystem:
    """The full inductive construction: per minus-strip recursions, the
    U matrices over the minus tree, and J = i o U per cell."""
    from .cover import alpha_strips_along

    basis = Basis(plus, depth)
    lookup = _cell_lookup(cells)
    alpha = plus.alpha

    pis = {}
    for pi in sorted(minus.strips):
        ps, chain = alpha_strips_along(pi, cells, plus)
        if not ps:
            continue
        regions, i_mats = _i_recursion(basis, plus, pi, ps, chain, lookup)
        eps_pi = _eps_pi(cells, pi, alpha)
        i_invs = {
            p: neumann_invert(i_mats[p], eps_pi, check=False) for p in ps
        }
        pis[pi] = PiData(pi=pi, strips=ps, chain=chain, i_mats=i_mats,
                         i_invs=i_invs, U=None, eps_pi=eps_pi)

    _build_U(basis, plus, minus, pis, lookup)

    cell_matrices = {}
    for (p, pi), cell in lookup.items():
        if pi not in pis or p not in pis[pi].i_mats:
            continue
        region = region_from_cell(cell)
        mat = compose(restrict(pis[pi].i_mats[p], region, check=False),
                      restrict(pis[pi].U, region, check=False),
                      check=check)
        cell_matrices[(p, pi)] = mat
    return SheafSystem(plus=plus, minus=minus, cells=cells, depth=depth,
                       basis=basis, pi_data=pis, cell_matrices=cell_matrices)


def _minus_tree_edges(minus: StripComplex, pis):
    """Tree edges (nearer-root strip, farther strip, ray), BFS order."""
    order = {minus.root: 0}
    out = []
    queue = [minus.root]
    while queue:
        sid = queue.pop(0)
        for rid in sorted(minus.strips[sid].rays):
            ray = minus.rays[rid]
            other = ray.other_strip(sid)
            if other in order:
                continue
            order[other] = order[sid] + 1
            if sid in pis and other in pis:
                out.append((sid, other, ray))
            queue.append(other)
    return out


def _build_U(basis, plus, minus, pis, lookup):
    alpha = plus.alpha
    edges = _minus_tree_edges(minus, pis)
    adj = {}
    for a, b, ray in edges:
        adj.setdefault(a, []).append((b, ray))
        adj.setdefault(b, []).append((a, ray))
    a_tilde = {}

    def get_a_tilde(src, dst, ray):
        key = (src, dst)
        if key not in a_tilde:
            a_tilde[key] = _a_tilde(basis, plus, src, dst, ray, pis, lookup)
        return a_tilde[key]

    # U columns: pi -> {source word -> {target word -> coeff}}
    cols = {pi: {} for pi in pis}
    root = minus.root if minus.root in pis else sorted(pis)[0]

    # base: split i^{-1}(L) + i^{-1}(R) at the root cell by target sign
    p0 = plus.root if plus.root in pis[root].i_invs else pis[root].strips[0]
    inv = pis[root].i_invs[p0]
    wl, wr = basis.empty("L"), basis.empty("R")
    b = {}
    for (src, dst), coeff in inv.entries.items():
        if src == wl or src == wr:
            b[dst] = b.get(dst, 0) + coeff
    cols[root][wl] = {w: c for w, c in b.items() if w.sign == "plus" and c}
    cols[root][wr] = {w: c for w, c in b.items() if w.sign == "minus" and c}

    def transport(word):
        """Spread an existing column to every minus strip along the tree."""
        seen = {pi for pi in pis if word in cols[pi]}
        queue = list(seen)
        while queue:
            src = queue.pop(0)
            for dst, ray in adj.get(src, []):
                if dst in seen:
                    continue
                at = get_a_tilde(src, dst, ray)
                block = submatrix(at, src_sign=word.sign, dst_sign=word.sign)
                cols[dst][word] = _apply(block, cols[src][word])
                seen.add(dst)
                queue.append(dst)

    transport(wl)
    transport(wr)

    # new letters level by level; the word ell*w is owned by the tree
    # endpoint nearer the root
    for length in range(1, basis.depth + 1):
        created = []
        for pi1, pi2, ell in edges:
            al = align_ray(ell, plus, list(lookup.values()))
            for word in sorted(list(cols[pi1]),
                               key=lambda w: (w.letters, w.terminal)):
                if len(word.letters) != length - 1:
                    continue
                new_word = basis.prepend(al, word)
                if new_word is None:
                    continue
                if any(new_word in cols[q] for q in cols):
                    continue
                sig, sig2 = word.sign, new_word.sign
                at12 = get_a_tilde(pi1, pi2, ell)
                at21 = get_a_tilde(pi2, pi1, ell)
                cross = submatrix(at12, src_sign=sig, dst_sign=sig2)
                back = submatrix(at21, src_sign=sig2, dst_sign=sig2)
                # The sign convention here is pinned by the requirement that
                # the assembled cell matrices have diagonal (-1)^{|w|}; see
                # the notes on the orientation of the minus-family gluing.
                th = theta_sign(minus, ell, pi2, pi1)
                vec = _apply(cross, cols[pi1][word])
                vec = _apply(back, vec)
                vec = {w: th * c for w, c in vec.items() if c}
                if vec:
                    cols[pi1][new_word] = vec
                    created.append(new_word)
        for w in created:
            transport(w)

    for pi, data in pis.items():
        entries = {}
        for src, vec in cols[pi].items():
            for dst, c in vec.items():
                if c:
                    entries[(src, dst)] = c
        data.U = make_matrix(region_from_strip(pi), alpha, entries, check=True)


def _apply(matrix: MorphismMatrix, vec: dict) -> dict:
    out = {}
    for (src, dst), coeff in matrix.entries.items():
        c = vec.get(src, 0)
        if c:
            out[dst] = out.get(dst, 0) + coeff * c
    return {w: c for w, c in out.items() if c}


def kernel_rank_check(system: SheafSystem, cell_key, max_len: int):
    """Finite-rank diagnostic: rank of the cell matrix truncated to words
    of length <= max_len."""
    import numpy as np

    mat = system.cell_matrices[cell_key]
    words = sorted({w for pair in mat.entries for w in pair},
                   key=lambda w: (len(w.letters), w.letters, w.terminal))
    words = [w for w in words if len(w.letters) <= max_len]
    idx = {w: i for i, w in enumerate(words)}
    dense = np.zeros((len(words), len(words)))
    for (src, dst), c in mat.entries.items():
        if src in idx and dst in idx:
            dense[idx[dst], idx[src]] = c
    rank = int(np.linalg.matrix_rank(dense)) if words else 0
    return {"dim": len(words), "rank": rank, "kernel_dim": len(words) - rank}
