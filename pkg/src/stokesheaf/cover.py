"""Strip decomposition of the universal cover for each angle family.

Strips are tree nodes, boundary rays are edges carrying an apex c_hat and a
left/right handedness; the two families intersect in parallelogram cells.
Numeric complexes are built from a traced Stokes geometry; synthetic
complexes load exact hand-built descriptions for the combinatorial layers.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from fractions import Fraction

from shapely.geometry import LineString, Point, box
from shapely.ops import polygonize, unary_union

from .errors import (
    DegenerateInput,
    InconsistentBranch,
    NonTransversal,
    ParseError,
)
from .potential import (
    BranchedPath,
    action_along_path,
    sqrt_continuation,
    _segment_clearance,
)
from .stokes import StokesGeometry, _geometry_scales

PLUS = "plus"
MINUS = "minus"
INF = float("inf")


class QC:
    """Complex number with exact rational real and imaginary parts.

    Arithmetic degrades to float complex as soon as an inexact operand
    appears; exactness is what makes synthetic apex bookkeeping testable
    by integer equality.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __add__(self, other):
        if isinstance(other, QC):
            return QC(self.re + other.re, self.im + other.im)
        if isinstance(other, int):
            return QC(self.re + other, self.im)
        return complex(self) + other

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return QC(-self.re, -self.im)

    def __mul__(self, other):
        if isinstance(other, int):
            return QC(self.re * other, self.im * other)
        if isinstance(other, QC):
            return QC(self.re * other.re - self.im * other.im,
                      self.re * other.im + self.im * other.re)
        return complex(self) * other

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, QC):
            return self.re == other.re and self.im == other.im
        return complex(self) == other

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"QC({self.re}, {self.im})"


def parse_exact_complex(text: str) -> QC:
    """Parse 'a', 'bi', 'a+bi' with 'p/q' rational parts into a QC."""
    t = str(text).strip().replace(" ", "")
    if not t:
        raise ParseError("empty complex literal")
    m = _SPLIT_RE.match(t)
    if not m:
        raise ParseError(f"bad exact complex literal: {text!r}")
    re_s, im_s = m.group("re"), m.group("im")

    def frac(s):
        if s in ("", "+"):
            return Fraction(1)
        if s == "-":
            return Fraction(-1)
        return Fraction(s)

    re_part = frac(re_s) if re_s else Fraction(0)
    im_part = frac(im_s[:-1]) if im_s else Fraction(0)
    return QC(re_part, im_part)


import re as _re

_SPLIT_RE = _re.compile(
    r"""^(?P<re>[+-]?\d+(?:/\d+)?(?![ij\d/]))?
         (?P<im>[+-]?(?:\d+(?:/\d+)?)?[ij])?$""",
    _re.VERBOSE,
)


@dataclass(frozen=True)
class Ray:
    id: str
    c_hat: object  # complex or QC
    handedness: str  # "left" | "right"
    family: str  # "plus" | "minus"
    strips: tuple  # (strip_id, strip_id), unordered pair
    base_edge: int | None = None  # region-adjacency edge for numeric complexes
    curve_index: int | None = None

    def level(self, alpha: float) -> float:
        """Transverse height of the ray's supporting line."""
        return ray_level(self.c_hat, self.family, alpha)

    def other_strip(self, strip_id: str) -> str:
        a, b = self.strips
        return b if strip_id == a else a


def ray_level(c_hat, family: str, alpha: float) -> float:
    z = complex(c_hat)
    if family == PLUS:
        return (z * cmath.exp(-1j * alpha)).imag
    return (z * cmath.exp(1j * alpha)).imag


@dataclass
class Strip:
    id: str
    family: str
    base_region: int | None
    deck_word: tuple
    shape: str  # "plane" | "half_plane" | "strip"
    rays: list
    band: tuple  # (lo, hi) transverse heights, possibly infinite
    anchor: complex | None = None
    anchor_z: complex | None = None
    anchor_v: complex | None = None


@dataclass
class StripComplex:
    family: str
    alpha: float
    root: str
    strips: dict
    rays: dict
    depth: int
    synthetic: bool = False
    x0: complex | None = None
    x0_action: object = 0j
    geom: StokesGeometry | None = None
    regions: object = None

    def strip_rays(self, strip_id: str):
        return [self.rays[r] for r in self.strips[strip_id].rays]

    def ray_between(self, a: str, b: str):
        for r in self.strips[a].rays:
            ray = self.rays[r]
            if set(ray.strips) == {a, b}:
                return ray
        return None

    def tree_invariant(self) -> bool:
        if len(self.rays) != len(self.strips) - 1:
            return False
        seen = {self.root}
        queue = [self.root]
        while queue:
            s = queue.pop()
            for r in self.strips[s].rays:
                o = self.rays[r].other_strip(s)
                if o not in seen:
                    seen.add(o)
                    queue.append(o)
        return len(seen) == len(self.strips)


@dataclass
class Cell:
    alpha_strip: str
    minus_alpha_strip: str
    vertices: list
    corner_A: complex | None
    corner_C: complex | None
    epsilon: complex | None


# ---------------------------------------------------------------------------
# planar regions of one curve family


@dataclass
class RegionEdge:
    id: int
    region_a: int
    region_b: int
    curve_index: int
    sample_index: int  # curve segment whose midpoint represents the arc
    midpoint: complex
    probe_a: complex
    probe_b: complex


@dataclass
class RegionDecomposition:
    family: str
    window: tuple
    faces: list  # shapely polygons
    edges: list  # RegionEdge

    def locate(self, x: complex) -> int:
        p = Point(x.real, x.imag)
        for i, f in enumerate(self.faces):
            if f.contains(p):
                return i
        best, bi = INF, -1
        for i, f in enumerate(self.faces):
            d = f.distance(p)
            if d < best:
                best, bi = d, i
        return bi

    def edges_of(self, region: int):
        return [e for e in self.edges if region in (e.region_a, e.region_b)]


def _family_curves(geom: StokesGeometry, family: str):
    return geom.curves_plus if family == PLUS else geom.curves_minus


def _default_cover_window(geom):
    scale, _ = _geometry_scales(geom.turning_points)
    r = 4.0 * scale
    return (-r, r, -r, r)


def build_regions(geom: StokesGeometry, family: str, window=None) -> RegionDecomposition:
    """Connected components of window minus the family's curves, with adjacency."""
    if window is None:
        window = _default_cover_window(geom)
    xmin, xmax, ymin, ymax = window
    frame = box(xmin, ymin, xmax, ymax)
    curves = _family_curves(geom, family)

    lines = []
    for c in curves:
        if len(c.samples) >= 2:
            ls = LineString(_curve_points(c)).intersection(frame)
            if not ls.is_empty:
                lines.append(ls)
    for i, a in enumerate(lines):
        for b in lines[i + 1 :]:
            inter = a.intersection(b)
            if not inter.is_empty and inter.length == 0 and len(getattr(inter, "geoms", [inter])) > 0:
                pts = getattr(inter, "geoms", [inter])
                for p in pts:
                    q = complex(p.x, p.y)
                    near_tp = any(
                        abs(q - t.location) < 1e-2 for t in geom.turning_points
                    )
                    if not near_tp:
                        raise NonTransversal(
                            f"curves of the same family cross near {q}"
                        )

    merged = unary_union([frame.boundary] + lines)
    faces = [f for f in polygonize(merged) if frame.buffer(1e-9).contains(f)]
    faces.sort(key=lambda f: (round(f.representative_point().x, 9),
                              round(f.representative_point().y, 9)))

    scale, _ = _geometry_scales(geom.turning_points)
    h = 1e-6 * scale
    edges = []
    edge_id = 0
    for ci, c in enumerate(curves):
        run = None  # (region_a, region_b, first_index)
        for k in range(len(c.samples) - 1):
            a, b = c.samples[k], c.samples[k + 1]
            m = (a + b) / 2
            if not (xmin < m.real < xmax and ymin < m.imag < ymax):
                _flush_run(run, edges, c, ci)
                run = None
                continue
            d = b - a
            if abs(d) == 0:
                continue
            n = 1j * d / abs(d)
            pa, pb = m + h * n, m - h * n
            fa = _find_face(faces, pa)
            fb = _find_face(faces, pb)
            if fa is None or fb is None or fa == fb:
                _flush_run(run, edges, c, ci)
                run = None
                continue
            key = (min(fa, fb), max(fa, fb))
            if run is not None and run[0] == key:
                continue
            _flush_run(run, edges, c, ci)
            run = (key, k, m, pa if fa <= fb else pb, pb if fa <= fb else pa)
        _flush_run(run, edges, c, ci)

    out = []
    for i, (key, k, m, pa, pb, ci) in enumerate(edges):
        out.append(
            RegionEdge(
                id=i,
                region_a=key[0],
                region_b=key[1],
                curve_index=ci,
                sample_index=k,
                midpoint=m,
                probe_a=pa,
                probe_b=pb,
            )
        )
    return RegionDecomposition(family=family, window=window, faces=faces, edges=out)


def _curve_points(c):
    """Polyline of a curve closed up to its origin (and terminal) turning point."""
    pts = [(c.origin.location.real, c.origin.location.imag)]
    pts += [(p.real, p.imag) for p in c.samples]
    if c.terminus.kind == "turning_point":
        t = c.terminus.target.location
        pts.append((t.real, t.imag))
    return pts


def _flush_run(run, edges, curve, ci):
    if run is not None:
        key, k, m, pa, pb = run
        edges.append((key, k, m, pa, pb, ci))


def _find_face(faces, p: complex):
    pt = Point(p.real, p.imag)
    for i, f in enumerate(faces):
        if f.contains(pt):
            return i
    return None


# ---------------------------------------------------------------------------
# action continuation helpers


def _safe_path(a: complex, b: complex, turning_points, clearance: float, depth=0):
    """Waypoints from a to b keeping the given clearance from turning points."""
    if depth > 12:
        return [a, b]
    worst, wp = None, None
    for t in turning_points:
        d = _segment_clearance(a, b, t.location)
        if d < clearance and (worst is None or d < worst):
            worst = d
            wp = t.location
    if wp is None:
        return [a, b]
    seg = b - a
    L2 = (seg * seg.conjugate()).real
    t = ((wp - a) * seg.conjugate()).real / L2 if L2 > 0 else 0.0
    t = min(1.0, max(0.0, t))
    close = a + t * seg
    n = close - wp
    if abs(n) < 1e-12:
        n = 1j * seg / abs(seg)
    else:
        n = n / abs(n)
    mid = wp + 2.0 * clearance * n
    left = _safe_path(a, mid, turning_points, clearance, depth + 1)
    right = _safe_path(mid, b, turning_points, clearance, depth + 1)
    return left[:-1] + right


def _continue_z(V, tps, clearance, x_from, z_from, v_from, x_to):
    """Continue (z, sqrtV branch) from one point to another along a safe path."""
    if x_from == x_to:
        return z_from, v_from
    pts = _safe_path(x_from, x_to, tps, clearance)
    bp = BranchedPath(pts, v_from)
    dz = action_along_path(V, bp, quad_tol=1e-12)
    v_to = sqrt_continuation(V, bp)
    return z_from + dz, v_to


def _base_action(V, tps, x0):
    """z(x0) with z normalized to vanish at the first turning point."""
    v0 = cmath.sqrt(V(x0))
    if not tps:
        return 0j, v0
    scale, min_sep = _geometry_scales(tps)
    clearance = min(0.05 * scale, 0.2 * min_sep)
    w = tps[0]
    r_in = 1e-6 * scale
    direction = (x0 - w.location) / abs(x0 - w.location)
    x_near = w.location + r_in * direction
    pts = _safe_path(x0, x_near, tps[1:], clearance)
    bp = BranchedPath(pts, v0)
    back = action_along_path(V, bp, quad_tol=1e-12)
    v_near = sqrt_continuation(V, bp)
    k = w.multiplicity
    tail = -(2.0 / (k + 2)) * v_near * (x_near - w.location)
    # z(x0) = integral from the turning point to x0
    return -(back + tail), v0


# ---------------------------------------------------------------------------
# strip complex construction


def build_strip_complex(geom: StokesGeometry, family: str, x0: complex, depth: int,
                        window=None) -> StripComplex:
    """BFS the universal-cover strips of one family around the lift of x0."""
    V = geom.potential
    alpha = geom.alpha if family == PLUS else -geom.alpha
    tps = geom.turning_points
    regions = build_regions(geom, family, window)
    scale, min_sep = _geometry_scales(tps)
    clearance = min(0.05 * scale, 0.2 * min_sep)
    curves = _family_curves(geom, family)

    for e in regions.edges:
        if abs(x0 - e.midpoint) < 1e-6:
            raise DegenerateInput(f"x0 {x0} lies on a Stokes curve")

    z0, v0 = _base_action(V, tps, x0)
    prefix = "P" if family == PLUS else "Q"

    strips = {}
    rays = {}
    apex_cache = {}

    def apex_at_edge(strip, edge):
        key = (strip.id, edge.id)
        if key in apex_cache:
            return apex_cache[key]
        curve = curves[edge.curve_index]
        k = edge.sample_index
        xk = curve.samples[k]
        zk, vk = _continue_z(V, tps, clearance,
                             strip.anchor, strip.anchor_z, strip.anchor_v, xk)
        bk = (curve.actions[k + 1] - curve.actions[k]) / (
            curve.samples[k + 1] - curve.samples[k]
        )
        sigma = 1 if abs(vk - bk) < abs(vk + bk) else -1
        c_hat = zk - sigma * curve.actions[k]
        handedness = "right" if sigma > 0 else "left"
        apex_cache[key] = (c_hat, handedness)
        return apex_cache[key]

    root_region = regions.locate(x0)
    root = Strip(
        id=f"{prefix}0", family=family, base_region=root_region, deck_word=(),
        shape="plane", rays=[], band=(-INF, INF),
        anchor=x0, anchor_z=z0, anchor_v=v0,
    )
    strips[root.id] = root

    counter = 1
    ray_counter = 0
    queue = [root.id]
    level = {root.id: 0}
    while queue:
        sid = queue.pop(0)
        strip = strips[sid]
        if level[sid] >= depth:
            continue
        for edge in sorted(regions.edges_of(strip.base_region), key=lambda e: e.id):
            already = any(
                rays[r].base_edge == edge.id for r in strip.rays
            )
            if already:
                continue
            c_hat, handed = apex_at_edge(strip, edge)
            near, far = (edge.probe_a, edge.probe_b)
            if regions.locate(near) != strip.base_region:
                near, far = far, near
            z_far, v_far = _continue_z(
                V, tps, clearance, strip.anchor, strip.anchor_z, strip.anchor_v, far
            )
            other_region = (
                edge.region_b if edge.region_a == strip.base_region else edge.region_a
            )
            nid = f"{prefix}{counter}"
            counter += 1
            neighbor = Strip(
                id=nid, family=family, base_region=other_region,
                deck_word=strip.deck_word + (edge.id,),
                shape="plane", rays=[], band=(-INF, INF),
                anchor=far, anchor_z=z_far, anchor_v=v_far,
            )
            strips[nid] = neighbor
            rid = f"{prefix.lower()}l{ray_counter}"
            ray_counter += 1
            rays[rid] = Ray(
                id=rid, c_hat=c_hat, handedness=handed, family=family,
                strips=(sid, nid), base_edge=edge.id, curve_index=edge.curve_index,
            )
            strip.rays.append(rid)
            neighbor.rays.append(rid)
            level[nid] = level[sid] + 1
            queue.append(nid)

    cx = StripComplex(
        family=family, alpha=geom.alpha, root=root.id, strips=strips, rays=rays,
        depth=depth, synthetic=False, x0=x0, x0_action=z0, geom=geom,
        regions=regions,
    )
    for strip in strips.values():
        _assign_band(cx, strip, apex_at_edge, regions)
    return cx


def _assign_band(cx, strip, apex_at_edge, regions):
    """Transverse band of a strip from the apexes of all incident edges."""
    mid = ray_level(strip.anchor_z, strip.family, cx.alpha)
    above, below = [], []
    for edge in regions.edges_of(strip.base_region):
        c_hat, _ = apex_at_edge(strip, edge)
        lv = ray_level(c_hat, strip.family, cx.alpha)
        (above if lv >= mid else below).append(lv)
    lo = max(below) if below else -INF
    hi = min(above) if above else INF
    strip.band = (lo, hi)
    if lo == -INF and hi == INF:
        strip.shape = "plane"
    elif lo == -INF or hi == INF:
        strip.shape = "half_plane"
    else:
        strip.shape = "strip"


def check_deck_consistency(cx: StripComplex, tol: float = 1e-8) -> bool:
    """Round-trip the action continuation root -> strip -> root."""
    if cx.synthetic or cx.geom is None:
        return True
    V = cx.geom.potential
    tps = cx.geom.turning_points
    scale, min_sep = _geometry_scales(tps)
    clearance = min(0.05 * scale, 0.2 * min_sep)
    root = cx.strips[cx.root]
    by_deck = {s.deck_word: s.id for s in cx.strips.values()}
    for strip in cx.strips.values():
        # retrace anchors along the tree path back to the root
        x, z, v = strip.anchor, strip.anchor_z, strip.anchor_v
        deck = strip.deck_word
        while deck:
            deck = deck[:-1]
            parent = cx.strips[by_deck[deck]]
            z, v = _continue_z(V, tps, clearance, x, z, v, parent.anchor)
            x = parent.anchor
        if abs(z - root.anchor_z) > tol * (1 + abs(root.anchor_z)):
            return False
    return True


# ---------------------------------------------------------------------------
# cells


def _corner(x, y, alpha):
    return x * cmath.exp(1j * alpha) + y * cmath.exp(-1j * alpha)


def make_cell(P: Strip, Pi: Strip, alpha: float) -> Cell:
    """Cell geometry from the u-band of P and the h-band of Pi."""
    s = math.sin(2.0 * alpha)
    if s <= 0:
        raise DegenerateInput("cells need 0 < alpha < pi/2")
    u_lo, u_hi = P.band
    h_lo, h_hi = Pi.band
    x_lo = h_lo / s if h_lo > -INF else None
    x_hi = h_hi / s if h_hi < INF else None
    y_lo = -u_hi / s if u_hi < INF else None
    y_hi = -u_lo / s if u_lo > -INF else None
    A = _corner(x_lo, y_lo, alpha) if (x_lo is not None and y_lo is not None) else None
    C = _corner(x_hi, y_hi, alpha) if (x_hi is not None and y_hi is not None) else None
    eps = (C - A) if (A is not None and C is not None) else None
    vertices = []
    for xx in (x_lo, x_hi):
        for yy in (y_lo, y_hi):
            if xx is not None and yy is not None:
                vertices.append(_corner(xx, yy, alpha))
    return Cell(
        alpha_strip=P.id, minus_alpha_strip=Pi.id, vertices=vertices,
        corner_A=A, corner_C=C, epsilon=eps,
    )


def intersect_complexes(plus: StripComplex, minus: StripComplex) -> list:
    """Cells P cap Pi of the two families around the shared x0 lift."""
    if plus.synthetic or minus.synthetic:
        return _intersect_synthetic(plus, minus)
    return _intersect_numeric(plus, minus)


def _distinct_levels(cx: StripComplex, tol: float) -> list:
    vals = sorted((r.level(cx.alpha) for r in cx.rays.values()), reverse=True)
    out = []
    for v in vals:
        if not out or abs(out[-1] - v) > tol:
            out.append(v)
    return out


def _intersect_synthetic(plus, minus, tol: float = 1e-9):
    """Reachable strip pairs of the band arrangement of both families.

    The plane is cut into faces by the supporting lines of all boundary
    rays.  A line may be crossed through the ray half of a boundary ray
    of the current strip (changing strip), or anywhere in the interior of
    the current strip's band; the cut half of a ray leaves the loaded
    complex and is impassable.  The walk starts from the topmost face
    inside both root strips.
    """
    alpha = plus.alpha
    ubnd = [INF] + _distinct_levels(plus, tol) + [-INF]
    hbnd = [INF] + _distinct_levels(minus, tol) + [-INF]

    def rows_inside(bands, band):
        return [i for i in range(len(bands) - 1)
                if band[0] - tol <= bands[i + 1] and bands[i] <= band[1] + tol]

    def cross(cx, strip_id, level, olo, ohi):
        """Strip after crossing the given level line along the open
        transverse interval (olo, ohi), or None when impassable."""
        band = cx.strips[strip_id].band
        if band[0] < level - tol and band[1] > level + tol:
            return strip_id
        for rid in sorted(cx.strips[strip_id].rays):
            ray = cx.rays[rid]
            if abs(ray.level(cx.alpha) - level) > tol:
                continue
            other_family = MINUS if cx.family == PLUS else PLUS
            t = ray_level(ray.c_hat, other_family, alpha)
            if cx.family == PLUS:
                half = (t, INF) if ray.handedness == "right" else (-INF, t)
            else:
                half = (-INF, t) if ray.handedness == "right" else (t, INF)
            if max(half[0], olo) + tol < min(half[1], ohi):
                return ray.other_strip(strip_id)
        return None

    prows = rows_inside(ubnd, plus.strips[plus.root].band)
    qcols = rows_inside(hbnd, minus.strips[minus.root].band)
    if not prows or not qcols:
        raise DegenerateInput("root strips leave no face to start from")
    start = (prows[0], qcols[0], plus.root, minus.root)
    seen = {start}
    queue = [start]
    pairs = set()
    while queue:
        i, j, p, q = queue.pop(0)
        pairs.add((p, q))
        moves = []
        if i > 0:
            moves.append((i - 1, j, cross(plus, p, ubnd[i], hbnd[j + 1], hbnd[j]), q))
        if i < len(ubnd) - 2:
            moves.append((i + 1, j, cross(plus, p, ubnd[i + 1], hbnd[j + 1], hbnd[j]), q))
        if j > 0:
            moves.append((i, j - 1, p, cross(minus, q, hbnd[j], ubnd[i + 1], ubnd[i])))
        if j < len(hbnd) - 2:
            moves.append((i, j + 1, p, cross(minus, q, hbnd[j + 1], ubnd[i + 1], ubnd[i])))
        for st in moves:
            if st[2] is None or st[3] is None or st in seen:
                continue
            seen.add(st)
            queue.append(st)
    return [
        make_cell(plus.strips[p], minus.strips[q], alpha)
        for p, q in sorted(pairs)
    ]


def _intersect_numeric(plus, minus):
    geom = plus.geom
    window = plus.regions.window
    xmin, xmax, ymin, ymax = window
    frame = box(xmin, ymin, xmax, ymax)
    lines = []
    for fam in (PLUS, MINUS):
        for c in _family_curves(geom, fam):
            ls = LineString(_curve_points(c)).intersection(frame)
            if not ls.is_empty:
                lines.append(ls)
    merged = unary_union([frame.boundary] + lines)
    jfaces = [f for f in polygonize(merged) if frame.buffer(1e-9).contains(f)]
    jfaces.sort(key=lambda f: (round(f.representative_point().x, 9),
                               round(f.representative_point().y, 9)))

    # adjacency of joint faces across each family's region edges
    adj = {}  # jface -> list of (other jface, family, edge id)
    scale, _ = _geometry_scales(geom.turning_points)
    h = 1e-6 * scale
    for fam, cx in ((PLUS, plus), (MINUS, minus)):
        curves = _family_curves(geom, fam)
        for e in cx.regions.edges:
            c = curves[e.curve_index]
            for k in range(len(c.samples) - 1):
                a, b = c.samples[k], c.samples[k + 1]
                m = (a + b) / 2
                if not (xmin < m.real < xmax and ymin < m.imag < ymax):
                    continue
                d = b - a
                if abs(d) == 0:
                    continue
                # only segments belonging to this edge's arc
                fa = _find_face(cx.regions.faces, m + h * 1j * d / abs(d))
                fb = _find_face(cx.regions.faces, m - h * 1j * d / abs(d))
                if fa is None or fb is None:
                    continue
                if {fa, fb} != {e.region_a, e.region_b}:
                    continue
                ja = _find_face(jfaces, m + h * 1j * d / abs(d))
                jb = _find_face(jfaces, m - h * 1j * d / abs(d))
                if ja is None or jb is None or ja == jb:
                    continue
                adj.setdefault(ja, []).append((jb, fam, e.id))
                adj.setdefault(jb, []).append((ja, fam, e.id))

    def cross(cx, strip_id, edge_id):
        for rid in cx.strips[strip_id].rays:
            ray = cx.rays[rid]
            if ray.base_edge == edge_id:
                return ray.other_strip(strip_id)
        return None

    start = _find_face(jfaces, plus.x0)
    if start is None:
        raise DegenerateInput("x0 is not interior to the joint arrangement")
    state0 = (start, plus.root, minus.root)
    seen = {state0}
    queue = [state0]
    pairs = set()
    while queue:
        jf, p, q = queue.pop(0)
        pairs.add((p, q))
        for other, fam, eid in adj.get(jf, []):
            if fam == PLUS:
                p2 = cross(plus, p, eid)
                q2 = q
            else:
                p2 = p
                q2 = cross(minus, q, eid)
            if p2 is None or q2 is None:
                continue
            st = (other, p2, q2)
            if st not in seen:
                seen.add(st)
                queue.append(st)

    cells = [
        make_cell(plus.strips[p], minus.strips[q], plus.alpha)
        for p, q in sorted(pairs)
    ]
    return cells


def alpha_strips_along(pi_id: str, cells, plus: StripComplex):
    """Ordered alpha-strips P_1..P_n met by the minus-strip, left to right.

    Left to right along a minus-strip means decreasing transverse height of
    the alpha-bands; consecutive strips must be adjacent in the plus tree.
    """
    BIG = 1e18
    ps = sorted(
        {c.alpha_strip for c in cells if c.minus_alpha_strip == pi_id},
        key=lambda p: (
            -min(plus.strips[p].band[1], BIG),
            -max(plus.strips[p].band[0], -BIG),
        ),
    )
    chain = []
    for a, b in zip(ps, ps[1:]):
        ray = plus.ray_between(a, b)
        if ray is None:
            raise InconsistentBranch(
                f"strips {a} and {b} along {pi_id} are not adjacent"
            )
        chain.append(ray)
    return ps, chain


# ---------------------------------------------------------------------------
# synthetic complexes


def _parse_apex(value):
    if isinstance(value, str):
        return parse_exact_complex(value)
    if isinstance(value, bool):
        raise ParseError(f"bad apex literal: {value!r}")
    if isinstance(value, int):
        return QC(value, 0)
    if isinstance(value, float):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return QC(Fraction(str(value[0])), Fraction(str(value[1])))
    if isinstance(value, complex):
        return value
    raise ParseError(f"bad apex literal: {value!r}")


def load_synthetic(data, alpha: float = math.pi / 4):
    """Load synthetic strip complexes from a description record.

    Record: {strips:[{id, family, shape}], rays:[{id, c_hat, handedness,
    strips:[a,b]}], root, alpha?, x0_action?}.  Returns {family: StripComplex}
    for the families present.
    """
    if isinstance(data, str):
        with open(data) as fh:
            data = json.load(fh)
    alpha = float(data.get("alpha", alpha))
    x0_action = _parse_apex(data.get("x0_action", "0"))
    roots = data.get("root")
    if isinstance(roots, str):
        roots = {PLUS: roots, MINUS: roots}

    by_family = {PLUS: {}, MINUS: {}}
    for rec in data["strips"]:
        fam = rec["family"]
        if fam not in by_family:
            raise ParseError(f"bad family {fam!r}")
        by_family[fam][rec["id"]] = rec

    out = {}
    for fam, strip_recs in by_family.items():
        if not strip_recs:
            continue
        strips = {}
        rays = {}
        for rec in data.get("rays", []):
            a, b = rec["strips"]
            if a not in strip_recs or b not in strip_recs:
                continue
            rays[rec["id"]] = Ray(
                id=rec["id"], c_hat=_parse_apex(rec["c_hat"]),
                handedness=rec["handedness"], family=fam, strips=(a, b),
            )
        for sid, rec in strip_recs.items():
            incident = [r.id for r in rays.values() if sid in r.strips]
            strips[sid] = Strip(
                id=sid, family=fam, base_region=None, deck_word=(),
                shape="plane", rays=incident, band=(-INF, INF),
            )
        for sid, rec in strip_recs.items():
            _synthetic_band(strips[sid], rec.get("shape", "auto"), rays, alpha)
        root = roots[fam] if isinstance(roots, dict) else roots
        if root not in strips:
            root = sorted(strips)[0]
        cx = StripComplex(
            family=fam, alpha=alpha, root=root, strips=strips, rays=rays,
            depth=len(strips), synthetic=True, x0_action=x0_action,
        )
        out[fam] = cx
    return out


def _synthetic_band(strip, shape, rays, alpha):
    levels = sorted(
        ray_level(rays[r].c_hat, strip.family, alpha) for r in strip.rays
    )
    kind = shape if isinstance(shape, str) else shape.get("kind", "auto")
    side = None if isinstance(shape, str) else shape.get("side")
    if not levels or kind == "plane":
        strip.shape = "plane"
        strip.band = (-INF, INF)
        return
    lo, hi = levels[0], levels[-1]
    if kind == "strip" or (kind == "auto" and hi - lo > 1e-12):
        strip.shape = "strip"
        strip.band = (lo, hi)
        return
    # single boundary level: half-plane, side chosen explicitly or above
    strip.shape = "half_plane"
    if side == "below":
        strip.band = (-INF, lo)
    else:
        strip.band = (hi, INF)
