"""Alternating words over boundary rays and their cone-set calculus.

A word ell_n ... ell_1 T (T in {L, R}) indexes a cone sheaf whose support
is the apexed cone A(Delta, w) = {(z, s): s +- z in c_hat(w) + Delta}.
Inclusions of such cones over a region reduce to finitely many membership
tests in the closed cone K spanned by e^{+-i alpha}.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from .cover import QC, Ray, StripComplex, ray_level
from .errors import (
    MalformedWord,
    NotCovered,
    RegionMismatch,
    UnsupportedRegion,
)

ANGLE_TOL = 1e-9
APEX_TOL = 1e-8


@dataclass(frozen=True)
class ConeK:
    """The closed cone spanned by e^{i alpha} and e^{-i alpha}."""

    alpha: float

    def contains(self, z, tol: float = ANGLE_TOL) -> bool:
        zc = complex(z)
        if abs(zc) <= 1e-12:
            return True
        return abs(cmath.phase(zc)) <= self.alpha + tol

    def interior_contains(self, z, tol: float = ANGLE_TOL) -> bool:
        zc = complex(z)
        if abs(zc) <= 1e-12:
            return False
        return abs(cmath.phase(zc)) < self.alpha - tol


@dataclass(frozen=True)
class Word:
    letters: tuple  # ray ids, leftmost first (ell_n ... ell_1)
    terminal: str  # "L" | "R"
    family: str
    sign: str = field(compare=False, default="")
    c_hat: object = field(compare=False, default=0j)

    def __post_init__(self):
        object.__setattr__(
            self, "_hash", hash((self.letters, self.terminal, self.family))
        )

    def __hash__(self):
        return self._hash

    def __len__(self):
        return len(self.letters)

    def label(self) -> str:
        return "".join(self.letters) + self.terminal

    def record(self):
        z = complex(self.c_hat)
        return {
            "letters": list(self.letters),
            "terminal": self.terminal,
            "c_hat": {"re": z.real, "im": z.imag},
        }


def _required_handedness(terminal: str, position: int) -> str:
    """Handedness of letter ell_position (1 = rightmost) forced by alternation."""
    if terminal == "L":
        return "right" if position % 2 == 1 else "left"
    return "left" if position % 2 == 1 else "right"


def validate_word(letters, terminal, cx: StripComplex):
    if terminal not in ("L", "R"):
        raise MalformedWord(f"terminal must be L or R, got {terminal!r}")
    for pos, rid in enumerate(reversed(letters), start=1):
        if rid not in cx.rays:
            raise MalformedWord(f"unknown ray {rid!r}")
        want = _required_handedness(terminal, pos)
        got = cx.rays[rid].handedness
        if got != want:
            raise MalformedWord(
                f"letter {rid} at position {pos} is {got}-going, "
                f"alternation requires {want}"
            )


def word_sign(letters, terminal, cx: StripComplex) -> str:
    if not letters:
        return "plus" if terminal == "L" else "minus"
    leftmost = cx.rays[letters[0]]
    return "plus" if leftmost.handedness == "left" else "minus"


def c_hat_word(letters, terminal, cx: StripComplex, x0_action=None):
    """Apex of the convolution sheaf: +-z(x0) plus the letter shifts.

    Each left-going letter shifts the apex by +2c_hat(ell), each
    right-going letter by -2c_hat(ell).
    """
    validate_word(letters, terminal, cx)
    if x0_action is None:
        x0_action = cx.x0_action
    apex = x0_action if terminal == "L" else -x0_action
    for rid in letters:
        ray = cx.rays[rid]
        shift = 2 * ray.c_hat
        apex = apex + (shift if ray.handedness == "left" else -shift)
    return apex


def make_word(letters, terminal, cx: StripComplex, x0_action=None) -> Word:
    letters = tuple(letters)
    return Word(
        letters=letters,
        terminal=terminal,
        family=cx.family,
        sign=word_sign(letters, terminal, cx),
        c_hat=c_hat_word(letters, terminal, cx, x0_action),
    )


# ---------------------------------------------------------------------------
# regions and cone sets


@dataclass(frozen=True)
class Region:
    """A region handle carrying the corner data inclusion tests need."""

    kind: str  # "cell" | "strip" | "ray" | "slice" | "window"
    corner_A: object = None
    corner_C: object = None
    label: str = ""


def region_from_cell(cell) -> Region:
    return Region(
        kind="cell",
        corner_A=cell.corner_A,
        corner_C=cell.corner_C,
        label=f"{cell.alpha_strip}&{cell.minus_alpha_strip}",
    )


def region_from_strip(strip_id: str) -> Region:
    return Region(kind="strip", label=strip_id)


def region_from_ray(ray: Ray) -> Region:
    # a right-going ray runs K-inward from its apex, a left-going one
    # K-outward; both directions e^{+-i alpha} lie on the boundary of K
    if ray.handedness == "right":
        return Region(kind="ray", corner_A=ray.c_hat, label=ray.id)
    return Region(kind="ray", corner_C=ray.c_hat, label=ray.id)


def region_slice(z) -> Region:
    return Region(kind="slice", corner_A=z, corner_C=z, label="slice")


@dataclass(frozen=True)
class ConeSet:
    word: Word
    alpha: float
    region: Region
    delta: str = "K"  # "K" | "ray_plus" | "ray_minus" | "int_K"


def cone_inclusion(inner: ConeSet, outer: ConeSet, strict: bool = False,
                   apex_tol: float = APEX_TOL) -> bool:
    """Decide A(K, inner) subseteq A(K, outer) over the shared region."""
    if inner.region != outer.region:
        raise RegionMismatch(
            f"regions differ: {inner.region.label!r} vs {outer.region.label!r}"
        )
    region = inner.region
    if region.kind not in ("cell", "strip", "ray", "slice", "window"):
        raise UnsupportedRegion(f"unsupported region kind {region.kind!r}")
    K = ConeK(inner.alpha)
    a, b = inner.word.c_hat, outer.word.c_hat
    si, so = inner.word.sign, outer.word.sign
    if si == so:
        diff = a - b
        included = K.contains(diff)
        if strict:
            return included and abs(complex(diff)) > apex_tol
        return included
    if si == "minus" and so == "plus":
        A = region.corner_A
        if A is None:
            return False
        included = K.contains(2 * A + a - b)
    else:
        C = region.corner_C
        if C is None:
            return False
        included = K.contains(-2 * C + a - b)
    return included


def apexes_equal(a, b, tol: float = APEX_TOL) -> bool:
    if isinstance(a, QC) and isinstance(b, QC):
        return a == b
    return abs(complex(a) - complex(b)) <= tol


# ---------------------------------------------------------------------------
# enumeration


def all_words(cx: StripComplex, depth: int, x0_action=None):
    """Every alternating word with at most `depth` letters, sorted by
    (length, lexicographic)."""
    left = sorted(r.id for r in cx.rays.values() if r.handedness == "left")
    right = sorted(r.id for r in cx.rays.values() if r.handedness == "right")
    out = []
    for terminal in ("L", "R"):
        tails = [()]
        for pos in range(1, depth + 1):
            pool = left if _required_handedness(terminal, pos) == "left" else right
            tails = [(rid,) + t for t in tails for rid in pool] if pool else []
            if not tails:
                break
            out.extend((terminal, t) for t in tails)
    words = [make_word((), "L", cx, x0_action), make_word((), "R", cx, x0_action)]
    words += [make_word(t, terminal, cx, x0_action) for terminal, t in out]
    words.sort(key=lambda w: (len(w.letters), w.letters, w.terminal))
    return words


def enumerate_small(cx: StripComplex, s, depth: int, x0_action=None):
    """All words w with |letters| <= depth and c_hat(w) in s - K."""
    K = ConeK(cx.alpha)
    sc = complex(s)
    out = [
        w
        for w in all_words(cx, depth, x0_action)
        if K.contains(sc - complex(w.c_hat))
    ]
    return out


# ---------------------------------------------------------------------------
# the alignment map A between -alpha and alpha words


def align_ray(ell: Ray, plus: StripComplex, cells) -> Ray:
    """The alpha-boundary ray matching a -alpha ray: same apex, same
    handedness, on the leftmost alpha-strip meeting ell."""
    if ell.family != "minus":
        raise MalformedWord("align_ray expects a minus-family ray")
    pi1, pi2 = ell.strips
    meets1 = {c.alpha_strip for c in cells if c.minus_alpha_strip == pi1}
    meets2 = {c.alpha_strip for c in cells if c.minus_alpha_strip == pi2}
    shared = meets1 & meets2
    if not shared:
        raise NotCovered(f"no alpha-strip of the built complex meets {ell.id}")
    BIG = 1e18
    ordered = sorted(
        sorted(shared),
        key=lambda p: (
            min(plus.strips[p].band[1], BIG),
            max(plus.strips[p].band[0], -BIG),
        ),
        reverse=True,
    )
    for strip_id in ordered:
        candidates = [
            r
            for r in plus.strip_rays(strip_id)
            if r.handedness == ell.handedness
            and apexes_equal(r.c_hat, ell.c_hat)
        ]
        if candidates:
            return sorted(candidates, key=lambda r: r.id)[0]
    raise NotCovered(f"no strip meeting {ell.id} has a matching boundary ray")


def align_word(word: Word, minus: StripComplex, plus: StripComplex, cells,
               x0_action=None) -> Word:
    """Letterwise alignment A(w~): same terminal, each letter aligned."""
    if word.family != "minus":
        raise MalformedWord("align_word expects a minus-family word")
    letters = tuple(
        align_ray(minus.rays[rid], plus, cells).id for rid in word.letters
    )
    return make_word(letters, word.terminal, plus, x0_action)
