"""Polynomial potentials, turning points, and action integrals.

The action z(x) = int sqrt(V) dxi is the basic coordinate for everything
downstream; the branch of sqrt(V) is tracked explicitly along piecewise
linear paths, so all continuation is deterministic and reproducible.
"""
from __future__ import annotations

import cmath
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BranchCollision,
    DegenerateInput,
    NonConvergence,
    ParseError,
    QuadratureFailure,
)

DEFAULT_TOL = 1e-9
DEFAULT_QUAD_TOL = 1e-10

# nodes/weights for 12-point Gauss-Legendre on [-1, 1]
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


@dataclass(frozen=True)
class Polynomial:
    """A polynomial with complex coefficients, ascending degree."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coefficients)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        if not coeffs:
            coeffs = (0j,)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coefficients)

    def __call__(self, x: complex) -> complex:
        acc = 0j
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def derivative(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial((0j,))
        return Polynomial(tuple(k * c for k, c in enumerate(self.coefficients) if k > 0))

    def scale(self) -> float:
        return max(abs(c) for c in self.coefficients)

    @staticmethod
    def from_string(text: str) -> "Polynomial":
        """Parse a comma-separated list of complex literals, ascending degree."""
        parts = [p.strip() for p in text.split(",")]
        if not parts or parts == [""]:
            raise ParseError("empty coefficient list")
        return Polynomial(tuple(parse_complex(p) for p in parts))


_COMPLEX_RE = re.compile(
    r"""^\s*
    (?P<re>[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?(?![ij0-9.]))?
    (?P<im>[+-]?(?:(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?)?[ij])?
    \s*$""",
    re.VERBOSE,
)


def parse_complex(text: str):
    """Parse 'a', 'bi', 'a+bi', 'a-bi'; rational parts 'p/q' allowed.

    Returns a python complex; exact rational parsing lives in the cover
    module's synthetic loader.
    """
    t = text.strip().replace(" ", "")
    if not t:
        raise ParseError("empty complex literal")
    m = _COMPLEX_RE.match(t)
    if not m or (m.group("re") is None and m.group("im") is None):
        raise ParseError(f"bad complex literal: {text!r}")

    def _num(s):
        if "/" in s:
            p, q = s.split("/")
            return float(p) / float(q)
        return float(s)

    re_part = _num(m.group("re")) if m.group("re") else 0.0
    im_part = 0.0
    if m.group("im"):
        s = m.group("im")[:-1]
        if s in ("", "+"):
            im_part = 1.0
        elif s == "-":
            im_part = -1.0
        else:
            im_part = _num(s)
    return complex(re_part, im_part)


@dataclass(frozen=True)
class TurningPoint:
    """A zero of V with its multiplicity."""

    location: complex
    multiplicity: int


@dataclass
class BranchedPath:
    """A piecewise linear path with a chosen branch of sqrt(V) at its start."""

    waypoints: list
    sqrtV_seed: complex

    def validate(self, V: Polynomial, turning_points=None, tol: float = DEFAULT_TOL):
        if len(self.waypoints) < 1:
            raise ParseError("path needs at least one waypoint")
        w0 = self.waypoints[0]
        if abs(self.sqrtV_seed**2 - V(w0)) > 1e-6 * (1.0 + abs(V(w0))):
            raise ParseError("sqrtV_seed does not square to V at the first waypoint")
        if turning_points is not None:
            for p in self.waypoints:
                for tp in turning_points:
                    if abs(p - tp.location) < tol:
                        raise BranchCollision(
                            f"waypoint {p} coincides with turning point {tp.location}"
                        )


def find_turning_points(V: Polynomial, tol: float = DEFAULT_TOL) -> list:
    """All distinct roots of V with multiplicities (clusters merged at radius tol)."""
    if V.is_zero:
        raise DegenerateInput("V is identically zero")
    if V.degree == 0:
        return []

    coeffs_desc = list(reversed(V.coefficients))
    raw = np.roots(coeffs_desc)

    # derivative chain for multiplicity detection and polishing
    derivs = [V]
    while derivs[-1].degree > 0:
        derivs.append(derivs[-1].derivative())

    scale = V.scale()
    loose = max(tol, 1e-9) ** 0.5  # vanish threshold for the derivative test

    polished = []
    for r0 in raw:
        r = complex(r0)
        m = 1
        for j in range(1, V.degree):
            dj = derivs[j]
            bound = loose * dj.scale() * max(1.0, abs(r)) ** dj.degree
            if abs(dj(r)) <= bound:
                m = j + 1
            else:
                break
        # Newton on the (m-1)-th derivative, where the root is simple
        g, gp = derivs[m - 1], derivs[m]
        for _ in range(50):
            gv = g(r)
            gpv = gp(r)
            if gpv == 0:
                break
            step = gv / gpv
            r -= step
            if abs(step) <= 1e-15 * (1.0 + abs(r)):
                break
        # the classifier can pick the wrong derivative near clustered
        # roots, in which case Newton converges to a critical point that
        # is not a root; keep the raw root whenever polishing did not
        # improve the residual of V itself
        if abs(V(r)) > abs(V(complex(r0))):
            r = complex(r0)
        polished.append(r)

    # greedy clustering at radius tol; cluster size is the multiplicity
    clusters = []
    for r in sorted(polished, key=lambda c: (c.real, c.imag)):
        for cl in clusters:
            if abs(r - cl[0] / cl[1]) <= max(tol, 1e-12):
                cl[0] += r
                cl[1] += 1
                break
        else:
            clusters.append([r, 1])

    out = []
    for total, count in clusters:
        loc = total / count
        if abs(V(loc)) > 1e-6 * (1.0 + scale) * max(1.0, abs(loc)) ** V.degree:
            raise NonConvergence(f"root candidate {loc} has large residual {abs(V(loc))}")
        out.append(TurningPoint(location=loc, multiplicity=count))
    if sum(t.multiplicity for t in out) != V.degree:
        raise NonConvergence("multiplicities do not sum to the degree")
    out.sort(key=lambda t: (t.location.real, t.location.imag))
    return out


def _choose_branch(value: complex, previous: complex) -> complex:
    """Pick the square root (+-value) closer to the previous branch value."""
    if abs(value - previous) <= abs(-value - previous):
        return value
    return -value


def _relative_jump(a: complex, b: complex) -> float:
    s = max(abs(a), abs(b))
    if s == 0:
        return 0.0
    return abs(a - b) / s


def _track_segment(V: Polynomial, a: complex, b: complex, va: complex, depth: int = 0) -> complex:
    """Continue sqrt(V) from value va at a to the endpoint b along [a, b]."""
    vb = _choose_branch(cmath.sqrt(V(b)), va)
    if _relative_jump(vb, va) < 0.5 or vb == va:
        return vb
    if depth > 60:
        raise BranchCollision(
            f"branch tracking cannot separate signs on segment {a} -> {b}"
        )
    mid = (a + b) / 2
    vm = _track_segment(V, a, mid, va, depth + 1)
    return _track_segment(V, mid, b, vm, depth + 1)


def _segment_clearance(a: complex, b: complex, p: complex) -> float:
    """Distance from point p to segment [a, b]."""
    d = b - a
    L2 = (d * d.conjugate()).real
    if L2 == 0:
        return abs(p - a)
    t = ((p - a) * d.conjugate()).real / L2
    t = min(1.0, max(0.0, t))
    return abs(p - (a + t * d))


def _gl_segment(V: Polynomial, a: complex, b: complex, va: complex):
    """12-point Gauss-Legendre of sqrt(V) over [a, b] with branch tracking.

    Returns (integral, branch value at b).
    """
    h = (b - a) / 2
    mid = (a + b) / 2
    total = 0j
    prev = va
    for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
        x = mid + h * node
        prev = _track_segment(V, a, x, va) if node == _GL_NODES[0] else _choose_branch(
            cmath.sqrt(V(x)), prev
        )
        total += weight * prev
    vb = _track_segment(V, a, b, va)
    return total * h, vb


def _adaptive_segment(V, a, b, va, quad_tol, budget):
    """Adaptive bisection of one straight segment; returns (integral, vb, budget)."""
    coarse, _ = _gl_segment(V, a, b, va)
    mid = (a + b) / 2
    left, vm = _gl_segment(V, a, mid, va)
    right, vb = _gl_segment(V, mid, b, vm)
    fine = left + right
    if abs(fine - coarse) <= quad_tol * (1.0 + abs(fine)):
        return fine, vb, budget
    if budget <= 0:
        raise QuadratureFailure(f"refinement budget exhausted on segment {a} -> {b}")
    il, vm2, budget = _adaptive_segment(V, a, mid, va, quad_tol / 1.4, budget - 1)
    ir, vb2, budget = _adaptive_segment(V, mid, b, vm2, quad_tol / 1.4, budget - 1)
    return il + ir, vb2, budget


def action_along_path(
    V: Polynomial,
    path: BranchedPath,
    quad_tol: float = DEFAULT_QUAD_TOL,
    tol: float = DEFAULT_TOL,
    turning_points=None,
    max_splits: int = 8000,
) -> complex:
    """Integral of sqrt(V) along the path, branch continued from the seed."""
    value, _ = _action_and_branch(V, path, quad_tol, tol, turning_points, max_splits)
    return value


def sqrt_continuation(
    V: Polynomial,
    path: BranchedPath,
    tol: float = DEFAULT_TOL,
    turning_points=None,
) -> complex:
    """Analytically continued value of sqrt(V) at the final waypoint."""
    _check_clearance(V, path, tol, turning_points)
    v = complex(path.sqrtV_seed)
    pts = [complex(p) for p in path.waypoints]
    for a, b in zip(pts, pts[1:]):
        v = _track_segment(V, a, b, v)
    return v


def _check_clearance(V, path, tol, turning_points):
    if turning_points is None:
        return
    pts = [complex(p) for p in path.waypoints]
    segs = list(zip(pts, pts[1:])) if len(pts) > 1 else [(pts[0], pts[0])]
    for a, b in segs:
        for tp in turning_points:
            if _segment_clearance(a, b, tp.location) < tol * (1 - 1e-9):
                raise BranchCollision(
                    f"path passes within {tol} of turning point {tp.location}"
                )


def _action_and_branch(V, path, quad_tol, tol, turning_points, max_splits):
    _check_clearance(V, path, tol, turning_points)
    pts = [complex(p) for p in path.waypoints]
    v = complex(path.sqrtV_seed)
    total = 0j
    budget = max_splits
    for a, b in zip(pts, pts[1:]):
        if a == b:
            continue
        inc, v, budget = _adaptive_segment(V, a, b, v, quad_tol, budget)
        total += inc
    return total, v
