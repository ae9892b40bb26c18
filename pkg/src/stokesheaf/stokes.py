"""Tracing of alpha-Stokes curves and verification of standing assumptions.

An alpha-Stokes curve through a turning point w is the level set
Im(e^{-i alpha} (S(x) - S(w))) = 0 of the action S = int sqrt(V).  Curves
are traced by an RK4 predictor along the field e^{i alpha}/sqrt(V) with a
Newton corrector back onto the level set; the branch of sqrt(V) is carried
along the trace.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

from .errors import (
    LaunchFailure,
    NoAdmissibleAngle,
    StepBudgetExceeded,
)
from .potential import (
    DEFAULT_TOL,
    Polynomial,
    TurningPoint,
    _adaptive_segment,
    _choose_branch,
    _gl_segment,
    _segment_clearance,
    find_turning_points,
)


@dataclass(frozen=True)
class TraceConfig:
    """Settings for the curve tracer."""

    h: float = 0.08  # base arclength step
    escape_radius: float = 0.0  # 0 means 50*(1+max|turning point|)
    max_steps: int = 40000
    launch_radius: float = 0.0  # 0 means auto from the turning point layout
    merge_radius: float = 0.0  # 0 means auto
    corrector_iterations: int = 3
    angle_tol: float = 1e-9
    window: tuple | None = None  # (xmin, xmax, ymin, ymax)


@dataclass(frozen=True)
class Terminus:
    kind: str  # "infinity" or "turning_point"
    target: TurningPoint | None = None


@dataclass
class StokesCurve:
    origin: TurningPoint
    angle: float
    branch_index: int
    samples: list
    actions: list  # S(x) - S(origin) at each sample, branch continued
    terminus: Terminus
    asymptotic_direction: float | None = None

    @property
    def hits_turning_point(self) -> bool:
        return self.terminus.kind == "turning_point"


@dataclass
class StokesGeometry:
    potential: Polynomial
    alpha: float
    turning_points: list
    curves_plus: list
    curves_minus: list
    assumptions_ok: bool = False
    violations: list = field(default_factory=list)

    def all_curves(self):
        return list(self.curves_plus) + list(self.curves_minus)


def _geometry_scales(turning_points):
    scale = 1.0 + max((abs(t.location) for t in turning_points), default=0.0)
    seps = [
        abs(a.location - b.location)
        for i, a in enumerate(turning_points)
        for b in turning_points[i + 1 :]
    ]
    min_sep = min(seps) if seps else scale
    return scale, min_sep


def _resolve_config(cfg: TraceConfig, turning_points) -> TraceConfig:
    scale, min_sep = _geometry_scales(turning_points)
    out = cfg
    if out.escape_radius <= 0:
        out = replace(out, escape_radius=50.0 * scale)
    if out.launch_radius <= 0:
        out = replace(out, launch_radius=min(1e-3 * scale, 0.05 * min_sep))
    if out.merge_radius <= 0:
        out = replace(out, merge_radius=min(2e-3 * scale, 0.1 * min_sep))
    return out


def launch_directions(V: Polynomial, tp: TurningPoint, angle: float) -> list:
    """The k+2 outgoing curve directions at a turning point of multiplicity k."""
    k = tp.multiplicity
    deriv = V
    for _ in range(k):
        deriv = deriv.derivative()
    lead = deriv(tp.location) / math.factorial(k)
    if lead == 0:
        raise LaunchFailure(f"degenerate local model at {tp.location}")
    base = cmath.phase(cmath.sqrt(lead))
    n = k + 2
    dirs = [(2.0 / n) * (angle - base + j * math.pi) for j in range(n)]
    dirs = sorted(d % (2 * math.pi) for d in dirs)
    for a, b in zip(dirs, dirs[1:]):
        if b - a < 1e-12:
            raise LaunchFailure("launch directions are not separated")
    return dirs


def _launch_state(V, tp, angle, theta, r0):
    """Initial (x, sqrtV branch, S_rel) a distance r0 out along direction theta."""
    w = tp.location
    x0 = w + r0 * cmath.exp(1j * theta)
    root = cmath.sqrt(V(x0))
    # the on-curve branch has e^{-i alpha} sqrt(V) e^{i theta} real positive
    probe = cmath.exp(1j * (theta - angle))
    if (root * probe).real < 0:
        root = -root
    k = tp.multiplicity
    # local model close in, numeric quadrature out to r0
    r_in = r0 * 1e-3
    x_in = w + r_in * cmath.exp(1j * theta)
    v_in = cmath.sqrt(V(x_in))
    if (v_in * probe).real < 0:
        v_in = -v_in
    s_in = (2.0 / (k + 2)) * v_in * (x_in - w)
    s_out, v_out, _ = _adaptive_segment(V, x_in, x0, v_in, 1e-13, 4000)
    if abs(v_out - root) > abs(v_out + root):
        raise LaunchFailure("branch mismatch while leaving the turning point")
    return x0, v_out, s_in + s_out


def trace_curves(V: Polynomial, tp: TurningPoint, angle: float, cfg: TraceConfig, turning_points=None) -> list:
    """All k+2 curves of the given angle family emanating from tp."""
    if turning_points is None:
        turning_points = [tp]
    cfg = _resolve_config(cfg, turning_points)
    curves = []
    for j, theta in enumerate(launch_directions(V, tp, angle)):
        curves.append(_trace_one(V, tp, angle, j, theta, cfg, turning_points))
    return curves


def _trace_one(V, tp, angle, branch_index, theta, cfg, turning_points):
    ealpha = cmath.exp(1j * angle)
    others = [t for t in turning_points if t is not tp]
    x, v, s = _launch_state(V, tp, angle, theta, cfg.launch_radius)
    samples = [x]
    actions = [s]
    abs_s_tail = [abs(s)]
    terminus = None
    asym = None

    for _ in range(cfg.max_steps):
        dist = min((abs(x - t.location) for t in turning_points), default=cfg.h)
        h = min(cfg.h * (0.02 + 2.0 * dist), 1.5)
        h = max(h, 0.5 * cfg.merge_radius)

        # RK4 on the unit tangent field
        def tangent(xx, vref):
            vv = _choose_branch(cmath.sqrt(V(xx)), vref)
            d = ealpha / vv
            return d / abs(d), vv

        k1, v1 = tangent(x, v)
        k2, _ = tangent(x + 0.5 * h * k1, v1)
        k3, _ = tangent(x + 0.5 * h * k2, v1)
        k4, _ = tangent(x + h * k3, v1)
        x_new = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

        ds, v_new = _gl_segment(V, x, x_new, v)
        s_new = s + ds

        # corrector: push x_new back onto Im(e^{-i alpha} s) = 0
        for _ in range(cfg.corrector_iterations):
            resid = (s_new / ealpha).imag
            if abs(resid) <= 1e-12 * (1.0 + abs(s_new)):
                break
            d = 1j * ealpha / v_new
            delta = -resid * d
            if abs(delta) > 0.5 * h:
                delta *= 0.5 * h / abs(delta)
            x_corr = x_new + delta
            dserr, v_corr = _gl_segment(V, x_new, x_corr, v_new)
            x_new, v_new, s_new = x_corr, v_corr, s_new + dserr

        x, v, s = x_new, v_new, s_new
        samples.append(x)
        actions.append(s)
        abs_s_tail.append(abs(s))
        if len(abs_s_tail) > 11:
            abs_s_tail.pop(0)

        hit = None
        for t in others:
            if _segment_clearance(samples[-2], x, t.location) < cfg.merge_radius:
                hit = t
                break
        if hit is not None:
            terminus = Terminus("turning_point", hit)
            break
        if abs(x) > cfg.escape_radius and len(abs_s_tail) == 11:
            if all(b > a for a, b in zip(abs_s_tail, abs_s_tail[1:])):
                terminus = Terminus("infinity")
                asym = cmath.phase(x - tp.location) % (2 * math.pi)
                break
    else:
        raise StepBudgetExceeded(
            f"curve {branch_index} from {tp.location} at angle {angle} "
            f"did not terminate within {cfg.max_steps} steps"
        )

    return StokesCurve(
        origin=tp,
        angle=angle,
        branch_index=branch_index,
        samples=samples,
        actions=actions,
        terminus=terminus,
        asymptotic_direction=asym,
    )


def trace_geometry(V: Polynomial, alpha: float, cfg: TraceConfig | None = None) -> StokesGeometry:
    """Trace both angle families and run the assumption checks."""
    if cfg is None:
        cfg = TraceConfig()
    tps = find_turning_points(V)
    plus, minus = [], []
    for tp in sorted(tps, key=lambda t: (t.location.real, t.location.imag)):
        plus.extend(trace_curves(V, tp, alpha, cfg, tps))
        minus.extend(trace_curves(V, tp, -alpha, cfg, tps))
    geom = StokesGeometry(
        potential=V,
        alpha=alpha,
        turning_points=tps,
        curves_plus=plus,
        curves_minus=minus,
    )
    ok, diags = check_assumptions(geom, _default_window(tps, cfg))
    geom.assumptions_ok = ok
    geom.violations = diags
    return geom


def _default_window(turning_points, cfg):
    scale, _ = _geometry_scales(turning_points)
    r = 4.0 * scale
    return (-r, r, -r, r)


def _in_window(x, window):
    xmin, xmax, ymin, ymax = window
    return xmin <= x.real <= xmax and ymin <= x.imag <= ymax


def _segments_cross(a0, a1, b0, b1):
    """Proper intersection test for segments [a0,a1], [b0,b1]."""

    def orient(p, q, r):
        return (q.real - p.real) * (r.imag - p.imag) - (q.imag - p.imag) * (r.real - p.real)

    d1 = orient(b0, b1, a0)
    d2 = orient(b0, b1, a1)
    d3 = orient(a0, a1, b0)
    d4 = orient(a0, a1, b1)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def check_assumptions(geom: StokesGeometry, window=None):
    """Verify both standing assumptions inside the window.

    Returns (ok, diagnostics).  Fails when a curve terminates at another
    turning point, when the two angle families are parallel (so every
    crossing is non-transversal), or when crossing counts blow up.
    """
    if window is None:
        window = _default_window(geom.turning_points, None)
    diags = []

    for curve in geom.all_curves():
        if curve.hits_turning_point:
            diags.append(
                {
                    "kind": "turning_point_connection",
                    "family_angle": curve.angle,
                    "origin": curve.origin.location,
                    "target": curve.terminus.target.location,
                    "detail": (
                        f"curve {curve.branch_index} from {curve.origin.location} "
                        f"terminates at turning point {curve.terminus.target.location}"
                    ),
                }
            )

    # transversality: tangents of the two families differ by 2*alpha mod pi
    if abs(math.sin(2.0 * geom.alpha)) <= 1e-9:
        for cp in geom.curves_plus:
            for cm in geom.curves_minus:
                if cp.origin.location == cm.origin.location and cp.branch_index == cm.branch_index:
                    diags.append(
                        {
                            "kind": "degenerate_family_overlap",
                            "origin": cp.origin.location,
                            "branch_index": cp.branch_index,
                            "detail": (
                                "the two angle families coincide; curve "
                                f"{cp.branch_index} from {cp.origin.location} is "
                                "traversed by both, every crossing is tangential"
                            ),
                        }
                    )
    else:
        # finite, transversal crossings inside the window
        for cp in geom.curves_plus:
            for cm in geom.curves_minus:
                count = _crossing_count(cp, cm, window)
                if count > 4 * len(geom.turning_points) + 8:
                    diags.append(
                        {
                            "kind": "excessive_crossings",
                            "origins": (cp.origin.location, cm.origin.location),
                            "count": count,
                            "detail": (
                                f"curves from {cp.origin.location} and "
                                f"{cm.origin.location} cross {count} times in the window"
                            ),
                        }
                    )

    return (not diags), diags


def _crossing_count(cp, cm, window):
    sa = [p for p in cp.samples]
    sb = [p for p in cm.samples]
    count = 0
    for a0, a1 in zip(sa, sa[1:]):
        if not (_in_window(a0, window) or _in_window(a1, window)):
            continue
        for b0, b1 in zip(sb, sb[1:]):
            if not (_in_window(b0, window) or _in_window(b1, window)):
                continue
            if _segments_cross(a0, a1, b0, b1):
                count += 1
    return count


def suggest_alpha(V: Polynomial, n_samples: int = 16) -> float:
    """An angle in (0, pi/2) passing check_assumptions, by scanning.

    Candidates are ranked by the minimal clearance between traced curves
    and the turning points they do not emanate from.
    """
    if n_samples < 1:
        raise NoAdmissibleAngle("n_samples must be at least 1")
    tps = find_turning_points(V)
    best = None
    for i in range(n_samples):
        alpha = (i + 0.5) / n_samples * (math.pi / 2)
        try:
            geom = trace_geometry(V, alpha)
        except Exception:
            continue
        if not geom.assumptions_ok:
            continue
        clearance = math.inf
        for curve in geom.all_curves():
            for t in tps:
                if t.location == curve.origin.location:
                    continue
                d = min(abs(p - t.location) for p in curve.samples)
                clearance = min(clearance, d)
        score = clearance if clearance < math.inf else 1.0
        if best is None or score > best[0]:
            best = (score, alpha)
    if best is None:
        raise NoAdmissibleAngle(f"no admissible angle among {n_samples} samples")
    return best[1]
