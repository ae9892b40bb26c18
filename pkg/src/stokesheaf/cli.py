"""Command line driver: configuration, JSON emission, and SVG figures.

Subcommands: geometry | words | singularities | check.  Outputs are
deterministic: JSON uses sorted keys and 12 significant digits, SVG is
rendered with a fixed hash salt and no timestamp metadata.
"""

from __future__ import annotations

import argparse
import cmath
import json
import math
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "stokesheaf"

import matplotlib.pyplot as plt

from .continuation import (
    compute_singularities,
    frame_point,
    locate_fiber,
    sheet_set,
)
from .cover import (
    build_strip_complex,
    intersect_complexes,
    load_synthetic,
)
from .errors import (
    AssumptionViolation,
    DegenerateInput,
    InvariantFailure,
    ParseError,
    StokesheafError,
)
from .potential import Polynomial, parse_complex
from .sheafcalc import (
    Basis,
    build_i_psi_phi,
    compose,
    gluing_matrix,
    section_table,
    strip_side,
)
from .stokes import TraceConfig, check_assumptions, suggest_alpha, trace_geometry
from .words import all_words

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_ASSUMPTION = 3
EXIT_INVARIANT = 4
EXIT_FAILURE = 1


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    potential: str = ""
    alpha: object = "auto"  # float or "auto"
    x0: complex = 0.9 + 0.4j
    x_eval: complex | None = None
    depth: int = 2
    window: tuple | None = None
    step: float = 0.08
    escape_radius: float = 0.0
    tolerances: dict = field(default_factory=dict)
    output: str = "out"
    format: str = "json"  # json | svg | both
    force: bool = False
    synthetic: str | None = None

    def validated(self) -> "RunConfig":
        if self.alpha != "auto":
            # the boundary angles 0 and pi/2 are let through so that the
            # assumption checker can reject them with a diagnostic
            a = float(self.alpha)
            if not 0.0 <= a <= math.pi / 2:
                raise ParseError("alpha must lie in [0, pi/2] or be 'auto'")
        if self.depth < 0:
            raise ParseError("depth must be nonnegative")
        if self.window is not None:
            xmin, xmax, ymin, ymax = self.window
            if xmin >= xmax or ymin >= ymax:
                raise ParseError("window must be nondegenerate")
        if self.format not in ("json", "svg", "both"):
            raise ParseError(f"unknown format {self.format!r}")
        return self


def _merge_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            with open(args.config) as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read config file: {exc}")
        for key, value in data.items():
            if not hasattr(cfg, key):
                raise ParseError(f"unknown config key {key!r}")
            if key in ("x0", "x_eval"):
                value = parse_complex(str(value))
            if key == "window":
                value = tuple(float(v) for v in value)
            setattr(cfg, key, value)
    for key in ("potential", "alpha", "depth", "step", "escape_radius",
                "output", "format", "force", "synthetic"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    for key in ("x0", "x_eval"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, parse_complex(value))
    if getattr(args, "window", None) is not None:
        cfg.window = tuple(args.window)
    if cfg.alpha not in (None, "auto"):
        cfg.alpha = float(cfg.alpha)
    return cfg.validated()


# ---------------------------------------------------------------------------
# deterministic serialization


def _f(x: float) -> float:
    return float(f"{float(x):.12g}")


def _c(z) -> dict:
    zc = complex(z)
    return {"im": _f(zc.imag), "re": _f(zc.real)}


def _word_record(w) -> dict:
    return {
        "c_hat": _c(w.c_hat),
        "label": w.label(),
        "letters": list(w.letters),
        "sign": w.sign,
        "terminal": w.terminal,
    }


def _write_json(path: str, obj) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, sort_keys=True, indent=2)
        f.write("\n")


def _save_svg(fig, path: str) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _error_record(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps(
        {"error": {"kind": kind, "message": message}}, sort_keys=True
    ) + "\n")


# ---------------------------------------------------------------------------
# shared pipeline stages


def _resolve_alpha(cfg: RunConfig, V: Polynomial) -> float:
    if cfg.alpha == "auto":
        return suggest_alpha(V)
    return float(cfg.alpha)


def _trace(cfg: RunConfig):
    V = Polynomial.from_string(cfg.potential)
    alpha = _resolve_alpha(cfg, V)
    tc = TraceConfig(h=cfg.step, escape_radius=cfg.escape_radius,
                     window=cfg.window)
    geom = trace_geometry(V, alpha, tc)
    return V, alpha, geom


def _require_assumptions(cfg: RunConfig, geom) -> None:
    ok, diagnostics = check_assumptions(geom, cfg.window)
    if not ok and not cfg.force:
        raise AssumptionViolation(json.dumps(
            [{"curve": d.get("curve"), "kind": d["kind"]} for d in diagnostics],
            sort_keys=True,
        ))


# ---------------------------------------------------------------------------
# geometry


def _geometry_json(geom, plus=None, minus=None) -> dict:
    curves = []
    for fam, group in (("plus", geom.curves_plus), ("minus", geom.curves_minus)):
        for c in group:
            curves.append({
                "asymptotic_direction": (
                    None if c.asymptotic_direction is None
                    else _f(c.asymptotic_direction)
                ),
                "family": fam,
                "origin": _c(c.origin.location),
                "samples": len(c.samples),
                "terminus": c.terminus.kind,
            })
    out = {
        "alpha": _f(geom.alpha),
        "curves": curves,
        "turning_points": [
            {"location": _c(t.location), "multiplicity": t.multiplicity}
            for t in geom.turning_points
        ],
    }
    for name, cx in (("strips", plus), ("minus_strips", minus)):
        if cx is None:
            out[name] = None
            continue
        out[name] = [
            {
                "id": sid,
                "rays": sorted(s.rays),
                "shape": s.shape,
            }
            for sid, s in sorted(cx.strips.items())
        ]
    out["rays"] = None if plus is None else [
        {
            "c_hat": _c(r.c_hat),
            "handedness": r.handedness,
            "id": rid,
            "strips": sorted(r.strips),
        }
        for rid, r in sorted(plus.rays.items())
    ]
    return out


def _plot_geometry(ax, geom):
    for c in geom.curves_plus:
        xs = [p.real for p in c.samples]
        ys = [p.imag for p in c.samples]
        ax.plot(xs, ys, color="tab:blue", linewidth=1.0)
    for c in geom.curves_minus:
        xs = [p.real for p in c.samples]
        ys = [p.imag for p in c.samples]
        ax.plot(xs, ys, color="tab:red", linewidth=1.0)
    for t in geom.turning_points:
        ax.plot([t.location.real], [t.location.imag], "ko", markersize=4)
    ax.set_aspect("equal")
    ax.set_title("Stokes curves")


def cmd_geometry(cfg: RunConfig) -> int:
    V, alpha, geom = _trace(cfg)
    plus = minus = None
    if geom.turning_points:
        try:
            plus = build_strip_complex(geom, "plus", cfg.x0, cfg.depth)
            minus = build_strip_complex(geom, "minus", cfg.x0, cfg.depth)
        except StokesheafError:
            pass
    if cfg.format in ("json", "both"):
        _write_json(cfg.output + ".json", _geometry_json(geom, plus, minus))
    if cfg.format in ("svg", "both"):
        fig, ax = plt.subplots(figsize=(6, 6))
        _plot_geometry(ax, geom)
        _save_svg(fig, cfg.output + ".svg")
    return EXIT_OK


# ---------------------------------------------------------------------------
# words


def cmd_words(cfg: RunConfig) -> int:
    if cfg.synthetic:
        with open(cfg.synthetic) as f:
            data = json.load(f)
        complexes = load_synthetic(data)
        cx = complexes.get("plus") or next(iter(complexes.values()))
    else:
        V, alpha, geom = _trace(cfg)
        _require_assumptions(cfg, geom)
        cx = build_strip_complex(geom, "plus", cfg.x0, cfg.depth)
    words = all_words(cx, cfg.depth)
    if cfg.format in ("json", "both"):
        _write_json(cfg.output + ".json",
                    {"words": [_word_record(w) for w in words]})
    if cfg.format in ("svg", "both"):
        fig, ax = plt.subplots(figsize=(6, 6))
        for w in words:
            z = complex(w.c_hat)
            ax.plot([z.real], [z.imag], "k.", markersize=3)
        ax.set_aspect("equal")
        ax.set_title("word apexes")
        _save_svg(fig, cfg.output + ".svg")
    return EXIT_OK


# ---------------------------------------------------------------------------
# singularities


def _report_json(report) -> dict:
    par = report.base_U
    return {
        "base_U": {
            "alpha": _f(par.alpha),
            "center": _c(par.center),
            "half_minus": _f(par.half_minus),
            "half_plus": _f(par.half_plus),
            "vertices": [_c(v) for v in par.vertices],
        },
        "certified": report.smallness_certified,
        "cut_direction": _c(report.cut_direction),
        "cuts": [_c(e["point"]) for e in report.singular_apexes],
        "depth": report.depth,
        "depth_saturated": report.depth_saturated,
        "fiber_point": _c(report.fiber_point),
        "singular_apexes": [
            {"point": _c(e["point"]), "word": _word_record(e["word"])}
            for e in report.singular_apexes
        ],
        "strip": report.strip,
    }


def _plot_report(axes, geom, report):
    ax_x, ax_s = axes
    _plot_geometry(ax_x, geom)
    sh = sheet_set(report)
    reach = 1.0
    for g in sh.cuts:
        reach = max(reach, abs(g - sh.apex))
    reach = 2.0 * reach
    for g in sh.cuts:
        end = g + reach * report.cut_direction
        ax_s.plot([g.real, end.real], [g.imag, end.imag], "r--",
                  linewidth=0.8)
        ax_s.plot([g.real], [g.imag], "rx", markersize=5)
    for sgn in (1, -1):
        end = sh.apex + reach * cmath.exp(sgn * 1j * sh.alpha)
        ax_s.plot([sh.apex.real, end.real], [sh.apex.imag, end.imag],
                  "k-", linewidth=1.0)
    verts = report.base_U.vertices + report.base_U.vertices[:1]
    ax_s.plot([v.real for v in verts], [v.imag for v in verts], "b-",
              linewidth=1.0)
    ax_s.set_aspect("equal")
    ax_s.set_title("Borel plane")


def cmd_singularities(cfg: RunConfig) -> int:
    V, alpha, geom = _trace(cfg)
    _require_assumptions(cfg, geom)
    plus = build_strip_complex(geom, "plus", cfg.x0, cfg.depth)
    minus = build_strip_complex(geom, "minus", cfg.x0, cfg.depth)
    cells = intersect_complexes(plus, minus)
    system = build_i_psi_phi(plus, minus, cells, cfg.depth)
    x_eval = cfg.x_eval if cfg.x_eval is not None else cfg.x0
    strip_id, z = locate_fiber(plus, x_eval)
    report = compute_singularities(system, strip_id, z)
    if cfg.format in ("json", "both"):
        _write_json(cfg.output + ".json", _report_json(report))
    if cfg.format in ("svg", "both"):
        fig, axes = plt.subplots(1, 2, figsize=(11, 5.5))
        _plot_report(axes, geom, report)
        _save_svg(fig, cfg.output + ".svg")
    return EXIT_OK


# ---------------------------------------------------------------------------
# check


def _complex_diagnostics(cx, depth: int) -> list:
    failures = []
    if not cx.tree_invariant():
        failures.append("tree invariant violated")
        return failures
    basis = Basis(cx, depth)
    for rid, ray in sorted(cx.rays.items()):
        a, b = ray.strips
        try:
            if strip_side(cx, a, ray) == strip_side(cx, b, ray):
                failures.append(f"sides of ray {rid} are not opposite")
        except StokesheafError as exc:
            failures.append(f"side test for ray {rid}: {exc}")
            continue
        fwd = gluing_matrix(basis, ray, a, b)
        back = gluing_matrix(basis, ray, b, a)
        prod = compose(fwd.base, back.base, check=False)
        ident = {(w, w): 1 for w in basis.words}
        if dict(prod.entries) != ident:
            failures.append(f"gluing across {rid} is not an involution")
    return failures


def cmd_check(cfg: RunConfig) -> int:
    rows = []
    failures = []
    if cfg.synthetic:
        with open(cfg.synthetic) as f:
            data = json.load(f)
        complexes = load_synthetic(data)
        rows.append(("assumptions", "skipped (synthetic input)"))
        for fam in sorted(complexes):
            fails = _complex_diagnostics(complexes[fam], cfg.depth)
            rows.append((fam, "ok" if not fails else "; ".join(fails)))
            failures += fails
        assumption_fail = False
    else:
        V, alpha, geom = _trace(cfg)
        ok, diagnostics = check_assumptions(geom, cfg.window)
        assumption_fail = not ok
        rows.append(("assumptions",
                     "ok" if ok else "; ".join(d["kind"] for d in diagnostics)))
        if ok or cfg.force:
            for fam in ("plus", "minus"):
                try:
                    cx = build_strip_complex(geom, fam, cfg.x0, cfg.depth)
                except StokesheafError as exc:
                    failures.append(f"{fam}: {exc}")
                    rows.append((fam, str(exc)))
                    continue
                fails = _complex_diagnostics(cx, cfg.depth)
                rows.append((fam, "ok" if not fails else "; ".join(fails)))
                failures += fails
    width = max(len(r[0]) for r in rows)
    for name, status in rows:
        sys.stdout.write(f"{name.ljust(width)}  {status}\n")
    if assumption_fail and not cfg.force:
        return EXIT_ASSUMPTION
    if failures:
        return EXIT_INVARIANT
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--potential", help="comma separated coefficients, ascending degree")
    shared.add_argument("--alpha", help="angle in (0, pi/2), or 'auto'")
    shared.add_argument("--x0", help="base point, complex literal")
    shared.add_argument("--x-eval", dest="x_eval", help="evaluation point")
    shared.add_argument("--depth", type=int, help="word depth")
    shared.add_argument("--window", type=float, nargs=4,
                        metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    shared.add_argument("--step", type=float, help="tracer step size")
    shared.add_argument("--escape-radius", dest="escape_radius", type=float)
    shared.add_argument("--out", dest="output", help="output path prefix")
    shared.add_argument("--format", choices=("json", "svg", "both"))
    shared.add_argument("--config", help="JSON config file")
    shared.add_argument("--force", action="store_true", default=None,
                        help="proceed despite failed assumptions")
    shared.add_argument("--synthetic", help="synthetic strip complex JSON file")

    parser = argparse.ArgumentParser(
        prog="stokesheaf",
        description="Stokes geometry and Borel plane singularity prediction",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("geometry", parents=[shared])
    sub.add_parser("words", parents=[shared])
    sub.add_parser("singularities", parents=[shared])
    sub.add_parser("check", parents=[shared])
    return parser


_COMMANDS = {
    "geometry": cmd_geometry,
    "words": cmd_words,
    "singularities": cmd_singularities,
    "check": cmd_check,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        if args.command != "check" and not cfg.potential and not cfg.synthetic:
            raise ParseError("a potential is required (--potential)")
        if args.command == "check" and not cfg.potential and not cfg.synthetic:
            raise ParseError("check needs --potential or --synthetic")
        return _COMMANDS[args.command](cfg)
    except (ParseError, DegenerateInput) as exc:
        _error_record(type(exc).__name__, str(exc))
        return EXIT_PARSE
    except AssumptionViolation as exc:
        _error_record("AssumptionViolation", str(exc))
        return EXIT_ASSUMPTION
    except InvariantFailure as exc:
        _error_record("InvariantFailure", str(exc))
        return EXIT_INVARIANT
    except StokesheafError as exc:
        _error_record(type(exc).__name__, str(exc))
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
