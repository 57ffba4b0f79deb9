"""Command-line front end.

Subcommands: compute, sweep, kgroup, wannier, export. Exit status is 0 when
the methods agree, 2 when they disagree, 1 on invalid input (schema, TRS,
gap closing) and 3 when the grid cannot resolve the computation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__, invariants, kgroups, model as model_mod, winding
from .brillouin import InvolutiveGrid, effective_bz
from .errors import GapClosing, NotCoveredError, ValidationError, Z2KitError
from .invariants import CONVENTIONS, equivalence_report, wannier_flow
from .model import diagonalize, validate_trs
from .modelfile import dumps, load_model
from .pfaffian import SKEW_RTOL as PF_SKEW_RTOL

EXIT_OK, EXIT_INVALID, EXIT_DISAGREE, EXIT_NUMERICAL = 0, 1, 2, 3
MIN_GRID = 8
REFINE_TOL = 1e-12
REFINE_MAX = 60
SWEEP_METHODS = ("km", "obstruction", "wannier")


def tolerances() -> dict:
    return {
        "unitary": model_mod.UNITARY_TOL,
        "hermitian": model_mod.HERMITIAN_TOL,
        "trs": model_mod.TRS_TOL,
        "gap": model_mod.GAP_TOL,
        "kramers_relative": model_mod.KRAMERS_RTOL,
        "sewing_unitarity": invariants.SEWING_UNITARY_TOL,
        "sewing_skew": invariants.SEWING_SKEW_TOL,
        "pfaffian_skew_relative": PF_SKEW_RTOL,
        "pfaffian_min": invariants.PF_MIN,
        "branch_step_max": invariants.BRANCH_STEP_MAX,
        "link_det_min": invariants.LINK_DET_MIN,
        "plaquette_flux_max": invariants.PLAQUETTE_FLUX_MAX,
        "wannier_step_max": invariants.WANNIER_STEP_MAX,
        "wannier_reference_tol": invariants.WANNIER_REF_TOL,
        "wannier_retries": invariants.WANNIER_RETRIES,
        "chern_round": invariants.CHERN_ROUND_TOL,
        "wzw_round": winding.WINDING_ROUND_TOL,
        "wzw_smoothness": winding.SMOOTHNESS_MAX,
    }


def conventions() -> dict:
    out = dict(CONVENTIONS)
    out["wzw_calibration_vs_1/(4pi^2)"] = winding.WZW_CALIBRATION
    return out


def _plain(obj):
    """Convert numpy scalars/arrays so json can serialise them."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dump_json(rec) -> str:
    return json.dumps(_plain(rec), indent=2, sort_keys=True) + "\n"


def build_report(model, grid, methods) -> dict:
    rep = equivalence_report(model, grid, methods)
    return {
        "tool": "z2kit",
        "version": __version__,
        "model": {"name": model.name, "dim": model.dim, "bands": model.bands,
                  "n_occupied": model.n_occupied,
                  "parameters": {k: float(v) for k, v in sorted(model.parameters.items())}},
        "grid": list(grid.sizes),
        "methods": list(methods),
        "results": {
            "nu_kane_mele": rep.nu_kane_mele,
            "upsilon_obstruction": rep.upsilon_obstruction,
            "upsilon_wannier": rep.upsilon_wannier,
            "chern_total": rep.chern_total,
        },
        "agreement": rep.agreement,
        "diagnostics": rep.diagnostics,
        "conventions": conventions(),
        "tolerances": tolerances(),
    }


# ------------------------------------------------------------- parsing


def _parse_grid(text, dim):
    parts = [int(p) for p in str(text).lower().split("x")]
    if len(parts) == 1:
        parts = parts * dim
    if len(parts) != dim:
        raise ValidationError(f"grid {text!r} does not match model dimension {dim}")
    for n in parts:
        if n < MIN_GRID or n % 2:
            raise ValidationError(f"grid size {n} must be even and >= {MIN_GRID}")
    return InvolutiveGrid(tuple(parts))


def _parse_methods(text):
    items = [m.strip() for m in text.split(",") if m.strip()]
    if not items or "all" in items:
        return invariants.METHODS
    for m in items:
        if m not in invariants.METHODS:
            raise ValidationError(f"unknown method {m!r}; choose from km,obstruction,wannier,chern,all")
    return tuple(m for m in invariants.METHODS if m in items)


def _parse_sets(items):
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ValidationError(f"--set expects name=value, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise ValidationError(f"--set value for {key!r} is not a number") from None
    return out


def _parse_range(text):
    sep = ":" if ":" in text else ","
    try:
        lo, hi = (float(x) for x in text.split(sep))
    except ValueError:
        raise ValidationError(f"--range expects lo,hi, got {text!r}") from None
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValidationError("--range bounds must be finite")
    return lo, hi


def _write(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------ commands


def cmd_compute(args):
    model = load_model(args.model, _parse_sets(args.set))
    grid = _parse_grid(args.grid, model.dim)
    rec = build_report(model, grid, _parse_methods(args.methods))
    _write(dump_json(rec), args.out)
    return EXIT_OK if rec["agreement"] else EXIT_DISAGREE


def _sweep_point(model, grid):
    """One sweep row; methods that cannot resolve the grid leave blank cells."""
    row = {"nu": "", "upsilon_obs": "", "upsilon_wan": "", "gap": ""}
    try:
        validate_trs(model, grid)
        frames = diagonalize(model, grid)
        sewing = invariants.sewing_field(frames, model.tr_op, grid)
    except GapClosing as e:
        row.update(gap=e.gap, status="gap-closing")
        return row
    except Z2KitError as e:
        row.update(status=f"error: {type(e).__name__}")
        return row
    row["gap"] = frames.gap
    failed = []
    runs = (("nu", lambda: invariants.kane_mele(sewing)),
            ("upsilon_obs", lambda: invariants.z2_obstruction(frames, sewing)),
            ("upsilon_wan", lambda: (invariants.wannier_flow(frames, grid)[1] if grid.dim == 2
                                     else invariants.wannier_flow_3d(frames, grid)[0])))
    for key, fn in runs:
        try:
            row[key] = fn()
        except Z2KitError as e:
            failed.append(f"{key}: {type(e).__name__}")
    vals = [row[k] if row[k] != "" else None for k in ("nu", "upsilon_obs", "upsilon_wan")]
    if not invariants.agreement_of(*vals):
        row["status"] = "disagreement"
    elif failed:
        row["status"] = "partial (" + "; ".join(failed) + ")"
    else:
        row["status"] = "ok"
    return row


def sweep_rows(base, param, lo, hi, steps, grid, refine=True):
    """Rows of a parameter sweep; flips in nu are bisected until the gap closes."""
    from .modelfile import with_parameters

    def at(value):
        row = _sweep_point(with_parameters(base, {param: value}), grid)
        row["value"] = float(value)
        return row

    values = np.linspace(lo, hi, steps) if steps > 1 else np.array([lo])
    rows = []
    for v in values:
        row = at(v)
        row["kind"] = "grid"
        rows.append(row)
    if refine:
        extra = []
        known = [r for r in rows if r["nu"] != ""]
        for a, b in zip(known[:-1], known[1:]):
            if a["nu"] == b["nu"]:
                continue
            between = [r for r in rows if a["value"] < r["value"] < b["value"]
                       or b["value"] < r["value"] < a["value"]]
            if any(r["status"] == "gap-closing" for r in between):
                continue
            lo_v, hi_v, nu_lo = a["value"], b["value"], a["nu"]
            for _ in range(REFINE_MAX):
                if abs(hi_v - lo_v) < REFINE_TOL:
                    break
                mid = at(0.5 * (lo_v + hi_v))
                mid["kind"] = "bisect"
                extra.append(mid)
                if mid["nu"] == "":
                    break
                if mid["nu"] == nu_lo:
                    lo_v = mid["value"]
                else:
                    hi_v = mid["value"]
        rows = sorted(rows + extra, key=lambda r: (r["value"], r["kind"]))
    return rows


SWEEP_COLUMNS = ("value", "nu", "upsilon_obs", "upsilon_wan", "gap", "status", "kind")


def format_sweep(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([f"{r[c]:.12g}" if isinstance(r[c], float) else r[c] for c in SWEEP_COLUMNS])
    return buf.getvalue()


def cmd_sweep(args):
    base = load_model(args.model, _parse_sets(args.set))
    if args.param not in base.parameters:
        raise ValidationError(f"model has no parameter {args.param!r}; "
                              f"available: {sorted(base.parameters)}")
    lo, hi = _parse_range(args.range)
    if args.steps < 1:
        raise ValidationError("--steps must be at least 1; the sweep range is empty")
    grid = _parse_grid(args.grid, base.dim)
    rows = sweep_rows(base, args.param, lo, hi, args.steps, grid, refine=not args.no_refine)
    _write(format_sweep(rows), args.out)
    return EXIT_DISAGREE if any(r["status"] == "disagreement" for r in rows) else EXIT_OK


def kgroup_record(space_token, degree, reduced):
    space = kgroups.SpaceDescriptor.parse(space_token, reduced)
    terms = kgroups.kq_from_kr_summands(space, degree)
    group = kgroups.direct_sum(t.multiplicity * t.group for t in terms)
    return {
        "space": str(space),
        "degree": degree,
        "reduced": reduced,
        "theory": f"KQ^-{degree} = KR^-{degree + 4}",
        "group": group.pretty(),
        "record": group.to_record(),
        "provenance": [t.to_record() for t in terms],
    }


def cmd_kgroup(args):
    try:
        rec = kgroup_record(args.space, args.degree, args.reduced)
    except ValueError as e:
        raise ValidationError(str(e)) from None
    if args.json:
        _write(dump_json(rec), args.out)
        return EXIT_OK
    lines = [rec["group"]]
    for p in rec["provenance"]:
        lines.append(f"  {p['label']}: {p['multiplicity']} x KO^{p['ko_degree']}(pt) = {p['group']}")
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_wannier(args):
    model = load_model(args.model, _parse_sets(args.set))
    grid = _parse_grid(args.grid, model.dim)
    validate_trs(model, grid)
    frames = diagonalize(model, grid)
    plane = None
    if model.dim == 3:
        zones = effective_bz(grid)
        label = args.plane or "kz=0"
        if label not in zones:
            raise ValidationError(f"unknown plane {label!r}; choose from {sorted(zones)}")
        plane = zones[label]
    elif model.dim != 2:
        raise ValidationError("wannier needs a 2d or 3d model")
    spec, ups = wannier_flow(frames, grid, direction=args.direction, plane=plane)
    buf = io.StringIO()
    spec.to_csv(buf)
    _write(buf.getvalue(), args.out)
    sys.stderr.write(f"upsilon = {ups} ({spec.crossings} crossings of theta = {spec.reference:.6f})\n")
    return EXIT_OK


def cmd_export(args):
    model = load_model(args.model, _parse_sets(args.set))
    _write(dumps(model), args.out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="z2kit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"z2kit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid_default="32"):
        sp.add_argument("--model", required=True, help="model file or builtin:<name>")
        sp.add_argument("--grid", default=grid_default, help="N or N0xN1[xN2]")
        sp.add_argument("--set", action="append", metavar="NAME=VALUE",
                        help="override a model parameter (needs a generator)")
        sp.add_argument("--out", help="output path (default stdout)")

    c = sub.add_parser("compute", help="Z2 invariants and the cross-method report")
    common(c)
    c.add_argument("--methods", default="all", help="comma list of km,obstruction,wannier,chern,all")
    c.set_defaults(func=cmd_compute)

    s = sub.add_parser("sweep", help="scan one model parameter")
    common(s, grid_default="24")
    s.add_argument("--param", required=True)
    s.add_argument("--range", required=True, help="lo,hi")
    s.add_argument("--steps", type=int, default=11)
    s.add_argument("--no-refine", action="store_true", help="skip bisection of invariant flips")
    s.set_defaults(func=cmd_sweep)

    k = sub.add_parser("kgroup", help="KQ group of a sphere, torus or point")
    k.add_argument("--space", required=True, help="pt, S<d> or T<d>")
    k.add_argument("--degree", type=int, default=0)
    k.add_argument("--reduced", action="store_true")
    k.add_argument("--json", action="store_true")
    k.add_argument("--out")
    k.set_defaults(func=cmd_kgroup)

    w = sub.add_parser("wannier", help="Wilson-loop spectrum as CSV")
    common(w)
    w.add_argument("--direction", type=int, default=0, help="loop axis for 2d models")
    w.add_argument("--plane", help="invariant plane for 3d models, e.g. kz=0")
    w.set_defaults(func=cmd_wannier)

    e = sub.add_parser("export", help="write a model file")
    common(e)
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INVALID
    except NotCoveredError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INVALID
    except Z2KitError as e:
        sys.stderr.write(f"error ({type(e).__name__}): {e}\n")
        return EXIT_NUMERICAL
