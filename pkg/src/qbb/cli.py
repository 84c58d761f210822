"""Command-line interface.

Subcommands::

    qbb bounds    --model imaging --d 2 --n 4 --alpha auto [--skip-sdp] [--out report.json]
    qbb sweep     --model imaging --vary d=2:6 --alpha auto --out sweep.csv
    qbb verify    --model imaging --d 1 --povm spm.txt
    qbb make-povm --model imaging --d 1 --kind spm --out spm.txt

Exit codes: 0 success, 2 hierarchy violation, 3 optimality check failed,
64 usage error, 65 bad model or input data, 70 solver failure.
"""

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

import numpy as np

from . import __version__
from .bounds import ReportOptions, assemble_report
from .errors import QbbError, SdpError
from .model import imaging_model, load_grid_model, phase_dephasing_model, planar_model
from .povm import (
    identity_povm, load_povm, msl_of_povm, pauli_tomography_povm, pgm_povm, save_povm,
    spm_projective, verify_optimality,
)
from .tolerances import DEFAULT_TOL

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_NOT_OPTIMAL = 3
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_SOFTWARE = 70

# parameter name -> (type, default); defaults follow the usual figure settings
MODEL_PARAMS = {
    "imaging": {"d": (int, 2), "n": (int, 4), "alpha": ("alpha", "auto")},
    "phase-dephasing": {"copies": (int, 1), "w1": (float, math.pi / 2), "w2": (float, 5.0)},
    "planar": {"w1": (float, 0.85), "w2": (float, 0.51), "beta": (float, 0.5)},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# --------------------------------------------------------------------------
# Serialisation


def _num(x):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return "null"
    return format(float(x), ".17g")


def to_json(obj, indent=0):
    """JSON text with every float written to 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_quote(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool)
               for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent)
    return _quote(str(obj))


def _quote(s):
    import json

    return json.dumps(s)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return _num(v) if math.isfinite(v) else ""
    return str(v)


def rows_to_csv(rows):
    header = []
    for row in rows:
        header.extend(k for k in row if k not in header)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(row.get(k)) for k in header])
    return buf.getvalue()


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


# --------------------------------------------------------------------------
# Model construction


def _model_kind(name):
    if name.startswith("grid:"):
        return "grid", name[5:]
    if name not in MODEL_PARAMS:
        raise UsageError(f"unknown model {name!r}; choose imaging, phase-dephasing, planar or grid:<path>")
    return name, None


def model_params(args, overrides=None):
    """Resolve the parameter dict for the chosen built-in model."""
    kind, _ = _model_kind(args.model)
    if kind == "grid":
        return {}
    overrides = overrides or {}
    out = {}
    for name, (typ, default) in MODEL_PARAMS[kind].items():
        raw = overrides.get(name, getattr(args, name, None))
        out[name] = default if raw is None else raw
    if kind == "imaging":
        a = out["alpha"]
        out["alpha"] = math.sqrt(out["d"]) if a == "auto" else float(a)
    return out


def build_model(args, overrides=None):
    kind, path = _model_kind(args.model)
    if kind == "grid":
        model = load_grid_model(path)
    else:
        p = model_params(args, overrides)
        if kind == "imaging":
            model = imaging_model(int(p["d"]), int(p["n"]), p["alpha"])
        elif kind == "phase-dephasing":
            model = phase_dephasing_model(int(p["copies"]), p["w1"], p["w2"])
        else:
            model = planar_model(p["w1"], p["w2"], p["beta"])
    if getattr(args, "restrict", None) is not None:
        if not 0 <= args.restrict < model.d:
            raise UsageError(f"--restrict must lie in [0, {model.d - 1}]")
        model = model.restricted(args.restrict)
    return model


def _provenance(args, model, command):
    return {
        "tool": "qbb",
        "version": __version__,
        "command": command,
        "model": {
            "name": args.model,
            "params": {k: v for k, v in model_params(args).items()} if not args.model.startswith("grid:") else {},
            "d": model.d,
            "hilbert_dim": model.hilbert_dim,
            "weight": model.weight.tolist(),
            "symmetry": list(model.symmetry),
        },
        "quad_order": getattr(args, "quad_order", None),
        "skip_sdp": bool(getattr(args, "skip_sdp", False)),
        "tolerances": asdict(DEFAULT_TOL),
    }


def _tomography_copies(args, model):
    if not getattr(args, "tomography", False):
        return None
    copies = int(round(math.log2(model.hilbert_dim)))
    if 2 ** copies != model.hilbert_dim:
        raise UsageError("--tomography needs a model on qubits (dimension a power of two)")
    return copies


def _report(args, overrides=None):
    model = build_model(args, overrides)
    opts = ReportOptions(run_sdp=not args.skip_sdp, quad_order=args.quad_order,
                         tomography_copies=_tomography_copies(args, model))
    return model, assemble_report(model, options=opts)


# --------------------------------------------------------------------------
# Subcommands


def run_bounds(args):
    model, report = _report(args)
    if args.format == "json":
        doc = {"provenance": _provenance(args, model, "bounds")}
        doc.update(report.as_dict())
        _emit(to_json(doc), args.out)
    else:
        row = dict(model_params(args))
        row.update(report.flat())
        _emit(rows_to_csv([row]), args.out)
    return EXIT_OK if report.ok else EXIT_VIOLATION


def parse_range(text):
    """``name=start:stop[:count]`` -> (name, list of values)."""
    name, sep, body = text.partition("=")
    if not sep or not name:
        raise UsageError(f"bad --vary {text!r}; expected name=start:stop[:count]")
    parts = body.split(":")
    if len(parts) not in (2, 3):
        raise UsageError(f"bad --vary {text!r}; expected name=start:stop[:count]")
    try:
        if len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
            values = list(range(lo, hi + 1))
        else:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
            values = [float(v) for v in np.linspace(lo, hi, count)] if count > 0 else []
    except ValueError:
        raise UsageError(f"bad --vary {text!r}; integer ranges need integer ends, float ranges a count") from None
    if not values:
        raise UsageError(f"--vary {text!r} is an empty range")
    return name, values


def _workers(n_points):
    raw = os.environ.get("QBB_THREADS")
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise UsageError(f"QBB_THREADS must be an integer, got {raw!r}") from None
        if cap < 1:
            raise UsageError("QBB_THREADS must be at least 1")
    return max(1, min(cap, n_points))


def _sweep_row(args, name, value):
    overrides = {name: value}
    params = model_params(args, overrides)
    try:
        _, report = _report(args, overrides)
    except (QbbError, SdpError) as exc:
        row = dict(params)
        row["violations"] = f"error: {exc}"
        return row, True
    row = dict(params)
    row.update(report.flat())
    return row, not report.ok


def run_sweep(args):
    kind, _ = _model_kind(args.model)
    if kind == "grid":
        raise UsageError("sweeps need a built-in model")
    name, values = parse_range(args.vary)
    if name not in MODEL_PARAMS[kind]:
        raise UsageError(f"{kind} has no parameter {name!r}; choose from {', '.join(MODEL_PARAMS[kind])}")
    typ = MODEL_PARAMS[kind][name][0]
    if typ is int:
        if any(float(v) != int(v) for v in values):
            raise UsageError(f"{name} takes integer values")
        values = [int(v) for v in values]
    with ThreadPoolExecutor(max_workers=_workers(len(values))) as pool:
        results = list(pool.map(lambda v: _sweep_row(args, name, v), values))
    _emit(rows_to_csv([r for r, _ in results]), args.out)
    return EXIT_VIOLATION if any(bad for _, bad in results) else EXIT_OK


def run_verify(args):
    model = build_model(args)
    try:
        povm = load_povm(args.povm)
    except OSError as exc:
        raise QbbError(f"cannot read POVM file: {exc}") from None
    cert = verify_optimality(povm, model, grid_per_axis=args.grid_per_axis)
    doc = {"provenance": _provenance(args, model, "verify")}
    doc.update(cert.as_dict())
    doc["msl_fixed"] = msl_of_povm(povm, model.moments(), "fixed")[0]
    doc["upsilon"] = {"re": cert.upsilon.real.tolist(), "im": cert.upsilon.imag.tolist()}
    _emit(to_json(doc), args.out)
    return EXIT_OK if cert.passed else EXIT_NOT_OPTIMAL


def run_make_povm(args):
    model = build_model(args)
    if args.kind == "spm":
        povm = spm_projective(model.moments(), args.index)
    elif args.kind == "pgm":
        povm = pgm_povm(model, args.quad_order)
    elif args.kind == "identity":
        povm = identity_povm(model.hilbert_dim, model.moments().mu)
    else:
        copies = int(round(math.log2(model.hilbert_dim)))
        povm = pauli_tomography_povm(copies)
    if args.out in (None, "-"):
        raise UsageError("make-povm needs --out <path>")
    save_povm(povm, args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser


def _add_model_args(p):
    p.add_argument("--model", required=True,
                   help="imaging, phase-dephasing, planar or grid:<path>")
    g = p.add_argument_group("model parameters (defaults in brackets)")
    g.add_argument("--d", type=int, help="imaging: number of parameters [2]")
    g.add_argument("--n", type=int, help="imaging: photon number [4]")
    g.add_argument("--alpha", help="imaging: prior width, or 'auto' for sqrt(d) [auto]")
    g.add_argument("--copies", type=int, help="phase-dephasing: number of copies [1]")
    g.add_argument("--w1", type=float, help="phase-dephasing: phase window [pi/2]; planar: x width [0.85]")
    g.add_argument("--w2", type=float, help="phase-dephasing: dephasing ratio [5]; planar: y width [0.51]")
    g.add_argument("--beta", type=float, help="planar: prior shape [0.5]")
    g.add_argument("--restrict", type=int, metavar="I",
                   help="put all loss weight on parameter I (0-based)")
    p.add_argument("--quad-order", type=int, help="quadrature points per axis")
    p.add_argument("--out", default="-", help="output path, '-' for stdout [-]")


def build_parser():
    parser = _Parser(prog="qbb", description="Bayesian multiparameter quantum estimation bounds.")
    parser.add_argument("--version", action="version", version=f"qbb {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bounds", help="compute the full bound report for one model")
    _add_model_args(b)
    b.add_argument("--skip-sdp", action="store_true", help="skip the NH and Holevo SDPs")
    b.add_argument("--tomography", action="store_true",
                   help="add the posterior-mean MSL of local Pauli tomography")
    b.add_argument("--format", choices=("json", "csv"), default="json")
    b.set_defaults(func=run_bounds)

    s = sub.add_parser("sweep", help="tabulate bounds over one model parameter")
    _add_model_args(s)
    s.add_argument("--vary", required=True, metavar="NAME=START:STOP[:COUNT]",
                   help="integer ends give an inclusive unit-step range, a COUNT gives evenly spaced floats")
    s.add_argument("--skip-sdp", action="store_true")
    s.add_argument("--tomography", action="store_true")
    s.set_defaults(func=run_sweep)

    v = sub.add_parser("verify", help="check the optimality conditions for a POVM")
    _add_model_args(v)
    v.add_argument("--povm", required=True, help="POVM file with estimates")
    v.add_argument("--grid-per-axis", type=int, default=21)
    v.set_defaults(func=run_verify)

    mk = sub.add_parser("make-povm", help="write a POVM file for a model")
    _add_model_args(mk)
    mk.add_argument("--kind", choices=("spm", "pgm", "identity", "tomography"), default="spm")
    mk.add_argument("--index", type=int, default=0, help="parameter targeted by --kind spm")
    mk.set_defaults(func=run_make_povm)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.alpha not in (None, "auto"):
            try:
                float(args.alpha)
            except ValueError:
                raise UsageError(f"--alpha must be a number or 'auto', got {args.alpha!r}") from None
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"qbb: error: {exc}\n")
        return EXIT_USAGE
    except SdpError as exc:
        sys.stderr.write(f"qbb: solver failure: {exc}\n")
        return EXIT_SOFTWARE
    except (QbbError, OSError) as exc:
        sys.stderr.write(f"qbb: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
