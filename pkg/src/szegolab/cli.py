"""``szego`` command line.

Every experiment subcommand builds an :class:`~szegolab.experiments.ExperimentSpec`, runs it
through the cache under ``--out`` and prints the JSON payload. Exit codes: 0 success, 1 invalid
specification, 2 numerical failure (diagnostic JSON on stderr).

``--config FILE`` reads ``key = value`` lines named like the long flags; flags given on the
command line win.
"""
from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

from .eigen import EigenError
from .experiments import (ExperimentSpec, SpecError, convergence_report, load_record,
                          parse_int_range, run)
from .hydrogen import QuadratureError
from .scaling import ClusterError

NUMERICAL_ERRORS = (EigenError, ClusterError, QuadratureError, ArithmeticError, RuntimeError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SpecError("argv", message)


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _names(text: str) -> list[str]:
    return [x.strip() for x in str(text).split(",") if x.strip()]


def _direction(text: str) -> list[float]:
    named = {"x1": [1.0, 0.0, 0.0], "x3": [0.0, 0.0, 1.0]}
    return named.get(text, None) or _floats(text)


# flag -> (param name, converter, help); ``None`` converter marks a switch
_FLAGS = {
    "moments": {
        "--family": ("family", str, "shell (cluster moments) or radial (hydrogen <r^k>)"),
        "--n": ("N", parse_int_range, "N values, e.g. 10,20,40 or 4:40:4"),
        "--field": ("F", float, "field strength F"),
        "--orders": ("orders", parse_int_range, "moment orders"),
        "--nmax": ("n_max", int, "largest n for the radial family"),
        "--kmax": ("k_max", int, "largest power for the radial family"),
    },
    "shell-spectrum": {
        "--n": ("N", int, "shell index"),
        "--field": ("F", float, "field strength F"),
        "--dir": ("field_dir", _direction, "x1, x3 or a comma-separated vector in the x1-x3 plane"),
    },
    "classical-measure": {
        "--field": ("F", float, "field strength F"),
        "--samples": ("samples", int, "Monte Carlo sample count"),
        "--chunk": ("chunk", int, "substream chunk size"),
        "--bins": ("bins", int, "histogram bins"),
        "--orbits": ("orbits", int, "orbits in the invariant check (0 skips it)"),
        "--collisions": ("collisions", int, "collision orbits among them"),
        "--collision-family": ("collision_family", str, "pole (collision at s = 0) or random-phase"),
    },
    "szego-compare": {
        "--n": ("N", parse_int_range, "N values"),
        "--field": ("F", float, "field strength F"),
        "--rho": ("rho", _names, "test functions: one, s, s2, s3, s4, exp"),
        "--samples": ("samples", int, "Monte Carlo sample count"),
        "--chunk": ("chunk", int, "substream chunk size"),
        "--no-ks": ("ks", None, "skip the Kolmogorov-Smirnov distances"),
    },
    "resonances": {
        "--n": ("N", int, "shell index"),
        "--field": ("F", float, "nominal F (normalization of the trace identity)"),
        "--theta": ("theta", float, "dilation angle"),
        "--nmax": ("n_max", int, "radial basis size"),
        "--lmax": ("l_max", int, "angular cutoff"),
        "--kappa": ("kappa", float, "Sturmian scale (default 1/N)"),
        "--field-knob": ("field_knob", float, "effective field used in the operator"),
        "--trace-nmax": ("trace_nmax", parse_int_range, "radial sizes for the trace identity"),
        "--m-max": ("m_max", int, "highest moment in the trace identity"),
    },
    "theta-scan": {
        "--n": ("N", int, "shell index"),
        "--thetas": ("thetas", _floats, "dilation angles"),
        "--nmax": ("n_max", int, "radial basis size"),
        "--lmax": ("l_max", int, "angular cutoff"),
        "--kappa": ("kappa", float, "Sturmian scale (default 1/N)"),
        "--field-knob": ("field_knob", float, "effective field"),
    },
    "coherent-check": {
        "--l": ("norm_l", parse_int_range, "shells for the normalization checks"),
        "--projector-l": ("projector_l", int, "shell for the resolution of identity"),
        "--samples": ("samples", int, "Monte Carlo labels for the projector check"),
        "--tail-n": ("tail_N", parse_int_range, "shells for the tail mass"),
        "--r0": ("tail_r0", float, "tail radius (> 1)"),
        "--stark-n": ("stark_N", parse_int_range, "shells for the Stark diagonal"),
        "--field": ("F", float, "field strength F"),
        "--alphas": ("alphas", int, "random labels for tails and Stark diagonals"),
    },
    "estimate-checks": {
        "--n": ("N", int, "shell index of the basis"),
        "--theta": ("theta", float, "dilation angle (3 theta is the field angle)"),
        "--samples": ("samples", int, "random Rayleigh quotients"),
        "--nmax": ("n_max", int, "radial basis size"),
        "--lmax": ("l_max", int, "angular cutoff"),
        "--field-knob": ("field_knob", float, "field strength"),
        "--tol": ("tol", float, "half-plane tolerance"),
        "--qe-form": ("qe_form", str, "plain or covariant quadratic estimate"),
    },
}


def _add_common(sp):
    sp.add_argument("--seed", type=int, default=0, help="master seed")
    sp.add_argument("--out", default="szego-out", help="result directory")
    sp.add_argument("--force", action="store_true", help="recompute even when cached")
    sp.add_argument("--config", help="key = value file; command-line flags win")
    sp.add_argument("--workers", type=int, default=1, help="threads for Monte Carlo chunks")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="szego", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for kind, flags in _FLAGS.items():
        aliases = ["compare"] if kind == "szego-compare" else []
        sp = sub.add_parser(kind, aliases=aliases, help=f"run a {kind} experiment")
        for flag, (dest, conv, hlp) in flags.items():
            if conv is None:
                sp.add_argument(flag, dest=dest, action="store_false", default=None, help=hlp)
            else:
                sp.add_argument(flag, dest=dest, type=conv, default=None, help=hlp)
        _add_common(sp)
    rp = sub.add_parser("report", help="summarize cached records and their convergence data")
    rp.add_argument("paths", nargs="*", help="record directories (default: all under --out)")
    rp.add_argument("--out", default="szego-out")
    rp.add_argument("--config", help="ignored except for out")
    return p


def _config_argv(path: str) -> list[str]:
    argv = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"config:{path}", f"expected key = value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if val.lower() in ("true", "yes", "on"):
            argv.append(flag)
        elif val.lower() in ("false", "no", "off"):
            continue
        else:
            argv += [flag, *shlex.split(val)]
    return argv


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        # config first, so later command-line occurrences override it
        cmd, rest = argv[0], argv[1:]
        args = parser.parse_args([cmd, *_config_argv(args.config), *rest])
    return args


def _kind(command: str) -> str:
    return "szego-compare" if command == "compare" else command


def _report(args) -> dict:
    paths = [Path(p) for p in args.paths] or sorted(
        d for d in Path(args.out).glob("*") if (d / "record.json").exists())
    out = []
    for path in paths:
        rec = load_record(path)
        entry = {"path": str(path), "kind": rec.spec.kind, "spec_hash": rec.spec_hash,
                 "seed": rec.spec.seed, "version": rec.version,
                 "runtime_s": rec.finished - rec.started}
        if "result.json" in rec.payload:
            body = rec.json()
            for key in ("convergence", "stark_convergence"):
                if key in body:
                    entry[key] = body[key]
            if isinstance(body.get("trace"), dict):
                tr = body["trace"]
                steps = tr["refinement_steps"]
                entry["trace"] = {"budget": tr["budget"], "steps": steps,
                                  "decreasing": tr["decreasing"],
                                  "within_budget": tr["within_budget"]}
                sizes = sorted({r["n_max"] for r in tr["rows"]})[1:]
                if len(steps) >= 3 and all(s > 0 for s in steps):
                    entry["trace_convergence"] = convergence_report(sizes, steps)
        out.append(entry)
    return {"records": out}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
        if args.command == "report":
            print(json.dumps(_report(args), indent=1, sort_keys=True))
            return 0
        kind = _kind(args.command)
        params = {dest: getattr(args, dest) for dest, _, _ in _FLAGS[kind].values()
                  if getattr(args, dest) is not None}
        spec = ExperimentSpec(kind, params, args.seed)
    except SpecError as exc:
        print(json.dumps({"error": "spec", "field": exc.path, "message": str(exc)}), file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": "spec", "message": str(exc)}), file=sys.stderr)
        return 1
    try:
        rec = run(spec, args.out, force=args.force, workers=args.workers)
    except SpecError as exc:
        print(json.dumps({"error": "spec", "field": exc.path, "message": str(exc)}), file=sys.stderr)
        return 1
    except ValueError as exc:
        print(json.dumps({"error": "spec", "kind": kind, "message": str(exc)}), file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(json.dumps({"error": "numerical", "kind": kind, "type": type(exc).__name__,
                          "message": str(exc), "spec": json.loads(spec.to_json())}),
              file=sys.stderr)
        return 2
    sys.stdout.write(rec.payload["result.json"])
    print(json.dumps({"record": str(rec.path), "spec_hash": rec.spec_hash, "cached": rec.cached,
                      "files": sorted(rec.payload)}), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
