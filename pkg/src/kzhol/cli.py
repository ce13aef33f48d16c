"""Command-line surface: path analysis, holonomy, associator, verification.

All outputs are JSON.  Exit codes: 0 success (and `verify` pass), 1 verify
ran but failed tolerance, 2 geometry error, 3 numerics error, 4 I/O error,
5 configuration/usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .associator import get_associator
from .errors import KzholError
from .holonomy import EngineConfig, free_connection, hol_reg
from .paths import analyze, path_from_json
from .series import series_to_json
from .verifier import verify_pentagon, verify_pentagon_matrix

EXIT_FAIL = 1
EXIT_CODES = {"geometry": 2, "numerics": 3, "io": 4, "config": 5}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _engine_flags(p: argparse.ArgumentParser):
    p.add_argument("--degree", type=int, default=3, help="series truncation degree D")
    p.add_argument("--tol", type=float, default=1e-6, help="pass/fail tolerance")
    p.add_argument("--quad-order", type=int, default=16, help="interpolation points per transport panel")
    p.add_argument("--expansion-order", type=int, default=12, help="initial local expansion order K")
    p.add_argument("--out", help="write the JSON result to this file instead of stdout")


def _config_from(args) -> EngineConfig:
    return EngineConfig(
        degree=args.degree,
        quad_order=args.quad_order,
        expansion_order=args.expansion_order,
        tolerance=args.tol,
    )


def _load_path(file):
    try:
        with open(file) as f:
            obj = json.load(f)
    except OSError as e:
        raise _IOError(str(e)) from None
    except json.JSONDecodeError as e:
        raise _IOError("invalid JSON in %s: %s" % (file, e)) from None
    return path_from_json(obj)


class _IOError(Exception):
    pass


def _emit(obj, out_file):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out_file:
        try:
            with open(out_file, "w") as f:
                f.write(text + "\n")
        except OSError as e:
            raise _IOError(str(e)) from None
    else:
        print(text)


def build_parser() -> _Parser:
    p = _Parser(prog="kzhol", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    pi = sub.add_parser("path-info", help="analyze a path file: crossings, rotation number")
    pi.add_argument("file")
    pi.add_argument("--samples", type=int, default=0, help="emit N polyline sample points for plotting")
    pi.add_argument("--out")

    ph = sub.add_parser("holonomy", help="regularized holonomy of the one-point KZ connection")
    ph.add_argument("file")
    _engine_flags(ph)

    pa = sub.add_parser("associator", help="compute (or fetch cached) KZ associator table")
    _engine_flags(pa)
    pa.add_argument("--cache-dir", help="associator cache directory")

    pv = sub.add_parser("verify", help="verify the generalized pentagon identity")
    pv.add_argument("file")
    _engine_flags(pv)
    pv.add_argument("--backend", choices=("series", "matrix", "both"), default="series")
    pv.add_argument("--matrix-dim", type=int, default=2, help="N for the flip representation backend")
    pv.add_argument("--cache-dir", help="associator cache directory")
    pv.add_argument("--omit-rotation-factor", action="store_true",
                    help="debug: drop exp(rot t_zw) from the left-hand side")
    pv.add_argument("--omit-vratio-factor", action="store_true",
                    help="debug: drop the tangent-ratio factor from the left-hand side")
    pv.add_argument("--crossing-order", choices=("telescoping", "as-written"), default="telescoping")
    pv.add_argument("--vratio-exponent", choices=("2pii", "2pi"), default="2pii")
    pv.add_argument("--timings", action="store_true",
                    help="include wall-clock timings (output is then not byte-reproducible)")
    return p


def cmd_path_info(args) -> int:
    apath = analyze(_load_path(args.file))
    out = {
        "punctures": [[p.real, p.imag] for p in apath.spec.punctures],
        "rot": apath.rot,
        "vratio": apath.vratio,
        "crossings": [
            {
                "t": c.t, "s": c.s,
                "a": [c.a.real, c.a.imag],
                "eps": c.eps,
                "u": [c.u.real, c.u.imag],
                "theta": c.theta,
            }
            for c in apath.crossings
        ],
    }
    if args.samples > 0:
        ts = [k / (args.samples - 1) if args.samples > 1 else 0.0 for k in range(args.samples)]
        out["samples"] = [[apath.point(t).real, apath.point(t).imag] for t in ts]
    _emit(out, args.out)
    return 0


def cmd_holonomy(args) -> int:
    cfg = _config_from(args)
    apath = analyze(_load_path(args.file), tangential_ok=True)
    conn = free_connection(apath.spec.punctures)
    h = hol_reg(conn, apath, cfg)
    _emit({
        "series": series_to_json(h),
        "grouplike_defect": h.grouplike_defect(),
        "config": cfg.config_key(),
    }, args.out)
    return 0


def cmd_associator(args) -> int:
    cfg = _config_from(args)
    table = get_associator(args.degree, cfg, args.cache_dir)
    payload = {
        "kind": "kz-associator",
        "degree": table.degree,
        "config": table.config,
        "diagnostics": table.diagnostics,
        "series": series_to_json(table.series),
    }
    _emit(payload, args.out)
    return 0


def cmd_verify(args) -> int:
    cfg = _config_from(args)
    apath = analyze(_load_path(args.file))
    report = {}
    passed = True
    if args.backend in ("series", "both"):
        rep = verify_pentagon(
            apath, cfg,
            cache_dir=args.cache_dir,
            omit_rotation_factor=args.omit_rotation_factor,
            omit_vratio_factor=args.omit_vratio_factor,
            vratio_exponent=args.vratio_exponent,
            crossing_order=args.crossing_order,
        )
        report["series"] = rep.to_json()
        if not args.timings:
            report["series"].pop("timings")
        passed = passed and rep.passed
    if args.backend in ("matrix", "both"):
        out = verify_pentagon_matrix(
            apath, args.matrix_dim, cfg,
            omit_rotation_factor=args.omit_rotation_factor,
            omit_vratio_factor=args.omit_vratio_factor,
            crossing_order=args.crossing_order,
        )
        out["pass"] = out["residual"] <= cfg.tolerance
        if not args.timings:
            out.pop("seconds")
        report["matrix"] = out
        passed = passed and report["matrix"]["pass"]
    report["pass"] = passed
    report["tolerance"] = cfg.tolerance
    _emit(report, args.out)
    return 0 if passed else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "path-info":
            return cmd_path_info(args)
        if args.command == "holonomy":
            return cmd_holonomy(args)
        if args.command == "associator":
            return cmd_associator(args)
        if args.command == "verify":
            return cmd_verify(args)
        raise _UsageError("unknown command")
    except _UsageError as e:
        print(json.dumps({"error": {"category": "config", "message": str(e)}}))
        return EXIT_CODES["config"]
    except _IOError as e:
        print(json.dumps({"error": {"category": "io", "message": str(e)}}))
        return EXIT_CODES["io"]
    except KzholError as e:
        print(json.dumps({"error": {"category": e.category, "message": str(e)}}))
        return EXIT_CODES.get(e.category, EXIT_CODES["config"])


if __name__ == "__main__":
    sys.exit(main())
