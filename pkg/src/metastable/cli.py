"""Command line entry point: ``metastable {analyze,predict,verify,sweep}``."""

import argparse
import sys
from pathlib import Path

from .errors import (ConfigError, CountMismatchError, HypothesisError, MetastableError,
                     ResolutionError)
from .report import (emit_report, load_config, rho_for, run_analyze, run_predict,
                     run_sweep, run_verify, to_json, verification_payload, _kind)

EXIT_OK, EXIT_ERROR, EXIT_HYPOTHESIS, EXIT_RESOLUTION, EXIT_COUNT = 0, 1, 2, 3, 4


def _rho(text, dimension):
    if text in ("walk", "witten"):
        return rho_for(_kind(text), dimension)
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"--rho must be walk, witten or a positive number, got {text!r}")
    if value <= 0:
        raise ConfigError("--rho must be positive")
    return value


def _h_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad h list {text!r}")


def build_parser():
    p = argparse.ArgumentParser(
        prog="metastable",
        description="Predict and verify exponentially small eigenvalues of metastable operators.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="critical points, labels and classes")
    a.add_argument("--config", required=True)
    a.add_argument("--out", help="report path (JSON); stdout when omitted")

    pr = sub.add_parser("predict", help="leading-order small eigenvalues")
    pr.add_argument("--config", required=True)
    pr.add_argument("--h", type=float, required=True)
    pr.add_argument("--rho", required=True, help="walk, witten or a positive number")
    pr.add_argument("--out")

    v = sub.add_parser("verify", help="compare predictions with a discretized operator")
    v.add_argument("--config", required=True)
    v.add_argument("--h", type=float, required=True)
    v.add_argument("--operator", choices=["walk", "witten"], required=True)
    v.add_argument("--nodes", type=int)
    v.add_argument("--window-c", type=float)
    v.add_argument("--out", help="report stem; writes .json and .csv")

    s = sub.add_parser("sweep", help="verify over several h and extrapolate prefactors")
    s.add_argument("--config", required=True)
    s.add_argument("--h-list", type=_h_list, required=True)
    s.add_argument("--operator", choices=["walk", "witten"], required=True)
    s.add_argument("--fit", action="store_true")
    s.add_argument("--nodes", type=int)
    s.add_argument("--window-c", type=float)
    s.add_argument("--out")
    return p


def _write(payload, out, cfg, rows=None):
    out = out or (str(Path(cfg.output_directory) / payload["command"])
                  if cfg.output_directory else None)
    if out is None:
        sys.stdout.write(to_json(payload))
        return
    formats = cfg.formats if rows is not None else ["json"]
    for path in emit_report(payload, out, formats=formats, rows=rows):
        print(path)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "analyze":
            _write(run_analyze(cfg), args.out, cfg)
        elif args.command == "predict":
            _write(run_predict(cfg, args.h, _rho(args.rho, cfg.dimension)), args.out, cfg)
        elif args.command == "verify":
            res = run_verify(cfg, args.h, _kind(args.operator), args.nodes, args.window_c)
            _write(verification_payload("verify", [res]), args.out, cfg, rows=res.rows)
        elif args.command == "sweep":
            results, fits = run_sweep(cfg, args.h_list, _kind(args.operator), fit=args.fit,
                                      nodes=args.nodes, window_c=args.window_c)
            rows = [r for res in results for r in res.rows]
            _write(verification_payload("sweep", results, fits), args.out, cfg, rows=rows)
    except HypothesisError as exc:
        print(f"hypothesis check failed: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except ResolutionError as exc:
        print(f"resolution failure [{exc.stage}]: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except CountMismatchError as exc:
        print(f"count mismatch: {exc}", file=sys.stderr)
        return EXIT_COUNT
    except MetastableError as exc:
        print(f"error [{exc.stage}]: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
