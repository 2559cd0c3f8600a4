"""Command-line entry point: ``mfbs run | inspect | list-experiments``.

Exit codes: 0 on success, 2 on validation failures, 3 on numerical
failures (the failing certificate is written to ``failure.json``).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

log = logging.getLogger("mfbs")


def _apply_threads(threads):
    # Only effective before numpy loads its BLAS; later calls are recorded only.
    if threads:
        for var in _THREAD_VARS:
            os.environ.setdefault(var, str(threads))


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfbs", description=__doc__.splitlines()[0])
    p.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="execute an experiment manifest")
    r.add_argument("manifest_pos", nargs="?", metavar="MANIFEST")
    r.add_argument("--manifest", help="manifest path (YAML)")
    r.add_argument("--out", help="output directory (overrides the manifest)")
    r.add_argument("--seed", type=int, help="seed override")
    r.add_argument("--threads", type=int, help="worker threads (default: $MFBS_THREADS)")
    r.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS)
    i = sub.add_parser("inspect", help="summarize a field file or CSV table")
    i.add_argument("path")
    i.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS)
    sub.add_parser("list-experiments", help="list manifest kinds")
    return p


def cmd_run(args) -> int:
    from . import experiments
    from .errors import NumericalError, ValidationError

    path = args.manifest or args.manifest_pos
    if not path:
        print("error: run needs a manifest (--manifest PATH)", file=sys.stderr)
        return EXIT_VALIDATION
    threads = args.threads or (int(os.environ["MFBS_THREADS"])
                               if os.environ.get("MFBS_THREADS", "").isdigit() else None)
    _apply_threads(threads)
    out = None
    try:
        m = experiments.load_manifest(path)
        if args.seed is not None:
            m["seed"] = int(args.seed)
        out = Path(args.out or m.get("out") or "mfbs-out")
        text = Path(path).read_text() if args.seed is None else None
        log.info("running %s into %s", m["kind"], out)
        summary = experiments.run_manifest(m, out, text, threads)
    except ValidationError as exc:
        print(f"validation error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error ({type(exc).__name__}): {exc}", file=sys.stderr)
        cert = {"error": type(exc).__name__, "message": str(exc),
                "certificate": experiments.jsonable(exc.certificate)}
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            experiments.write_json(out / "failure.json", cert)
        print(json.dumps(cert, sort_keys=True), file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps({"kind": m["kind"], "out": str(out)}, sort_keys=True))
    if args.verbose:
        print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def _inspect_field(path) -> str:
    import numpy as np

    from . import io

    f = io.read_file(path)
    v = f.values
    lines = [f"{k}: {val}" for k, val in f.header().items()]
    lines.append(f"shape: {tuple(f.counts) + (f.d,)}")
    lines.append(f"min: {float(v.min())!r}  max: {float(v.max())!r}  mean: {float(np.mean(v))!r}")
    return "\n".join(lines)


def _inspect_csv(path) -> str:
    from . import io

    header, rows = io.read_csv(path)
    lines = [f"columns: {', '.join(header)}", f"rows: {len(rows)}"]
    if rows and "slope" in header:
        c = {k: i for i, k in enumerate(header)}
        r = rows[0]
        lines.append(f"slope: {r[c['slope']]}")
        if "ci_halfwidth" in c:
            lines.append(f"ci_halfwidth: {r[c['ci_halfwidth']]}")
        if "theoretical" in c:
            lines.append(f"theoretical: {r[c['theoretical']]}")
    return "\n".join(lines)


def cmd_inspect(args) -> int:
    from .errors import FormatError

    p = Path(args.path)
    try:
        if p.suffix.lower() == ".csv":
            print(_inspect_csv(p))
        else:
            print(_inspect_field(p))
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"cannot read {p}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_list(_args) -> int:
    from .experiments import KINDS

    print("\n".join(KINDS))
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "inspect": cmd_inspect, "list-experiments": cmd_list}
    return handler[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
