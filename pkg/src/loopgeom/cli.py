"""``loopgeom run|check|demo`` command-line front end."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config, parse_config
from .errors import ConfigError
from .runner import EXIT_IO, EXIT_USAGE, run, seeds_json
from .systems import default_vacuum_seeds, default_vacuum_setup

DEMOS = {
    "clifford": """\
# Clifford torus: phi = pi/2, flat family at three lambdas
system = flat-s3
nx = 65
ny = 65
hx = 1/64
hy = 1/64
phi1 = pi/2
phi2 = 0
lambda = 1/2
lambda = 1
lambda = 2
""",
    "great-circle": """\
system = s2-curve
curve = great-circle
nx = 201
hx = 0.0314159265358979
""",
    "vacuum": """\
system = vacuum
nx = 33
ny = 33
hx = 1/32
hy = 1/32
seeds = seeds.json
lambda = 1
lambda = 2
lambda = 1/2i
lambda = 0.6+0.8i
""",
}


def _summary(code, report, stream):
    if report.get("status") == "error":
        print(f"error ({report['error']['kind']}): {report['error']['message']}", file=stream)
    else:
        failed = report.get("failed", [])
        print(f"{report['system']}: {report['status']}"
              + (f"; failed: {', '.join(failed)}" if failed else ""), file=stream)
    return code


def _execute(cfg, write_meshes):
    code, report = run(cfg, write_meshes=write_meshes)
    out = sys.stdout if code == 0 else sys.stderr
    _summary(code, report, out)
    print(f"report: {cfg.output_dir / cfg.report}", file=out)
    return code


def _load(path):
    try:
        return load_config(path)
    except FileNotFoundError:
        print(json.dumps({"error": {"kind": "file-not-found", "message": str(path)}}),
              file=sys.stderr)
        raise SystemExit(EXIT_IO)
    except ConfigError as exc:
        for ln, msg in exc.errors:
            print(f"{path}:{ln}: {msg}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="loopgeom", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="compute residuals and write meshes")
    p_run.add_argument("config")
    p_check = sub.add_parser("check", help="compute residuals only")
    p_check.add_argument("config")
    p_demo = sub.add_parser("demo", help="run a built-in configuration")
    p_demo.add_argument("name", choices=sorted(DEMOS))
    p_demo.add_argument("--out", default=None, help="output directory (default loopgeom-<name>)")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        if args.command in ("run", "check"):
            cfg = _load(args.config)
            return _execute(cfg, write_meshes=args.command == "run")
        out = Path(args.out or f"loopgeom-{args.name}")
        out.mkdir(parents=True, exist_ok=True)
        if args.name == "vacuum":
            A, B = default_vacuum_seeds()
            (out / "seeds.json").write_text(seeds_json(default_vacuum_setup(), A, B))
        cfg = parse_config(DEMOS[args.name], base_dir=out)
        cfg.output_dir = out
        return _execute(cfg, write_meshes=True)
    except SystemExit as exc:
        return int(exc.code)


if __name__ == "__main__":
    sys.exit(main())
