"""Command-line entry point.

Exit codes: 0 success, 1 domain or configuration error (including invalid
topology), 2 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from . import flow, lab
from .errors import ConfigError, IoError, ParseError, WillflowError
from .functionals import diagnostics
from .mesh import load_mesh, save_mesh, validate

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2

logger = logging.getLogger("willflow")


def _fail(code: int, message: str) -> int:
    print(f"willflow: error: {message}", file=sys.stderr)
    return code


def _exit_code(exc: Exception) -> int:
    return EXIT_IO if isinstance(exc, (IoError, ParseError, OSError)) else EXIT_DOMAIN


def cmd_gen(args) -> int:
    specs = lab.load_spec(args.spec)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from exc
    counts = {}
    for spec in specs:
        mesh = lab.build_mesh(spec)
        k = counts.get(spec.name, 0)
        counts[spec.name] = k + 1
        path = out / f"{spec.name}_{k}.obj"
        save_mesh(mesh, path)
        print(f"{path}\t{spec.echo()}\tV={mesh.n_vertices}")
    return EXIT_OK


def cmd_probe(args) -> int:
    mesh = load_mesh(args.mesh)
    report = validate(mesh)
    out = diagnostics(mesh, args.lam).to_dict()
    out["genus"] = report.genus
    out["euler_characteristic"] = report.euler_characteristic
    out["n_vertices"] = mesh.n_vertices
    out["n_faces"] = mesh.n_faces
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_flow(args) -> int:
    config, text = flow.load_config(args.config)
    if config.out_dir is None:
        raise ConfigError("config needs an out_dir")
    trace = flow.run(config, config_echo=text)
    print(f"{trace.termination}\tsteps={trace.final_state.step_index}\tt={trace.final_state.t!r}")
    return EXIT_OK


def cmd_verify(args) -> int:
    specs = lab.load_spec(args.spec)
    report = lab.verify_suite(specs, args.lam)
    report.write(args.out)
    s = report.summary()["overall"]
    print(f"rows={len(report.rows)}\tfailed={s['failed']}\tC_emp={s['C_emp']!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="willflow",
        description="Discrete Willmore geometry, Helfrich gradient flow and inequality checks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write OBJ files for every surface in a spec file")
    p.add_argument("--spec", required=True, help="family spec file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("probe", help="print the diagnostics of a mesh as JSON")
    p.add_argument("mesh", help="OBJ file")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="volume multiplier (default 0)")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("flow", help="run the gradient flow described by a config file")
    p.add_argument("--config", required=True, help="flow config file")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("verify", help="run the inequality harness over a spec file")
    p.add_argument("--spec", required=True, help="family spec file")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="volume multiplier (default 0)")
    p.add_argument("--out", required=True, help="output directory for report.csv and summary.json")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (WillflowError, OSError) as exc:
        return _fail(_exit_code(exc), str(exc))


if __name__ == "__main__":
    sys.exit(main())
