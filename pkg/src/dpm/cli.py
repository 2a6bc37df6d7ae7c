"""``dpm-bench``: run refinement studies and print convergence tables."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bench
from .errors import DPMError
from .grid import dump_grid_csv
from .problems import PROBLEM_IDS
from .timestepper import DPMSolver, SolverConfig

EXIT_CHECK_FAILED = 2


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; keys use the long flag names (dashes or underscores)."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _grids(text: str) -> list[int]:
    try:
        grids = [int(g) for g in str(text).split(",") if g.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid list {text!r}") from None
    if not grids or sorted(set(grids)) != grids:
        raise argparse.ArgumentTypeError("grids must be strictly increasing")
    return grids


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dpm-bench", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a refinement study")
    r.add_argument("--config", help="flat key = value file with defaults for the flags below")
    r.add_argument("--problem", choices=PROBLEM_IDS)
    r.add_argument("--order", type=int, choices=(2, 4))
    r.add_argument("--grids", type=_grids, help="comma-separated nodes per axis, e.g. 100,200,400")
    r.add_argument("--geometry", choices=("explicit", "implicit"))
    r.add_argument("--out", help="write the table here instead of stdout")
    r.add_argument("--format", choices=("csv", "markdown"))
    r.add_argument("--basis-modes", type=int, help="highest basis frequency (2K+1 functions)")
    r.add_argument("--wide-modes", type=int, help="highest frequency used for known data")
    r.add_argument("--independent-side", type=int, choices=(1, 2))
    r.add_argument("--dt-factor", type=float)
    r.add_argument("--startup", choices=("exact", "bootstrap"))
    r.add_argument("--backend", choices=("kron", "lu"))
    r.add_argument("--tp3a-lambda", choices=("text", "caption"))
    r.add_argument("--rate-convention", choices=("sqrt", "literal"))
    r.add_argument("--dump-fields", action="store_true", help="final-time field CSV per grid")
    r.add_argument("--dump-errors", action="store_true", help="per-step error CSV per grid")
    r.add_argument("--dump-grid", action="store_true", help="point-set CSV per grid and side")
    r.add_argument("--dump-bep", action="store_true", help="boundary-equation matrix CSV per grid")
    r.add_argument("--check", action="store_true", help="exit with status 2 if any rate is below --min-rate")
    r.add_argument("--min-rate", type=float, help="default: order - 0.3")
    r.add_argument("-v", "--verbose", action="store_true")
    p.run_parser = r
    return p


DEFAULTS = {
    "order": 2,
    "grids": [100, 200, 400],
    "geometry": "explicit",
    "format": "markdown",
    "basis_modes": 20,
    "wide_modes": 64,
    "dt_factor": 0.5,
    "startup": "exact",
    "backend": "kron",
    "tp3a_lambda": "text",
    "rate_convention": "sqrt",
}


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and command-line flags (in increasing precedence)."""
    run_parser = build_parser().run_parser
    conf = {}
    if args.config:
        raw = read_config(args.config)
        actions = {a.dest: a for a in run_parser._actions}
        for k, v in raw.items():
            if k not in actions or k in ("config", "help"):
                raise ValueError(f"unknown config key {k!r}")
            a = actions[k]
            if isinstance(a, argparse._StoreTrueAction):
                conf[k] = v.lower() in ("1", "true", "yes", "on")
            elif a.type is not None:
                conf[k] = a.type(v)
            else:
                conf[k] = v
    opts = {**DEFAULTS, **conf}
    for k, v in vars(args).items():
        if v is not None and v is not False:
            opts[k] = v
        opts.setdefault(k, v)
    if not opts.get("problem"):
        raise ValueError("--problem is required")
    return opts


def _out_stem(opts, n) -> Path:
    base = Path(opts["out"]) if opts.get("out") else Path(f"{opts['problem']}_dpm{opts['order']}")
    return base.with_name(f"{base.stem}_n{n}")


def cmd_run(opts: dict) -> int:
    cfg = SolverConfig(
        problem=opts["problem"],
        order=opts["order"],
        n=opts["grids"][0],
        geometry=opts["geometry"],
        dt_factor=opts["dt_factor"],
        basis_modes=opts["basis_modes"],
        wide_modes=opts["wide_modes"],
        independent_side=opts.get("independent_side"),
        startup=opts["startup"],
        backend=opts["backend"],
        tp3a_lambda=opts["tp3a_lambda"],
    )
    log = logging.getLogger("dpm.bench")

    def on_result(res):
        n = res.config.n
        log.info("n=%d dof=%d E=%.4e steps=%d time=%.1fs", n, res.dof, res.error, res.n_steps, res.seconds)
        stem = _out_stem(opts, n)
        if opts["dump_fields"]:
            bench.dump_fields(f"{stem}_fields.csv", res)
        if opts["dump_errors"]:
            bench.dump_step_errors(f"{stem}_errors.csv", res)
        if opts["dump_bep"]:
            bench.dump_blocks(f"{stem}_bep.csv", res)

    if opts["dump_grid"]:
        for n in opts["grids"]:
            solver = DPMSolver(SolverConfig(**{**cfg.__dict__, "n": n}))
            for s in solver.subs:
                dump_grid_csv(f"{_out_stem(opts, n)}_grid_side{s.side}.csv", s.sets)

    _, records = bench.run_table(cfg, opts["grids"], opts["rate_convention"], on_result)
    label = f"E: DPM{opts['order']}" + ("-I" if opts["geometry"] == "implicit" else "")
    table = bench.emit_table(records, opts["format"], label)
    if opts.get("out"):
        Path(opts["out"]).write_text(table)
    else:
        sys.stdout.write(table)

    if opts["check"]:
        floor = opts["min_rate"] if opts.get("min_rate") is not None else opts["order"] - 0.3
        bad = [r for r in records if r.rate is not None and r.rate < floor]
        if bad:
            for r in bad:
                print(f"check failed: DOF {r.dof} rate {r.rate:.2f} < {floor:.2f}", file=sys.stderr)
            return EXIT_CHECK_FAILED
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(message)s")
    try:
        opts = resolve(args)
        return cmd_run(opts)
    except (DPMError, ValueError) as exc:
        print(f"dpm-bench: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
