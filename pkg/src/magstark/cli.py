"""Command-line interface: ``magstark <subcommand> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical error,
3 verification failure.  Data goes to files or stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .bounds import run_verification
from .config import RunConfig, describe_defaults, load_config
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    InsufficientDataError,
    InvalidParameterError,
    MalformedRowError,
    NotFoundError,
)
from .model import FieldParams
from .resonance import estimate_resonance, h2_crosscheck, unperturbed_levels
from .results import dumps, plot_data, read_results, write_results, format_results
from .sweep import b_linearity, default_jobs, fit_width_law, fits_by_B, run_sweep

log = logging.getLogger("magstark")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO,
              "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Parser whose usage errors map to exit code 1 instead of argparse's 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _configure_logging() -> None:
    name = os.environ.get("MAGSTARK_LOG", "warn").lower()
    level = LOG_LEVELS.get(name)
    logging.basicConfig(level=level or logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    if level is None:
        log.warning("MAGSTARK_LOG=%r not in %s; using warn", name, sorted(LOG_LEVELS))


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration (strict schema)")
    common.add_argument("--out", type=Path, help="output file (default: stdout or config outputs)")
    common.add_argument("--jobs", type=int, default=default_jobs(), help="worker processes")
    common.add_argument("--seed", type=int, default=None,
                        help="reserved; runs are deterministic and ignore it")

    parser = _Parser(
        prog="magstark",
        description="Magnetic Stark resonances by complex translation.",
        epilog="Configuration defaults (every key optional):\n" + describe_defaults(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND", parser_class=_Parser)

    sub.add_parser("levels", parents=[common], formatter_class=fmt,
                   help="impurity levels of the field-free operator")
    sub.add_parser("solve", parents=[common], formatter_class=fmt,
                   help="one resonance at the configured (B, F, b)")
    sub.add_parser("sweep", parents=[common], formatter_class=fmt,
                   help="resonances over the F and B grids, written as CSV")
    p_fit = sub.add_parser("fit", parents=[common], formatter_class=fmt,
                           help="fit ln Gamma = lnC - R / F^p to a sweep CSV")
    p_fit.add_argument("--in", dest="input", type=Path, help="sweep CSV (default: outputs.sweep_csv)")
    p_fit.add_argument("--fix-p", type=float, default=None,
                       help="hold the exponent p fixed instead of fitting it")
    p_fit.add_argument("--plot-data", type=Path, default=None,
                       help="write (F^-p, ln Gamma) pairs as CSV to this path")
    sub.add_parser("verify-bounds", parents=[common], formatter_class=fmt,
                   help="grid checks of the cutoff-function estimates")
    sub.add_parser("h2-compare", parents=[common], formatter_class=fmt,
                   help="reference-operator cross-check at the configured (B, F)")
    return parser


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")
        log.info("wrote %s", path)


def _out_path(args, configured: str | None) -> Path | None:
    return args.out if args.out is not None else (Path(configured) if configured else None)


def _seed(cfg: RunConfig, B: float):
    levels = unperturbed_levels(B, cfg.potential, cfg.basis, min_gap=cfg.sweep.landau_gap_min)
    if len(levels) <= cfg.sweep.level_index:
        raise NotFoundError(
            f"not-found: no impurity level with index {cfg.sweep.level_index} at B={B} "
            f"({len(levels)} found)"
        )
    return levels[cfg.sweep.level_index]


def _field_b(cfg: RunConfig, F: float, policy: str | None = None) -> float:
    if cfg.field.b is not None:
        return cfg.field.b
    if (policy or cfg.sweep.b_policy) == "schedule":
        return cfg.schedule.b_of(F)
    return cfg.sweep.b_auto


def cmd_levels(cfg: RunConfig, args) -> int:
    levels = unperturbed_levels(cfg.field.B, cfg.potential, cfg.basis,
                                min_gap=cfg.sweep.landau_gap_min)
    doc = {"B": cfg.field.B, "model_hash": cfg.potential.model_hash(),
           "levels": [vars(lv) for lv in levels]}
    _emit(dumps(doc), args.out)
    return EXIT_OK


def cmd_solve(cfg: RunConfig, args) -> int:
    seed = _seed(cfg, cfg.field.B)
    fields = FieldParams(cfg.field.B, cfg.field.F, _field_b(cfg, cfg.field.F))
    est = estimate_resonance(fields, cfg.potential, cfg.basis, seed, window_c=cfg.sweep.window_c,
                             eps=cfg.schedule.eps, bump=cfg.sweep.basis_bump)
    doc = {k: getattr(est, k) for k in est.__dataclass_fields__}
    doc["E"] = [est.E.real, est.E.imag]
    _emit(dumps(doc), args.out)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    rows = run_sweep(cfg, jobs=args.jobs)
    path = _out_path(args, cfg.outputs.sweep_csv)
    if path is None:
        sys.stdout.write(format_results(rows))
    else:
        write_results(rows, path)
    bad = sum(r.status != "ok" for r in rows)
    if bad:
        log.warning("%d of %d rows are not ok", bad, len(rows))
    return EXIT_OK


def cmd_fit(cfg: RunConfig, args) -> int:
    src = args.input or (Path(cfg.outputs.sweep_csv) if cfg.outputs.sweep_csv else None)
    if src is None:
        raise UsageError("fit: --in is required (or set outputs.sweep_csv)")
    try:
        rows = read_results(src)
    except FileNotFoundError:
        raise UsageError(f"fit: input file {src} not found") from None
    Bs = sorted({r.B for r in rows})
    if len(Bs) > 1:
        per_B = fits_by_B(rows, fix_p=args.fix_p)
        doc = {"fits": [f.to_dict() for _, f in per_B]}
        if len(Bs) >= 3 and args.fix_p is not None:
            doc["b_linearity"] = b_linearity(per_B).to_dict()
        fits = [f for _, f in per_B]
    else:
        fit = fit_width_law(rows, fix_p=args.fix_p)
        doc = fit.to_dict()
        fits = [fit]
    _emit(dumps(doc), _out_path(args, cfg.outputs.fit_json))
    if args.plot_data is not None:
        text = "".join(plot_data(rows, f) if i == 0 else plot_data(rows, f).split("\n", 1)[1]
                       for i, f in enumerate(fits))
        args.plot_data.write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_verify_bounds(cfg: RunConfig, args) -> int:
    rep = run_verification(cfg.schedule, cfg.bounds.F_list, cfg.potential.a1, cfg.checks,
                           cfg.bounds.grid_points)
    _emit(dumps(rep.to_dict()), _out_path(args, cfg.outputs.report_json))
    for c in rep.checks:
        if not c.passed:
            log.error("check %s FAILED (%s)", c.name, c.params)
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_h2_compare(cfg: RunConfig, args) -> int:
    seed = _seed(cfg, cfg.field.B)
    F = cfg.field.F
    fields = FieldParams(cfg.field.B, F, _field_b(cfg, F, policy="schedule"))
    rep = h2_crosscheck(fields, cfg.potential, cfg.schedule, cfg.basis, seed,
                        window_c=cfg.sweep.window_c)
    _emit(dumps(rep.to_dict()), _out_path(args, cfg.outputs.report_json))
    return EXIT_OK if rep.reality_ok and rep.match_ok else EXIT_VERIFY


COMMANDS = {
    "levels": cmd_levels,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "verify-bounds": cmd_verify_bounds,
    "h2-compare": cmd_h2_compare,
}


def main(argv: list[str] | None = None) -> int:
    """Run the CLI and return the exit code."""
    _configure_logging()
    try:
        args = build_parser().parse_args(argv)
        if args.jobs is not None and args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        cfg = load_config(args.config) if args.config else RunConfig()
        return COMMANDS[args.command](cfg, args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_USAGE
    except MalformedRowError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_USAGE
    except NotFoundError as exc:
        msg = str(exc)
        sys.stderr.write(f"{msg if msg.startswith('not-found') else 'not-found: ' + msg}\n")
        return EXIT_NUMERIC
    except (ConvergenceError, DomainError, InsufficientDataError, InvalidParameterError) as exc:
        sys.stderr.write(f"numerical error: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
