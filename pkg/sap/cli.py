"""Command-line front end.

Subcommands::

    enumerate   transfer-matrix counts up to n = 4 W_max - 2
    oracle      brute-force counts up to a perimeter
    analyze     fit-b, estimate-xc and b-table on a series file
    crt         combine residue files into exact counts
    residues    split exact counts into one residue file per modulus
    verify      compare two series files term by term

Every run writes a JSON manifest: ``<out>.manifest.json`` next to the output,
``<prefix>.manifest.json`` for ``residues``, ``sap-<command>.manifest.json``
in the working directory otherwise, or the path given with ``--manifest``.

Exit codes: 0 success, 1 mismatch or inconsistency, 2 invalid flags or
inputs, 3 insufficient moduli capacity, 4 checkpoint mismatch.
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import mpmath  # type: ignore
import progressbar  # type: ignore

from . import analysis, engine, oracle, schemas
from . import warnings as sap_warnings
from .base import config
from .errors import (
    CapacityError,
    CheckpointError,
    CheckpointMismatchError,
    InconsistencyError,
    SapError,
)
from .misc import atomic_write, parse_int_list
from .modular import DEFAULT_MODULI, select_moduli
from .series import (
    ExactSeries,
    ResidueSeries,
    crt_series,
    format_exact_series,
    format_residue_series,
    read_exact_series,
    read_residue_series,
    read_series,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_CHECKPOINT = 4


def _moduli_arg(text):
    if text == "auto":
        return text
    try:
        return parse_int_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid moduli list {text!r}") from exc


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not positive")
    return value


def _mu_arg(text):
    if text == "conjectured":
        return text
    try:
        value = mpmath.mpf(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"invalid mu {text!r}") from exc
    if value <= 0:
        raise argparse.ArgumentTypeError(f"mu must be positive, got {text}")
    return text


def _range_arg(text):
    try:
        values = parse_int_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _write(text, path=None):
    if path is None:
        sys.stdout.write(text)
        return
    with atomic_write(path, mode="w") as stream:
        stream.write(text)


def _dumps(schema, obj):
    return json.dumps(schema.dump(obj), indent=2, sort_keys=True) + "\n"


def _emit_exact(series, args, header=None):
    if args.format == "json":
        text = _dumps(schemas.exact_series, series)
    else:
        text = format_exact_series(series, header)
    _write(text, args.out)


def _manifest_path(args) -> Path:
    if args.manifest is not None:
        return args.manifest
    out = getattr(args, "out", None)
    if out is not None:
        return Path(f"{out}.manifest.json")
    if args.command == "residues":
        return Path(f"{args.prefix}.manifest.json")
    name = getattr(args, "analysis", None) or args.command
    return Path(f"sap-{name}.manifest.json")


def _write_manifest(args, argv, code, started):
    run = args.run
    record = {
        "command": list(argv),
        "config": {
            key: value if isinstance(value, (int, float, str, bool, type(None))) else str(value)
            for key, value in sorted(vars(args).items())
            if key not in ("handler", "run")
        },
        "moduli": list(run.get("moduli", ())),
        "max_width": run.get("max_width"),
        "wall_time": time.perf_counter() - started,
        "widths": list(run.get("widths", ())),
        "exit_code": code,
    }
    path = _manifest_path(args)
    with atomic_write(path, mode="w") as stream:
        stream.write(_dumps(schemas.manifest, record))
    logger.info("wrote manifest %s", path)


def _residue_path(out, index):
    return Path(f"{out}.mod{index}")


def _progress(max_width):
    total = sum(2 * max_width - width + 1 for width in range(2, max_width + 1))
    bar = progressbar.ProgressBar(max_value=total)
    done = 0

    def on_column(_column):
        nonlocal done
        done = min(done + 1, total)
        bar.update(done)

    return bar, on_column


def cmd_enumerate(args, _argv):
    """Transfer-matrix enumeration."""
    max_degree = 4 * args.wmax - 2
    moduli = select_moduli(args.moduli, max_degree, args.force)
    warning = sap_warnings.capacity_shortfall(moduli, max_degree)
    if warning:
        logger.warning(warning)

    bar, on_column = _progress(args.wmax) if args.progress else (None, None)
    try:
        result = engine.enumerate_polygons(
            args.wmax,
            moduli=moduli,
            threads=args.threads,
            pruning=not args.no_prune,
            kink_simplification=args.kink_simplify,
            seed_column_only=not args.free_seed,
            checkpoint_dir=args.checkpoint,
            force=args.force,
            on_column=on_column,
        )
    finally:
        if bar is not None:
            bar.finish()

    header = [f"self-avoiding polygons, W_max={args.wmax}, N={max_degree}"]
    header += [f"modulus {modulus}" for modulus in result.moduli]
    _emit_exact(result.series, args, header)

    if args.out is not None:
        for index, residues in enumerate(result.residues, start=1):
            path = _residue_path(args.out, index)
            if args.format == "json":
                text = _dumps(schemas.residue_series, residues)
            else:
                text = format_residue_series(residues, header[:1])
            _write(text, path)

    args.run.update(
        moduli=result.moduli,
        max_width=args.wmax,
        widths=[schemas.width_stats.dump(stats) for stats in result.widths],
    )
    return EXIT_OK


def cmd_oracle(args, _argv):
    """Brute-force enumeration."""
    series = oracle.brute_force_series(args.nmax, threads=args.threads, budget=args.budget)
    _emit_exact(series, args, [f"self-avoiding polygons by brute force, n<={args.nmax}"])
    return EXIT_OK


def cmd_fit_b(args, _argv):
    """Amplitude fit at fixed mu."""
    series = read_exact_series(args.series)
    fit = analysis.fit_amplitudes(series, args.mu, args.k, args.n_last)
    warning = sap_warnings.fit_unstable(fit)
    if warning:
        logger.warning(warning)

    if args.format == "json":
        _write(_dumps(schemas.asymptotic_fit, fit), args.out)
        return EXIT_OK

    lines = [
        f"mu\t{mpmath.nstr(fit.mu, 20)}",
        f"k\t{fit.k}",
        f"window\t{' '.join(str(n) for n in fit.window)}",
    ]
    lines += [f"a_{i}\t{mpmath.nstr(a, 15)}" for i, a in enumerate(fit.coefficients)]
    lines.append(f"residual\t{mpmath.nstr(fit.residual, 5)}")
    if fit.holdout is not None:
        lines.append(f"holdout\t{mpmath.nstr(fit.holdout, 5)}")
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_estimate_xc(args, _argv):
    """Biased ratio estimate of the critical point."""
    series = read_exact_series(args.series)
    estimate = analysis.estimate_xc2(series, args.orders, args.tolerance)
    warning = sap_warnings.xc_not_converged(estimate)
    if warning:
        logger.warning(warning)

    if args.format == "json":
        _write(_dumps(schemas.xc_estimate, estimate), args.out)
        return EXIT_OK

    lines = [
        f"xc2\t{mpmath.nstr(estimate.xc2, 16)}",
        f"mu\t{mpmath.nstr(estimate.mu, 16)}",
        f"conjectured\t{mpmath.nstr(estimate.conjectured, 16)}",
        f"n_last\t{estimate.n_last}",
    ]
    lines += [
        f"order_{order}\t{mpmath.nstr(value, 16)}"
        for order, value in zip(estimate.orders, estimate.estimates)
    ]
    lines += [
        f"spread\t{mpmath.nstr(estimate.spread, 5)}",
        f"drift\t{mpmath.nstr(estimate.drift, 5)}",
        f"converged\t{'yes' if estimate.converged else 'no'}",
    ]
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_b_table(args, _argv):
    """Amplitude estimates against 1/n for a range of k."""
    series = read_exact_series(args.series)
    rows = analysis.estimate_B_sequence(series, args.mu, args.k_range, args.min_n)
    if args.format == "json":
        _write(json.dumps(schemas.b_table.dump(rows), indent=2) + "\n", args.out)
        return EXIT_OK

    if args.out is None:
        analysis.write_b_table(rows, sys.stdout)
    else:
        with atomic_write(args.out, mode="w") as stream:
            analysis.write_b_table(rows, stream)
    return EXIT_OK


def cmd_crt(args, _argv):
    """Exact counts from residue files."""
    residues = [read_residue_series(path) for path in args.residues]
    args.run["moduli"] = [item.modulus for item in residues]
    series = crt_series(residues)
    _emit_exact(series, args)
    return EXIT_OK


def cmd_residues(args, _argv):
    """One residue file per modulus."""
    series = read_exact_series(args.series)
    if args.moduli == "auto":
        moduli = select_moduli("auto", max(series.max_n, 0), force=True)
    else:
        moduli = select_moduli(args.moduli, max(series.max_n, 0), args.force)
    args.run["moduli"] = list(moduli)

    for index, modulus in enumerate(moduli, start=1):
        residues = series.residues(modulus)
        if args.format == "json":
            text = _dumps(schemas.residue_series, residues)
        else:
            text = format_residue_series(residues)
        path = Path(f"{args.prefix}.mod{index}")
        _write(text, path)
        logger.info("wrote %s", path)
    return EXIT_OK


def _comparable(left, right):
    """Reduce a pair of series to exact series over the same ring."""
    if isinstance(left, ResidueSeries) and isinstance(right, ResidueSeries):
        if left.modulus != right.modulus:
            raise InconsistencyError(
                f"residue files use moduli {left.modulus} and {right.modulus}"
            )
    elif isinstance(left, ResidueSeries):
        right = right.residues(left.modulus)
    elif isinstance(right, ResidueSeries):
        left = left.residues(right.modulus)
    return ExactSeries(left.terms), ExactSeries(right.terms)


def cmd_verify(args, _argv):
    """Compare two series over their common range."""
    left, right = _comparable(read_series(args.left), read_series(args.right))

    mismatch = left.first_difference(right)
    if mismatch is not None:
        print(f"mismatch at n={mismatch}")
        return EXIT_MISMATCH
    common = min(left.max_n, right.max_n)
    print(f"series agree up to n={common}")
    return EXIT_OK


def _add_output(parser, out=True):
    parser.add_argument("--format", choices=("text", "json"), default="text")
    if out:
        parser.add_argument("--out", type=Path, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser for every subcommand."""
    parser = argparse.ArgumentParser(prog="sap", description=__doc__.split("\n", 1)[0])
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    parser.add_argument("--manifest", type=Path, help="run manifest path")
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("enumerate", help=cmd_enumerate.__doc__)
    sub.add_argument("--wmax", type=int, required=True, help="largest strip width")
    sub.add_argument(
        "--moduli",
        type=_moduli_arg,
        default=_moduli_arg(config.get("enumerate", "moduli")),
        help=f"'auto' or a comma list (default moduli {', '.join(map(str, DEFAULT_MODULI))})",
    )
    sub.add_argument(
        "--threads", type=_positive, default=config.getint("enumerate", "threads")
    )
    sub.add_argument("--no-prune", action="store_true", help="keep every state")
    sub.add_argument("--kink-simplify", action="store_true", help="canonicalize kink states")
    sub.add_argument("--free-seed", action="store_true", help="start polygons in any column")
    sub.add_argument("--checkpoint", type=Path, help="checkpoint directory")
    sub.add_argument("--force", action="store_true", help="accept insufficient moduli")
    sub.add_argument("--progress", action="store_true", help="show a progress bar")
    _add_output(sub)
    sub.set_defaults(handler=cmd_enumerate)

    sub = commands.add_parser("oracle", help=cmd_oracle.__doc__)
    sub.add_argument("--nmax", type=int, required=True, help="largest perimeter")
    sub.add_argument("--threads", type=_positive, default=1)
    sub.add_argument("--budget", type=int, help="largest perimeter allowed")
    _add_output(sub)
    sub.set_defaults(handler=cmd_oracle)

    analyze = commands.add_parser("analyze", help="asymptotic analysis")
    fits = analyze.add_subparsers(dest="analysis", required=True)

    sub = fits.add_parser("fit-b", help=cmd_fit_b.__doc__)
    sub.add_argument("series", type=Path)
    sub.add_argument("--mu", type=_mu_arg, default="conjectured")
    sub.add_argument("--k", type=int, default=config.getint("analysis", "k_min"))
    sub.add_argument("--n-last", type=int)
    _add_output(sub)
    sub.set_defaults(handler=cmd_fit_b)

    sub = fits.add_parser("estimate-xc", help=cmd_estimate_xc.__doc__)
    sub.add_argument("series", type=Path)
    sub.add_argument("--orders", type=_range_arg)
    sub.add_argument("--tolerance", type=float)
    _add_output(sub)
    sub.set_defaults(handler=cmd_estimate_xc)

    sub = fits.add_parser("b-table", help=cmd_b_table.__doc__)
    sub.add_argument("series", type=Path)
    sub.add_argument("--mu", type=_mu_arg, default="conjectured")
    sub.add_argument(
        "--k-range",
        type=_range_arg,
        default=tuple(
            range(config.getint("analysis", "k_min"), config.getint("analysis", "k_max") + 1)
        ),
    )
    sub.add_argument("--min-n", type=int)
    _add_output(sub)
    sub.set_defaults(handler=cmd_b_table)

    sub = commands.add_parser("crt", help=cmd_crt.__doc__)
    sub.add_argument("residues", type=Path, nargs="+")
    _add_output(sub)
    sub.set_defaults(handler=cmd_crt)

    sub = commands.add_parser("residues", help=cmd_residues.__doc__)
    sub.add_argument("series", type=Path)
    sub.add_argument("--moduli", type=_moduli_arg, default="auto")
    sub.add_argument("--prefix", type=Path, required=True, help="output path prefix")
    sub.add_argument("--force", action="store_true")
    _add_output(sub, out=False)
    sub.set_defaults(handler=cmd_residues)

    sub = commands.add_parser("verify", help=cmd_verify.__doc__)
    sub.add_argument("left", type=Path)
    sub.add_argument("right", type=Path)
    sub.set_defaults(handler=cmd_verify)

    return parser


def _configure_logging(args):
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )


def main(argv=None) -> int:
    """Run one subcommand and return its exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    _configure_logging(args)
    started = time.perf_counter()
    args.run = {}
    try:
        code = args.handler(args, argv)
        _write_manifest(args, argv, code, started)
        return code
    except CapacityError as exc:
        logger.error("%s (use --force to continue)", exc)
        return EXIT_CAPACITY
    except CheckpointMismatchError as exc:
        logger.error("%s", exc)
        return EXIT_CHECKPOINT
    except InconsistencyError as exc:
        logger.error("%s", exc)
        return EXIT_MISMATCH
    except (CheckpointError, SapError, ValueError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
