"""Command-line interface for digit-spectra.

Every subcommand resolves its flags into a ``RunConfig``, runs one
experiment and emits a self-describing CSV or JSON file.

Exit codes: 0 on success, 1 on a usage error or an unwritable output,
2 when a proven guarantee fails (or ``selftest`` finds a failure).
"""

from __future__ import annotations

import argparse
import logging
import sys
from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import Any

from digit_spectra.config import (
    DEFAULT_CHECKPOINTS,
    DEFAULT_DECAY_GRID,
    DEFAULT_DELTA_MIN,
    DEFAULT_L_MAX,
    MAX_DENSE_COMPONENT,
    get_block_size,
    get_threads,
)
from digit_spectra.correlation import (
    SumSeries,
    block_histogram,
    count_carry_violations,
    dk_correlation,
    entropy_estimate,
    fit_carry_constant,
    missing_blocks,
    mobius_square_sum,
    twisted_square_sum,
)
from digit_spectra.digitcore import PRESETS, BMultFunction, PairProduct
from digit_spectra.monitoring import Progress, ProgressMonitorDaemon
from digit_spectra.pairgraph import build_component, find_i0, is_staircase
from digit_spectra.report import FORMATS, Report, emit
from digit_spectra.selftest import all_passed, run_selftest
from digit_spectra.sieve import check_coprime_triple
from digit_spectra.transfer import (
    FourierConfig,
    NoCertificateError,
    decay_profile,
    find_contraction,
)
from digit_spectra.utils import InconsistencyError, format_error, parse_rational

logger = logging.getLogger("digit_spectra.cli")

SUM_COLUMNS = ["N", "S_re", "S_im", "abs_over_N"]


class UsageError(ValueError):
    """Invalid command line."""


class _ArgumentParser(argparse.ArgumentParser):
    # usage errors exit with 1, not argparse's 2
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    """A fully resolved and validated command line."""

    command: str
    g: BMultFunction | None = None
    params: dict[str, Any] = field(default_factory=dict)
    format: str = "csv"
    output: str = "-"
    threads: int = 1
    deterministic: bool = False
    seed: int = 0
    block_size: int = 0
    progress: bool = False
    verbose: int = 0
    argv: list[str] = field(default_factory=list)

    def echo(self) -> dict[str, Any]:
        """Configuration written into the output header."""
        data: dict[str, Any] = {"command": self.command}
        if self.g is not None:
            data["g"] = self.g.describe()
        data.update(self.params)
        data["format"] = self.format
        data["deterministic"] = self.deterministic
        data["seed"] = self.seed
        data["block_size"] = self.block_size
        if not self.deterministic:
            data["threads"] = self.threads
        return data

    def echo_argv(self) -> list[str]:
        """argv with the worker count removed for deterministic runs."""
        if not self.deterministic:
            return list(self.argv)
        out: list[str] = []
        skip = False
        for arg in self.argv:
            if skip:
                skip = False
            elif arg == "--threads":
                skip = True
            elif not arg.startswith("--threads="):
                out.append(arg)
        return out

    def report(self, columns: list[str]) -> Report:
        return Report(self.command, columns, config=self.echo(), argv=self.echo_argv())

    def options(self) -> dict[str, Any]:
        return {
            "block_size": self.block_size,
            "threads": self.threads,
            "deterministic": self.deterministic,
        }


# ---------------------------------------------------------------------------
# Argument parsing


def _int_list(text: str) -> list[int]:
    return [int(float(x)) if "e" in x.lower() else int(x) for x in text.split(",") if x.strip()]


def _count(text: str) -> int:
    """Integer flag that also accepts 1e7 style values."""
    value = float(text) if "e" in text.lower() else int(text)
    if value != int(value):
        raise argparse.ArgumentTypeError(f"expected an integer, got {text}")
    return int(value)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format", choices=FORMATS, default="csv",
        help="Output format (default: csv)",
    )
    parser.add_argument(
        "-o", "--output", default="-",
        help="Output path, - for stdout (default: -)",
    )
    parser.add_argument(
        "--threads", type=int, default=None,
        help="Worker count (default: DIGIT_SPECTRA_THREADS or the CPU count)",
    )
    parser.add_argument(
        "--deterministic", action="store_true",
        help="Fixed block boundaries and merge order; output independent of --threads",
    )
    parser.add_argument(
        "--seed", type=int, default=0,
        help="Seed for randomized sweeps (default: 0)",
    )
    parser.add_argument(
        "--block-size", type=_count, default=None,
        help="Sieve block size (default: DIGIT_SPECTRA_BLOCK_SIZE or 2^20)",
    )
    parser.add_argument(
        "--progress", action="store_true",
        help="Log progress with memory and CPU usage while summing",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0,
        help="-v for INFO logging, -vv for DEBUG",
    )


def _add_function(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument(
        "--preset", choices=sorted(PRESETS),
        help="Named function (default: thue-morse)",
    )
    group.add_argument(
        "--g", dest="g_spec", metavar="SPEC",
        help='Function spec such as "b=2;phases=0,1/2"',
    )


def _add_pair(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--P", type=int, help="First multiplier P")
    parser.add_argument("--Q", type=int, help="Second multiplier Q")
    parser.add_argument("--p", type=int, help="Prime p; sets P = p^2")
    parser.add_argument("--q", type=int, help="Prime q; sets Q = q^2")


def _add_sum_range(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--n-max", type=_count, default=DEFAULT_CHECKPOINTS[-1],
        help=f"Sum over n < N (default: {DEFAULT_CHECKPOINTS[-1]:.0e})",
    )
    parser.add_argument(
        "--checkpoints", type=_int_list, default=None,
        help="Comma-separated N values to report; --n-max is always reported "
        "(default: decades up to --n-max; empty for none)",
    )


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser."""
    parser = _ArgumentParser(
        prog="digit-spectra",
        description="Möbius orthogonality experiments for strongly b-multiplicative functions",
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # component
    p = subparsers.add_parser("component", help="Component of (0,0) in the pair digraph")
    p.add_argument("--base", type=int, default=2, help="Base b (default: 2)")
    _add_pair(p)
    _add_common(p)

    # fourier-decay
    p = subparsers.add_parser("fourier-decay", help="Certified decay profile of |F_lambda|")
    _add_function(p)
    _add_pair(p)
    p.add_argument("--lambda-max", type=int, default=20, help="Largest level (default: 20)")
    p.add_argument(
        "--grid", type=_count, default=DEFAULT_DECAY_GRID,
        help=f"Grid points in [0,1) (default: {DEFAULT_DECAY_GRID})",
    )
    p.add_argument("--L-max", type=int, default=DEFAULT_L_MAX, help="Largest product length L")
    p.add_argument(
        "--delta-min", type=float, default=DEFAULT_DELTA_MIN,
        help=f"Required contraction margin (default: {DEFAULT_DELTA_MIN})",
    )
    _add_common(p)

    # contract
    p = subparsers.add_parser("contract", help="Search for a contraction certificate")
    _add_function(p)
    _add_pair(p)
    p.add_argument("--L-max", type=int, default=DEFAULT_L_MAX, help="Largest product length L")
    p.add_argument(
        "--delta-min", type=float, default=DEFAULT_DELTA_MIN,
        help=f"Required contraction margin (default: {DEFAULT_DELTA_MIN})",
    )
    _add_common(p)

    # mobius-sum
    p = subparsers.add_parser("mobius-sum", help="Partial sums of mu(n) g(n^2)")
    _add_function(p)
    _add_sum_range(p)
    _add_common(p)

    # dk-corr
    p = subparsers.add_parser("dk-corr", help="Partial sums of g(p^2 n^2) conj(g(q^2 n^2))")
    _add_function(p)
    p.add_argument("--p", type=int, required=True, help="Prime p")
    p.add_argument("--q", type=int, required=True, help="Prime q")
    p.add_argument(
        "--allow-equal", action="store_true",
        help="Allow p = q (degenerate control, S(N) = N)",
    )
    _add_sum_range(p)
    _add_common(p)

    # twisted-sum
    p = subparsers.add_parser("twisted-sum", help="Partial sums of f(n^2) e(theta n)")
    _add_function(p)
    _add_pair(p)
    p.add_argument(
        "--theta", default="0",
        help="Twist in [0,1) as p/q (exact) or a decimal (default: 0)",
    )
    _add_sum_range(p)
    _add_common(p)

    # carry-check
    p = subparsers.add_parser("carry-check", help="Count carry-property violations")
    _add_function(p)
    p.add_argument("--a", type=int, default=1, help="Multiplier a in f(n) = g(an) (default: 1)")
    p.add_argument("--lambda", dest="lam", type=int, default=12, help="Level lambda (default: 12)")
    p.add_argument("--kappa", type=int, default=1, help="Window exponent kappa (default: 1)")
    p.add_argument(
        "--rho", type=_int_list, default=None,
        help="Comma-separated truncation offsets (default: 2..lambda-1)",
    )
    _add_common(p)

    # normality
    p = subparsers.add_parser("normality", help="Block frequencies of t(n^2)")
    p.add_argument(
        "--n-max", type=_count, default=DEFAULT_CHECKPOINTS[-1],
        help=f"Sequence length N (default: {DEFAULT_CHECKPOINTS[-1]:.0e})",
    )
    p.add_argument("--block-length", type=int, default=4, help="Block length L (default: 4)")
    _add_common(p)

    # selftest
    p = subparsers.add_parser("selftest", help="Run the oracle-equivalence suite")
    _add_common(p)

    return parser


def _function(args: argparse.Namespace) -> BMultFunction:
    if getattr(args, "g_spec", None):
        return BMultFunction.parse(args.g_spec)
    return PRESETS[getattr(args, "preset", None) or "thue-morse"]


def _pair(args: argparse.Namespace, b: int, required: bool = True) -> tuple[int, int] | None:
    if args.p is not None or args.q is not None:
        if args.p is None or args.q is None:
            raise UsageError("--p and --q must be given together")
        if args.P is not None or args.Q is not None:
            raise UsageError("give either --p/--q or --P/--Q, not both")
        P, Q = args.p * args.p, args.q * args.q
    elif args.P is not None and args.Q is not None:
        P, Q = args.P, args.Q
    elif required:
        raise UsageError("the multipliers are required: give --P and --Q, or --p and --q")
    else:
        return None
    if min(P, Q) < 1:
        raise UsageError(f"P and Q must be positive, got P={P}, Q={Q}")
    if not check_coprime_triple(P, Q, b):
        raise UsageError(f"P={P}, Q={Q} and b={b} must be pairwise coprime")
    return P, Q


def _dense_pair(args: argparse.Namespace, b: int) -> tuple[int, int]:
    P, Q = _pair(args, b)
    if P + Q > MAX_DENSE_COMPONENT:
        raise UsageError(f"P + Q = {P + Q} exceeds {MAX_DENSE_COMPONENT} for transfer matrices")
    return P, Q


def parse_args(argv: list[str] | None = None) -> RunConfig:
    """Parse and validate a command line.

    Raises:
        UsageError: Unknown flags, malformed specs, non-coprime triples or
            out-of-range sizes.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    args = create_parser().parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required (see --help)")
    config = RunConfig(
        command=args.command,
        format=args.format,
        output=args.output,
        threads=get_threads(args.threads),
        deterministic=args.deterministic,
        seed=args.seed,
        block_size=get_block_size(args.block_size),
        progress=args.progress,
        verbose=args.verbose,
        argv=argv,
    )
    if config.block_size < 2:
        raise UsageError(f"--block-size must be at least 2, got {config.block_size}")
    try:
        _resolve(config, args)
    except UsageError:
        raise
    except ValueError as e:
        raise UsageError(str(e)) from None
    logger.debug("resolved config: %s", config.echo())
    return config


def _resolve(config: RunConfig, args: argparse.Namespace) -> None:
    cmd = config.command
    params = config.params
    if cmd == "component":
        P, Q = _pair(args, args.base)
        params.update(base=args.base, P=P, Q=Q)
    elif cmd in ("fourier-decay", "contract"):
        config.g = _function(args)
        P, Q = _dense_pair(args, config.g.base)
        params.update(P=P, Q=Q, L_max=args.L_max, delta_min=args.delta_min)
        if cmd == "fourier-decay":
            if args.lambda_max < 0 or args.grid < 2:
                raise UsageError("--lambda-max must be >= 0 and --grid >= 2")
            params.update(lambda_max=args.lambda_max, grid=args.grid)
    elif cmd in ("mobius-sum", "dk-corr", "twisted-sum"):
        config.g = _function(args)
        if args.n_max < 1:
            raise UsageError(f"--n-max must be at least 1, got {args.n_max}")
        params.update(N=args.n_max, checkpoints=args.checkpoints)
        if cmd == "dk-corr":
            params.update(p=args.p, q=args.q, allow_equal=args.allow_equal)
        elif cmd == "twisted-sum":
            theta = parse_rational(args.theta)
            if not 0 <= theta < 1:
                raise UsageError(f"--theta must lie in [0, 1), got {args.theta}")
            params["theta"] = theta
            pair = _pair(args, config.g.base, required=False)
            if pair is not None:
                params.update(P=pair[0], Q=pair[1])
    elif cmd == "carry-check":
        config.g = _function(args)
        rhos = args.rho if args.rho is not None else list(range(2, args.lam))
        params.update(a=args.a, b=config.g.base, lam=args.lam, kappa=args.kappa, rho=rhos)
    elif cmd == "normality":
        if not 1 <= args.block_length <= 24 or args.n_max < args.block_length:
            raise UsageError("--block-length must lie in [1, 24] and not exceed --n-max")
        params.update(N=args.n_max, L=args.block_length)


# ---------------------------------------------------------------------------
# Commands


def _monitor(config: RunConfig, label: str) -> tuple[Progress | None, Any]:
    if not config.progress:
        return None, nullcontext()
    progress = Progress(0, label)
    return progress, ProgressMonitorDaemon(progress)


def _sum_report(config: RunConfig, series: SumSeries) -> Report:
    report = config.report(SUM_COLUMNS)
    for point in series.points:
        report.rows.append([point.N, point.value.real, point.value.imag, point.abs_over_N])
    report.summary = {"kind": series.kind, "exact": series.exact, "checkpoints": len(series.points)}
    if series.points:
        report.summary["final_abs_over_N"] = series.points[-1].abs_over_N
    return report


def cmd_component(config: RunConfig) -> int:
    p = config.params
    component = build_component(p["base"], p["P"], p["Q"])
    report = config.report(["i", "j"])
    report.rows = [[i, j] for i, j in component.members]
    report.summary = {"size": len(component), "staircase": is_staircase(component)}
    if p["base"] < p["P"] < p["Q"]:
        report.summary["i0"] = find_i0(component)
    return emit(report, config.format, config.output)


def cmd_fourier_decay(config: RunConfig) -> int:
    p = config.params
    fourier = FourierConfig.build(config.g, p["P"], p["Q"])
    profile = decay_profile(
        fourier,
        p["lambda_max"],
        p["grid"],
        L_max=p["L_max"],
        delta_min=p["delta_min"],
        threads=config.threads,
    )
    report = config.report(["lambda", "grid", "sup_grid", "sup_certified"])
    report.rows = [[r.lam, r.grid, r.sup_grid, r.sup_certified] for r in profile.records]
    report.summary = {
        "C": profile.C,
        "eta": profile.eta,
        "eta_certified": profile.eta_certified,
        "L": profile.certificate.L,
        "delta": profile.certificate.delta,
        "status": "PASS" if profile.passed else "FAIL",
    }
    return emit(report, config.format, config.output)


def cmd_contract(config: RunConfig) -> int:
    p = config.params
    fourier = FourierConfig.build(config.g, p["P"], p["Q"])
    columns = ["L", "delta", "grid", "lipschitz_K", "grid_sup", "certified_sup"]
    report = config.report(columns)
    try:
        cert = find_contraction(fourier, p["L_max"], p["delta_min"], threads=config.threads)
    except NoCertificateError as e:
        logger.warning("%s", e)
        report.document = {
            "found": False,
            "best_grid_sup": e.best_grid_sup,
            "trend": [{"L": L, "grid_sup": s} for L, s in e.trend],
        }
        report.summary = {"found": False, "best_grid_sup": e.best_grid_sup}
        return emit(report, config.format, config.output)
    report.document = cert.to_dict()
    report.rows = [[cert.L, cert.delta, cert.grid, cert.lipschitz_K, cert.grid_sup,
                    cert.certified_sup]]
    report.summary = {"found": True, "eta": cert.eta, "refinements": cert.refinements}
    return emit(report, config.format, config.output)


def cmd_mobius_sum(config: RunConfig) -> int:
    p = config.params
    progress, monitor = _monitor(config, "mobius-sum")
    with monitor:
        series = mobius_square_sum(
            config.g, p["N"], p["checkpoints"], progress=progress, **config.options()
        )
    return emit(_sum_report(config, series), config.format, config.output)


def cmd_dk_corr(config: RunConfig) -> int:
    p = config.params
    progress, monitor = _monitor(config, "dk-corr")
    with monitor:
        series = dk_correlation(
            config.g, p["p"], p["q"], p["N"], p["checkpoints"],
            allow_equal=p["allow_equal"], progress=progress, **config.options(),
        )
    return emit(_sum_report(config, series), config.format, config.output)


def cmd_twisted_sum(config: RunConfig) -> int:
    p = config.params
    f: BMultFunction | PairProduct = config.g
    if "P" in p:
        f = PairProduct(config.g, p["P"], p["Q"])
    progress, monitor = _monitor(config, "twisted-sum")
    with monitor:
        series = twisted_square_sum(
            f, p["theta"], p["N"], p["checkpoints"], progress=progress, **config.options()
        )
    return emit(_sum_report(config, series), config.format, config.output)


def cmd_carry_check(config: RunConfig) -> int:
    p = config.params
    reports = [
        count_carry_violations(config.g, p["a"], p["b"], p["lam"], p["kappa"], rho)
        for rho in p["rho"]
    ]
    report = config.report(["lambda", "kappa", "rho", "violations", "bound_b_pow"])
    report.rows = [[r.lam, r.kappa, r.rho, r.violations, r.bound_b_pow] for r in reports]
    report.summary = {
        "C": fit_carry_constant(reports),
        "criterion_counts": [r.criterion_count for r in reports],
    }
    return emit(report, config.format, config.output)


def cmd_normality(config: RunConfig) -> int:
    p = config.params
    progress, monitor = _monitor(config, "normality")
    with monitor:
        hist = block_histogram(
            p["N"], p["L"], progress=progress, **config.options()
        )
    expected = 1.0 / (1 << hist.L)
    freqs = hist.frequencies()
    report = config.report(["block", "count", "freq", "expected"])
    report.rows = [
        [hist.block(code), int(count), float(freq), expected]
        for code, (count, freq) in enumerate(zip(hist.counts, freqs))
    ]
    report.summary = {
        "windows": hist.total,
        "entropy_per_symbol": entropy_estimate(hist),
        "max_relative_deviation": float(abs(freqs / expected - 1.0).max()),
        "missing_blocks": len(missing_blocks(hist)),
    }
    return emit(report, config.format, config.output)


def cmd_selftest(config: RunConfig) -> int:
    results = run_selftest(config.seed)
    report = config.report(["check", "passed", "detail"])
    report.rows = [[r.name, r.passed, r.detail] for r in results]
    passed = all_passed(results)
    report.summary = {"passed": passed}
    code = emit(report, config.format, config.output)
    if not passed:
        failed = ", ".join(r.name for r in results if not r.passed)
        print(format_error("Selftest failed", failed), file=sys.stderr)
        return 2
    return code


COMMANDS = {
    "component": cmd_component,
    "fourier-decay": cmd_fourier_decay,
    "contract": cmd_contract,
    "mobius-sum": cmd_mobius_sum,
    "dk-corr": cmd_dk_corr,
    "twisted-sum": cmd_twisted_sum,
    "carry-check": cmd_carry_check,
    "normality": cmd_normality,
    "selftest": cmd_selftest,
}


def _setup_logging(verbosity: int) -> None:
    if verbosity <= 0:
        level = logging.WARNING
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = logging.DEBUG
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def main(argv: list[str] | None = None) -> int:
    """Main entry point."""
    try:
        config = parse_args(argv)
    except UsageError as e:
        print(format_error("Invalid arguments", str(e)), file=sys.stderr)
        return 1
    _setup_logging(config.verbose)
    try:
        return COMMANDS[config.command](config)
    except InconsistencyError as e:
        print(format_error("Internal inconsistency (this is a bug)", str(e)), file=sys.stderr)
        return 2
    except (ValueError, NoCertificateError) as e:
        print(format_error(f"{config.command} failed", str(e)), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
