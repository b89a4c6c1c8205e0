"""Command-line interface.

Exit codes: 0 success, 2 invalid input or usage, 3 baseline regression.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from importlib import resources
from pathlib import Path

from tanhvol import harness
from tanhvol.black_scholes import CallQuote, OptionTerms, bs_call, iv_oracle, normalize
from tanhvol.comparators import ComparatorKind, Unavailable, comparator_iv
from tanhvol.errors import TanhVolError
from tanhvol.implied_vol import implied_vol
from tanhvol.surrogate import AtmKind, atm_call_hat, call_hat

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_REGRESSION = 3


def default_baseline_path() -> Path:
    return Path(str(resources.files("tanhvol") / "data" / "baseline.txt"))


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_market_args(p, price: bool):
    p.add_argument("--spot", type=float, required=True)
    p.add_argument("--strike", type=float, required=True)
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--maturity", type=float, required=True)
    if price:
        p.add_argument("--price", type=float, required=True)
    else:
        p.add_argument("--vol", type=float, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tanhvol",
        description="Black-Scholes calls, tanh surrogates and closed-form implied volatility.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price a European call")
    _add_market_args(p, price=False)
    p.add_argument("--model", choices=["bs", "tanh", "theta0", "theta1", "theta2"], default="bs",
                   help="bs: exact; tanh: surrogate for S != X; thetaK: ATM surrogate")
    p.add_argument("--digits", type=int, default=4)

    p = sub.add_parser("iv", help="implied volatility of a call price")
    _add_market_args(p, price=True)
    p.add_argument("--method", choices=["tanh", "oracle", "li", "bs", "cm"], default="tanh")
    p.add_argument("--atm-kind", choices=[k.value for k in AtmKind], default="theta2")
    p.add_argument("--digits", type=int, default=8)

    p = sub.add_parser("sweep", help="chi vs chi_hat Monte Carlo sweep (CSV)")
    p.add_argument("--t", type=float, default=0.25, help="maturity in years")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--sigma-lo", type=float, default=0.0)
    p.add_argument("--sigma-hi", type=float, default=1.25)
    p.add_argument("--sigma-samples", type=int, default=500)
    p.add_argument("--moneyness-samples", type=int, default=10_000)
    p.add_argument("--parts", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")

    p = sub.add_parser("erf-study", help="erf vs Theta0/1/2 on the (sigma, T) lattice (CSV)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--samples-per-cell", type=int, default=10_000)
    p.add_argument("--sigma-step", type=float, default=1e-4)
    p.add_argument("--sigma-count", type=int, default=10_000)
    p.add_argument("--max-month", type=int, default=24)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")

    p = sub.add_parser("iv-compare", help="closed-form IV vs comparators on BS prices (CSV)")
    grid = harness.CompareGrid()
    p.add_argument("--moneyness", type=_floats, default=grid.moneyness, help="S/X values")
    p.add_argument("--maturities", type=_floats, default=grid.maturities)
    p.add_argument("--sigmas", type=_floats, default=grid.sigmas)
    p.add_argument("--spot", type=float, default=grid.spot)
    p.add_argument("--atm-kind", choices=[k.value for k in AtmKind], default="theta2")
    p.add_argument("--out")

    p = sub.add_parser("baseline", help="freeze or check the metric baseline")
    p.add_argument("action", choices=["freeze", "check"])
    p.add_argument("--path", type=Path, default=None)
    p.add_argument("--seed", type=int, default=None,
                   help="freeze: seed for the sweeps (default 42); check uses the file's seed")
    return parser


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _cmd_price(args) -> int:
    terms = normalize(OptionTerms(args.spot, args.strike, args.rate, args.maturity))
    if args.model == "bs":
        value = bs_call(terms, args.vol)
    elif args.model == "tanh":
        value = call_hat(terms, args.vol)
    else:
        value = atm_call_hat(AtmKind(args.model), terms.spot, terms.maturity, args.vol)
    print(f"{float(value):.{args.digits}f}")
    return EXIT_OK


def _cmd_iv(args) -> int:
    terms = normalize(OptionTerms(args.spot, args.strike, args.rate, args.maturity))
    quote = CallQuote(terms, args.price)
    if args.method == "tanh":
        est = implied_vol(quote, AtmKind(args.atm_kind))
        sigma, method = est.sigma_hat, est.method.value
    elif args.method == "oracle":
        sigma, method = iv_oracle(quote), "oracle_newton"
    else:
        est = comparator_iv(ComparatorKind(args.method), quote)
        if isinstance(est, Unavailable):
            print(f"unavailable ({est.method.value}: {est.reason})")
            return EXIT_OK
        sigma, method = est.sigma_hat, est.method.value
    print(f"{float(sigma):.{args.digits}f}")
    logging.getLogger(__name__).info("method=%s", method)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    spec = harness.SweepSpec(
        sigma_interval=(args.sigma_lo, args.sigma_hi),
        sigma_samples=args.sigma_samples,
        moneyness_samples=args.moneyness_samples,
        maturity=args.t,
        seed=args.seed,
        parts=args.parts,
    )
    result = harness.run_moneyness_sweep(spec, workers=args.workers)
    with _output(args.out) as out:
        result.to_csv(out)
    return EXIT_OK


def _cmd_erf_study(args) -> int:
    spec = harness.LatticeSpec(
        sigma_step=args.sigma_step,
        sigma_count=args.sigma_count,
        months=tuple(range(1, args.max_month + 1)),
        samples_per_cell=args.samples_per_cell,
        seed=args.seed,
    )
    result = harness.run_lattice_erf_study(spec, workers=args.workers)
    with _output(args.out) as out:
        result.to_csv(out)
    return EXIT_OK


def _cmd_iv_compare(args) -> int:
    grid = harness.CompareGrid(
        moneyness=args.moneyness,
        maturities=args.maturities,
        sigmas=args.sigmas,
        spot=args.spot,
        atm_kind=AtmKind(args.atm_kind),
    )
    result = harness.run_iv_comparison(grid)
    with _output(args.out) as out:
        result.to_csv(out)
    return EXIT_OK


def _cmd_baseline(args) -> int:
    path = args.path or default_baseline_path()
    if args.action == "freeze":
        seed = 42 if args.seed is None else args.seed
        harness.write_baseline(path, harness.compute_metrics(seed), seed)
        print(f"baseline written to {path}")
        return EXIT_OK
    baseline = harness.read_baseline(path)
    seed = harness.baseline_seed(path) if args.seed is None else args.seed
    failures = harness.compare_to_baseline(harness.compute_metrics(seed), baseline)
    for key, frozen, current in failures:
        print(f"REGRESSION {key}: frozen={frozen!r} current={current!r}")
    if failures:
        return EXIT_REGRESSION
    print(f"baseline ok: {len(baseline)} metrics within {harness.BASELINE_SLACK:.0%}")
    return EXIT_OK


COMMANDS = {
    "price": _cmd_price,
    "iv": _cmd_iv,
    "sweep": _cmd_sweep,
    "erf-study": _cmd_erf_study,
    "iv-compare": _cmd_iv_compare,
    "baseline": _cmd_baseline,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except TanhVolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
