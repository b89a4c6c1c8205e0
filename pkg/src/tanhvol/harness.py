"""Seeded error studies: surrogate-vs-exact sweeps, erf-vs-tanh statistics and
closed-form implied-volatility comparisons, with CSV output and a frozen
baseline of summary metrics.

Randomness comes from NumPy's Philox counter-based generator seeded from the
spec.  All draws happen up front in one process; workers only evaluate
deterministic functions on contiguous slices, so output does not depend on
the worker count.
"""

from __future__ import annotations

import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tanhvol.black_scholes import CallQuote, NormalizedTerms, bs_call, iv_oracle
from tanhvol.comparators import ComparatorKind, comparator_sigma
from tanhvol.core_math import erf
from tanhvol.errors import ConfigError, TanhVolError
from tanhvol.implied_vol import DEFAULT_ATM_KIND, implied_vol, is_atm
from tanhvol.standardized import EPS_ATM, chi
from tanhvol.surrogate import AtmKind, atm_call_hat, call_hat, chi_hat, theta

log = logging.getLogger(__name__)

CSV_FORMAT = "%.12g"
SWEEP_COLUMNS = ("alpha", "x", "sigma", "T", "moneyness", "exact", "approx", "abs_err")
ERF_COLUMNS = ("kind", "sigma", "T", "z", "exact", "approx", "abs_err")
COMPARE_COLUMNS = (
    "S", "X", "T", "sigma_true", "C", "sigma_hat", "sigma_li", "sigma_bs",
    "sigma_cm", "sigma_oracle", "availability_flags",
)
# order of the characters in availability_flags
FLAG_ORDER = ("hat", "li", "bs", "cm")
MONEYNESS_RANGE = (0.5, 2.0)
# quotes closer than this (relative to S) to an arbitrage bound carry no
# usable volatility information in double precision
PRICE_MARGIN = 1e-6

BASELINE_SLACK = 0.10


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class ErrorStats:
    count: int
    max_abs: float
    mean_abs: float
    rmse: float
    q50: float
    q90: float
    q99: float
    count_unavailable: int = 0

    @classmethod
    def from_errors(cls, errors, count_unavailable: int = 0) -> "ErrorStats":
        """Aggregate absolute errors; NaNs are counted as unavailable.

        Sums use math.fsum, which is exactly rounded and therefore independent
        of summation order.
        """
        errors = np.abs(np.asarray(errors, dtype=float).ravel())
        missing = int(np.isnan(errors).sum())
        errors = np.sort(errors[~np.isnan(errors)])
        n = errors.size
        if n == 0:
            nan = math.nan
            return cls(0, nan, nan, nan, nan, nan, nan, count_unavailable + missing)
        q50, q90, q99 = np.quantile(errors, [0.5, 0.9, 0.99])
        return cls(
            count=n,
            max_abs=float(errors[-1]),
            mean_abs=math.fsum(errors) / n,
            rmse=math.sqrt(math.fsum(errors * errors) / n),
            q50=float(q50),
            q90=float(q90),
            q99=float(q99),
            count_unavailable=count_unavailable + missing,
        )

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "max_abs": self.max_abs,
            "mean_abs": self.mean_abs,
            "rmse": self.rmse,
            "q50": self.q50,
            "q90": self.q90,
            "q99": self.q99,
            "count_unavailable": self.count_unavailable,
        }


@dataclass(frozen=True)
class SweepSpec:
    """Monte Carlo comparison of chi and chi_hat at a fixed maturity."""

    sigma_interval: tuple = (0.0, 1.25)
    sigma_samples: int = 500
    moneyness_samples: int = 10_000
    maturity: float = 0.25
    seed: int = 42
    parts: int = 5

    def validate(self):
        lo, hi = self.sigma_interval
        if not (0.0 <= lo <= hi) or hi <= 0.0:
            raise ConfigError("sigma interval must satisfy 0 <= lo <= hi and hi > 0")
        if self.sigma_samples < 1 or self.moneyness_samples < 1 or self.parts < 1:
            raise ConfigError("sample counts must be positive")
        if not self.maturity > 0.0:
            raise ConfigError("maturity must be positive")


@dataclass(frozen=True)
class LatticeSpec:
    """Lattice of (sigma, T) with sigma = sigma_step * j and T = k/12."""

    sigma_step: float = 1e-4
    sigma_count: int = 10_000
    months: tuple = tuple(range(1, 25))
    samples_per_cell: int = 10_000
    seed: int = 42

    def validate(self):
        if self.sigma_count < 1 or self.samples_per_cell < 1 or not self.months:
            raise ConfigError("lattice must be nonempty")
        if not self.sigma_step > 0.0:
            raise ConfigError("sigma step must be positive")


@dataclass(frozen=True)
class CompareGrid:
    moneyness: tuple = (0.8, 0.9, 0.95, 1.0, 1.05, 1.1, 1.25)
    maturities: tuple = (0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5)
    sigmas: tuple = (0.15, 0.25, 0.35, 0.5, 0.75, 1.0, 1.25)
    spot: float = 100.0
    atm_kind: AtmKind = DEFAULT_ATM_KIND

    def validate(self):
        if not (self.moneyness and self.maturities and self.sigmas):
            raise ConfigError("comparison grid must be nonempty")
        values = np.concatenate([self.moneyness, self.maturities, self.sigmas, [self.spot]])
        if np.any(~(values > 0.0)):
            raise ConfigError("grid values must be positive")


@dataclass
class StudyResult:
    columns: dict
    stats: dict
    header: list = field(default_factory=list)

    def to_csv(self, stream) -> None:
        write_csv(stream, self.header, self.columns, self.stats)

    def csv_text(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def _format_column(values) -> list:
    values = np.asarray(values)
    if values.dtype.kind in "fc":
        return [CSV_FORMAT % v if v == v else "NA" for v in values.tolist()]
    return [str(v) for v in values.tolist()]


def write_csv(stream, header, columns: dict, stats: dict, chunk: int = 100_000) -> None:
    """Comment lines (header, then one line per stats block), a column row, data rows."""
    for line in header:
        stream.write(f"# {line}\n")
    for name, block in stats.items():
        fields = " ".join(
            f"{key}={CSV_FORMAT % value if isinstance(value, float) else value}"
            for key, value in block.as_dict().items()
        )
        stream.write(f"# stats[{name}] {fields}\n")
    names = list(columns)
    stream.write(",".join(names) + "\n")
    n = len(next(iter(columns.values()))) if columns else 0
    for start in range(0, n, chunk):
        cols = [_format_column(columns[k][start:start + chunk]) for k in names]
        stream.write("".join(",".join(row) + "\n" for row in zip(*cols)))


def _map_chunks(func, arrays, workers: int):
    """Evaluate func on contiguous slices and concatenate, in slice order."""
    n = len(arrays[0])
    if workers <= 1 or n < 2:
        return func(*arrays)
    bounds = np.linspace(0, n, workers + 1).astype(int)
    pieces = [tuple(a[lo:hi] for a in arrays) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(func, *zip(*pieces)))
    return tuple(np.concatenate(parts) for parts in zip(*results))


def _chi_pair(alpha, x):
    return chi(alpha, x), chi_hat(alpha, x)


def sample_sigmas(rng, interval, count: int, parts: int):
    """Uniform draws on (lo, hi], stratified into equal sub-intervals when count allows."""
    lo, hi = interval
    if parts > 1 and count % parts == 0 and hi > lo:
        edges = np.linspace(lo, hi, parts + 1)
        per = count // parts
        u = rng.random(count).reshape(parts, per)
        return (edges[1:, None] - u * (edges[1:, None] - edges[:-1, None])).ravel()
    return hi - rng.random(count) * (hi - lo)


def sample_log_moneyness(rng, count: int, lo=MONEYNESS_RANGE[0], hi=MONEYNESS_RANGE[1]):
    """log(S/X) uniform on [log lo, log hi], redrawn inside the ATM band."""
    a, b = math.log(lo), math.log(hi)
    out = a + rng.random(count) * (b - a)
    bad = np.abs(out) < EPS_ATM
    while bad.any():
        out[bad] = a + rng.random(int(bad.sum())) * (b - a)
        bad = np.abs(out) < EPS_ATM
    return out


def run_moneyness_sweep(spec: SweepSpec, workers: int = 1) -> StudyResult:
    """chi - chi_hat over (moneyness x sigma) draws at one maturity.

    Rows are ordered moneyness-major.  Stats are reported for the whole
    interval and for each of ``spec.parts`` equal sigma sub-intervals.
    """
    spec.validate()
    rng = make_rng(spec.seed)
    log_m = sample_log_moneyness(rng, spec.moneyness_samples)
    sigmas = sample_sigmas(rng, spec.sigma_interval, spec.sigma_samples, spec.parts)

    alpha = np.repeat(np.sqrt(2.0 * np.abs(log_m)), sigmas.size)
    sigma = np.tile(sigmas, log_m.size)
    x = sigma * math.sqrt(spec.maturity) / alpha
    exact, approx = _map_chunks(_chi_pair, (alpha, x), workers)
    abs_err = np.abs(exact - approx)
    columns = {
        "alpha": alpha,
        "x": x,
        "sigma": sigma,
        "T": np.full(sigma.size, float(spec.maturity)),
        "moneyness": np.repeat(np.exp(log_m), sigmas.size),
        "exact": exact,
        "approx": approx,
        "abs_err": abs_err,
    }
    stats = {"all": ErrorStats.from_errors(abs_err)}
    lo, hi = spec.sigma_interval
    if spec.parts > 1 and hi > lo:
        edges = np.linspace(lo, hi, spec.parts + 1)
        for i in range(spec.parts):
            inside = (sigma > edges[i]) & (sigma <= edges[i + 1])
            if i == 0:
                inside |= sigma == edges[0]
            stats[f"part{i + 1}"] = ErrorStats.from_errors(abs_err[inside])
    header = [
        "study=moneyness_sweep rng=philox "
        f"seed={spec.seed} T={spec.maturity!r} sigma_interval={lo!r},{hi!r} "
        f"sigma_samples={spec.sigma_samples} moneyness_samples={spec.moneyness_samples} "
        f"parts={spec.parts}"
    ]
    return StudyResult(columns, stats, header)


def _theta_errors(z):
    exact = erf(z)
    return (exact,) + tuple(theta(kind, z) for kind in AtmKind)


def run_lattice_erf_study(spec: LatticeSpec, workers: int = 1) -> StudyResult:
    """erf(z) against Theta0/1/2 at z = sigma*sqrt(T/8) drawn from the lattice.

    For each maturity k/12, ``samples_per_cell`` sigma indices are drawn
    uniformly (with replacement) from 1..sigma_count.
    """
    spec.validate()
    rng = make_rng(spec.seed)
    months = np.asarray(spec.months, dtype=float)
    j = rng.integers(1, spec.sigma_count, size=(months.size, spec.samples_per_cell), endpoint=True)
    sigma = (spec.sigma_step * j).ravel()
    t = np.repeat(months / 12.0, spec.samples_per_cell)
    z = sigma * np.sqrt(t / 8.0)
    exact, *approx = _map_chunks(_theta_errors, (z,), workers)

    kinds, stats, parts = [], {}, {k: [] for k in ERF_COLUMNS}
    for kind, values in zip(AtmKind, approx):
        err = np.abs(values - exact)
        stats[kind.value] = ErrorStats.from_errors(err)
        for name, col in zip(ERF_COLUMNS[1:], (sigma, t, z, exact, values, err)):
            parts[name].append(col)
        kinds.append(np.full(z.size, kind.value, dtype=object))
    parts["kind"] = kinds
    columns = {name: np.concatenate(parts[name]) for name in ERF_COLUMNS}
    header = [
        "study=lattice_erf rng=philox "
        f"seed={spec.seed} sigma_step={spec.sigma_step!r} sigma_count={spec.sigma_count} "
        f"months={min(spec.months)}..{max(spec.months)} samples_per_cell={spec.samples_per_cell}"
    ]
    return StudyResult(columns, stats, header)


def dense_theta_errors(z_max: float = 4.0, points: int = 400_001) -> dict:
    """Max |Theta_k - erf| on a uniform grid over [0, z_max]."""
    z = np.linspace(0.0, z_max, points)
    exact = erf(z)
    return {kind.value: float(np.max(np.abs(theta(kind, z) - exact))) for kind in AtmKind}


def _admissible(terms: NormalizedTerms, price) -> bool:
    spot = float(terms.spot)
    return (
        price - float(terms.intrinsic) > PRICE_MARGIN * spot
        and spot - price > PRICE_MARGIN * spot
    )


def run_iv_comparison(grid: CompareGrid) -> StudyResult:
    """Implied vol from BS-generated prices: closed form, comparators and oracle.

    Cells whose price is numerically on an arbitrage bound are kept in the
    table with every estimate unavailable and are excluded from the stats.
    """
    grid.validate()
    m_lo, m_hi = MONEYNESS_RANGE
    if min(grid.moneyness) < m_lo or max(grid.moneyness) > m_hi:
        log.warning("moneyness outside [%s, %s]: alpha beyond the studied range", m_lo, m_hi)
    cells = [
        (m, t, s) for m in grid.moneyness for t in grid.maturities for s in grid.sigmas
    ]
    names = ("S", "X", "T", "sigma_true", "C", "sigma_hat", "sigma_li", "sigma_bs",
             "sigma_cm", "sigma_oracle")
    rows = {name: [] for name in names}
    flags = []
    admissible = []
    for m, t, sigma_true in cells:
        spot = float(grid.spot)
        strike = spot / m
        terms = NormalizedTerms(spot, strike, t)
        price = float(bs_call(terms, sigma_true))
        estimates = dict.fromkeys(("hat", "li", "bs", "cm", "oracle"), math.nan)
        admissible.append(_admissible(terms, price))
        if admissible[-1]:
            quote = CallQuote(terms, price)
            try:
                estimates["hat"] = float(implied_vol(quote, grid.atm_kind).sigma_hat)
            except TanhVolError:
                pass
            for key, kind in (("li", ComparatorKind.LI), ("bs", ComparatorKind.BRENNER_SUBRAHMANYAM),
                              ("cm", ComparatorKind.CORRADO_MILLER)):
                estimates[key] = float(comparator_sigma(kind, quote))
            estimates["oracle"] = iv_oracle(quote)
        for name, value in zip(names, (spot, strike, t, sigma_true, price, estimates["hat"],
                                       estimates["li"], estimates["bs"], estimates["cm"],
                                       estimates["oracle"])):
            rows[name].append(value)
        flags.append("".join("0" if math.isnan(estimates[k]) else "1" for k in FLAG_ORDER))

    columns = {name: np.asarray(values, dtype=float) for name, values in rows.items()}
    columns["availability_flags"] = np.asarray(flags, dtype=object)
    ok = np.asarray(admissible, dtype=bool)
    truth = columns["sigma_true"][ok]
    stats = {}
    for key in ("hat", "li", "bs", "cm", "oracle"):
        err = np.abs(columns[f"sigma_{key}"][ok] - truth)
        stats[key] = ErrorStats.from_errors(err)
    header = [
        f"study=iv_comparison spot={grid.spot!r} atm_kind={AtmKind(grid.atm_kind).value} "
        f"cells={len(cells)} admissible={int(ok.sum())} "
        f"availability_flags_order={''.join(k[0] for k in FLAG_ORDER)}"
    ]
    return StudyResult(columns, stats, header)


def surrogate_round_trip_residual(columns: dict, index: int, atm_kind: AtmKind = DEFAULT_ATM_KIND) -> float:
    """|C_hat(sigma_hat) - C| / S for one comparison row."""
    s, x, t = (float(columns[k][index]) for k in ("S", "X", "T"))
    sigma_hat = float(columns["sigma_hat"][index])
    price = float(columns["C"][index])
    terms = NormalizedTerms(s, x, t)
    if is_atm(terms):
        rebuilt = atm_call_hat(atm_kind, s, t, sigma_hat)
    else:
        rebuilt = call_hat(terms, sigma_hat)
    return abs(float(rebuilt) - price) / s


# ---------------------------------------------------------------- baseline

def compute_metrics(seed: int = 42) -> dict:
    """Summary metrics frozen into the baseline document."""
    metrics = {}
    sweep = run_moneyness_sweep(SweepSpec(seed=seed))
    for name, block in sweep.stats.items():
        metrics[f"sweep.{name}.max_abs"] = block.max_abs
        metrics[f"sweep.{name}.mean_abs"] = block.mean_abs
        metrics[f"sweep.{name}.rmse"] = block.rmse
    for label, interval in (("low", (0.15, 0.35)), ("high", (0.75, 1.25))):
        band = run_moneyness_sweep(SweepSpec(sigma_interval=interval, seed=seed, parts=1))
        metrics[f"sweep.band_{label}.max_abs"] = band.stats["all"].max_abs
        metrics[f"sweep.band_{label}.mean_abs"] = band.stats["all"].mean_abs

    lattice = run_lattice_erf_study(LatticeSpec(seed=seed))
    for name, block in lattice.stats.items():
        metrics[f"erf.{name}.max_abs"] = block.max_abs
        metrics[f"erf.{name}.mean_abs"] = block.mean_abs
        metrics[f"erf.{name}.rmse"] = block.rmse
    for name, value in dense_theta_errors().items():
        metrics[f"erf_grid.{name}.max_abs"] = value

    compare = run_iv_comparison(CompareGrid())
    for name, block in compare.stats.items():
        if name == "oracle":
            # roundoff-level and asserted against the true sigma directly
            continue
        metrics[f"iv_compare.{name}.max_abs"] = block.max_abs
        metrics[f"iv_compare.{name}.mean_abs"] = block.mean_abs
        metrics[f"iv_compare.{name}.count_unavailable"] = block.count_unavailable
    metrics.update(point_metrics())
    return metrics


def point_metrics() -> dict:
    """Single-point approximation errors quoted in the module examples."""
    from tanhvol.implied_vol import atm_implied_vol, implied_vol_tanh
    from tanhvol.surrogate import atm_call_exact, coefficients

    out = {}
    c = coefficients(0.5)
    out["coeffs.alpha0_5.c1"] = c.c1
    out["coeffs.alpha0_5.c2"] = c.c2
    out["coeffs.alpha0_5.c3"] = c.c3
    otm = NormalizedTerms(100.0, 110.0, 0.25)
    out["call_hat.S100_X110_T0_25_s0_2.abs_err"] = abs(float(call_hat(otm, 0.2) - bs_call(otm, 0.2)))
    itm = NormalizedTerms(100.0, 90.0, 0.5)
    sigma_hat = implied_vol_tanh(CallQuote(itm, bs_call(itm, 0.25))).sigma_hat
    out["iv_tanh.S100_X90_T0_5_s0_25.abs_err"] = abs(float(sigma_hat) - 0.25)
    exact_atm = float(atm_call_exact(100.0, 0.25, 0.2))
    for kind in AtmKind:
        out[f"atm_call_hat.{kind.value}.S100_T0_25_s0_2.abs_err"] = abs(
            float(atm_call_hat(kind, 100.0, 0.25, 0.2)) - exact_atm
        )
        est = atm_implied_vol(kind, CallQuote(NormalizedTerms(100.0, 100.0, 0.25), exact_atm))
        out[f"atm_iv.{kind.value}.S100_T0_25_s0_2.abs_err"] = abs(float(est.sigma_hat) - 0.2)
    return out


def write_baseline(path, metrics: dict, seed: int) -> None:
    lines = [
        "# tanhvol frozen baseline",
        "# version=1",
        f"# seed={seed}",
        "# metric=value, checked with 10% relative slack",
    ]
    lines += [f"{key}={float(value)!r}" for key, value in sorted(metrics.items())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_baseline(path) -> dict:
    metrics = {}
    for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{number}: expected metric=value")
        metrics[key.strip()] = float(value)
    return metrics


def compare_to_baseline(metrics: dict, baseline: dict, slack: float = BASELINE_SLACK) -> list:
    """Return (metric, frozen, current) for every metric outside the slack."""
    failures = []
    for key, frozen in sorted(baseline.items()):
        current = metrics.get(key, math.nan)
        if math.isnan(frozen) and math.isnan(current):
            continue
        if not abs(current - frozen) <= slack * abs(frozen):
            failures.append((key, frozen, current))
    return failures


def baseline_seed(path) -> int:
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if raw.startswith("# seed="):
            return int(raw.split("=", 1)[1])
    return 42
