import csv
import io
import logging
import math

import numpy as np
import pytest

from tanhvol import harness
from tanhvol.errors import ConfigError
from tanhvol.harness import (
    CompareGrid,
    ErrorStats,
    LatticeSpec,
    SweepSpec,
    compare_to_baseline,
    read_baseline,
    run_iv_comparison,
    run_lattice_erf_study,
    run_moneyness_sweep,
    surrogate_round_trip_residual,
    write_baseline,
)
from tanhvol.standardized import EPS_ATM, chi
from tanhvol.surrogate import chi_hat

SMALL_SWEEP = SweepSpec(sigma_samples=50, moneyness_samples=40, seed=7)
SMALL_LATTICE = LatticeSpec(sigma_count=500, samples_per_cell=50, months=(1, 6, 12, 24), seed=7)


def parse_csv(text):
    comments = [line for line in text.splitlines() if line.startswith("#")]
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    rows = list(csv.DictReader(io.StringIO(body)))
    return comments, rows


def test_error_stats_basic():
    stats = ErrorStats.from_errors([0.0, -1.0, 2.0, 3.0, math.nan])
    assert stats.count == 4
    assert stats.count_unavailable == 1
    assert stats.max_abs == 3.0
    assert stats.mean_abs == pytest.approx(1.5)
    assert stats.rmse == pytest.approx(math.sqrt(14 / 4))
    assert stats.max_abs >= stats.q99 >= stats.q90 >= stats.q50 >= 0.0


def test_error_stats_order_independent(rng):
    errors = rng.random(10_001) * np.logspace(-12, 0, 10_001)
    forward = ErrorStats.from_errors(errors)
    backward = ErrorStats.from_errors(errors[::-1].copy())
    assert forward == backward


def test_error_stats_empty():
    stats = ErrorStats.from_errors([math.nan, math.nan])
    assert stats.count == 0 and stats.count_unavailable == 2
    assert math.isnan(stats.max_abs)


def test_sweep_rows_and_columns():
    result = run_moneyness_sweep(SMALL_SWEEP)
    assert tuple(result.columns) == harness.SWEEP_COLUMNS
    assert len(result.columns["x"]) == 50 * 40
    log_m = np.log(result.columns["moneyness"])
    assert np.all(np.abs(log_m) >= EPS_ATM)
    assert np.all((log_m >= math.log(0.5) - 1e-15) & (log_m <= math.log(2.0) + 1e-15))
    alpha, x = result.columns["alpha"], result.columns["x"]
    np.testing.assert_array_equal(result.columns["exact"], chi(alpha, x))
    np.testing.assert_array_equal(result.columns["approx"], chi_hat(alpha, x))
    assert set(result.stats) == {"all", "part1", "part2", "part3", "part4", "part5"}
    assert sum(result.stats[f"part{i}"].count for i in range(1, 6)) == result.stats["all"].count


def test_sweep_stratified_parts():
    result = run_moneyness_sweep(SweepSpec(moneyness_samples=1, seed=3))
    sigma = result.columns["sigma"]
    counts = np.histogram(sigma, bins=np.linspace(0.0, 1.25, 6))[0]
    assert counts.tolist() == [100] * 5
    assert np.all((sigma > 0.0) & (sigma <= 1.25))


def test_sweep_zero_width_interval():
    result = run_moneyness_sweep(SweepSpec(sigma_interval=(0.5, 0.5), moneyness_samples=1, seed=1))
    sigma = result.columns["sigma"]
    assert sigma.size == 500
    assert np.all(sigma == 0.5)
    assert len(set(result.columns["x"].tolist())) == 1


@pytest.mark.parametrize(
    "spec",
    [
        SweepSpec(sigma_interval=(0.5, 0.2)),
        SweepSpec(sigma_interval=(0.0, 0.0)),
        SweepSpec(sigma_interval=(-0.1, 1.0)),
        SweepSpec(sigma_samples=0),
        SweepSpec(moneyness_samples=0),
        SweepSpec(maturity=0.0),
    ],
)
def test_sweep_config_errors(spec):
    with pytest.raises(ConfigError):
        run_moneyness_sweep(spec)


@pytest.mark.parametrize(
    "spec",
    [LatticeSpec(sigma_count=0), LatticeSpec(samples_per_cell=0), LatticeSpec(months=()),
     LatticeSpec(sigma_step=0.0)],
)
def test_lattice_config_errors(spec):
    with pytest.raises(ConfigError):
        run_lattice_erf_study(spec)


def test_compare_config_errors():
    with pytest.raises(ConfigError):
        run_iv_comparison(CompareGrid(sigmas=()))
    with pytest.raises(ConfigError):
        run_iv_comparison(CompareGrid(maturities=(0.0, 1.0)))


@pytest.mark.parametrize("workers", [2, 3])
def test_sweep_deterministic_across_workers(workers):
    single = run_moneyness_sweep(SMALL_SWEEP, workers=1).csv_text()
    assert run_moneyness_sweep(SMALL_SWEEP, workers=1).csv_text() == single
    assert run_moneyness_sweep(SMALL_SWEEP, workers=workers).csv_text() == single


def test_lattice_deterministic_across_workers():
    single = run_lattice_erf_study(SMALL_LATTICE, workers=1).csv_text()
    assert run_lattice_erf_study(SMALL_LATTICE, workers=3).csv_text() == single


def test_seed_changes_output():
    a = run_moneyness_sweep(SMALL_SWEEP).csv_text()
    b = run_moneyness_sweep(SweepSpec(sigma_samples=50, moneyness_samples=40, seed=8)).csv_text()
    assert a != b


def test_csv_header_echoes_seed_and_rng():
    comments, rows = parse_csv(run_moneyness_sweep(SMALL_SWEEP).csv_text())
    assert "rng=philox" in comments[0] and "seed=7" in comments[0]
    assert list(rows[0]) == list(harness.SWEEP_COLUMNS)


def test_stats_recompute_from_rows():
    result = run_moneyness_sweep(SMALL_SWEEP)
    # in memory the aggregate block is reproduced exactly
    assert ErrorStats.from_errors(result.columns["abs_err"]) == result.stats["all"]
    # from the CSV, to the 12 significant digits it carries
    comments, rows = parse_csv(result.csv_text())
    errors = np.array([float(r["abs_err"]) for r in rows])
    again = ErrorStats.from_errors(errors)
    line = next(c for c in comments if c.startswith("# stats[all]"))
    fields = dict(item.split("=") for item in line.split()[2:])
    assert int(fields["count"]) == again.count
    for key in ("max_abs", "mean_abs", "rmse", "q50", "q90", "q99"):
        assert float(fields[key]) == pytest.approx(getattr(again, key), rel=1e-11)


def test_lattice_columns_and_z():
    result = run_lattice_erf_study(SMALL_LATTICE)
    cols = result.columns
    assert tuple(cols) == harness.ERF_COLUMNS
    assert len(cols["z"]) == 3 * 4 * 50
    np.testing.assert_allclose(cols["z"], cols["sigma"] * np.sqrt(cols["T"] / 8.0), rtol=1e-15)
    steps = cols["sigma"] / 1e-4
    np.testing.assert_allclose(steps, np.round(steps), atol=1e-8)
    assert set(np.round(cols["T"] * 12).astype(int).tolist()) == {1, 6, 12, 24}
    assert set(result.stats) == {"theta0", "theta1", "theta2"}


def test_theta_ordering_on_lattice():
    stats = run_lattice_erf_study(LatticeSpec(samples_per_cell=500, seed=11)).stats
    assert stats["theta0"].max_abs > stats["theta1"].max_abs
    assert stats["theta0"].max_abs > stats["theta2"].max_abs


@pytest.fixture(scope="module")
def comparison():
    return run_iv_comparison(CompareGrid())


def test_comparison_columns(comparison):
    assert tuple(comparison.columns) == harness.COMPARE_COLUMNS
    assert len(comparison.columns["S"]) == 7**3


def test_comparison_oracle_matches_truth(comparison):
    cols = comparison.columns
    ok = ~np.isnan(cols["sigma_oracle"])
    assert ok.sum() > 300
    assert np.max(np.abs(cols["sigma_oracle"][ok] - cols["sigma_true"][ok])) <= 1e-9


def test_comparison_hat_always_available(comparison):
    cols = comparison.columns
    ok = ~np.isnan(cols["sigma_oracle"])
    assert not np.isnan(cols["sigma_hat"][ok]).any()
    flags = cols["availability_flags"][ok]
    assert all(f[0] == "1" for f in flags)
    assert comparison.stats["hat"].count_unavailable == 0


def test_comparison_round_trip_spot_check(comparison, rng):
    cols = comparison.columns
    rows = np.flatnonzero(~np.isnan(cols["sigma_hat"]))
    picks = rng.choice(rows, size=max(1, rows.size // 100), replace=False)
    for i in picks:
        assert surrogate_round_trip_residual(cols, i) <= 1e-10


def test_comparison_round_trip_all_rows(comparison):
    cols = comparison.columns
    rows = np.flatnonzero(~np.isnan(cols["sigma_hat"]))
    assert max(surrogate_round_trip_residual(cols, i) for i in rows) <= 1e-10


def test_comparison_flags_consistent(comparison):
    cols = comparison.columns
    for i, flags in enumerate(cols["availability_flags"]):
        for key, flag in zip(harness.FLAG_ORDER, flags):
            assert (flag == "1") == (not math.isnan(cols[f"sigma_{key}"][i]))


def test_comparison_stress_unavailable(comparison):
    cols = comparison.columns
    ok = ~np.isnan(cols["sigma_oracle"])
    stress = ok & (cols["sigma_true"] >= 0.75)
    comparator_flags = [f[1:] for f in cols["availability_flags"][stress]]
    assert any("0" in f for f in comparator_flags)


def test_comparison_warns_outside_range(caplog):
    with caplog.at_level(logging.WARNING, logger="tanhvol.harness"):
        run_iv_comparison(CompareGrid(moneyness=(3.0,), maturities=(0.5,), sigmas=(0.3,)))
    assert "outside" in caplog.text


def test_baseline_round_trip(tmp_path):
    path = tmp_path / "baseline.txt"
    metrics = {"a.max_abs": 0.25, "b.count_unavailable": 0.0, "c.mean_abs": 1e-7}
    write_baseline(path, metrics, seed=9)
    assert read_baseline(path) == metrics
    assert harness.baseline_seed(path) == 9
    assert compare_to_baseline(metrics, metrics) == []
    drift = dict(metrics, **{"a.max_abs": 0.25 * 1.09})
    assert compare_to_baseline(drift, metrics) == []
    bad = dict(metrics, **{"a.max_abs": 0.25 * 1.2})
    assert [f[0] for f in compare_to_baseline(bad, metrics)] == ["a.max_abs"]
    improved = dict(metrics, **{"c.mean_abs": 1e-9})
    assert [f[0] for f in compare_to_baseline(improved, metrics)] == ["c.mean_abs"]
    missing = {k: v for k, v in metrics.items() if k != "a.max_abs"}
    assert [f[0] for f in compare_to_baseline(missing, metrics)] == ["a.max_abs"]


def test_baseline_malformed(tmp_path):
    path = tmp_path / "broken.txt"
    path.write_text("# comment\nno separator here\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_baseline(path)


def test_shipped_baseline_has_expected_keys():
    from tanhvol.cli import default_baseline_path

    baseline = read_baseline(default_baseline_path())
    for key in ("sweep.all.max_abs", "sweep.band_low.max_abs", "sweep.band_high.max_abs",
                "erf.theta0.max_abs", "erf_grid.theta1.max_abs", "iv_compare.hat.max_abs",
                "coeffs.alpha0_5.c1"):
        assert key in baseline


def test_point_metrics_match_baseline():
    from tanhvol.cli import default_baseline_path

    baseline = read_baseline(default_baseline_path())
    current = harness.point_metrics()
    subset = {k: v for k, v in baseline.items() if k in current}
    assert len(subset) == len(current)
    assert compare_to_baseline(current, subset) == []
