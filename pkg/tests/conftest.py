import mpmath as mp
import numpy as np
import pytest

mp.mp.dps = 40


def mp_norm_cdf(x):
    return float(mp.ncdf(mp.mpf(float(x))))


def mp_chi(alpha, x):
    a, x = mp.mpf(float(alpha)), mp.mpf(float(x))
    return mp.ncdf(a / 2 * (x - 1 / x)) - mp.e ** (a * a / 2) * mp.ncdf(-a / 2 * (x + 1 / x))


def mp_bs_call(s, x, t, sigma):
    s, x, t, sigma = (mp.mpf(float(v)) for v in (s, x, t, sigma))
    vol = sigma * mp.sqrt(t)
    d1 = mp.log(s / x) / vol + vol / 2
    return s * mp.ncdf(d1) - x * mp.ncdf(d1 - vol)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(20240601))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label, text): acceptance criterion covered by a test")


_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    label, text = marker.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "measured")
    _CRITERIA[label] = (report.passed, text, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: (int(s.rstrip("ab")), s)):
        passed, text, detail = _CRITERIA[label]
        status = "PASS" if passed else "FAIL"
        line = f"criterion {label:<3} {status}  {text}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
