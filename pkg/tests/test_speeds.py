import json
import math

import numpy as np
import pytest

from gaussflow.speeds import (
    FAIL,
    INDETERMINATE,
    PASS,
    SpeedDomainError,
    SpeedEvaluationError,
    check_conditions,
    custom,
    eval_speed,
    log_power,
    power,
    radii_hessian_fd,
)

BUILTINS = [power(0.5), power(0.6), power(1.0), power(2.0), log_power(2), log_power(3), log_power(2, K0=20.0)]


def test_power_values():
    assert eval_speed(power(0.5), 4.0) == pytest.approx((2.0, 0.25, -1 / 32), rel=1e-15)
    for K in (0.3, 1.0, 17.0):
        assert eval_speed(power(1), K) == (K, 1.0, 0.0)


def test_log_power_value():
    f, _, _ = eval_speed(log_power(2, K0=math.e**2), 1.0)
    assert f == pytest.approx(math.log(1 + math.e**2), rel=1e-15)
    assert f == pytest.approx(2.12693, abs=5e-6)
    assert log_power(2).params["K0"] == pytest.approx(math.e**2)
    assert log_power(3).params["K0"] == pytest.approx(math.e**1.5)


@pytest.mark.parametrize("K", [0.0, -1.0])
def test_domain(K):
    with pytest.raises(SpeedDomainError):
        eval_speed(power(1), K)


def test_array_evaluation():
    f, df, d2f = eval_speed(log_power(2), np.array([0.5, 2.0]))
    assert f.shape == df.shape == d2f.shape == (2,)


@pytest.mark.parametrize("spec", BUILTINS, ids=lambda s: s.describe())
@pytest.mark.parametrize("K", [0.5, 1.0, 4.0, 25.0])
def test_derivatives_match_finite_differences(spec, K):
    h = 1e-5 * K
    f = lambda k: eval_speed(spec, k)[0]  # noqa: E731
    df = lambda k: eval_speed(spec, k)[1]  # noqa: E731
    _, d1, d2 = eval_speed(spec, K)
    fd1 = (f(K + h) - f(K - h)) / (2 * h)
    fd2 = (df(K + h) - df(K - h)) / (2 * h)
    assert fd1 == pytest.approx(d1, rel=1e-6)
    if abs(d2) < 1e-12:
        assert abs(fd2) < 1e-8
    else:
        assert fd2 == pytest.approx(d2, rel=1e-6)


@pytest.mark.parametrize("alpha", [0.6, 0.75, 1.0, 1.5])
def test_power_law_constants_closed_form(alpha):
    n = 2
    K = np.geomspace(0.1, 100, 1000)
    f, df, d2f = eval_speed(power(alpha), K)
    rho = (n * K * df - f) / f
    tau = K * d2f / df + 1 - 1 / n
    np.testing.assert_allclose(rho, n * alpha - 1, rtol=1e-12)
    np.testing.assert_allclose(tau, alpha - 1 / n, rtol=1e-12)


def test_power_one_passes():
    r = check_conditions(power(1.0), (0.1, 100), n=2)
    assert r.passed
    assert r.constants["alpha1"] == r.constants["alpha2"] == pytest.approx(1.0, abs=1e-12)
    assert r.constants["beta"] == pytest.approx(0.5, abs=1e-12)
    assert r.verdicts["v"] == PASS


def test_power_half_fails_ii():
    r = check_conditions(power(0.5), (0.1, 100), n=2)
    assert r.verdicts["ii"] == FAIL
    assert r.constants["alpha1"] is None and r.constants["alpha2"] is None
    assert not r.passed


def test_power_too_steep_fails_ii():
    # rho = 2 alpha - 1 = 2 > n - 1
    assert check_conditions(power(1.5), (0.1, 100)).verdicts["ii"] == FAIL


def test_log_power_example_constants():
    r = check_conditions(log_power(2, K0=math.e**2), (0.1, 100), n=2, gamma=2 / 3, gamma_hat=2 ** (-2 / 3))
    assert r.passed, r.verdicts
    assert 0 < r.constants["alpha1"] <= r.constants["alpha2"] <= 1
    assert r.constants["beta"] <= 1.5
    assert r.constants["gamma"] == pytest.approx(2 / 3)
    assert r.constants["gamma_hat"] == pytest.approx(2 ** (-2 / 3))
    assert r.K_threshold_iv == pytest.approx(10.0)
    assert any("not proven" in n for n in r.notes)


def test_gamma_search():
    r = check_conditions(power(2.0), (1, 100))
    assert r.constants["gamma"] == pytest.approx(0.5, abs=1e-9)
    assert r.constants["gamma_hat"] == pytest.approx(1.0, rel=1e-9)


def test_gamma_hat_too_large_fails():
    r = check_conditions(log_power(2), (1, 100), gamma=2 / 3, gamma_hat=10.0)
    assert r.verdicts["iv"] == FAIL


def test_condition_v_needs_n2():
    r = check_conditions(power(1.0), (0.1, 100), n=3)
    assert r.verdicts["v"] == INDETERMINATE


def test_concave_in_radii_fails_v():
    # f = K / (1 + K): along l1 = l2 = l, F = 1 / (1 + l^2) is concave for small l
    sat = custom(lambda K: K / (1 + K), lambda K: (1 + K) ** -2, lambda K: -2 * (1 + K) ** -3, name="saturating")
    r = check_conditions(sat, (0.1, 100), n=2)
    assert r.verdicts["v"] == FAIL


@pytest.mark.parametrize("spec", BUILTINS, ids=lambda s: s.describe())
def test_fd_radii_hessian_matches_chain_rule(spec):
    lam = np.geomspace(0.2, 3.0, 7)
    L1, L2 = np.meshgrid(lam, lam, indexing="ij")
    K = 1 / (L1 * L2)
    _, df, d2f = eval_speed(spec, K)
    g = np.stack([-K / L1, -K / L2], -1)
    hk = np.empty(K.shape + (2, 2))
    hk[..., 0, 0] = 2 * K / L1**2
    hk[..., 1, 1] = 2 * K / L2**2
    hk[..., 0, 1] = hk[..., 1, 0] = K / (L1 * L2)
    exact = d2f[..., None, None] * g[..., :, None] * g[..., None, :] + df[..., None, None] * hk
    np.testing.assert_allclose(radii_hessian_fd(spec, L1, L2), exact, rtol=1e-5, atol=1e-8)


def test_nonfinite_custom_speed_raises():
    bad = custom(lambda K: np.sqrt(K - 1.0), lambda K: 0.5 / np.sqrt(K - 1.0), lambda K: -0.25 * (K - 1.0) ** -1.5)
    with np.errstate(invalid="ignore", divide="ignore"), pytest.raises(SpeedEvaluationError) as info:
        check_conditions(bad, (0.1, 100))
    assert info.value.K < 1.0


def test_custom_matches_builtin():
    c = custom(lambda K: K**0.6, lambda K: 0.6 * K**-0.4, lambda K: -0.24 * K**-1.4, name="p06")
    r1 = check_conditions(c, (0.5, 50))
    r2 = check_conditions(power(0.6), (0.5, 50))
    assert r1.verdicts == r2.verdicts
    assert r1.constants["beta"] == pytest.approx(r2.constants["beta"], rel=1e-12)


@pytest.mark.parametrize("spec", [power(1.0), log_power(2)], ids=lambda s: s.describe())
def test_monotone_in_range(spec):
    # same samples-per-decade density on the sub-range
    full = check_conditions(spec, (0.1, 100), samples=301)
    sub = check_conditions(spec, (1, 10), samples=101)
    assert full.passed and sub.passed


@pytest.mark.parametrize("kw", [dict(K_range=(1, 0.5)), dict(K_range=(0, 1)), dict(samples=10)])
def test_bad_arguments(kw):
    with pytest.raises(ValueError):
        check_conditions(power(1.0), **kw)


def test_report_json_round_trip():
    r = check_conditions(power(0.5), (0.1, 100))
    doc = json.loads(r.to_json())
    assert doc["verdicts"]["ii"] == "fail"
    assert doc["passed"] is False
    for key in ("constants", "observed", "K_range", "samples", "n", "K_threshold_iv", "radii_box", "speed"):
        assert key in doc
