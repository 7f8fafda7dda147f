import math

import numpy as np
import pytest
from scipy import stats

from fracbd.errors import (
    DegenerateSlopeError,
    DomainError,
    InsufficientDataError,
    InverseDomainError,
    SingularDesignError,
)
from fracbd.schemas import (
    ErrorVariance,
    ModelCase,
    NuRoute,
    ProcessType,
    RateVariance,
    RegressionData,
    RegressionFit,
    StudyConfig,
)
from fracbd.services import estimation
from fracbd.services.estimation import (
    EULER_GAMMA,
    build_design,
    ci_bootstrap_rate,
    ci_ls,
    ci_res,
    design_from_times,
    estimate,
    estimate_general,
    ls_covariance,
    ls_fit,
    point_estimates,
    residual_table,
)
from fracbd.services.processes import simulate_linear_death, simulate_sublinear_death, simulate_yule
from fracbd.services.variates import RandomSource


def _fit(nu: float, n: int, slope: float = -2.0, intercept: float = -EULER_GAMMA) -> RegressionFit:
    """残差方差恰好使 ν̂_res = nu 的拟合结果。"""
    sigma2 = math.pi ** 2 * (1.0 / (3.0 * nu ** 2) - 1.0 / 6.0)
    return RegressionFit(
        intercept=intercept,
        slope=slope,
        residuals=[0.0] * n,
        fitted=[0.0] * n,
        leverages=[2.0 / n] * n,
        sigma2_u=sigma2,
        s_xx=15.0,
        x_bar=2.5,
        n=n,
    )


def _noisy_data(seed: int = 3, n: int = 40) -> RegressionData:
    generator = np.random.default_rng(seed)
    x = np.log(np.arange(1, n + 1))
    y = -0.4 - 1.6 * x + generator.normal(scale=1.2, size=n)
    return RegressionData(x=x.tolist(), y=y.tolist())


# --- Designs ---
def test_yule_design():
    d = design_from_times([0.5, 0.2, 0.1])
    np.testing.assert_allclose(d.x, [0.0, math.log(2), math.log(3)])
    np.testing.assert_allclose(d.y, np.log([0.5, 0.2, 0.1]))


def test_linear_death_design_keeps_last_row():
    d = design_from_times([0.1, 0.2, 0.3, 0.4], ProcessType.LINEAR_DEATH)
    np.testing.assert_allclose(d.x, np.log([4, 3, 2, 1]))


def test_sublinear_design():
    d = design_from_times([0.1, 0.2, 0.3], ProcessType.SUBLINEAR_DEATH)
    np.testing.assert_allclose(d.x, np.log([1, 2, 3]))


def test_start_index_shifts_regressor():
    d = design_from_times([0.1, 0.2, 0.3], start_index=2)
    np.testing.assert_allclose(d.x, np.log([2, 3, 4]))


def test_design_from_simulated_paths(rng):
    for path in (simulate_yule(0.5, 1.0, 10, rng), simulate_linear_death(0.5, 1.0, 6, rng), simulate_sublinear_death(0.5, 1.0, 6, rng)):
        assert build_design(path).n == path.n_events


def test_design_rejects_bad_times():
    with pytest.raises(DomainError):
        design_from_times([0.1, 0.0, 0.3])
    with pytest.raises(InsufficientDataError):
        design_from_times([0.1, 0.3])
    with pytest.raises(DomainError):
        design_from_times([0.1, 0.2, 0.3], ProcessType.LINEAR_DEATH, n0=2)


# --- ls_fit ---
def test_exact_line():
    f = ls_fit(RegressionData(x=[0, 1, 2], y=[1, 3, 5]))
    assert f.slope == pytest.approx(2.0)
    assert f.intercept == pytest.approx(1.0)
    np.testing.assert_allclose(f.residuals, 0.0, atol=1e-12)
    assert f.sigma2_u == pytest.approx(0.0, abs=1e-24)


def test_two_points_rejected():
    with pytest.raises(InsufficientDataError):
        ls_fit(RegressionData(x=[0, 1], y=[1, 2]))


def test_constant_regressor_rejected():
    with pytest.raises(SingularDesignError):
        ls_fit(RegressionData(x=[1, 1, 1], y=[1, 2, 3]))


def test_matches_polyfit():
    x = [0.0, 0.6931, 1.0986]
    y = [0.2, -0.9, -1.1]
    f = ls_fit(RegressionData(x=x, y=y))
    slope, intercept = np.polyfit(x, y, 1)
    assert f.slope == pytest.approx(slope, rel=1e-10)
    assert f.intercept == pytest.approx(intercept, rel=1e-10)


def test_residual_and_leverage_identities():
    f = ls_fit(_noisy_data())
    assert sum(f.residuals) == pytest.approx(0.0, abs=1e-10 * f.n)
    assert sum(f.leverages) == pytest.approx(2.0, abs=1e-10)


# --- Point estimates ---
def test_point_estimates_from_exact_relation():
    f = _fit(0.5, 20, slope=-2.0, intercept=-EULER_GAMMA)
    est = point_estimates(f)
    assert est.nu_ls == pytest.approx(0.5)
    assert est.rate_ls == pytest.approx(1.0)
    assert est.nu_res == pytest.approx(0.5, rel=1e-12)


def test_exact_line_recovery():
    a0, a1 = 0.7, -1.25
    x = np.log(np.arange(1, 11))
    f = ls_fit(RegressionData(x=x.tolist(), y=(a0 + a1 * x).tolist()))
    est = point_estimates(f)
    assert est.nu_ls == pytest.approx(-1.0 / a1, rel=1e-12)
    assert est.rate_ls == pytest.approx(math.exp((a0 + EULER_GAMMA) / a1), rel=1e-12)


def test_zero_residual_variance_gives_root_two():
    f = ls_fit(RegressionData(x=[0, 1, 2], y=[1, -1, -3]))
    est = point_estimates(f)
    assert est.nu_res == pytest.approx(math.sqrt(2.0), rel=1e-10)
    assert any("ν̂_res" in w for w in est.warnings)


def test_zero_slope_is_degenerate():
    f = ls_fit(RegressionData(x=[0, 1, 2], y=[1, 1, 1]))
    with pytest.raises(DegenerateSlopeError):
        point_estimates(f)


def test_positive_slope_warns():
    est = point_estimates(ls_fit(RegressionData(x=[0, 1, 2], y=[0, 1.1, 1.9])))
    assert est.nu_ls < 0
    assert est.warnings


# --- LS intervals ---
def test_ci_ls_hand_formula():
    f = ls_fit(_noisy_data())
    est = point_estimates(f)
    z = stats.norm.ppf(0.975)
    sigma2 = math.pi ** 2 * (1 / (3 * est.nu_ls ** 2) - 1 / 6)
    half_nu = z * math.sqrt(sigma2) * est.nu_ls ** 2 / math.sqrt(f.s_xx)
    centred = f.x_bar + math.log(est.rate_ls)
    half_rate = z * math.sqrt(sigma2) * est.nu_ls * est.rate_ls * math.sqrt(1 / f.n + centred ** 2 / f.s_xx)
    out = ci_ls(f)
    assert out.nu == pytest.approx((est.nu_ls - half_nu, est.nu_ls + half_nu), rel=1e-12)
    assert out.rate == pytest.approx((est.rate_ls - half_rate, est.rate_ls + half_rate), rel=1e-12)


def test_ls_covariance_entries():
    f = _fit(0.5, 100)
    cov = ls_covariance(f, 0.5, 0.5, 2.0)
    centred = f.x_bar + math.log(0.5)
    assert cov[0, 0] == pytest.approx(2.0 * 0.5 ** 4 / 15.0)
    assert cov[0, 1] == pytest.approx(2.0 * 0.5 * 0.5 ** 3 * centred / 15.0)
    assert cov[1, 1] == pytest.approx(2.0 * 0.25 ** 2 * (0.01 + centred ** 2 / 15.0))
    assert cov[0, 1] == cov[1, 0]


def test_ci_ls_zero_variance_gives_point():
    f = ls_fit(RegressionData(x=[0, 1, 2, 3], y=[1, -1, -3, -5]))
    out = ci_ls(f, variance=ErrorVariance.RESIDUAL)
    est = point_estimates(f)
    assert out.nu == pytest.approx((est.nu_ls, est.nu_ls))
    assert out.rate == pytest.approx((est.rate_ls, est.rate_ls))


def test_ci_ls_unavailable_when_variance_negative():
    # ν̂_ls = 2 > √2 时误差方差估计为负
    f = _fit(0.5, 50, slope=-0.5)
    out = ci_ls(f)
    assert out.nu is None and out.rate is None
    assert out.warnings


def test_ci_ls_alternative_variances_differ():
    f = ls_fit(_noisy_data())
    widths = {
        mode: ci_ls(f, variance=mode).nu[1] - ci_ls(f, variance=mode).nu[0]
        for mode in ErrorVariance
    }
    assert widths[ErrorVariance.NU_LS] != pytest.approx(widths[ErrorVariance.RESIDUAL], rel=1e-9)


def test_residual_variance_is_plug_in_at_nu_res():
    f = ls_fit(_noisy_data())
    assert estimation.error_variance(point_estimates(f).nu_res) == pytest.approx(f.sigma2_u, rel=1e-12)


# --- Residual intervals ---
def test_ci_res_documented_widths():
    out = ci_res(_fit(0.5, 100))
    assert out.nu[1] - out.nu[0] == pytest.approx(0.16083, abs=5e-5)
    assert (out.nu[1] - out.nu[0]) / 2 == pytest.approx(0.0804, abs=1e-4)
    narrow = ci_res(_fit(0.1, 500))
    assert narrow.nu[1] - narrow.nu[0] == pytest.approx(0.0157, abs=1e-4)


def test_ci_res_rate_hand_formula():
    f = _fit(0.5, 100, intercept=-1.3)
    est = point_estimates(f)
    z = stats.norm.ppf(0.975)
    v_nu = 0.25 * (32 - 20 * 0.25 - 0.0625) / 4000
    shifted = -1.3 + EULER_GAMMA
    var_a0 = f.sigma2_u * (1 / 100 + 2.5 ** 2 / 15.0)
    delta_half = z * est.rate_res * math.sqrt(shifted ** 2 * v_nu + 0.25 * var_a0)
    display_half = z * est.rate_res * math.sqrt(v_nu + 0.25 * var_a0)
    display = ci_res(f).rate
    delta = ci_res(f, rate_variance=RateVariance.DELTA).rate
    assert delta == pytest.approx((est.rate_res - delta_half, est.rate_res + delta_half), rel=1e-12)
    assert display == pytest.approx((est.rate_res - display_half, est.rate_res + display_half), rel=1e-12)


def test_rate_interval_defaults_to_display_formula():
    d = _noisy_data()
    display = ci_res(ls_fit(d), rate_variance=RateVariance.DISPLAY).rate
    assert estimate(d).ci_rate_res == pytest.approx(display, rel=1e-12)
    assert StudyConfig(true_nu=0.5, true_rate=0.5, n_list=[15]).rate_variance is RateVariance.DISPLAY


def test_ci_res_negative_radicand():
    f = ls_fit(RegressionData(x=[0, 1, 2, 3], y=[1, -1, -3, -5]))
    out = ci_res(f)
    assert out.nu is None and out.rate is None
    assert out.warnings


def test_ci_res_shrinks_with_n():
    widths = [ci_res(_fit(0.5, n)).nu for n in (100, 1000, 100_000)]
    spans = [hi - lo for lo, hi in widths]
    assert spans[0] > spans[1] > spans[2]
    assert spans[2] < 0.01


def test_intervals_nest_under_alpha():
    f = ls_fit(_noisy_data())
    for fn in (ci_ls, ci_res):
        wide, narrow = fn(f, 0.01), fn(f, 0.05)
        for a, b in ((wide.nu, narrow.nu), (wide.rate, narrow.rate)):
            assert a[0] <= b[0] and b[1] <= a[1]


def test_invalid_alpha():
    with pytest.raises(DomainError):
        ci_res(_fit(0.5, 100), alpha=1.5)


# --- Bootstrap ---
def test_bootstrap_is_deterministic():
    d = _noisy_data()
    f = ls_fit(d)
    a = ci_bootstrap_rate(f, d, 0.05, 500, RandomSource(8, 0))
    b = ci_bootstrap_rate(f, d, 0.05, 500, RandomSource(8, 0))
    assert a == b
    assert a[0] < point_estimates(f).rate_res < a[1]


def test_bootstrap_zero_residuals():
    d = RegressionData(x=[0, 1, 2, 3], y=[1, -1, -3, -5])
    f = ls_fit(d)
    lo, hi = ci_bootstrap_rate(f, d, 0.05, 200, RandomSource(1))
    assert lo == hi == pytest.approx(point_estimates(f).rate_res)


def test_bootstrap_minimum_resamples():
    d = _noisy_data()
    with pytest.raises(DomainError):
        ci_bootstrap_rate(ls_fit(d), d, 0.05, 50, RandomSource(1))


# --- Full report ---
def test_estimate_report_small_sample_warning():
    d = design_from_times(np.exp(_noisy_data(n=12).y))
    report = estimate(d, n_boot=200, rng=RandomSource(4))
    assert report.n == 12
    assert any("n = 12" in w for w in report.warnings)
    assert report.ci_rate_boot is not None
    assert report.bootstrap_b == 200


def test_estimate_truncates_for_presentation():
    d = _noisy_data(n=16)
    raw = estimate(d)
    clipped = estimate(d, truncate_negative=True)
    for name in ("ci_nu_ls", "ci_rate_ls", "ci_nu_res", "ci_rate_res"):
        interval = getattr(clipped, name)
        if interval is not None:
            assert interval[0] >= 0
            assert interval[1] == pytest.approx(max(getattr(raw, name)[1], 0.0))


def test_residual_table_columns():
    d = _noisy_data(n=5)
    table = residual_table(d, ls_fit(d))
    assert list(table.columns) == ["index", "x", "y", "fitted", "residual", "leverage"]
    assert table["index"].tolist() == [1, 2, 3, 4, 5]


def test_consistency_on_long_path():
    # 单条路径 ν̂_ls 的标准差约 0.008，取四条独立路径的平均
    fits = [
        point_estimates(ls_fit(build_design(simulate_yule(0.5, 0.5, 10_000, RandomSource(2718, stream)))))
        for stream in range(4)
    ]
    assert np.mean([e.nu_ls for e in fits]) == pytest.approx(0.5, abs=0.02)
    assert np.mean([e.nu_res for e in fits]) == pytest.approx(0.5, abs=0.02)


# --- General models ---
def test_general_additive_reproduces_yule():
    times = np.exp(_noisy_data(n=30).y)
    yule = estimate(design_from_times(times))
    general = estimate_general(ModelCase.ADDITIVE, math.log, math.exp, times, nu_route=NuRoute.LS)
    assert general.nu_ls == pytest.approx(yule.nu_ls, rel=1e-12)
    assert general.rate_ls == pytest.approx(yule.rate_ls, rel=1e-12)
    assert general.rate_res == pytest.approx(yule.rate_res, rel=1e-12)
    assert general.selection.theta == pytest.approx(yule.rate_ls, rel=1e-12)


def test_general_additive_intervals_match_yule():
    times = np.exp(_noisy_data(n=30).y)
    yule = estimate(design_from_times(times))
    general = estimate_general(ModelCase.ADDITIVE, math.log, math.exp, times)
    assert general.ci_nu_ls == pytest.approx(yule.ci_nu_ls, rel=1e-12)
    assert general.ci_nu_res == pytest.approx(yule.ci_nu_res, rel=1e-12)
    # m 尺度上的对称区间经 exp 映射后，对数半宽等于 Yule 区间的相对半宽
    lo, hi = general.ci_rate_res
    yule_lo, yule_hi = yule.ci_rate_res
    assert math.log(hi / lo) / 2 == pytest.approx((yule_hi - yule_lo) / (2 * yule.rate_res), rel=1e-10)
    assert lo < general.rate_res < hi
    lo_ls, hi_ls = general.ci_rate_ls
    assert lo_ls < general.rate_ls < hi_ls


def test_general_multiplicative_intervals():
    generator = np.random.default_rng(11)
    j = np.arange(1, 41)
    times = np.exp(-EULER_GAMMA - 1.5 * j + generator.normal(scale=1.6, size=j.size))
    report = estimate_general(ModelCase.MULTIPLICATIVE, float, math.exp, times, alpha=0.1)
    assert report.ci_nu_ls is None and report.ci_rate_ls is None
    lo, hi = report.ci_nu_res
    assert lo < report.nu_res < hi
    lo, hi = report.ci_rate_res
    assert 0 < lo < report.rate_res < hi
    wider = estimate_general(ModelCase.MULTIPLICATIVE, float, math.exp, times, alpha=0.01)
    assert wider.ci_rate_res[0] < lo and hi < wider.ci_rate_res[1]


def test_general_additive_noiseless_recovery():
    nu, theta = 0.6, 1.4
    j = np.arange(1, 21)
    times = np.exp(-(EULER_GAMMA + theta / nu) - j / nu)
    report = estimate_general(ModelCase.ADDITIVE, float, lambda m: m, times, nu_route=NuRoute.LS)
    assert report.selection.nu == pytest.approx(nu, rel=1e-10)
    assert report.selection.theta == pytest.approx(theta, rel=1e-10)


def test_general_multiplicative_with_known_index():
    nu, theta = 0.5, 2.0
    j = np.arange(1, 21)
    times = np.exp(-EULER_GAMMA - (math.log(theta) / nu) * j)
    report = estimate_general(ModelCase.MULTIPLICATIVE, float, math.exp, times, nu_known=nu)
    assert report.slope == pytest.approx(-math.log(theta) / nu, rel=1e-10)
    assert report.selection.nu_route is NuRoute.KNOWN
    assert report.selection.theta == pytest.approx(theta, rel=1e-10)


def test_general_multiplicative_rejects_ls_route():
    times = np.exp(_noisy_data(n=10).y)
    with pytest.raises(DomainError):
        estimate_general(ModelCase.MULTIPLICATIVE, float, math.exp, times, nu_route=NuRoute.LS)


def test_general_inverse_failure():
    times = np.exp(_noisy_data(n=10).y)
    with pytest.raises(InverseDomainError):
        estimate_general(ModelCase.ADDITIVE, math.log, lambda m: math.log(-abs(m) - 1.0), times)


def test_general_constant_regressor():
    with pytest.raises(InsufficientDataError):
        estimate_general(ModelCase.ADDITIVE, lambda j: 1.0, math.exp, [0.1, 0.2, 0.3])


@pytest.mark.slow
def test_delta_method_covariance_matches_replications():
    nu, lam, n = 0.5, 0.5, 500
    draws = []
    for rep in range(2000):
        f = ls_fit(build_design(simulate_yule(nu, lam, n, RandomSource(77, rep))))
        est = point_estimates(f)
        draws.append((est.nu_ls, est.rate_ls))
    empirical = np.cov(np.array(draws).T)
    f = ls_fit(build_design(simulate_yule(nu, lam, n, RandomSource(77, 0))))
    theory = ls_covariance(f, nu, lam, estimation.error_variance(nu))
    assert empirical[0, 0] == pytest.approx(theory[0, 0], rel=0.15)
    assert empirical[1, 1] == pytest.approx(theory[1, 1], rel=0.15)
    assert empirical[0, 1] == pytest.approx(theory[0, 1], rel=0.15)
