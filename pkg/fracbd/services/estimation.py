# 作用: 对数事件间隔的线性回归估计: 点估计 (LS / 残差法)、渐近区间与残差自助法区间。

import logging
import math
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from ..errors import (
    DegenerateSlopeError,
    DomainError,
    InsufficientDataError,
    InverseDomainError,
    SingularDesignError,
)
from ..schemas import (
    ErrorVariance,
    EstimateReport,
    GeneralSelection,
    Interval,
    IntervalEstimates,
    ModelCase,
    NuRoute,
    PointEstimates,
    ProcessType,
    RateVariance,
    RegressionData,
    RegressionFit,
    SamplePath,
)
from .variates import RandomSource

logger = logging.getLogger(__name__)

EULER_GAMMA = float(np.euler_gamma)
# 小于该样本量时区间估计给出警告，蒙特卡洛区间研究直接拒绝
SMALL_SAMPLE = 15
MIN_BOOTSTRAP = 100


# --- 回归数据 ---
def _positive_times(times: Sequence[float]) -> np.ndarray:
    values = np.asarray(times, dtype=float)
    if values.ndim != 1 or values.size < 3:
        raise InsufficientDataError("至少需要 3 个事件间隔")
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise DomainError("事件间隔必须为有限正数 (ln 0 无定义)")
    return values


def design_from_times(
    times: Sequence[float],
    kind: ProcessType = ProcessType.YULE,
    start_index: int = 1,
    n0: Optional[int] = None,
) -> RegressionData:
    """由事件间隔构造回归数据 y_j = ln τ_j。

    Yule 与次线性死亡: x_j = ln(j + start_index - 1)；线性死亡: x_j = ln(n0 - j + 1)。
    """
    values = _positive_times(times)
    count = values.size
    if start_index < 1:
        raise DomainError("start_index 至少为 1")
    j = np.arange(count, dtype=float)
    if kind is ProcessType.LINEAR_DEATH:
        n0 = count if n0 is None else n0
        if n0 < count:
            raise DomainError(f"线性死亡过程的事件数 {count} 超过 n0 = {n0}")
        x = np.log(n0 - j)
    else:
        x = np.log(j + start_index)
    return RegressionData(x=x.tolist(), y=np.log(values).tolist())


def build_design(path: SamplePath) -> RegressionData:
    return design_from_times(path.inter_times, path.process.kind, n0=path.process.n0)


# --- 最小二乘拟合 ---
def ls_fit(d: RegressionData) -> RegressionFit:
    x = np.asarray(d.x, dtype=float)
    y = np.asarray(d.y, dtype=float)
    if x.shape != y.shape:
        raise DomainError("x 与 y 长度不一致")
    n = y.size
    if n < 3:
        raise InsufficientDataError(f"至少需要 3 个观测，收到 {n}")
    x_bar = float(x.mean())
    dx = x - x_bar
    s_xx = float(dx @ dx)
    if s_xx <= 0:
        raise SingularDesignError("回归变量只有一个取值")

    slope = float(dx @ y / s_xx)
    intercept = float(y.mean() - slope * x_bar)
    fitted = intercept + slope * x
    residuals = y - fitted
    return RegressionFit(
        intercept=intercept,
        slope=slope,
        residuals=residuals.tolist(),
        fitted=fitted.tolist(),
        leverages=(1.0 / n + dx ** 2 / s_xx).tolist(),
        sigma2_u=float(residuals @ residuals / (n - 2)),
        s_xx=s_xx,
        x_bar=x_bar,
        n=n,
    )


def _nu_from_residual_variance(sigma2_u: float) -> float:
    # Var(ln T) = π²(1/(3ν²) - 1/6)
    return 1.0 / math.sqrt(3.0 * (sigma2_u / math.pi ** 2 + 1.0 / 6.0))


def _safe_exp(value: float) -> float:
    with np.errstate(over="ignore"):
        return float(np.exp(value))


def point_estimates(f: RegressionFit) -> PointEstimates:
    if f.slope == 0:
        raise DegenerateSlopeError("斜率为 0，ν̂_ls 无定义")
    warnings: List[str] = []
    nu_ls = -1.0 / f.slope
    rate_ls = _safe_exp((f.intercept + EULER_GAMMA) / f.slope)
    nu_res = _nu_from_residual_variance(f.sigma2_u)
    rate_res = _safe_exp(-nu_res * (f.intercept + EULER_GAMMA))

    if not 0 < nu_ls <= 1:
        warnings.append(f"ν̂_ls = {nu_ls:.6g} 不在 (0, 1] 内")
    if nu_res > 1:
        warnings.append(f"ν̂_res = {nu_res:.6g} > 1 (残差方差小于 ν = 1 的理论值)")
    for name, value in (("rate_ls", rate_ls), ("rate_res", rate_res)):
        if not math.isfinite(value):
            warnings.append(f"{name} 溢出")
    return PointEstimates(nu_ls=nu_ls, rate_ls=rate_ls, nu_res=nu_res, rate_res=rate_res, warnings=warnings)


# --- 渐近区间 ---
def error_variance(nu: float) -> float:
    """ln T 的误差方差 σ²_ε = π²(1/(3ν²) - 1/6)；ν > √2 时为负。"""
    return math.pi ** 2 * (1.0 / (3.0 * nu ** 2) - 1.0 / 6.0)


def ls_covariance(f: RegressionFit, nu: float, rate: float, sigma2: float) -> np.ndarray:
    """(ν̂_ls, λ̂_ls) 的渐近协方差矩阵 (delta 方法)。"""
    centred = f.x_bar + math.log(rate)
    c_nu = nu ** 4 / f.s_xx
    c_cross = rate * nu ** 3 * centred / f.s_xx
    c_rate = (nu * rate) ** 2 * (1.0 / f.n + centred ** 2 / f.s_xx)
    return sigma2 * np.array([[c_nu, c_cross], [c_cross, c_rate]])


def _z(alpha: float) -> float:
    if not 0 < alpha < 1:
        raise DomainError(f"alpha 必须在 (0, 1) 内，收到 {alpha}")
    return float(stats.norm.ppf(1.0 - alpha / 2.0))


def ci_ls(f: RegressionFit, alpha: float = 0.05, variance: ErrorVariance = ErrorVariance.NU_LS) -> IntervalEstimates:
    z = _z(alpha)
    est = point_estimates(f)
    if variance is ErrorVariance.NU_LS:
        sigma2 = error_variance(est.nu_ls)
    else:
        sigma2 = f.sigma2_u

    if not (math.isfinite(sigma2) and sigma2 >= 0):
        return IntervalEstimates(warnings=[f"误差方差估计 {sigma2:.6g} 非正，LS 区间不可用"])

    warnings: List[str] = []
    half_nu = z * math.sqrt(sigma2) * est.nu_ls ** 2 / math.sqrt(f.s_xx)
    nu_interval = (est.nu_ls - half_nu, est.nu_ls + half_nu)
    rate_interval = None
    if math.isfinite(est.rate_ls) and est.rate_ls > 0:
        cov = ls_covariance(f, est.nu_ls, est.rate_ls, sigma2)
        half_rate = z * math.sqrt(cov[1, 1])
        rate_interval = (est.rate_ls - half_rate, est.rate_ls + half_rate)
    else:
        warnings.append("λ̂_ls 非有限，LS 强度区间不可用")
    return IntervalEstimates(nu=nu_interval, rate=rate_interval, warnings=warnings)


def nu_res_variance(nu: float, n: int) -> float:
    """ν̂_res 的渐近方差 ν²(32 - 20ν² - ν⁴)/(40n)；ν 较大时可能为负。"""
    return nu ** 2 * (32.0 - 20.0 * nu ** 2 - nu ** 4) / (40.0 * n)


def ci_res(f: RegressionFit, alpha: float = 0.05, rate_variance: RateVariance = RateVariance.DISPLAY) -> IntervalEstimates:
    z = _z(alpha)
    est = point_estimates(f)
    nu = est.nu_res
    v_nu = nu_res_variance(nu, f.n)
    if v_nu < 0:
        return IntervalEstimates(warnings=[f"ν̂_res = {nu:.6g} 时方差根号内为负，残差法区间不可用"])

    half_nu = z * math.sqrt(v_nu)
    shifted = f.intercept + EULER_GAMMA
    var_intercept = f.sigma2_u * (1.0 / f.n + f.x_bar ** 2 / f.s_xx)
    # display 不含 (a0+γ)² 因子；delta 为 λ = exp(-ν(a0+γ)) 的完整一阶展开
    weight = shifted ** 2 if rate_variance is RateVariance.DELTA else 1.0
    var_rate = est.rate_res ** 2 * (weight * v_nu + nu ** 2 * var_intercept)
    half_rate = z * math.sqrt(var_rate)
    return IntervalEstimates(
        nu=(nu - half_nu, nu + half_nu),
        rate=(est.rate_res - half_rate, est.rate_res + half_rate),
    )


# --- 残差自助法 ---
def ci_bootstrap_rate(
    f: RegressionFit,
    d: RegressionData,
    alpha: float = 0.05,
    n_boot: int = 500,
    rng: Optional[RandomSource] = None,
) -> Interval:
    """λ̂_res 的残差自助法百分位区间 (固定回归变量，杠杆修正残差)。"""
    if n_boot < MIN_BOOTSTRAP:
        raise DomainError(f"自助法次数至少为 {MIN_BOOTSTRAP}，收到 {n_boot}")
    if rng is None:
        raise DomainError("自助法需要随机数源")
    _z(alpha)

    x = np.asarray(d.x, dtype=float)
    y = np.asarray(d.y, dtype=float)
    residuals = np.asarray(f.residuals)
    rate = _safe_exp(-_nu_from_residual_variance(f.sigma2_u) * (f.intercept + EULER_GAMMA))
    if np.max(np.abs(residuals)) <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        return (rate, rate)

    adjusted = residuals / np.sqrt(1.0 - np.asarray(f.leverages))
    draws = rng.generator.choice(adjusted, size=(n_boot, f.n), replace=True)
    y_star = np.asarray(f.fitted) + draws

    dx = x - f.x_bar
    slope = y_star @ dx / f.s_xx
    intercept = y_star.mean(axis=1) - slope * f.x_bar
    resid_star = y_star - intercept[:, None] - slope[:, None] * x
    sigma2 = (resid_star ** 2).sum(axis=1) / (f.n - 2)
    nu_star = 1.0 / np.sqrt(3.0 * (sigma2 / np.pi ** 2 + 1.0 / 6.0))
    with np.errstate(over="ignore"):
        rate_star = np.exp(-nu_star * (intercept + EULER_GAMMA))
    lo, hi = np.quantile(rate_star, [alpha / 2.0, 1.0 - alpha / 2.0])
    return (float(lo), float(hi))


# --- 完整估计 ---
def _clip(interval: Optional[Interval]) -> Optional[Interval]:
    if interval is None:
        return None
    return (max(interval[0], 0.0), max(interval[1], 0.0))


def estimate(
    d: RegressionData,
    alpha: float = 0.05,
    n_boot: Optional[int] = None,
    rng: Optional[RandomSource] = None,
    variance: ErrorVariance = ErrorVariance.NU_LS,
    rate_variance: RateVariance = RateVariance.DISPLAY,
    truncate_negative: bool = False,
    process: str = ProcessType.YULE.value,
) -> EstimateReport:
    """一次给出点估计、LS 区间、残差法区间，以及可选的自助法区间。"""
    fit = ls_fit(d)
    points = point_estimates(fit)
    warnings = list(points.warnings)
    if fit.n < SMALL_SAMPLE:
        warnings.append(f"n = {fit.n} < {SMALL_SAMPLE}，区间估计的渐近近似不可靠")

    ls = ci_ls(fit, alpha, variance)
    res = ci_res(fit, alpha, rate_variance)
    warnings += ls.warnings + res.warnings
    boot = ci_bootstrap_rate(fit, d, alpha, n_boot, rng) if n_boot else None

    intervals = {
        "ci_nu_ls": ls.nu,
        "ci_rate_ls": ls.rate,
        "ci_nu_res": res.nu,
        "ci_rate_res": res.rate,
        "ci_rate_boot": boot,
    }
    if truncate_negative:
        intervals = {name: _clip(value) for name, value in intervals.items()}

    logger.info("估计完成: n=%d, ν̂_ls=%.6g, ν̂_res=%.6g", fit.n, points.nu_ls, points.nu_res)
    return EstimateReport(
        process=process,
        n=fit.n,
        alpha=alpha,
        intercept=fit.intercept,
        slope=fit.slope,
        sigma2_u=fit.sigma2_u,
        nu_ls=points.nu_ls,
        rate_ls=points.rate_ls,
        nu_res=points.nu_res,
        rate_res=points.rate_res,
        bootstrap_b=n_boot,
        warnings=warnings,
        **intervals,
    )


def residual_table(d: RegressionData, f: RegressionFit) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "index": np.arange(1, f.n + 1),
            "x": d.x,
            "y": d.y,
            "fitted": f.fitted,
            "residual": f.residuals,
            "leverage": f.leverages,
        }
    )


# --- 一般模型 ---
def _invert(m_inverse: Callable[[float], float], value: float) -> float:
    try:
        theta = float(m_inverse(value))
    except (ValueError, ArithmeticError) as exc:
        raise InverseDomainError(f"m_inverse({value:.6g}) 失败: {exc}") from exc
    if not math.isfinite(theta):
        raise InverseDomainError(f"m_inverse({value:.6g}) 返回非有限值")
    return theta


def _m_interval(
    m_hat: float, var_m: float, z: float, m_inverse: Callable[[float], float], warnings: List[str]
) -> Optional[Interval]:
    half = z * math.sqrt(var_m)
    try:
        lo, hi = _invert(m_inverse, m_hat - half), _invert(m_inverse, m_hat + half)
    except InverseDomainError as exc:
        warnings.append(f"强度区间不可用: {exc}")
        return None
    return (min(lo, hi), max(lo, hi))


def estimate_general(
    case: ModelCase,
    q: Callable[[int], float],
    m_inverse: Callable[[float], float],
    times: Sequence[float],
    alpha: float = 0.05,
    nu_route: Optional[NuRoute] = None,
    nu_known: Optional[float] = None,
    start_index: int = 1,
    rate_variance: RateVariance = RateVariance.DISPLAY,
) -> EstimateReport:
    """一般强度 θ_j 的估计。

    additive:       ln θ_j = m(θ) + q(j)，回归 ln τ_j 对 q(j)，ν̂ = -1/斜率 或残差法；
    multiplicative: ln θ_j = m(θ)·q(j)，截距理论上为 -γ，ν 只能由残差法 (或已知值) 给出。

    强度区间先在 m 尺度上用 delta 法构造，再经单调的 m_inverse 映射回 θ。
    """
    values = _positive_times(times)
    x = np.array([q(int(j)) for j in range(start_index, start_index + values.size)], dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("q(j) 必须为有限值")
    d = RegressionData(x=x.tolist(), y=np.log(values).tolist())
    if np.ptp(x) == 0:
        raise InsufficientDataError("q(j) 只有一个取值")
    fit = ls_fit(d)
    nu_res = _nu_from_residual_variance(fit.sigma2_u)
    warnings: List[str] = []

    if nu_known is not None:
        if not 0 < nu_known <= 1:
            raise DomainError(f"已知 ν 必须在 (0, 1] 内，收到 {nu_known}")
        route = NuRoute.KNOWN
    else:
        route = nu_route or NuRoute.RESIDUAL
        if route is NuRoute.KNOWN:
            raise DomainError("nu_route = known 需要同时给出 nu_known")

    z = _z(alpha)
    v_nu = nu_res_variance(nu_res, fit.n)
    var_intercept = fit.sigma2_u * (1.0 / fit.n + fit.x_bar ** 2 / fit.s_xx)
    intervals = {}
    if v_nu >= 0:
        half_nu = z * math.sqrt(v_nu)
        intervals["ci_nu_res"] = (nu_res - half_nu, nu_res + half_nu)
    else:
        warnings.append(f"ν̂_res = {nu_res:.6g} 时方差根号内为负，残差法区间不可用")

    nu_ls = rate_ls = None
    if case is ModelCase.ADDITIVE:
        if fit.slope == 0:
            raise DegenerateSlopeError("斜率为 0，ν̂_ls 无定义")
        nu_ls = -1.0 / fit.slope
        shifted = fit.intercept + EULER_GAMMA
        rate_ls = _invert(m_inverse, -nu_ls * shifted)
        rate_res = _invert(m_inverse, -nu_res * shifted)
        chosen = {NuRoute.RESIDUAL: nu_res, NuRoute.LS: nu_ls, NuRoute.KNOWN: nu_known}[route]
        m_hat = -chosen * shifted
        sigma2 = error_variance(nu_ls)
        if sigma2 >= 0:
            half_ls = z * math.sqrt(sigma2) * nu_ls ** 2 / math.sqrt(fit.s_xx)
            intervals["ci_nu_ls"] = (nu_ls - half_ls, nu_ls + half_ls)
            # m̂_ls = (a0+γ)/a1 的 delta 方差
            var_m_ls = sigma2 * nu_ls ** 2 * (1.0 / fit.n + (fit.x_bar - nu_ls * shifted) ** 2 / fit.s_xx)
            intervals["ci_rate_ls"] = _m_interval(-nu_ls * shifted, var_m_ls, z, m_inverse, warnings)
        else:
            warnings.append(f"误差方差估计 {sigma2:.6g} 非正，LS 区间不可用")
        if v_nu >= 0:
            weight = shifted ** 2 if rate_variance is RateVariance.DELTA else 1.0
            var_m_res = weight * v_nu + nu_res ** 2 * var_intercept
            intervals["ci_rate_res"] = _m_interval(-nu_res * shifted, var_m_res, z, m_inverse, warnings)
    else:
        if route is NuRoute.LS:
            raise DomainError("乘法模型中斜率不识别 ν，不能使用 ls")
        rate_res = _invert(m_inverse, -nu_res * fit.slope)
        chosen = nu_res if route is NuRoute.RESIDUAL else nu_known
        m_hat = -chosen * fit.slope
        se_intercept = math.sqrt(fit.sigma2_u * (1.0 / fit.n + fit.x_bar ** 2 / fit.s_xx))
        if abs(fit.intercept + EULER_GAMMA) > max(3.0 * se_intercept, 1e-8):
            warnings.append(f"截距 {fit.intercept:.6g} 与理论值 -γ 相差较大，乘法模型可能不合适")
        if v_nu >= 0:
            weight = fit.slope ** 2 if rate_variance is RateVariance.DELTA else 1.0
            var_m_res = weight * v_nu + nu_res ** 2 * fit.sigma2_u / fit.s_xx
            intervals["ci_rate_res"] = _m_interval(-nu_res * fit.slope, var_m_res, z, m_inverse, warnings)

    if nu_res > 1:
        warnings.append(f"ν̂_res = {nu_res:.6g} > 1")
    selection = GeneralSelection(case=case, nu_route=route, nu=chosen, m_hat=m_hat, theta=_invert(m_inverse, m_hat))
    return EstimateReport(
        process=f"general-{case.value}",
        n=fit.n,
        alpha=alpha,
        intercept=fit.intercept,
        slope=fit.slope,
        sigma2_u=fit.sigma2_u,
        nu_ls=nu_ls,
        rate_ls=rate_ls,
        nu_res=nu_res,
        rate_res=rate_res,
        warnings=warnings,
        selection=selection,
        **intervals,
    )
