# 作用: Mittag-Leffler 函数 E_{δ,β}(x) (实轴) 与 Mittag-Leffler 分布的密度/生存函数。

import logging
import math
from functools import lru_cache
from typing import Optional

import mpmath
import numpy as np
from scipy import integrate, special

from ..config import settings
from ..errors import ConvergenceError, DomainError, MLOverflowError
from ..schemas import MLDistribution, MLParams

logger = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)
_LOG_MAX = math.log(float(np.finfo(float).max))

# 泰勒级数只在 |x| ≤ SERIES_LIMIT 且 |x|^{1/δ} ≤ SERIES_MAX_GROWTH 时尝试
SERIES_LIMIT = 5.0
SERIES_MAX_GROWTH = 30.0
ASYMPTOTIC_TERMS = 2000
# mpmath 扩展精度级数允许的最大十进制位数
MP_MAX_DIGITS = 4000


def _series_length(delta: float, growth: float) -> int:
    # 项的对数约为 u(1 + ln(G/u))，u = δj；取 u = e²G + 100 之后各项可忽略
    return int(math.ceil((math.e ** 2 * growth + 100.0) / delta)) + 16


def _log_series_terms(delta: float, beta: float, y: float) -> np.ndarray:
    """log(y^j / Γ(δj+β))，j = 0, 1, ..."""
    j = np.arange(_series_length(delta, y ** (1.0 / delta)) + 1, dtype=float)
    return j * math.log(y) - special.gammaln(delta * j + beta)


def _series_negative(delta: float, beta: float, y: float):
    """E_{δ,β}(-y) 的交错级数，返回 (和, 各项绝对值之和)。"""
    magnitudes = np.exp(_log_series_terms(delta, beta, y))
    terms = magnitudes.copy()
    terms[1::2] *= -1.0
    return math.fsum(terms), math.fsum(magnitudes)


def _ml_positive(delta: float, beta: float, x: float) -> float:
    growth = x ** (1.0 / delta)
    # E_{δ,β}(x) ~ x^{(1-β)/δ} exp(x^{1/δ}) / δ
    leading = growth + (1.0 - beta) / delta * math.log(x) - math.log(delta)
    if leading > _LOG_MAX + 5.0:
        raise MLOverflowError(f"E_{{{delta},{beta}}}({x}) 超出浮点数范围")
    log_terms = _log_series_terms(delta, beta, x)
    peak = float(log_terms.max())
    log_value = peak + math.log(math.fsum(np.exp(log_terms - peak)))
    if log_value > _LOG_MAX:
        raise MLOverflowError(f"E_{{{delta},{beta}}}({x}) 超出浮点数范围")
    return math.exp(log_value)


def _asymptotic(delta: float, beta: float, y: float, rtol: float) -> Optional[float]:
    """大 y 的渐近展开 Σ_{k≥1} (-1)^{k+1} y^{-k} / Γ(β-δk)。

    截断点与误差都取自不含零点的包络 |1/Γ(z)| ≤ Γ(1-z)/π (z < 1)，
    否则靠近 Γ 极点的项会显得偶然很小。误差估计不满足 rtol 时返回 None。
    """
    k = np.arange(1, ASYMPTOTIC_TERMS + 1, dtype=float)
    arg = beta - delta * k
    log_y = math.log(y)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        log_abs = -k * log_y - special.gammaln(arg)
        finite = np.isfinite(log_abs)
        # 1/Γ 在极点处为 0
        signs = np.where(finite, special.gammasgn(arg), 0.0) * np.where(k % 2 == 1, 1.0, -1.0)
        terms = np.where(finite, signs * np.exp(np.where(finite, log_abs, 0.0)), 0.0)
        envelope = -k * log_y + np.where(
            arg >= 1.0, -special.gammaln(np.maximum(arg, 1.0)), special.gammaln(1.0 - arg) - math.log(math.pi)
        )
    smallest = int(np.argmin(envelope))
    if smallest == 0:
        return None
    value = math.fsum(terms[:smallest])
    error = math.exp(envelope[smallest])
    if delta > 2.0 / 3.0:
        # δ 接近 1 时还有 exp(y^{1/δ} cos(π/δ)) 量级的指数小量
        error += y ** ((1.0 - beta) / delta) * math.exp(y ** (1.0 / delta) * math.cos(math.pi / delta)) / delta
    if value == 0.0 or error > 0.01 * rtol * abs(value):
        return None
    return value


def _integral(delta: float, beta: float, y: float, rtol: float) -> float:
    """β ∈ {1, δ}、0 < δ < 1 时的实轴积分表示。

    E_{δ,β}(-y) = sin(δπ)/(δπ) ∫_0^∞ g(v) exp(-v^{1/δ}) / (v² + 2vy cos(δπ) + y²) dv，
    其中 β = 1 时 g(v) = y，β = δ 时 g(v) = v^{1/δ}。
    """
    cos_dp = math.cos(delta * math.pi)
    inv = 1.0 / delta
    unit_beta = math.isclose(beta, 1.0)

    def integrand(v: float) -> float:
        power = v ** inv
        numerator = y if unit_beta else power
        return numerator * math.exp(-power) / (v * v + 2.0 * v * y * cos_dp + y * y)

    upper = 800.0 ** delta
    candidates = {1.0, y, 0.5 * y, -y * cos_dp}
    points = sorted(p for p in candidates if 0.0 < p < upper)
    value, abserr = integrate.quad(
        integrand, 0.0, upper, points=points, epsabs=0.0, epsrel=0.01 * rtol, limit=500
    )
    if abserr > 100.0 * rtol * abs(value):
        raise ConvergenceError(f"E_{{{delta},{beta}}}(-{y}) 的积分未收敛 (误差估计 {abserr:.3g})")
    return math.sin(delta * math.pi) / (delta * math.pi) * value


def _series_mp(delta: float, beta: float, x: float) -> float:
    """扩展精度级数，用于 β ∉ {1, δ} 且级数与渐近展开都不适用的区间。"""
    growth = abs(x) ** (1.0 / delta)
    digits = int(growth / math.log(10.0)) + 30
    if digits > MP_MAX_DIGITS:
        raise ConvergenceError(f"E_{{{delta},{beta}}}({x}) 需要 {digits} 位精度，超出上限")
    with mpmath.workdps(digits):
        d, b, z = mpmath.mpf(delta), mpmath.mpf(beta), mpmath.mpf(x)
        total = mpmath.mpf(0)
        for j in range(_series_length(delta, growth) + 1):
            total += z ** j * mpmath.rgamma(d * j + b)
        return float(total)


@lru_cache(maxsize=65536)
def _ml_scalar(delta: float, beta: float, x: float, rtol: float) -> float:
    if x == 0.0:
        return float(special.rgamma(beta))
    if delta == 1.0 and beta == 1.0:
        if x > _LOG_MAX:
            raise MLOverflowError(f"exp({x}) 超出浮点数范围")
        return math.exp(x)
    if x > 0.0:
        return _ml_positive(delta, beta, x)

    y = -x
    if y <= SERIES_LIMIT and y ** (1.0 / delta) <= SERIES_MAX_GROWTH:
        value, magnitude = _series_negative(delta, beta, y)
        if 64.0 * _EPS * magnitude <= rtol * abs(value):
            return value
        logger.debug("级数相消过大 (δ=%s, β=%s, x=%s)，改用其他方法", delta, beta, x)

    value = _asymptotic(delta, beta, y, rtol)
    if value is not None:
        return value
    if delta < 1.0 and (math.isclose(beta, 1.0) or math.isclose(beta, delta)):
        return _integral(delta, beta, y, rtol)
    return _series_mp(delta, beta, x)


def ml(delta: float, beta: float, x, rtol: Optional[float] = None):
    """计算双参数 Mittag-Leffler 函数 E_{δ,β}(x)，x 可以是标量或数组。"""
    if not (delta > 0 and beta > 0):
        raise DomainError(f"需要 δ > 0 且 β > 0，收到 δ={delta}, β={beta}")
    if delta > 1:
        raise DomainError(f"只支持 0 < δ ≤ 1，收到 δ={delta}")
    rtol = settings.ML_RTOL if rtol is None else float(rtol)
    if np.ndim(x) == 0:
        if math.isnan(x):
            raise DomainError("参数 x 为 NaN")
        return _ml_scalar(float(delta), float(beta), float(x), rtol)

    values = np.asarray(x, dtype=float)
    if np.isnan(values).any():
        raise DomainError("参数 x 含 NaN")
    out = np.empty_like(values)
    for index, value in np.ndenumerate(values):
        out[index] = _ml_scalar(float(delta), float(beta), float(value), rtol)
    return out


def ml_eval(p: MLParams) -> float:
    return ml(p.delta, p.beta, p.x)


# --- Mittag-Leffler 分布 ---
def ml_survival(d: MLDistribution, t):
    """生存函数 P(T > t) = E_{ν,1}(-θ t^ν)。"""
    t_arr = np.asarray(t, dtype=float)
    if (t_arr < 0).any():
        raise DomainError("生存函数要求 t ≥ 0")
    return ml(d.nu, 1.0, -d.theta * t_arr ** d.nu)


def ml_cdf(d: MLDistribution, t):
    return 1.0 - ml_survival(d, t)


def ml_pdf(d: MLDistribution, t):
    """密度 θ t^{ν-1} E_{ν,ν}(-θ t^ν)；ν < 1 时在 t → 0⁺ 发散，不能在 t = 0 处求值。"""
    t_arr = np.asarray(t, dtype=float)
    if (t_arr <= 0).any():
        raise DomainError("密度要求 t > 0")
    if t_arr.ndim == 0:
        t_arr = float(t_arr)
    return d.theta * t_arr ** (d.nu - 1.0) * ml(d.nu, d.nu, -d.theta * t_arr ** d.nu)
