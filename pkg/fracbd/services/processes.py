# 作用: 分数阶纯生/纯死过程的路径模拟与解析量 (状态概率、均值、方差)。

import logging
import math
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import integrate, stats

from ..errors import ConditioningError, DomainError, NumericalError
from ..schemas import ProcessKind, ProcessType, SamplePath
from . import variates
from .special_fn import ml

logger = logging.getLogger(__name__)

# 交错二项式求和的条件数上限
DEATH_PMF_MAX_N0 = 60
SUBLINEAR_MAX_N0 = 50
# Yule 状态概率的交错求和只在 i 不超过该值时尝试
YULE_ALTERNATING_MAX = 40
MAX_YULE_EVENTS = 10_000_000


# --- 路径模拟 ---
def rate_schedule(kind: ProcessType, rate: float, count: int, n0: int = 1) -> np.ndarray:
    """第 j 个事件间隔 (j = 1..count) 的 Mittag-Leffler 强度。"""
    j = np.arange(count, dtype=float)
    if kind is ProcessType.YULE:
        return rate * (j + 1.0)
    if kind is ProcessType.LINEAR_DEATH:
        return rate * (n0 - j)
    # 次线性死亡: 第 j 次死亡前剩余 n0-j+1 个体，强度为 μj
    return rate * (j + 1.0)


def simulate(process: ProcessKind, rng: variates.RandomSource, n_events: Optional[int] = None) -> SamplePath:
    """模拟前 n_events 个事件；死亡过程默认模拟到灭绝 (n0 个事件)。"""
    if process.kind is ProcessType.YULE:
        if n_events is None or n_events < 1:
            raise DomainError("Yule 过程需要 n_events ≥ 1")
        count = n_events
    else:
        count = process.n0 if n_events is None else n_events
        if not 1 <= count <= process.n0:
            raise DomainError(f"死亡过程最多 {process.n0} 个事件，收到 n_events={n_events}")

    theta = rate_schedule(process.kind, process.rate, count, process.n0)
    inter = np.exp(variates.sample_log_ml(process.nu, theta, rng))
    if not np.all(np.isfinite(inter)) or np.any(inter == 0.0):
        raise NumericalError("事件间隔超出浮点数范围 (ν 过小)")
    return SamplePath(
        inter_times=inter.tolist(),
        event_times=np.cumsum(inter).tolist(),
        process=process,
    )


def simulate_yule(nu: float, lam: float, n_events: int, rng: variates.RandomSource) -> SamplePath:
    return simulate(ProcessKind(kind=ProcessType.YULE, nu=nu, rate=lam), rng, n_events)


def simulate_linear_death(nu: float, mu: float, n0: int, rng: variates.RandomSource) -> SamplePath:
    return simulate(ProcessKind(kind=ProcessType.LINEAR_DEATH, nu=nu, rate=mu, n0=n0), rng)


def simulate_sublinear_death(nu: float, mu: float, n0: int, rng: variates.RandomSource) -> SamplePath:
    return simulate(ProcessKind(kind=ProcessType.SUBLINEAR_DEATH, nu=nu, rate=mu, n0=n0), rng)


def simulate_yule_until(
    nu: float, lam: float, horizon: float, rng: variates.RandomSource, chunk: int = 64
) -> SamplePath:
    """模拟 Yule 过程直到第一个越过 horizon 的事件为止 (该事件也包含在路径中)。"""
    if horizon <= 0:
        raise DomainError("horizon 必须为正")
    process = ProcessKind(kind=ProcessType.YULE, nu=nu, rate=lam)
    pieces: List[np.ndarray] = []
    drawn = 0
    elapsed = 0.0
    while elapsed <= horizon:
        if drawn >= MAX_YULE_EVENTS:
            raise NumericalError(f"在 {MAX_YULE_EVENTS} 个事件内未越过 horizon={horizon}")
        theta = lam * np.arange(drawn + 1, drawn + chunk + 1, dtype=float)
        inter = np.exp(variates.sample_log_ml(nu, theta, rng))
        pieces.append(inter)
        drawn += chunk
        elapsed += float(inter.sum())

    inter = np.concatenate(pieces)
    events = np.cumsum(inter)
    stop = int(np.searchsorted(events, horizon, side="right")) + 1
    return SamplePath(inter_times=inter[:stop].tolist(), event_times=events[:stop].tolist(), process=process)


def population_at(path: SamplePath, t: float) -> int:
    """t 时刻的种群规模 (Yule 从 1 开始，死亡过程从 n0 开始)。"""
    if t < 0:
        raise DomainError("t 必须非负")
    count = int(np.searchsorted(np.asarray(path.event_times), t, side="right"))
    if path.process.kind is ProcessType.YULE:
        return 1 + count
    return path.process.n0 - count


def step_function(path: SamplePath) -> List[Tuple[float, int]]:
    start = 1 if path.process.kind is ProcessType.YULE else path.process.n0
    step = 1 if path.process.kind is ProcessType.YULE else -1
    rows = [(0.0, start)]
    for k, t in enumerate(path.event_times, start=1):
        rows.append((float(t), start + step * k))
    return rows


# --- 从属时钟 ---
def clock_expectation(nu: float, fn: Callable, epsabs: float = 1e-13, epsrel: float = 1e-10):
    """计算 E[fn(M)]，其中 E[exp(-sM)] = E_ν(-s)。

    M = W^{1-ν} A(U)^{-ν}，U ~ U(0,1)，W ~ Exp(1)；把经典过程的量中的 e^{-ct}
    换成 e^{-c t^ν M} 再取期望，就得到对应的分数阶量。fn 可以返回向量。
    """
    if nu == 1.0:
        return np.asarray(fn(1.0), dtype=float)

    def over_w(u: float):
        scale = math.exp(-nu * float(variates.kanter_log_a(nu, u)))

        def weighted(w: float):
            return math.exp(-w) * np.asarray(fn(scale * w ** (1.0 - nu)), dtype=float)

        return integrate.quad_vec(weighted, 0.0, np.inf, epsabs=epsabs, epsrel=epsrel)[0]

    return integrate.quad_vec(over_w, 0.0, 1.0, epsabs=epsabs, epsrel=epsrel)[0]


def _check_time(t: float) -> None:
    if t < 0:
        raise DomainError(f"时间 t 必须非负，收到 {t}")


# --- Yule 过程 ---
def yule_pmf(nu: float, lam: float, t: float, i: int) -> float:
    """P(N(t) = i)，N(0) = 1。"""
    if i < 1:
        raise DomainError("Yule 过程的状态 i ≥ 1")
    _check_time(t)
    if t == 0:
        return 1.0 if i == 1 else 0.0
    scale = lam * t ** nu
    if nu == 1.0:
        return float(stats.geom.pmf(i, math.exp(-scale)))

    if i <= YULE_ALTERNATING_MAX:
        terms = [
            math.comb(i - 1, j - 1) * (-1) ** (j - 1) * ml(nu, 1.0, -j * scale)
            for j in range(1, i + 1)
        ]
        value = math.fsum(terms)
        magnitude = math.fsum(abs(v) for v in terms)
        if magnitude * 1e-15 <= 1e-6 * abs(value):
            return max(value, 0.0)
        logger.debug("Yule 状态概率交错求和相消过大 (i=%d)，改用从属积分", i)

    def geometric(m):
        return stats.geom.pmf(i, np.exp(-scale * m))

    return max(float(clock_expectation(nu, geometric)), 0.0)


def yule_pmf_table(nu: float, lam: float, t: float, tol: float = 1e-10, max_states: int = 100_000) -> np.ndarray:
    """状态 1..I 的概率，I 为累计概率首次达到 1 - tol 的状态 (最多 max_states)。"""
    _check_time(t)
    if t == 0:
        return np.array([1.0])
    scale = lam * t ** nu

    def tail(size: int) -> float:
        # P(N(t) > size) = E[(1 - Q)^size]
        return float(clock_expectation(nu, lambda m: (-np.expm1(-scale * m)) ** size))

    size = 16
    while size < max_states and tail(size) > tol:
        size = min(size * 2, max_states)
    if size >= max_states:
        logger.warning("Yule 状态概率截断在 %d 个状态，尾部概率仍大于 %g", max_states, tol)

    states = np.arange(1, size + 1)
    probs = np.clip(clock_expectation(nu, lambda m: stats.geom.pmf(states, np.exp(-scale * m))), 0.0, None)
    reached = np.flatnonzero(np.cumsum(probs) >= 1.0 - tol)
    if reached.size:
        probs = probs[: reached[0] + 1]
    return probs


def yule_mean(nu: float, lam: float, t: float) -> float:
    _check_time(t)
    return ml(nu, 1.0, lam * t ** nu)


def yule_var(nu: float, lam: float, t: float) -> float:
    _check_time(t)
    first = ml(nu, 1.0, lam * t ** nu)
    return 2.0 * ml(nu, 1.0, 2.0 * lam * t ** nu) - first - first ** 2


# --- 线性死亡过程 ---
def death_pmf(nu: float, mu: float, n0: int, t: float, i: int) -> float:
    """P(N(t) = i)，N(0) = n0，0 ≤ i ≤ n0。"""
    if not 0 <= i <= n0:
        raise DomainError(f"状态 i 必须在 [0, {n0}] 内")
    _check_time(t)
    if t == 0:
        return 1.0 if i == n0 else 0.0
    if nu == 1.0:
        return float(stats.binom.pmf(i, n0, math.exp(-mu * t)))
    if n0 > DEATH_PMF_MAX_N0:
        raise ConditioningError(f"n0 = {n0} 时交错求和的舍入误差不可控 (上限 {DEATH_PMF_MAX_N0})")
    scale = mu * t ** nu
    terms = [
        math.comb(n0 - i, j) * (-1) ** j * ml(nu, 1.0, -(i + j) * scale)
        for j in range(n0 - i + 1)
    ]
    return max(math.comb(n0, i) * math.fsum(terms), 0.0)


def linear_death_mean(nu: float, mu: float, n0: int, t: float) -> float:
    _check_time(t)
    return n0 * ml(nu, 1.0, -mu * t ** nu)


def linear_death_var(nu: float, mu: float, n0: int, t: float) -> float:
    _check_time(t)
    first = ml(nu, 1.0, -mu * t ** nu)
    return n0 * (n0 - 1) * ml(nu, 1.0, -2.0 * mu * t ** nu) + n0 * first - (n0 * first) ** 2


# --- 次线性死亡过程 ---
def _truncated_geometric_coefficients(n0: int, weight: Callable[[int], int]) -> List[int]:
    """经典次线性死亡过程中 E[f(N(t))] = Σ_j a_j q^j 的整数系数，q = e^{-μt}。

    经典情形下 N(t) = n0 - K，P(K = k) = q(1-q)^k (k < n0)，P(K = n0) = (1-q)^{n0}。
    f(0) 必须为 0。
    """
    coefficients = [0] * (n0 + 1)
    for k in range(n0):
        w = weight(n0 - k)
        if w == 0:
            continue
        for l in range(k + 1):
            coefficients[l + 1] += w * math.comb(k, l) * (-1) ** l
    return coefficients


def _subordinated_sum(nu: float, mu: float, t: float, coefficients: List[int]) -> float:
    scale = mu * t ** nu
    return math.fsum(
        float(a) * ml(nu, 1.0, -j * scale) for j, a in enumerate(coefficients) if a != 0
    )


def sublinear_death_mean(nu: float, mu: float, n0: int, t: float) -> float:
    """E[N(t)] = Σ_{k=1}^{n0} C(n0+1, k+1) (-1)^{k+1} E_ν(-μk t^ν)。"""
    _check_time(t)
    if n0 > SUBLINEAR_MAX_N0:
        raise ConditioningError(f"n0 = {n0} 超出次线性死亡过程矩的上限 {SUBLINEAR_MAX_N0}")
    scale = mu * t ** nu
    return math.fsum(
        math.comb(n0 + 1, k + 1) * (-1) ** (k + 1) * ml(nu, 1.0, -k * scale)
        for k in range(1, n0 + 1)
    )


def sublinear_death_factorial_moment(nu: float, mu: float, n0: int, t: float) -> float:
    """E[N(t)(N(t)-1)]。"""
    _check_time(t)
    if n0 > SUBLINEAR_MAX_N0:
        raise ConditioningError(f"n0 = {n0} 超出次线性死亡过程矩的上限 {SUBLINEAR_MAX_N0}")
    return _subordinated_sum(nu, mu, t, _truncated_geometric_coefficients(n0, lambda m: m * (m - 1)))


def sublinear_death_var(nu: float, mu: float, n0: int, t: float) -> float:
    mean = sublinear_death_mean(nu, mu, n0, t)
    return sublinear_death_factorial_moment(nu, mu, n0, t) + mean - mean ** 2
