# 作用: 可复现的随机数流，以及单侧稳定分布、Mittag-Leffler 分布的抽样。

import logging
from typing import Optional, Union

import numpy as np

from ..errors import DomainError
from ..schemas import MLDistribution, StableParams

logger = logging.getLogger(__name__)

_STREAM_LIMIT = 2 ** 64


class RandomSource:
    """由 (seed, stream_id) 唯一确定的随机数流。

    底层固定为 numpy 的 Philox 计数器生成器，stream_id 作为 SeedSequence 的
    spawn_key，不同 stream_id 的流互相独立，蒙特卡洛第 r 次重复使用 stream_id = r。
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if not (0 <= seed < _STREAM_LIMIT and 0 <= stream_id < _STREAM_LIMIT):
            raise DomainError(f"seed 与 stream_id 必须在 [0, 2^64) 内，收到 {seed}, {stream_id}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(sequence))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, stream_id={self.stream_id})"

    def uniform_open(self, size=None):
        """(0, 1) 上的均匀分布；生成器给出的 0 会被重新抽取。"""
        if size is None:
            u = self.generator.random()
            while u == 0.0:
                u = self.generator.random()
            return u
        u = self.generator.random(size)
        zero = u == 0.0
        while zero.any():
            u[zero] = self.generator.random(int(zero.sum()))
            zero = u == 0.0
        return u

    def exponential(self, size=None):
        return self.generator.standard_exponential(size)


def _check_stable_index(nu: float) -> None:
    if not 0 < nu < 1:
        raise DomainError(f"稳定分布要求 0 < ν < 1，收到 ν={nu}")


def kanter_log_a(nu: float, u):
    """Kanter 函数 A(u) = sin(νπu) sin((1-ν)πu)^{(1-ν)/ν} / sin(πu)^{1/ν} 的对数。"""
    u = np.asarray(u, dtype=float)
    return (
        np.log(np.sin(nu * np.pi * u))
        + (1.0 - nu) / nu * np.log(np.sin((1.0 - nu) * np.pi * u))
        - np.log(np.sin(np.pi * u)) / nu
    )


def _log_stable(nu: float, rng: RandomSource, size) -> np.ndarray:
    u = rng.uniform_open(size)
    w = rng.exponential(size)
    return kanter_log_a(nu, u) - (1.0 - nu) / nu * np.log(w)


def sample_stable(p: Union[StableParams, float], rng: RandomSource, size: Optional[int] = None):
    """单侧 ν-稳定变量，Laplace 变换为 exp(-s^ν)。p 可以是 StableParams 或指数 ν 本身。"""
    nu = p.nu if isinstance(p, StableParams) else float(p)
    _check_stable_index(nu)
    value = np.exp(_log_stable(nu, rng, size))
    return float(value) if size is None else value


def sample_log_ml(nu: float, theta, rng: RandomSource) -> np.ndarray:
    """对每个 θ 抽取一个 ln T，T ~ ML(ν, θ)。

    ln T = (ln E - ln θ)/ν + ln S，E ~ Exp(1)，S 为单侧 ν-稳定变量 (ν = 1 时 S ≡ 1)。
    在对数尺度上计算，避免 ν 很小时 T 溢出。
    """
    if not 0 < nu <= 1:
        raise DomainError(f"Mittag-Leffler 分布要求 0 < ν ≤ 1，收到 ν={nu}")
    theta = np.asarray(theta, dtype=float)
    if (theta <= 0).any():
        raise DomainError("Mittag-Leffler 分布的 θ 必须为正")
    shape = theta.shape
    log_t = (np.log(rng.exponential(shape)) - np.log(theta)) / nu
    if nu < 1:
        log_t = log_t + _log_stable(nu, rng, shape)
    return log_t


def sample_ml(d: MLDistribution, rng: RandomSource, size: Optional[int] = None):
    theta = d.theta if size is None else np.full(size, d.theta)
    value = np.exp(sample_log_ml(d.nu, theta, rng))
    return float(value) if size is None else value
