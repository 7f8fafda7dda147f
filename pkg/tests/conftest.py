import mpmath
import numpy as np
import pytest

from fracbd.services.variates import RandomSource


@pytest.fixture
def rng():
    return RandomSource(seed=12345, stream_id=0)


@pytest.fixture
def make_rng():
    def factory(seed: int = 12345, stream_id: int = 0) -> RandomSource:
        return RandomSource(seed=seed, stream_id=stream_id)

    return factory


def mp_mittag_leffler(delta: float, beta: float, x: float, dps: int = 60) -> float:
    """扩展精度级数，作为测试中的参考值。"""
    with mpmath.workdps(dps):
        d, b, z = mpmath.mpf(delta), mpmath.mpf(beta), mpmath.mpf(x)
        total = mpmath.mpf(0)
        j = 0
        while True:
            term = z ** j * mpmath.rgamma(d * j + b)
            total += term
            if j > 10 and abs(term) < mpmath.mpf(10) ** (-dps) * max(abs(total), 1):
                break
            j += 1
        return float(total)


def mc_tolerance(samples: np.ndarray, k: float = 4.0) -> float:
    return k * float(np.std(samples, ddof=1)) / np.sqrt(samples.size)
