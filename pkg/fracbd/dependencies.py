# 作用: 定义命令共用的依赖项，如解析随机种子、构造随机数流、配置日志。

import logging
from typing import Optional

from .config import settings
from .services.variates import RandomSource


def resolve_seed(seed: Optional[int] = None) -> int:
    """种子优先级: 命令行 --seed > 环境变量 FRACBD_SEED > FRACBD_DEFAULT_SEED"""
    if seed is not None:
        return seed
    if settings.FRACBD_SEED is not None:
        return settings.FRACBD_SEED
    return settings.FRACBD_DEFAULT_SEED


def get_random_source(seed: Optional[int] = None, stream_id: int = 0) -> RandomSource:
    return RandomSource(resolve_seed(seed), stream_id)


def resolve_jobs(jobs: Optional[int] = None) -> int:
    return jobs if jobs is not None else settings.FRACBD_JOBS


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.FRACBD_LOG_LEVEL.upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
