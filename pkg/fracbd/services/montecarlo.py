# 作用: 估计量的蒙特卡洛研究 (点估计的偏差/离散度，区间估计的覆盖率/宽度)。

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import TypeAdapter
from scipy import stats

from ..errors import DomainError, FracBDError
from ..schemas import (
    Interval,
    MadKind,
    ProcessKind,
    ProcessType,
    StudyCell,
    StudyConfig,
    StudyKind,
    StudyResult,
    StudyRow,
)
from . import estimation, processes
from .variates import RandomSource

logger = logging.getLogger(__name__)

POINT_ESTIMATORS = ("nu_ls", "nu_res", "rate_ls", "rate_res")
INTERVAL_ESTIMATORS = POINT_ESTIMATORS + ("rate_boot",)
METRICS = ("mean", "mad", "rf_percent", "mean_lo", "mean_hi", "coverage", "mean_width")
STUDY_COLUMNS = ["process", "true_nu", "true_rate", "n", "estimator", "metric", "value", "reps", "failures"]

STANDARD_PAIRS = ((0.1, 1.0), (0.25, 0.1), (0.5, 0.5), (0.75, 0.25), (0.95, 5.0))
STANDARD_POINT_SIZES = [100, 500, 1000]
STANDARD_INTERVAL_SIZES = [15, 30, 100, 500]

# 每个估计量: (点估计, 区间)；失败的估计量不出现在字典中
Outcome = Dict[str, Tuple[float, Optional[Interval]]]


def _replicate(config: StudyConfig, study: StudyKind, n: int, rep: int) -> Outcome:
    """第 rep 次重复: 模拟一条路径，所有估计量共用这条路径。"""
    rng = RandomSource(config.seed, rep)
    death = config.process.is_death
    process = ProcessKind(kind=config.process, nu=config.true_nu, rate=config.true_rate, n0=n if death else 1)
    try:
        path = processes.simulate(process, rng, None if death else n)
        design = estimation.build_design(path)
        fit = estimation.ls_fit(design)
        points = estimation.point_estimates(fit)
    except FracBDError as exc:
        logger.debug("重复 %d (n=%d) 失败: %s", rep, n, exc)
        return {}

    if study is StudyKind.POINT:
        return {name: (getattr(points, name), None) for name in POINT_ESTIMATORS}

    ls = estimation.ci_ls(fit, config.alpha, config.error_variance)
    res = estimation.ci_res(fit, config.alpha, config.rate_variance)
    try:
        boot = estimation.ci_bootstrap_rate(fit, design, config.alpha, config.bootstrap_b, rng)
    except FracBDError as exc:
        logger.debug("重复 %d (n=%d) 自助法失败: %s", rep, n, exc)
        boot = None
    return {
        "nu_ls": (points.nu_ls, ls.nu),
        "rate_ls": (points.rate_ls, ls.rate),
        "nu_res": (points.nu_res, res.nu),
        "rate_res": (points.rate_res, res.rate),
        "rate_boot": (points.rate_res, boot),
    }


def _mad(estimates: np.ndarray, truth: float, kind: MadKind) -> float:
    if kind is MadKind.SCALED:
        return float(stats.median_abs_deviation(estimates, scale="normal"))
    return float(np.median(np.abs(estimates - truth)))


def _point_cell(name: str, n: int, outcomes: List[Outcome], truth: float, config: StudyConfig) -> StudyCell:
    # 排序后再求和，结果与重复的完成顺序无关
    estimates = np.sort(
        [o[name][0] for o in outcomes if name in o and math.isfinite(o[name][0])]
    )
    if estimates.size == 0:
        return StudyCell(estimator=name, n=n, successes=0, failures=len(outcomes))
    mean = float(estimates.mean())
    mad = _mad(estimates, truth, config.mad)
    return StudyCell(
        estimator=name,
        n=n,
        mean=mean,
        mad=mad,
        rf_percent=100.0 * mad / mean if mean != 0 else None,
        successes=int(estimates.size),
        failures=len(outcomes) - int(estimates.size),
    )


def _interval_cell(name: str, n: int, outcomes: List[Outcome], truth: float) -> StudyCell:
    intervals = sorted(
        o[name][1] for o in outcomes
        if name in o and o[name][1] is not None and all(math.isfinite(b) for b in o[name][1])
    )
    if not intervals:
        return StudyCell(estimator=name, n=n, successes=0, failures=len(outcomes))
    bounds = np.array(intervals)
    lo, hi = bounds[:, 0], bounds[:, 1]
    return StudyCell(
        estimator=name,
        n=n,
        mean_lo=float(lo.mean()),
        mean_hi=float(hi.mean()),
        coverage=float(np.mean((lo <= truth) & (truth <= hi))),
        mean_width=float((hi - lo).mean()),
        successes=len(intervals),
        failures=len(outcomes) - len(intervals),
    )


def _truth(name: str, config: StudyConfig) -> float:
    return config.true_nu if name.startswith("nu") else config.true_rate


def _run(config: StudyConfig, study: StudyKind) -> StudyResult:
    cells: List[StudyCell] = []
    for n in config.n_list:
        logger.info("%s 研究: ν=%s, rate=%s, n=%d, reps=%d", study.value, config.true_nu, config.true_rate, n, config.reps)
        outcomes = Parallel(n_jobs=config.jobs)(
            delayed(_replicate)(config, study, n, rep) for rep in range(config.reps)
        )
        if study is StudyKind.POINT:
            cells += [_point_cell(name, n, outcomes, _truth(name, config), config) for name in POINT_ESTIMATORS]
        else:
            cells += [_interval_cell(name, n, outcomes, _truth(name, config)) for name in INTERVAL_ESTIMATORS]
        failed = sum(1 for o in outcomes if not o)
        if failed:
            logger.warning("n=%d: %d/%d 次重复模拟或拟合失败", n, failed, config.reps)
    return StudyResult(study=study, config=config, cells=cells)


def point_study(config: StudyConfig) -> StudyResult:
    return _run(config, StudyKind.POINT)


def interval_study(config: StudyConfig) -> StudyResult:
    if min(config.n_list) < estimation.SMALL_SAMPLE:
        raise DomainError(f"区间研究要求 n ≥ {estimation.SMALL_SAMPLE}，收到 {config.n_list}")
    return _run(config, StudyKind.INTERVAL)


def run_study(config: StudyConfig, study: StudyKind) -> StudyResult:
    return point_study(config) if study is StudyKind.POINT else interval_study(config)


# --- 输出 ---
def study_rows(result: StudyResult) -> List[StudyRow]:
    config = result.config
    rows = []
    for cell in result.cells:
        for metric in METRICS:
            value = getattr(cell, metric)
            if value is None:
                continue
            rows.append(
                StudyRow(
                    process=config.process,
                    true_nu=config.true_nu,
                    true_rate=config.true_rate,
                    n=cell.n,
                    estimator=cell.estimator,
                    metric=metric,
                    value=value,
                    reps=config.reps,
                    failures=cell.failures,
                )
            )
    return rows


def summarize(result: StudyResult, fmt: str = "csv") -> str:
    """长格式结果；没有任何单元格时 CSV 只有表头，JSON 为空列表。"""
    rows = study_rows(result)
    if fmt == "json":
        return TypeAdapter(List[StudyRow]).dump_json(rows, indent=2).decode()
    if fmt != "csv":
        raise DomainError(f"未知输出格式: {fmt}")
    frame = pd.DataFrame([row.model_dump(mode="json") for row in rows], columns=STUDY_COLUMNS)
    return frame.to_csv(index=False)


def summary_table(result: StudyResult) -> pd.DataFrame:
    """宽表: 行为估计量，列为 (n, 指标)。"""
    rows = [row.model_dump(mode="json") for row in study_rows(result)]
    if not rows:
        return pd.DataFrame()
    frame = pd.DataFrame(rows)
    return frame.pivot_table(index="estimator", columns=["n", "metric"], values="value", sort=False)


def standard_preset(
    study: StudyKind,
    reps: int = 1000,
    seed: int = 0,
    jobs: int = 1,
    process: ProcessType = ProcessType.YULE,
    n_list: Optional[Sequence[int]] = None,
) -> List[StudyConfig]:
    """五组 (ν, λ) 参数的标准研究配置。"""
    sizes = list(n_list) if n_list else (STANDARD_POINT_SIZES if study is StudyKind.POINT else STANDARD_INTERVAL_SIZES)
    return [
        StudyConfig(process=process, true_nu=nu, true_rate=rate, n_list=sizes, reps=reps, seed=seed, jobs=jobs)
        for nu, rate in STANDARD_PAIRS
    ]
