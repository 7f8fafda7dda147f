# 作用: 封装文件读写: 数据集读取与转换、路径/估计/研究结果的输出、研究配置文件的读取。

import logging
import re
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
import pandas as pd
from dotenv import dotenv_values

from . import schemas
from .errors import DomainError
from .services import montecarlo, processes

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


# --- Dataset ---
def read_values(path: PathLike) -> np.ndarray:
    """读取数值列表；允许表头、逗号或空白分隔、'#' 注释。"""
    try:
        lines = pd.read_csv(
            path, sep="\x1f", header=None, names=["line"], engine="python", comment="#", dtype=str, skip_blank_lines=True
        )["line"]
    except pd.errors.EmptyDataError:
        raise DomainError(f"输入文件 {path} 为空")

    rows = lines.fillna("").str.strip()
    rows = rows[rows != ""].str.split(r"[\s,]+", regex=True)
    if rows.empty:
        raise DomainError(f"输入文件 {path} 中没有数值")
    if pd.to_numeric(pd.Series(rows.iloc[0]), errors="coerce").isna().any():
        # 第一行含非数值记号，视为表头
        rows = rows.iloc[1:]

    tokens = rows.explode()
    tokens = tokens[tokens.notna() & (tokens != "")]
    numeric = pd.to_numeric(tokens, errors="coerce")
    if numeric.isna().any():
        raise DomainError(f"无法解析为数值: {tokens[numeric.isna()].tolist()[:5]}")
    if numeric.empty:
        raise DomainError(f"输入文件 {path} 中没有数值")
    return numeric.to_numpy(dtype=float)


def to_inter_times(values, interpretation: schemas.Interpretation) -> np.ndarray:
    """把原始数值转换为事件间隔。

    event-times: 升序排列后与 0 求差分；branching-times (距今时间): 降序排列，
    末尾补上现在 (0)，相邻差值即为事件间隔，个数与输入相同。
    """
    values = np.asarray(values, dtype=float)
    if interpretation is schemas.Interpretation.EVENT_TIMES:
        inter = np.diff(np.sort(values), prepend=0.0)
    elif interpretation is schemas.Interpretation.BRANCHING_TIMES:
        inter = -np.diff(np.append(np.sort(values)[::-1], 0.0))
    else:
        inter = values
    if not np.all(np.isfinite(inter)) or np.any(inter <= 0):
        raise DomainError("事件间隔必须为正 (检查是否有重复或非正的时间)")
    return inter


def read_dataset(
    path: PathLike,
    interpretation: schemas.Interpretation = schemas.Interpretation.INTER_EVENT,
    start_index: int = 1,
) -> Tuple[schemas.InputDataset, np.ndarray]:
    """读取数据集，返回 (数据集, 事件间隔)。"""
    values = read_values(path)
    if np.any(values <= 0):
        raise DomainError("数据必须为正数")
    inter = to_inter_times(values, interpretation)
    dataset = schemas.InputDataset(values=values.tolist(), interpretation=interpretation, start_index=start_index)
    logger.info("读取 %s: %d 个数值 (%s)", path, values.size, interpretation.value)
    return dataset, inter


def summarize_dataset(values) -> schemas.DatasetSummary:
    described = pd.Series(values, dtype=float).describe()
    return schemas.DatasetSummary(
        count=int(described["count"]),
        minimum=described["min"],
        q1=described["25%"],
        median=described["50%"],
        mean=described["mean"],
        q3=described["75%"],
        maximum=described["max"],
        sd=0.0 if np.isnan(described["std"]) else described["std"],
    )


# --- Outputs ---
def _ensure_dir(out_dir: PathLike) -> Path:
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def write_path(path: schemas.SamplePath, out_dir: PathLike) -> List[Path]:
    directory = _ensure_dir(out_dir)
    events = pd.DataFrame(
        {
            "index": np.arange(1, path.n_events + 1),
            "inter_time": path.inter_times,
            "event_time": path.event_times,
        }
    )
    steps = pd.DataFrame(processes.step_function(path), columns=["event_time", "population"])
    targets = [directory / "path.csv", directory / "steps.csv"]
    events.to_csv(targets[0], index=False)
    steps.to_csv(targets[1], index=False)
    return targets


def write_estimate(report: schemas.EstimateReport, residuals: pd.DataFrame, out_dir: PathLike) -> List[Path]:
    directory = _ensure_dir(out_dir)
    targets = [directory / "estimate.json", directory / "residuals.csv"]
    targets[0].write_text(report.model_dump_json(indent=2), encoding="utf-8")
    residuals.to_csv(targets[1], index=False)
    return targets


def read_report(path: PathLike) -> schemas.EstimateReport:
    return schemas.EstimateReport.model_validate_json(Path(path).read_text(encoding="utf-8"))


def study_filename(result: schemas.StudyResult, fmt: str) -> str:
    config = result.config
    return f"{result.study.value}_{config.process.value}_nu{config.true_nu:g}_rate{config.true_rate:g}.{fmt}"


def write_study(result: schemas.StudyResult, out_dir: PathLike, fmt: str = "csv") -> Path:
    target = _ensure_dir(out_dir) / study_filename(result, fmt)
    target.write_text(montecarlo.summarize(result, fmt), encoding="utf-8")
    return target


# --- Study config ---
def parse_config_values(raw: Dict[str, str]) -> schemas.StudyConfig:
    """key=value 形式的研究配置；键不区分大小写，n_list 用逗号或空白分隔。"""
    values = {key.lower(): value for key, value in raw.items() if value is not None and value != ""}
    if "n_list" in values:
        try:
            values["n_list"] = [int(token) for token in re.split(r"[\s,]+", values["n_list"].strip()) if token]
        except ValueError:
            raise DomainError(f"n_list 必须是整数列表，收到 {values['n_list']!r}")
    return schemas.StudyConfig(**values)


def read_study_config(path: PathLike) -> schemas.StudyConfig:
    if not Path(path).is_file():
        raise DomainError(f"配置文件不存在: {path}")
    return parse_config_values(dotenv_values(path))
