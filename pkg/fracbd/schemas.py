# 作用: 定义Pydantic模型，用于参数校验和结果的序列化。

import enum
import math
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# 区间估计 (下界, 上界)
Interval = Tuple[float, float]


class _Schema(BaseModel):
    # inf/nan 以 JSON 常量输出，保证 parse(emit(x)) == x
    model_config = ConfigDict(ser_json_inf_nan="constants")


# --- Special Function Schemas ---
class MLParams(_Schema):
    delta: float = Field(gt=0)
    beta: float = Field(gt=0)
    x: float


class MLDistribution(_Schema):
    """Mittag-Leffler 分布: 生存函数 E_{ν,1}(-θ t^ν)。"""
    nu: float = Field(gt=0, le=1)
    theta: float = Field(gt=0)


class StableParams(_Schema):
    nu: float = Field(gt=0, lt=1)


# --- Process Schemas ---
class ProcessType(str, enum.Enum):
    YULE = "yule"
    LINEAR_DEATH = "linear-death"
    SUBLINEAR_DEATH = "sublinear-death"

    @property
    def is_death(self) -> bool:
        return self is not ProcessType.YULE


class ProcessKind(_Schema):
    kind: ProcessType
    nu: float = Field(gt=0, le=1)
    # Yule 为 λ，死亡过程为 μ
    rate: float = Field(gt=0)
    n0: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _single_progenitor(self):
        if self.kind is ProcessType.YULE and self.n0 != 1:
            raise ValueError("Yule 过程固定从 1 个祖先开始 (n0 = 1)")
        return self


class SamplePath(_Schema):
    # event_times 为 inter_times 的累加和；ν 很小时长尾会让浮点累加出现相等的相邻值
    inter_times: List[float]
    event_times: List[float]
    process: ProcessKind

    @model_validator(mode="after")
    def _aligned(self):
        if len(self.inter_times) != len(self.event_times):
            raise ValueError("inter_times 与 event_times 长度不一致")
        return self

    @property
    def n_events(self) -> int:
        return len(self.inter_times)


# --- Estimation Schemas ---
class RegressionData(_Schema):
    """对数事件间隔 y 对回归变量 x 的简单线性回归数据。"""
    x: List[float]
    y: List[float]

    @property
    def n(self) -> int:
        return len(self.y)


class RegressionFit(_Schema):
    intercept: float
    slope: float
    residuals: List[float]
    fitted: List[float]
    leverages: List[float]
    sigma2_u: float = Field(ge=0)
    s_xx: float = Field(gt=0)
    x_bar: float
    n: int = Field(ge=3)


class PointEstimates(_Schema):
    nu_ls: float
    rate_ls: float
    nu_res: float
    rate_res: float
    warnings: List[str] = Field(default_factory=list)


class IntervalEstimates(_Schema):
    # None 表示该区间不可用 (例如根号内为负)，原因记录在 warnings 中
    nu: Optional[Interval] = None
    rate: Optional[Interval] = None
    warnings: List[str] = Field(default_factory=list)


class ErrorVariance(str, enum.Enum):
    NU_LS = "nu_ls"
    # σ̂²_u，与 error_variance(ν̂_res) 代数上相同
    RESIDUAL = "residual"


class RateVariance(str, enum.Enum):
    DELTA = "delta"
    DISPLAY = "display"


class ModelCase(str, enum.Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"


class NuRoute(str, enum.Enum):
    RESIDUAL = "residual"
    LS = "ls"
    KNOWN = "known"


class GeneralSelection(_Schema):
    case: ModelCase
    nu_route: NuRoute
    nu: float
    m_hat: float
    theta: float


class EstimateReport(_Schema):
    process: str
    n: int
    alpha: float = Field(gt=0, lt=1)
    intercept: float
    slope: float
    sigma2_u: float
    nu_ls: Optional[float] = None
    rate_ls: Optional[float] = None
    nu_res: float
    rate_res: Optional[float] = None
    ci_nu_ls: Optional[Interval] = None
    ci_rate_ls: Optional[Interval] = None
    ci_nu_res: Optional[Interval] = None
    ci_rate_res: Optional[Interval] = None
    ci_rate_boot: Optional[Interval] = None
    bootstrap_b: Optional[int] = None
    warnings: List[str] = Field(default_factory=list)
    selection: Optional[GeneralSelection] = None

    @model_validator(mode="after")
    def _ordered_intervals(self):
        for name in ("ci_nu_ls", "ci_rate_ls", "ci_nu_res", "ci_rate_res", "ci_rate_boot"):
            interval = getattr(self, name)
            if interval is not None and interval[0] > interval[1]:
                raise ValueError(f"{name} 的下界大于上界: {interval}")
        return self


# --- Monte Carlo Schemas ---
class StudyKind(str, enum.Enum):
    POINT = "point"
    INTERVAL = "interval"


class MadKind(str, enum.Enum):
    # truth: median|θ̂ - θ|；scaled: 以中位数为中心并乘正态一致性常数
    TRUTH = "truth"
    SCALED = "scaled"


class StudyConfig(_Schema):
    process: ProcessType = ProcessType.YULE
    true_nu: float = Field(gt=0, le=1)
    true_rate: float = Field(gt=0)
    n_list: List[int] = Field(min_length=1)
    reps: int = Field(default=1000, ge=1)
    alpha: float = Field(default=0.05, gt=0, lt=1)
    bootstrap_b: int = Field(default=500, ge=100)
    seed: int = Field(default=0, ge=0, lt=2**64)
    jobs: int = Field(default=1, ge=1)
    mad: MadKind = MadKind.TRUTH
    error_variance: ErrorVariance = ErrorVariance.NU_LS
    rate_variance: RateVariance = RateVariance.DISPLAY

    @field_validator("n_list")
    @classmethod
    def _enough_events(cls, value: List[int]) -> List[int]:
        if any(n < 3 for n in value):
            raise ValueError("每个样本量 n 至少为 3")
        return value


class StudyCell(_Schema):
    estimator: str
    n: int
    mean: Optional[float] = None
    mad: Optional[float] = None
    rf_percent: Optional[float] = None
    mean_lo: Optional[float] = None
    mean_hi: Optional[float] = None
    coverage: Optional[float] = Field(default=None, ge=0, le=1)
    mean_width: Optional[float] = None
    successes: int = 0
    failures: int = 0


class StudyRow(_Schema):
    """长格式输出中的一行。"""
    process: ProcessType
    true_nu: float
    true_rate: float
    n: int
    estimator: str
    metric: str
    value: float
    reps: int
    failures: int


class StudyResult(_Schema):
    study: StudyKind
    config: StudyConfig
    cells: List[StudyCell] = Field(default_factory=list)


# --- Dataset Schemas ---
class Interpretation(str, enum.Enum):
    INTER_EVENT = "inter-event"
    EVENT_TIMES = "event-times"
    BRANCHING_TIMES = "branching-times"


class InputDataset(_Schema):
    values: List[float] = Field(min_length=1)
    interpretation: Interpretation = Interpretation.INTER_EVENT
    start_index: int = Field(default=1, ge=1)

    @field_validator("values")
    @classmethod
    def _strictly_positive(cls, value: List[float]) -> List[float]:
        bad = [v for v in value if not (math.isfinite(v) and v > 0)]
        if bad:
            raise ValueError(f"数据必须为有限正数，发现非法值: {bad[:5]}")
        return value


class DatasetSummary(_Schema):
    count: int
    minimum: float
    q1: float
    median: float
    mean: float
    q3: float
    maximum: float
    sd: float
