# 作用: 定义库内统一的异常类型，每个异常携带命令行退出码。


class FracBDError(Exception):
    """所有 fracbd 异常的基类。"""
    exit_code = 1


# --- 参数/输入错误 (退出码 2) ---
class DomainError(FracBDError, ValueError):
    exit_code = 2


class InsufficientDataError(DomainError):
    """观测数少于 3 或回归变量只有一个取值。"""


class InverseDomainError(DomainError):
    """调用方提供的 m_inverse 拒绝了它的参数。"""


# --- 数值/运行时错误 (退出码 1) ---
class NumericalError(FracBDError, ArithmeticError):
    exit_code = 1


class MLOverflowError(NumericalError, OverflowError):
    """Mittag-Leffler 函数值超出浮点数表示范围。"""


class ConditioningError(NumericalError):
    """交错二项式求和超出可接受的条件数上限。"""


class ConvergenceError(NumericalError):
    pass


class SingularDesignError(NumericalError):
    pass


class DegenerateSlopeError(NumericalError):
    pass
