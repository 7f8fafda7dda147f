# 作用: 分数阶 Yule / 死亡过程的模拟与估计工具包。

__version__ = "1.0.0"
