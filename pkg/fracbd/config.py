# 作用: 使用Pydantic加载和管理环境变量。

from typing import Optional

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # 随机数种子: 命令行未给出 --seed 时使用 FRACBD_SEED，再退回默认种子
    FRACBD_SEED: Optional[int] = None
    FRACBD_DEFAULT_SEED: int = 0

    # 蒙特卡洛并行度
    FRACBD_JOBS: int = 1

    FRACBD_LOG_LEVEL: str = "WARNING"

    # Mittag-Leffler 函数的目标相对误差
    ML_RTOL: float = 1e-10

    # 残差自助法的默认重抽样次数
    BOOTSTRAP_B: int = 500

    class Config:
        # 指定从哪个文件加载环境变量
        env_file = ".env"


# 创建一个全局配置实例，在其他地方可以直接导入使用
settings = Settings()
