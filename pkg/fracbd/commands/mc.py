# 作用: 定义 mc 子命令 (point / interval)，运行蒙特卡洛研究并写出结果。

import argparse
import logging
from typing import List

import pandas as pd

from .. import schemas, storage
from ..dependencies import resolve_jobs, resolve_seed
from ..errors import DomainError
from ..services import montecarlo

logger = logging.getLogger(__name__)


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("mc", help="蒙特卡洛研究")
    studies = parser.add_subparsers(dest="study", required=True)
    for study in schemas.StudyKind:
        sub = studies.add_parser(study.value, help=f"{study.value} 估计研究")
        source = sub.add_mutually_exclusive_group()
        source.add_argument("--preset", choices=["standard"])
        source.add_argument("--config", help="key=value 格式的研究配置文件")
        sub.add_argument("--process", type=schemas.ProcessType, choices=[member.value for member in schemas.ProcessType], default=schemas.ProcessType.YULE)
        sub.add_argument("--nu", type=float)
        sub.add_argument("--rate", type=float)
        sub.add_argument("--n", type=int, nargs="+", dest="n_list")
        sub.add_argument("--reps", type=int)
        sub.add_argument("--bootstrap-b", type=int)
        sub.add_argument("--mad", type=schemas.MadKind, choices=[member.value for member in schemas.MadKind])
        sub.add_argument("--alpha", type=float, help="区间研究的显著性水平")
        sub.add_argument("--error-variance", type=schemas.ErrorVariance, choices=[member.value for member in schemas.ErrorVariance])
        sub.add_argument("--rate-variance", type=schemas.RateVariance, choices=[member.value for member in schemas.RateVariance])
        sub.add_argument("--seed", type=int)
        sub.add_argument("--jobs", type=int)
        sub.add_argument("--format", choices=["csv", "json"], default="csv")
        sub.add_argument("--out", required=True)
        sub.set_defaults(handler=handle, study_kind=study)
    return parser


def build_configs(args: argparse.Namespace) -> List[schemas.StudyConfig]:
    overrides = {}
    # 配置文件中的 seed/jobs 只被显式的命令行参数覆盖
    if args.seed is not None or not args.config:
        overrides["seed"] = resolve_seed(args.seed)
    if args.jobs is not None or not args.config:
        overrides["jobs"] = resolve_jobs(args.jobs)
    for key in ("reps", "bootstrap_b", "mad", "alpha", "error_variance", "rate_variance"):
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)

    if args.preset:
        configs = montecarlo.standard_preset(args.study_kind, process=args.process, n_list=args.n_list)
    elif args.config:
        configs = [storage.read_study_config(args.config)]
    else:
        if args.nu is None or args.rate is None or not args.n_list:
            raise DomainError("需要 --preset、--config 或同时给出 --nu --rate --n")
        configs = [
            schemas.StudyConfig(process=args.process, true_nu=args.nu, true_rate=args.rate, n_list=args.n_list)
        ]
    # 命令行参数覆盖配置文件与预设
    return [schemas.StudyConfig(**{**config.model_dump(), **overrides}) for config in configs]


def handle(args: argparse.Namespace) -> int:
    for config in build_configs(args):
        result = montecarlo.run_study(config, args.study_kind)
        target = storage.write_study(result, args.out, args.format)
        print(f"\n{config.process.value}: ν={config.true_nu:g}, rate={config.true_rate:g}, reps={config.reps}")
        with pd.option_context("display.float_format", "{:.6g}".format, "display.width", 160):
            print(montecarlo.summary_table(result))
        print(f"已写出 {target}")
    return 0
