# 作用: 定义 simulate 子命令，模拟一条过程路径并写出 path.csv / steps.csv。

import argparse
import logging

from .. import schemas, storage
from ..errors import DomainError
from ..dependencies import get_random_source
from ..services import processes

logger = logging.getLogger(__name__)


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("simulate", help="模拟分数阶生灭过程的一条路径")
    parser.add_argument("--process", type=schemas.ProcessType, choices=[member.value for member in schemas.ProcessType], default=schemas.ProcessType.YULE)
    parser.add_argument("--nu", type=float, required=True)
    parser.add_argument("--rate", type=float, required=True, help="Yule 为 λ，死亡过程为 μ")
    size = parser.add_mutually_exclusive_group(required=True)
    size.add_argument("--n", type=int, help="Yule 过程的事件数")
    size.add_argument("--n0", type=int, help="死亡过程的初始规模 (模拟到灭绝)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--stream", type=int, default=0)
    parser.add_argument("--out", required=True)
    parser.set_defaults(handler=handle)
    return parser


def handle(args: argparse.Namespace) -> int:
    death = args.process.is_death
    if death and args.n0 is None:
        raise DomainError("死亡过程需要 --n0")
    if not death and args.n is None:
        raise DomainError("Yule 过程需要 --n")

    process = schemas.ProcessKind(kind=args.process, nu=args.nu, rate=args.rate, n0=args.n0 if death else 1)
    rng = get_random_source(args.seed, args.stream)
    path = processes.simulate(process, rng, None if death else args.n)
    targets = storage.write_path(path, args.out)
    print(f"{args.process.value}: {path.n_events} 个事件，最后事件时刻 {path.event_times[-1]:.6g}")
    for target in targets:
        print(f"已写出 {target}")
    return 0
