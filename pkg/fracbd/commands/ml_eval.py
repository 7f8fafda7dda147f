# 作用: 定义 ml-eval 子命令，计算单个 Mittag-Leffler 函数值。

import argparse

from .. import schemas
from ..services import special_fn


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("ml-eval", help="计算 E_{δ,β}(x)")
    parser.add_argument("delta", type=float)
    parser.add_argument("beta", type=float)
    parser.add_argument("x", type=float)
    parser.set_defaults(handler=handle)
    return parser


def handle(args: argparse.Namespace) -> int:
    params = schemas.MLParams(delta=args.delta, beta=args.beta, x=args.x)
    print(repr(special_fn.ml_eval(params)))
    return 0
