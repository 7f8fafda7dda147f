# 作用: 命令行应用的入口文件。

import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from . import __version__
from .commands import estimate, mc, ml_eval, simulate
from .dependencies import configure_logging
from .errors import FracBDError

logger = logging.getLogger(__name__)

USAGE_EXIT = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracbd",
        description="分数阶纯生/纯死过程: Mittag-Leffler 函数、路径模拟与参数估计",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="输出调试日志")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # --- 包含所有子命令 ---
    ml_eval.register(subparsers)
    simulate.register(subparsers)
    estimate.register(subparsers)
    mc.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except ValidationError as exc:
        print(f"参数错误: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except FracBDError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"文件错误: {exc}", file=sys.stderr)
        return 1
