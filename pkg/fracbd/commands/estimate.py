# 作用: 定义 estimate 子命令，从数据文件估计 ν 与强度并输出区间。

import argparse
import logging

from .. import schemas, storage
from ..config import settings
from ..dependencies import get_random_source
from ..services import estimation

logger = logging.getLogger(__name__)


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("estimate", help="由事件间隔估计分数阶参数")
    parser.add_argument("--input", required=True)
    parser.add_argument(
        "--interpretation",
        type=schemas.Interpretation,
        choices=[member.value for member in schemas.Interpretation],
        default=schemas.Interpretation.INTER_EVENT,
    )
    parser.add_argument("--start-index", type=int, default=1)
    parser.add_argument("--process", type=schemas.ProcessType, choices=[member.value for member in schemas.ProcessType], default=schemas.ProcessType.YULE)
    parser.add_argument("--n0", type=int, help="线性死亡过程的初始规模 (默认为事件数)")
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--bootstrap-b", type=int, default=settings.BOOTSTRAP_B, help="0 表示不做自助法")
    parser.add_argument("--seed", type=int)
    parser.add_argument(
        "--error-variance", type=schemas.ErrorVariance, choices=[member.value for member in schemas.ErrorVariance], default=schemas.ErrorVariance.NU_LS
    )
    parser.add_argument(
        "--rate-variance", type=schemas.RateVariance, choices=[member.value for member in schemas.RateVariance], default=schemas.RateVariance.DISPLAY
    )
    parser.add_argument("--truncate-negative", action="store_true", help="区间下界截断到 0 (仅用于展示)")
    parser.add_argument("--out", required=True)
    parser.set_defaults(handler=handle)
    return parser


def _fmt(value) -> str:
    return "NA" if value is None else f"{value:.6g}"


def _fmt_interval(interval) -> str:
    return "NA" if interval is None else f"({interval[0]:.6g}, {interval[1]:.6g})"


def print_report(report: schemas.EstimateReport) -> None:
    print(f"n = {report.n}, 截距 = {_fmt(report.intercept)}, 斜率 = {_fmt(report.slope)}, σ̂²_u = {_fmt(report.sigma2_u)}")
    rows = [
        ("nu_ls", report.nu_ls, report.ci_nu_ls),
        ("rate_ls", report.rate_ls, report.ci_rate_ls),
        ("nu_res", report.nu_res, report.ci_nu_res),
        ("rate_res", report.rate_res, report.ci_rate_res),
    ]
    if report.ci_rate_boot is not None:
        rows.append(("rate_boot", report.rate_res, report.ci_rate_boot))
    level = f"{100 * (1 - report.alpha):g}%"
    print(f"{'估计量':<12}{'点估计':>14}  {level} 区间")
    for name, point, interval in rows:
        print(f"{name:<12}{_fmt(point):>14}  {_fmt_interval(interval)}")
    for warning in report.warnings:
        print(f"警告: {warning}")


def handle(args: argparse.Namespace) -> int:
    dataset, inter = storage.read_dataset(args.input, args.interpretation, args.start_index)
    summary = storage.summarize_dataset(dataset.values)
    print(
        f"数据: n={summary.count}, min={summary.minimum:.6g}, Q1={summary.q1:.6g}, median={summary.median:.6g}, "
        f"mean={summary.mean:.6g}, Q3={summary.q3:.6g}, max={summary.maximum:.6g}, sd={summary.sd:.6g}"
    )

    design = estimation.design_from_times(inter, args.process, start_index=args.start_index, n0=args.n0)
    rng = get_random_source(args.seed) if args.bootstrap_b else None
    report = estimation.estimate(
        design,
        alpha=args.alpha,
        n_boot=args.bootstrap_b or None,
        rng=rng,
        variance=args.error_variance,
        rate_variance=args.rate_variance,
        truncate_negative=args.truncate_negative,
        process=args.process.value,
    )
    print_report(report)
    fit = estimation.ls_fit(design)
    for target in storage.write_estimate(report, estimation.residual_table(design, fit), args.out):
        print(f"已写出 {target}")
    return 0
