"""Command-line entry point: ``scalekit <command> [options]``.

Exit status is 0 on success, 2 for invalid input and 3 for well-formed
queries with no answer (for example a budget below the smallest plan).
"""

from __future__ import annotations

import argparse
import math
import re
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from scalekit import report
from scalekit.accounting import (
    DEFAULT_SEQ_LEN,
    GPT2_VOCAB,
    ModelShape,
    count_params,
    flop_breakdown,
    flops_per_sequence,
    inference_flops_per_token,
    sequences_for,
    train_flops_total,
)
from scalekit.errors import InfeasibleError, InputError
from scalekit.parameterization import (
    LRSchedule,
    MuPBase,
    activation_scale_probe,
    lr_at,
    mup_plan,
    plan_to_text,
    sp_plan,
)
from scalekit.planner import CostQuery, pareto_frontier, plan_from_budget, total_cost
from scalekit.records import load_bundled, read_records
from scalekit.reference import SP_ROWS, WARMUP_TOKENS
from scalekit.scaling import CEREBRAS_FRONTIER, LossPoint, PowerLawFit, fit_power_law, loss_degradation, predict_loss
from scalekit.stability import FORMATS, adam_epsilon_ok, cast_fraction_zeroed, cast_to_format
from scalekit.svg import PlotSeries, emit_svg_plot

EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
BUNDLED = "bundled"
PROBE_SP_LR = 6e-4


def integer(text: str) -> int:
    """argparse type: an integer, also written as ``2.2e9`` or ``375e6``."""
    try:
        value = Decimal(text.replace("_", ""))
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value.is_finite() or value != value.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
    return value


def width_list(text: str) -> list[int]:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if not parts:
        raise argparse.ArgumentTypeError("empty width list")
    return [integer(p) for p in parts]


def _add_shape_flags(p: argparse.ArgumentParser, required: bool = True):
    p.add_argument("--d-model", type=integer, required=required)
    p.add_argument("--layers", type=integer, required=required)
    p.add_argument("--d-head", type=integer, required=required)
    p.add_argument("--d-ffn", type=integer, help="default 4 * d_model")
    p.add_argument("--vocab", type=integer, default=GPT2_VOCAB)
    p.add_argument("--seq", type=integer, default=DEFAULT_SEQ_LEN)


def _shape_from_args(args) -> ModelShape:
    preset = getattr(args, "shape", None)
    if preset:
        names = {r.name: r.shape for r in SP_ROWS}
        if preset not in names:
            raise InputError(f"unknown shape preset {preset!r}; choose from {', '.join(names)}")
        return names[preset]
    missing = [flag for flag, v in (("--d-model", args.d_model), ("--layers", args.layers), ("--d-head", args.d_head)) if v is None]
    if missing:
        raise InputError(f"missing {', '.join(missing)} (or pass --shape)")
    d_ffn = args.d_ffn if args.d_ffn is not None else 4 * args.d_model
    return ModelShape(args.d_model, args.layers, args.d_head, d_ffn, args.vocab, args.seq)


def _load(source: str):
    if source == BUNDLED:
        return load_bundled()
    return read_records(source).rows


def _write(path: str, text: str):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


# ---------------------------------------------------------------------------
# commands


def cmd_params(args) -> str:
    shape = _shape_from_args(args)
    return report.key_values("", [("params", count_params(shape))])


def cmd_flops(args) -> str:
    shape = _shape_from_args(args)
    mode = "inference" if args.inference else "train"
    per_seq = flops_per_sequence(shape, mode)
    seqs = sequences_for(args.tokens, shape.seq_len)
    pairs = [("mode", mode), ("sequences", seqs), ("flops_per_sequence", per_seq)]
    pairs.append(("total_flops", per_seq * seqs))
    pairs.append(("total_flops_approx", float(per_seq * seqs)))
    if args.inference:
        pairs.append(("flops_per_token", inference_flops_per_token(shape)))
    if args.breakdown:
        pairs += [(f"forward.{k}", v) for k, v in flop_breakdown(shape).items()]
    return report.key_values("", pairs)


def cmd_fit(args) -> str:
    records = [r for r in _load(args.records) if r.family == args.family and r.pile_xent is not None]
    records.sort(key=lambda r: (r.train_flops, r.label))
    points = [LossPoint(r.train_flops, r.pile_xent) for r in records]
    fit = fit_power_law(points)
    if args.out_svg:
        lo, hi = points[0].flops, points[-1].flops
        grid = np.geomspace(lo, hi, 100)
        series = [
            PlotSeries(args.family, [(p.flops, p.loss) for p in points], "scatter"),
            PlotSeries("fit", [(float(f), predict_loss(fit, float(f))) for f in grid], "line"),
        ]
        _write(args.out_svg, emit_svg_plot(series, "training FLOPs", "Pile test loss", f"{args.family} loss vs compute"))
    return report.fit_report(fit, points, [r.label for r in records])


def cmd_predict(args) -> str:
    fit = PowerLawFit(args.a, args.b, args.c)
    return report.key_values("", [("flops", args.flops), ("loss", predict_loss(fit, args.flops))])


def cmd_degrade(args) -> str:
    delta = loss_degradation(args.tau)
    return report.key_values("", [("tau", args.tau), ("delta_loss", delta), ("delta_loss_pct", delta * 100.0)])


def cmd_plan(args) -> str:
    return report.plan_report(plan_from_budget(args.budget_flops))


def cmd_tradeoff(args) -> str:
    records = [r for r in _load(args.records) if r.pile_xent is not None]
    frontier = pareto_frontier(records, args.infer_tokens)
    if args.out_svg:
        if not records:
            raise InputError("no records with a Pile loss to plot")
        cost = lambda r: float(total_cost(CostQuery.for_record(r, args.infer_tokens)))  # noqa: E731
        families = sorted({r.family for r in records})
        series = [
            PlotSeries(fam, [(cost(r), r.pile_xent) for r in records if r.family == fam], "scatter")
            for fam in families
        ]
        series.append(PlotSeries("frontier", [(cost(r), r.pile_xent) for r in frontier], "line"))
        _write(
            args.out_svg,
            emit_svg_plot(series, "training + inference FLOPs", "Pile test loss", f"{args.infer_tokens} inference tokens"),
        )
    return report.frontier_report(frontier, args.infer_tokens, considered=len(records))


def cmd_mup(args) -> str:
    shape = ModelShape(args.d_model, args.layers, args.d_head, 4 * args.d_model)
    base = MuPBase(args.base_width, args.base_lr, args.base_std, args.m_emb)
    return plan_to_text(mup_plan(shape, base))


def cmd_schedule(args) -> str:
    sched = LRSchedule(args.max_lr, args.warmup_tokens, args.total_tokens, args.decay)
    return report.key_values("", [("tokens_seen", args.at), ("lr", lr_at(sched, args.at))])


def cmd_probe(args) -> str:
    base = MuPBase()
    shape = ModelShape(base.d_model_base, 1, 64, 4 * base.d_model_base)
    plan = mup_plan(shape, base) if args.param == "mup" else sp_plan(shape, PROBE_SP_LR)
    table = activation_scale_probe(plan, args.widths, args.samples, args.seed)
    return report.probe_report(args.param, table, args.samples, args.seed)


def _read_values(path: str) -> np.ndarray:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        for tok in re.split(r"[,\s]+", line.strip()):
            if not tok:
                continue
            try:
                values.append(float(tok))
            except ValueError:
                raise InputError(f"line {lineno}: not a number: {tok!r}") from None
    return np.array(values, dtype=np.float64)


def cmd_stability_cast(args) -> str:
    fmt = FORMATS[args.format]
    values = _read_values(args.values)
    frac = cast_fraction_zeroed(values, fmt, args.ftz)
    nonzero = values[values != 0]
    overflow = int(np.isinf(cast_to_format(nonzero, fmt)).sum() - np.isinf(nonzero).sum())
    return report.key_values(
        "",
        [
            ("format", fmt.name),
            ("values", int(values.size)),
            ("nonzero", int(nonzero.size)),
            ("zeroed_fraction", frac),
            ("overflowed", overflow),
        ],
    )


def cmd_stability_adam(args) -> str:
    ok, threshold = adam_epsilon_ok(args.mu_v, args.eps)
    return report.key_values("", [("threshold", threshold), ("epsilon", args.eps), ("ok", "yes" if ok else "no")])


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scalekit", description="Compute-optimal scaling toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="exact parameter count")
    _add_shape_flags(p, required=False)
    p.add_argument("--shape", help="preset shape by reference name, e.g. 1.3B")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("flops", help="training or inference FLOPs for a token count")
    _add_shape_flags(p, required=False)
    p.add_argument("--shape", help="preset shape by reference name, e.g. 1.3B")
    p.add_argument("--tokens", type=integer, required=True)
    p.add_argument("--inference", action="store_true")
    p.add_argument("--breakdown", action="store_true", help="list forward-pass terms per sequence")
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("fit", help="fit L(f) = (f/a)^b + c to records")
    p.add_argument("--records", required=True, help=f"CSV file or '{BUNDLED}'")
    p.add_argument("--family", default="Cerebras-GPT")
    p.add_argument("--out-svg")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="evaluate a power law")
    p.add_argument("--a", type=positive_float, default=CEREBRAS_FRONTIER.a)
    p.add_argument("--b", type=float, default=CEREBRAS_FRONTIER.b)
    p.add_argument("--c", type=float, default=CEREBRAS_FRONTIER.c)
    p.add_argument("--flops", type=positive_float, required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("degrade", help="loss penalty at a tokens-per-parameter ratio")
    p.add_argument("--tau", type=positive_float, required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("plan", help="largest compute-optimal run within a FLOP budget")
    p.add_argument("--budget-flops", type=positive_float, required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("tradeoff", help="Pareto frontier of training+inference cost vs loss")
    p.add_argument("--records", required=True, help=f"CSV file or '{BUNDLED}'")
    p.add_argument("--infer-tokens", type=integer, required=True)
    p.add_argument("--out-svg")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("mup", help="muP layer plan for a target shape")
    p.add_argument("--d-model", type=integer, required=True)
    p.add_argument("--layers", type=integer, required=True)
    p.add_argument("--d-head", type=integer, required=True)
    p.add_argument("--base-width", type=integer, default=256)
    p.add_argument("--base-lr", type=positive_float, default=6e-3)
    p.add_argument("--base-std", type=positive_float, default=0.08)
    p.add_argument("--m-emb", type=positive_float, default=10.0)
    p.set_defaults(func=cmd_mup)

    p = sub.add_parser("schedule", help="learning rate at a point in training")
    p.add_argument("--max-lr", type=positive_float, required=True)
    p.add_argument("--warmup-tokens", type=integer, default=WARMUP_TOKENS)
    p.add_argument("--total-tokens", type=integer, required=True)
    p.add_argument("--decay", choices=("linear", "cosine"), default="linear")
    p.add_argument("--at", type=integer, required=True)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("probe", help="output RMS of freshly initialised hidden layers")
    p.add_argument("--param", choices=("sp", "mup"), required=True)
    p.add_argument("--widths", type=width_list, default=[256, 1024, 4096])
    p.add_argument("--samples", type=integer, default=1000)
    p.add_argument("--seed", type=integer, default=0)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("stability", help="numerical stability checks")
    ssub = p.add_subparsers(dest="check", required=True)
    q = ssub.add_parser("cast", help="fraction of values that underflow to zero")
    q.add_argument("--format", choices=tuple(FORMATS), required=True)
    q.add_argument("--values", required=True, help="file of numbers, or '-' for stdin")
    q.add_argument("--ftz", action="store_true", help="flush subnormal results to zero")
    q.set_defaults(func=cmd_stability_cast)
    q = ssub.add_parser("adam-eps", help="check Adam epsilon against sqrt(mu_v)/1000")
    q.add_argument("--mu-v", type=float, required=True)
    q.add_argument("--eps", type=positive_float, required=True)
    q.set_defaults(func=cmd_stability_adam)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = args.func(args)
    except InfeasibleError as exc:
        print(f"scalekit: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InputError as exc:
        print(f"scalekit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
