"""Plain-text reports with a fixed layout.

Every float is printed with 6 significant figures and every report ends
with a newline, so identical inputs give byte-identical text.
"""

from __future__ import annotations

from typing import Sequence

from scalekit.accounting import ModelShape
from scalekit.planner import CostQuery, EvalRecord, TrainingPlan, total_cost
from scalekit.scaling import LossPoint, PowerLawFit, predict_loss


def fmt(value: float) -> str:
    # ints print exactly; everything else gets 6 significant figures
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    return f"{value:.6g}"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> list[str]:
    widths = [len(h) for h in header]
    for row in rows:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    line = lambda cells: "  ".join(c.rjust(w) for c, w in zip(cells, widths)).rstrip()  # noqa: E731
    return [line(header)] + [line(r) for r in rows]


def _finish(lines: list[str]) -> str:
    return "\n".join(lines) + "\n"


def shape_lines(shape: ModelShape) -> list[str]:
    return [
        f"d_model: {shape.d_model}",
        f"n_layers: {shape.n_layers}",
        f"d_head: {shape.d_head}",
        f"d_ffn: {shape.d_ffn}",
        f"vocab_size: {shape.vocab_size}",
        f"seq_len: {shape.seq_len}",
    ]


def fit_report(fit: PowerLawFit, points: Sequence[LossPoint], labels: Sequence[str] | None = None) -> str:
    labels = labels or [f"#{i + 1}" for i in range(len(points))]
    lines = [
        "power-law fit: L(f) = (f / a)^b + c",
        f"a: {fmt(fit.a)}",
        f"b: {fmt(fit.b)}",
        f"c: {fmt(fit.c)}",
        f"points: {len(points)}",
        "",
    ]
    rows = []
    for label, p in zip(labels, points):
        pred = predict_loss(fit, p.flops)
        rows.append([label, fmt(p.flops), fmt(p.loss), fmt(pred), fmt((pred - p.loss) / p.loss * 100.0)])
    lines += _table(["label", "flops", "loss", "predicted", "rel_err_pct"], rows)
    return _finish(lines)


def plan_report(plan: TrainingPlan) -> str:
    sched = plan.schedule()
    lines = ["training plan", *shape_lines(plan.shape)]
    lines += [
        f"params: {plan.params}",
        f"tokens: {plan.tokens}",
        f"train_flops: {plan.train_flops}",
        f"train_flops_approx: {fmt(float(plan.train_flops))}",
        f"batch_size_tokens: {plan.batch_size_tokens}",
        f"max_lr: {fmt(plan.base_lr)}",
        f"warmup_tokens: {sched.warmup_tokens}",
        f"decay: {plan.decay_type}",
        f"final_lr: {fmt(plan.base_lr * sched.floor_fraction)}",
        f"reference_model: {plan.reference}",
    ]
    lines += [f"note: {n}" for n in plan.notes]
    return _finish(lines)


def frontier_report(frontier: Sequence[EvalRecord], n_infer_tokens: int, considered: int | None = None) -> str:
    lines = [f"pareto frontier at {n_infer_tokens} inference tokens"]
    if considered is not None:
        lines.append(f"records considered: {considered}")
    lines.append(f"{len(frontier)} records")
    if frontier:
        rows = []
        for rec in frontier:
            cost = total_cost(CostQuery.for_record(rec, n_infer_tokens))
            rows.append([rec.family, rec.label, fmt(float(cost)), fmt(rec.pile_xent)])
        lines += [""] + _table(["family", "label", "total_flops", "pile_xent"], rows)
    return _finish(lines)


def probe_report(parameterization: str, table: Sequence[tuple[int, float]], samples: int, seed: int) -> str:
    lines = [f"activation probe ({parameterization}, samples={samples}, seed={seed})"]
    lines += _table(["width", "rms"], [[str(w), fmt(v)] for w, v in table])
    if len(table) > 1:
        values = [v for _, v in table]
        lines.append(f"max/min ratio: {fmt(max(values) / min(values))}")
    return _finish(lines)


def key_values(title: str, pairs: Sequence[tuple[str, object]]) -> str:
    lines = [title] if title else []
    for key, value in pairs:
        text = fmt(value) if isinstance(value, (int, float)) and not isinstance(value, bool) else str(value)
        lines.append(f"{key}: {text}")
    return _finish(lines)
