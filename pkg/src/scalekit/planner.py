"""Compute-optimal training plans and training+inference cost frontiers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Literal, Mapping, Sequence

from scalekit.accounting import (
    GPT2_VOCAB,
    DEFAULT_SEQ_LEN,
    ModelShape,
    chinchilla_tokens,
    count_params,
    inference_flops_per_token,
    train_flops_total,
)
from scalekit.errors import BudgetTooSmall, InputError, MissingLoss, Unsatisfiable
from scalekit.parameterization import LRSchedule
from scalekit.reference import (
    LR_FLOOR_FRACTION,
    RAMP_13B_SEQUENCES,
    RAMP_13B_SWITCH_TOKENS,
    SP_ROWS,
    WARMUP_TOKENS,
    ReferenceRow,
)

# Shape search grid.
D_MODEL_STEP = 64
D_MODEL_MIN = 256
D_MODEL_MAX = 16384
TARGET_ASPECT = 80
ASPECT_SLACK = 0.25
HEAD_SIZES = (128, 80, 64)  # preference order on ties
PARAM_TOLERANCE = 0.10
MIN_TARGET_PARAMS = 10**6


@dataclass(frozen=True)
class EvalRecord:
    """One evaluated model: training cost, Pile loss and downstream accuracies."""

    family: str
    label: str
    params: int
    train_flops: float
    pile_xent: float | None = None
    tokens: int | None = None
    downstream: Mapping[str, float] = field(default_factory=dict)
    shape: ModelShape | None = None
    dedup: bool = False

    def __post_init__(self):
        if not self.train_flops > 0:
            raise InputError(f"{self.family} {self.label}: train_flops must be positive")
        if self.params <= 0:
            raise InputError(f"{self.family} {self.label}: params must be positive")
        for task, acc in self.downstream.items():
            if not 0.0 <= acc <= 1.0:
                raise InputError(f"{self.family} {self.label}: accuracy {task}={acc} outside [0, 1]")
        if self.pile_xent is not None and not self.pile_xent > 0:
            raise InputError(f"{self.family} {self.label}: pile_xent must be positive")

    @property
    def key(self) -> tuple[str, str]:
        return (self.family, self.label)

    @property
    def is_cerebras(self) -> bool:
        return self.family.startswith("Cerebras-GPT")

    @property
    def infer_flops_per_token(self) -> int:
        """Exact per-token cost from the shape, else ``2 * params``."""
        if self.shape is not None:
            return inference_flops_per_token(self.shape)
        return 2 * self.params

    @property
    def train_flops_int(self) -> int:
        return flops_as_int(self.train_flops)


def flops_as_int(value: float) -> int:
    """Integer FLOPs for a float as written (``2.3e22`` -> ``23 * 10**21``)."""
    return int(Decimal(repr(float(value))).to_integral_value(ROUND_HALF_UP))


@dataclass(frozen=True)
class TrainingPlan:
    shape: ModelShape
    params: int
    tokens: int
    train_flops: int
    batch_size_tokens: int
    base_lr: float
    decay_type: Literal["linear", "cosine"]
    reference: str = ""
    notes: tuple[str, ...] = ()

    def schedule(self) -> LRSchedule:
        # short runs would otherwise never leave warmup
        warmup = min(WARMUP_TOKENS, self.tokens // 2)
        return LRSchedule(self.base_lr, warmup, self.tokens, self.decay_type, LR_FLOOR_FRACTION)


@dataclass(frozen=True)
class CostQuery:
    """Training cost plus ``n_infer_tokens`` tokens of inference."""

    n_infer_tokens: int
    per_token_infer_flops: int
    train_flops: int

    def __post_init__(self):
        if self.n_infer_tokens < 0 or self.per_token_infer_flops < 0 or self.train_flops < 0:
            raise InputError("cost components must be non-negative")

    @classmethod
    def for_record(cls, record: EvalRecord, n_infer_tokens: int) -> "CostQuery":
        return cls(int(n_infer_tokens), record.infer_flops_per_token, record.train_flops_int)


def total_cost(query: CostQuery) -> int:
    return query.train_flops + query.n_infer_tokens * query.per_token_infer_flops


def crossover_inference_tokens(plan_small: CostQuery, plan_large: CostQuery) -> int | None:
    """Inference tokens at which the two total costs meet.

    Solves ``train_A + n * i_A = train_B + n * i_B`` exactly and returns the
    smallest integer ``n`` at or past the solution, or ``None`` when there is
    no non-negative solution (including parallel cost lines that never meet).
    """
    d_train = plan_large.train_flops - plan_small.train_flops
    d_infer = plan_small.per_token_infer_flops - plan_large.per_token_infer_flops
    if d_infer == 0:
        return 0 if d_train == 0 else None
    n = Fraction(d_train, d_infer)
    if n < 0:
        return None
    return math.ceil(n)


def pareto_frontier(records: Iterable[EvalRecord], n_infer_tokens: int) -> list[EvalRecord]:
    """Records not dominated in (total cost, Pile loss), cheapest first.

    On exact ties in both coordinates the record sorting first by
    (family, label) is kept.
    """
    scored = []
    for rec in records:
        if rec.pile_xent is None:
            raise MissingLoss(f"{rec.family} {rec.label} has no Pile loss")
        cost = total_cost(CostQuery.for_record(rec, n_infer_tokens))
        scored.append((cost, rec.pile_xent, rec.family, rec.label, rec))
    scored.sort(key=lambda t: t[:4])
    frontier = []
    best_loss = math.inf
    for cost, loss, _, _, rec in scored:
        if loss < best_loss:
            frontier.append(rec)
            best_loss = loss
    return frontier


def dominates(a: tuple[int, float], b: tuple[int, float]) -> bool:
    return a[0] <= b[0] and a[1] <= b[1] and (a[0] < b[0] or a[1] < b[1])


# ---------------------------------------------------------------------------
# shape search


def _layer_range(d_model: int) -> range:
    centre = int(Fraction(d_model, TARGET_ASPECT) + Fraction(1, 2))
    lo = max(1, math.ceil(centre * (1 - ASPECT_SLACK)))
    hi = max(lo, math.floor(centre * (1 + ASPECT_SLACK)))
    return range(lo, hi + 1)


def _head_for(d_model: int) -> int | None:
    for k in HEAD_SIZES:
        if d_model % k == 0:
            return k
    return None


@lru_cache(maxsize=1)
def shape_grid() -> tuple[tuple[ModelShape, int, int], ...]:
    """Every grid shape with (params, train FLOPs at 20 tokens/param)."""
    out = []
    for d in range(D_MODEL_MIN, D_MODEL_MAX + 1, D_MODEL_STEP):
        head = _head_for(d)
        if head is None:
            continue
        for n in _layer_range(d):
            shape = ModelShape(d, n, head, 4 * d, GPT2_VOCAB, DEFAULT_SEQ_LEN)
            params = count_params(shape)
            flops = train_flops_total(shape, chinchilla_tokens(params))
            out.append((shape, params, flops))
    return tuple(out)


def suggest_shape(target_params: int) -> ModelShape:
    """Grid shape closest to aspect ratio 80 within 10% of ``target_params``.

    Ties go to the smaller ``d_model``; the head size is the largest of
    128/80/64 that divides it.
    """
    if target_params < MIN_TARGET_PARAMS:
        raise InputError(f"target_params must be at least {MIN_TARGET_PARAMS}")
    best = None
    for shape, params, _ in shape_grid():
        if abs(params - target_params) > PARAM_TOLERANCE * target_params:
            continue
        score = (abs(Fraction(shape.d_model, shape.n_layers) - TARGET_ASPECT), shape.d_model, shape.n_layers)
        if best is None or score < best[0]:
            best = (score, shape)
    if best is None:
        smallest = min(p for _, p, _ in shape_grid())
        raise Unsatisfiable(
            f"no grid shape within {PARAM_TOLERANCE:.0%} of {target_params} parameters "
            f"(smallest grid model has {smallest})"
        )
    return best[1]


def nearest_reference(params: int, rows: Sequence[ReferenceRow] = SP_ROWS) -> ReferenceRow:
    """Reference row closest in log-parameter distance."""
    return min(rows, key=lambda r: (abs(math.log(params / count_params(r.shape))), count_params(r.shape)))


def minimum_budget() -> int:
    return min(f for _, _, f in shape_grid())


def plan_from_budget(flop_budget: float) -> TrainingPlan:
    """Largest-cost grid shape whose 20 tokens/param run fits the budget.

    "Largest" means most training FLOPs; equal costs prefer more parameters.
    Batch size, peak LR and decay type come from the nearest reference row.
    """
    budget = flop_budget if isinstance(flop_budget, int) else flops_as_int(flop_budget)
    best = None
    for shape, params, flops in shape_grid():
        if flops > budget:
            continue
        key = (flops, params, -shape.d_model)
        if best is None or key > best[0]:
            best = (key, shape, params, flops)
    if best is None:
        raise BudgetTooSmall(f"budget {flop_budget:.6g} FLOPs is below the smallest plan ({minimum_budget():.6g})")
    _, shape, params, flops = best
    ref = nearest_reference(params)
    notes = []
    if ref.batch_ramp:
        seq = shape.seq_len
        notes.append(
            f"batch ramp: {RAMP_13B_SEQUENCES[0] * seq} tokens for the first "
            f"{RAMP_13B_SWITCH_TOKENS} tokens, then {RAMP_13B_SEQUENCES[1] * seq}"
        )
    return TrainingPlan(
        shape=shape,
        params=params,
        tokens=chinchilla_tokens(params),
        train_flops=flops,
        batch_size_tokens=ref.batch_size_tokens,
        base_lr=ref.lr,
        decay_type=ref.decay,
        reference=ref.name,
        notes=tuple(notes),
    )
