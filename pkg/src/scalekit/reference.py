"""Published Cerebras-GPT model configurations.

Each row carries the architecture plus the training settings used for it.
Batch sizes are stored in sequences of ``DEFAULT_SEQ_LEN`` tokens; the
headline token values (246K, 541K, ...) are these times 2048.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from scalekit.accounting import DEFAULT_SEQ_LEN, ModelShape

WARMUP_TOKENS = 375_000_000
LR_FLOOR_FRACTION = 0.1

# 13B: 720 sequences for the first 84B tokens, then 1080.
RAMP_13B_SWITCH_TOKENS = 84_000_000_000
RAMP_13B_SEQUENCES = (720, 1080)


@dataclass(frozen=True)
class ReferenceRow:
    name: str
    shape: ModelShape
    total_tokens_label: str
    batch_sequences: int
    lr: float
    decay: Literal["linear", "cosine"]
    mup: bool = False
    adam_eps: float = 1e-8
    batch_ramp: tuple[int, ...] | None = None

    @property
    def batch_size_tokens(self) -> int:
        return self.batch_sequences * self.shape.seq_len

    @property
    def total_tokens_published(self) -> float:
        return float(self.total_tokens_label.rstrip("B")) * 1e9


def _shape(d, n, k):
    return ModelShape(d, n, k, 4 * d)


SP_ROWS: tuple[ReferenceRow, ...] = (
    ReferenceRow("111M", _shape(768, 10, 64), "2.2B", 120, 6.0e-4, "linear"),
    ReferenceRow("256M", _shape(1088, 14, 64), "5.1B", 264, 6.0e-4, "linear"),
    ReferenceRow("590M", _shape(1536, 18, 128), "11.8B", 264, 2.0e-4, "linear"),
    ReferenceRow("1.3B", _shape(2048, 24, 128), "26.3B", 528, 2.0e-4, "cosine"),
    ReferenceRow("2.7B", _shape(2560, 32, 80), "53.0B", 528, 2.0e-4, "cosine"),
    ReferenceRow("6.7B", _shape(4096, 32, 128), "133.2B", 1040, 1.2e-4, "linear", adam_eps=1e-9),
    ReferenceRow(
        "13B",
        _shape(5120, 40, 128),
        "257.1B",
        RAMP_13B_SEQUENCES[-1],
        1.2e-4,
        "cosine",
        adam_eps=1e-9,
        batch_ramp=RAMP_13B_SEQUENCES,
    ),
)

MUP_ROWS: tuple[ReferenceRow, ...] = tuple(
    ReferenceRow(r.name, r.shape, r.total_tokens_label, r.batch_sequences, 6.0e-3, "linear", mup=True)
    for r in SP_ROWS[:5]
)

ALL_ROWS = SP_ROWS + MUP_ROWS

assert all(r.shape.seq_len == DEFAULT_SEQ_LEN for r in ALL_ROWS)


def sp_row(name: str) -> ReferenceRow:
    for row in SP_ROWS:
        if row.name == name:
            return row
    raise KeyError(name)
