"""Parameter and algorithmic-FLOPs accounting for GPT-style decoders.

All counts are plain Python ints, so they are exact at any magnitude. The
formulas count "algorithmic" FLOPs only: no activation recomputation or other
implementation-specific work is included.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

from scalekit.errors import InputError

GPT2_VOCAB = 50257
DEFAULT_SEQ_LEN = 2048
TOKENS_PER_PARAM = 20.0

# Per-activation costs of the element-wise ops.
LAYER_NORM_FLOPS = 7
GELU_FLOPS = 20


@dataclass(frozen=True)
class ModelShape:
    """Architecture symbols consumed by every accounting formula."""

    d_model: int
    n_layers: int
    d_head: int
    d_ffn: int
    vocab_size: int = GPT2_VOCAB
    seq_len: int = DEFAULT_SEQ_LEN

    def __post_init__(self):
        for name in ("d_model", "d_head", "d_ffn", "vocab_size", "seq_len"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                raise InputError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.n_layers, int) or self.n_layers < 0:
            raise InputError(f"n_layers must be a non-negative integer, got {self.n_layers!r}")
        if self.d_model % self.d_head:
            raise InputError(f"d_model={self.d_model} is not divisible by d_head={self.d_head}")

    @property
    def num_heads(self) -> int:
        return self.d_model // self.d_head

    @property
    def aspect_ratio(self) -> float:
        return self.d_model / self.n_layers if self.n_layers else float("inf")

    @classmethod
    def gpt(cls, d_model: int, n_layers: int, d_head: int, **kw) -> "ModelShape":
        """Shape with the conventional 4x feed-forward width."""
        return cls(d_model, n_layers, d_head, 4 * d_model, **kw)


def count_params(shape: ModelShape) -> int:
    """Exact parameter count, including learned position embeddings.

    The feed-forward term assumes ``d_ffn == 4 * d_model``; ``shape.d_ffn`` and
    ``shape.d_head`` do not enter the count.
    """
    d = shape.d_model
    embedding = shape.vocab_size * d + d * shape.seq_len
    ln1 = 2 * d
    attn = 4 * (d**2 + d)
    ln2 = 2 * d
    ffn = 8 * d**2 + 5 * d
    encoder = shape.n_layers * (ln1 + attn + ln2 + ffn)
    final_ln = 2 * d
    return embedding + encoder + final_ln


def _forward_terms(shape: ModelShape) -> dict[str, int]:
    d, n, s, v = shape.d_model, shape.n_layers, shape.seq_len, shape.vocab_size
    k = shape.d_head
    inner = k * shape.num_heads
    return {
        "embeddings": 2 * s * v * d,
        "position_embeddings": 2 * d * s,
        "kqv_proj": n * 2 * 3 * s * d * inner,
        "kq_logits": n * 2 * s**2 * inner,
        "softmax": n * 3 * inner * s**2,
        "softmax_q_red": n * s**2 * inner,
        "final_linear": n * 2 * s * inner * d,
        # softmax(QK^T) @ V
        "sm_v_dot": n * 2 * s**2 * inner,
        "dense_blocks": n * 16 * s * d**2,
        "final_logits": 2 * s * d * v,
        "layer_norm": n * 2 * LAYER_NORM_FLOPS * s * d,
        "gelu": n * GELU_FLOPS * 4 * s * d,
    }


def flop_breakdown(shape: ModelShape) -> dict[str, int]:
    """Forward-pass FLOPs per sequence, itemised by term."""
    return _forward_terms(shape)


def flops_per_sequence(
    shape: ModelShape, mode: Literal["train", "inference"] = "train"
) -> int:
    """FLOPs to process one full sequence.

    Training is three times the forward pass (forward plus the two backward
    matmuls), minus one copy of the embedding lookups, which never propagate a
    delta to an earlier layer.
    """
    terms = _forward_terms(shape)
    forward = sum(terms.values())
    if mode == "inference":
        return forward
    if mode != "train":
        raise InputError(f"mode must be 'train' or 'inference', got {mode!r}")
    return 3 * forward - terms["embeddings"] - terms["position_embeddings"]


def sequences_for(tokens: int, seq_len: int) -> int:
    """Whole sequences covering ``tokens``, rounding half up."""
    if tokens < 0:
        raise InputError("token count must be non-negative")
    return (2 * tokens + seq_len) // (2 * seq_len)


def train_flops_total(shape: ModelShape, tokens: int) -> int:
    return flops_per_sequence(shape, "train") * sequences_for(tokens, shape.seq_len)


def inference_flops_per_token(shape: ModelShape) -> int:
    # floor division keeps the value an integer
    return flops_per_sequence(shape, "inference") // shape.seq_len


def chinchilla_tokens(params: int, ratio: float = TOKENS_PER_PARAM) -> int:
    """Token budget ``round(ratio * params)`` with halves rounded up."""
    if params <= 0 or ratio <= 0:
        raise InputError("params and ratio must be positive")
    exact = Fraction(ratio) * params
    return int(exact + Fraction(1, 2)) if exact.denominator != 1 else int(exact)
