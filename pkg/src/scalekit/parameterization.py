"""Layer-wise hyperparameters for standard (SP) and maximal-update (muP) models.

A :class:`LayerPlan` records, for each class of weights, the initializer
standard deviation, the learning rate and the activation multiplier applied to
the layer output. Plans serialise to an INI-style text file so external
training code can consume them without importing this package.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Mapping, Sequence

import numpy as np

from scalekit.accounting import ModelShape
from scalekit.errors import InputError, OutOfRange, ZeroBatch, ZeroLayers

SP_INIT_STD = 0.02
TRUNCATION_BOUND = 2.0  # in standard deviations; out-of-range draws are resampled

LAYER_CLASSES = (
    "embedding",
    "ln_gain",
    "ln_bias",
    "bias",
    "qkv",
    "attn_out",
    "ffn1",
    "ffn2",
    "output_logits",
)
# Classes whose lr and init variance shrink with 1/m_width under muP.
WIDTH_SCALED = ("qkv", "attn_out", "ffn1", "ffn2")
# Last layer inside each residual branch; variance also divided by 2 * n_layers.
RESIDUAL_OUTPUT = ("attn_out", "ffn2")

PLAN_FORMAT_VERSION = "1"


@dataclass(frozen=True)
class MuPBase:
    """Proxy-model hyperparameters that transfer across widths."""

    d_model_base: int = 256
    eta_base: float = 6e-3
    sigma_base: float = 0.08
    m_emb: float = 10.0

    def __post_init__(self):
        if self.d_model_base <= 0 or not (self.eta_base > 0 and self.sigma_base > 0 and self.m_emb > 0):
            raise InputError("muP base values must all be strictly positive")


@dataclass(frozen=True)
class LayerSettings:
    init_std: float
    lr: float
    multiplier: float = 1.0
    # constant initial value for gains and biases; None means random init
    init_value: float | None = None


@dataclass(frozen=True)
class LayerPlan:
    parameterization: Literal["sp", "mup"]
    layers: Mapping[str, LayerSettings]
    attention_logit_scale: float
    m_width: float
    d_model: int
    n_layers: int
    d_head: int
    base: MuPBase | None = None

    def __getitem__(self, layer_class: str) -> LayerSettings:
        return self.layers[layer_class]

    def hidden_init_std(self, width: int) -> float:
        """ffn1 initializer std this plan's rule gives a layer of ``width``."""
        if self.parameterization == "sp":
            return self.layers["ffn1"].init_std
        base = self.base
        return math.sqrt(float(Fraction(base.sigma_base) ** 2 * Fraction(base.d_model_base, width)))


def _require_layers(shape: ModelShape):
    if shape.n_layers < 1:
        raise ZeroLayers("parameterization plans need at least one decoder layer")


def _constants(lr: float) -> dict[str, LayerSettings]:
    return {
        "ln_gain": LayerSettings(0.0, lr, init_value=1.0),
        "ln_bias": LayerSettings(0.0, lr, init_value=0.0),
        "bias": LayerSettings(0.0, lr, init_value=0.0),
    }


def sp_plan(shape: ModelShape, lr: float) -> LayerPlan:
    """Standard parameterization with a single global learning rate."""
    _require_layers(shape)
    if not lr > 0:
        raise InputError("lr must be positive")
    residual_std = SP_INIT_STD / math.sqrt(2 * shape.n_layers)
    layers = {
        "embedding": LayerSettings(SP_INIT_STD, lr),
        **_constants(lr),
        "qkv": LayerSettings(SP_INIT_STD, lr),
        "attn_out": LayerSettings(residual_std, lr),
        "ffn1": LayerSettings(SP_INIT_STD, lr),
        "ffn2": LayerSettings(residual_std, lr),
        "output_logits": LayerSettings(SP_INIT_STD, lr),
    }
    return LayerPlan(
        "sp",
        {k: layers[k] for k in LAYER_CLASSES},
        attention_logit_scale=1.0 / math.sqrt(shape.d_head),
        m_width=1.0,
        d_model=shape.d_model,
        n_layers=shape.n_layers,
        d_head=shape.d_head,
    )


def mup_plan(shape: ModelShape, base: MuPBase | None = None) -> LayerPlan:
    """muP plan; every width scaling uses ``m_width = d_model / d_model_base``."""
    _require_layers(shape)
    base = base or MuPBase()
    m_width = Fraction(shape.d_model, base.d_model_base)
    eta = Fraction(base.eta_base)
    var = Fraction(base.sigma_base) ** 2

    hidden_lr = float(eta / m_width)
    hidden_std = math.sqrt(float(var / m_width))
    residual_std = math.sqrt(float(var / (2 * m_width * shape.n_layers)))
    layers = {
        "embedding": LayerSettings(base.sigma_base, base.eta_base, multiplier=base.m_emb),
        **_constants(base.eta_base),
        "qkv": LayerSettings(hidden_std, hidden_lr),
        "attn_out": LayerSettings(residual_std, hidden_lr),
        "ffn1": LayerSettings(hidden_std, hidden_lr),
        "ffn2": LayerSettings(residual_std, hidden_lr),
        # tied to the embedding weights
        "output_logits": LayerSettings(base.sigma_base, base.eta_base, multiplier=float(1 / m_width)),
    }
    return LayerPlan(
        "mup",
        {k: layers[k] for k in LAYER_CLASSES},
        attention_logit_scale=1.0 / shape.d_head,
        m_width=float(m_width),
        d_model=shape.d_model,
        n_layers=shape.n_layers,
        d_head=shape.d_head,
        base=base,
    )


def mu_transfer(base: MuPBase, target_shapes: Sequence[ModelShape]) -> list[LayerPlan]:
    if not target_shapes:
        raise InputError("mu_transfer needs at least one target shape")
    return [mup_plan(shape, base) for shape in target_shapes]


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class LRSchedule:
    max_lr: float
    warmup_tokens: int
    total_tokens: int
    decay: Literal["linear", "cosine"] = "linear"
    floor_fraction: float = 0.1

    def __post_init__(self):
        if not self.max_lr > 0:
            raise InputError("max_lr must be positive")
        if not 0 <= self.warmup_tokens < self.total_tokens:
            raise InputError("need 0 <= warmup_tokens < total_tokens")
        if not 0 < self.floor_fraction <= 1:
            raise InputError("floor_fraction must be in (0, 1]")
        if self.decay not in ("linear", "cosine"):
            raise InputError(f"unknown decay type {self.decay!r}")


def lr_at(schedule: LRSchedule, tokens_seen: int) -> float:
    """Linear warmup from zero, then linear or cosine decay to the floor."""
    s = schedule
    if not 0 <= tokens_seen <= s.total_tokens:
        raise OutOfRange(f"tokens_seen={tokens_seen} outside [0, {s.total_tokens}]")
    if tokens_seen < s.warmup_tokens:
        return s.max_lr * (tokens_seen / s.warmup_tokens)
    if tokens_seen == s.warmup_tokens:
        return s.max_lr
    t = (tokens_seen - s.warmup_tokens) / (s.total_tokens - s.warmup_tokens)
    floor = s.floor_fraction
    if s.decay == "linear":
        shape = 1.0 - t
    else:
        shape = (1.0 + math.cos(math.pi * t)) / 2.0
    return s.max_lr * (floor + (1.0 - floor) * shape)


def scale_lr_for_batch(lr: float, batch_ref: int, batch_new: int) -> float:
    """Scale the learning rate linearly with batch size."""
    if batch_ref <= 0 or batch_new <= 0:
        raise ZeroBatch("batch sizes must be positive")
    return lr * (batch_new / batch_ref)


# ---------------------------------------------------------------------------
# activation probe


def _truncated_std_factor(bound: float) -> float:
    # std of a unit normal truncated to [-bound, bound]
    pdf = math.exp(-bound * bound / 2) / math.sqrt(2 * math.pi)
    mass = math.erf(bound / math.sqrt(2))
    return math.sqrt(1 - 2 * bound * pdf / mass)


def truncated_normal(rng: np.random.Generator, std: float, size, bound: float = TRUNCATION_BOUND) -> np.ndarray:
    """Zero-mean draws restricted to ``+-bound`` unit deviations, scaled so
    the resulting distribution has standard deviation exactly ``std``."""
    z = rng.standard_normal(size)
    bad = np.abs(z) > bound
    while bad.any():
        z[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(z) > bound
    return z * (std / _truncated_std_factor(bound))


def activation_scale_probe(
    plan: LayerPlan, widths: Sequence[int], samples: int, seed: int, chunk: int = 256
) -> list[tuple[int, float]]:
    """Output RMS of a freshly initialised ``w x w`` hidden layer.

    For each width one weight matrix is drawn from the plan's ffn1 rule and
    applied to ``samples`` standard-normal inputs; the per-input RMS is
    averaged. Each width has its own generator seeded by ``(seed, width)``.
    """
    if samples < 1:
        raise InputError("samples must be at least 1")
    table = []
    for width in widths:
        if width < 64:
            raise InputError(f"probe widths must be >= 64, got {width}")
        rng = np.random.default_rng([seed, width])
        weights = truncated_normal(rng, plan.hidden_init_std(width), (width, width))
        total = 0.0
        for start in range(0, samples, chunk):
            m = min(chunk, samples - start)
            x = rng.standard_normal((width, m))
            y = weights @ x
            total += float(np.sqrt(np.mean(y * y, axis=0)).sum())
        table.append((width, total / samples))
    return table


# ---------------------------------------------------------------------------
# text format


def plan_to_text(plan: LayerPlan) -> str:
    cfg = configparser.ConfigParser(interpolation=None)
    cfg["plan"] = {
        "format": PLAN_FORMAT_VERSION,
        "parameterization": plan.parameterization,
        "d_model": str(plan.d_model),
        "n_layers": str(plan.n_layers),
        "d_head": str(plan.d_head),
        "m_width": repr(plan.m_width),
        "attention_logit_scale": repr(plan.attention_logit_scale),
    }
    if plan.base is not None:
        b = plan.base
        cfg["base"] = {
            "d_model_base": str(b.d_model_base),
            "eta_base": repr(b.eta_base),
            "sigma_base": repr(b.sigma_base),
            "m_emb": repr(b.m_emb),
        }
    for name in LAYER_CLASSES:
        s = plan.layers[name]
        section = {"init_std": repr(s.init_std), "lr": repr(s.lr), "multiplier": repr(s.multiplier)}
        if s.init_value is not None:
            section["init_value"] = repr(s.init_value)
        cfg[name] = section
    buf = io.StringIO()
    cfg.write(buf)
    return buf.getvalue()


def plan_from_text(text: str) -> LayerPlan:
    cfg = configparser.ConfigParser(interpolation=None)
    try:
        cfg.read_string(text)
        head = cfg["plan"]
        if head.get("format") != PLAN_FORMAT_VERSION:
            raise InputError(f"unsupported plan format {head.get('format')!r}")
        base = None
        if cfg.has_section("base"):
            b = cfg["base"]
            base = MuPBase(int(b["d_model_base"]), float(b["eta_base"]), float(b["sigma_base"]), float(b["m_emb"]))
        layers = {}
        for name in LAYER_CLASSES:
            sec = cfg[name]
            init_value = float(sec["init_value"]) if "init_value" in sec else None
            layers[name] = LayerSettings(
                float(sec["init_std"]), float(sec["lr"]), float(sec["multiplier"]), init_value
            )
        return LayerPlan(
            head["parameterization"],
            layers,
            float(head["attention_logit_scale"]),
            float(head["m_width"]),
            int(head["d_model"]),
            int(head["n_layers"]),
            int(head["d_head"]),
            base,
        )
    except (KeyError, ValueError, configparser.Error) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed layer plan: {exc}") from exc
