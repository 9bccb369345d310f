"""Half-precision underflow checks, dynamic loss scaling and the Adam epsilon rule."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from scalekit.errors import EmptyInput, InputError


@dataclass(frozen=True)
class FloatFormatSpec:
    """Binary floating-point format with IEEE-style subnormals."""

    name: str
    exponent_bits: int
    mantissa_bits: int

    @property
    def bias(self) -> int:
        return 2 ** (self.exponent_bits - 1) - 1

    @property
    def min_exponent(self) -> int:
        return 1 - self.bias

    @property
    def max_exponent(self) -> int:
        return self.bias

    @property
    def min_subnormal(self) -> float:
        return math.ldexp(1.0, self.min_exponent - self.mantissa_bits)

    @property
    def min_normal(self) -> float:
        return math.ldexp(1.0, self.min_exponent)

    @property
    def max_finite(self) -> float:
        return math.ldexp(2.0 - math.ldexp(1.0, -self.mantissa_bits), self.max_exponent)


FP16 = FloatFormatSpec("fp16", 5, 10)
BF16 = FloatFormatSpec("bf16", 8, 7)
FP32 = FloatFormatSpec("fp32", 8, 23)
FORMATS = {f.name: f for f in (FP16, BF16, FP32)}


def cast_to_format(values, fmt: FloatFormatSpec, flush_to_zero: bool = False) -> np.ndarray:
    """Round float64 values to ``fmt`` (round-to-nearest-even), returned as float64.

    Results beyond the largest finite value become signed infinity. With
    ``flush_to_zero`` subnormal results are replaced by signed zero.
    """
    x = np.asarray(values, dtype=np.float64)
    _, exp = np.frexp(x)
    # frexp gives x = m * 2**exp with 0.5 <= |m| < 1
    e = np.maximum(exp.astype(np.int64) - 1, fmt.min_exponent)
    quantum_exp = e - fmt.mantissa_bits
    with np.errstate(over="ignore", invalid="ignore"):
        scaled = np.ldexp(x, -quantum_exp)
        out = np.ldexp(np.round(scaled), quantum_exp)
        out = np.where(np.abs(out) > fmt.max_finite, np.copysign(np.inf, x), out)
    out = np.where(np.isfinite(x), out, x)
    if flush_to_zero:
        out = np.where(np.abs(out) < fmt.min_normal, np.copysign(0.0, x), out)
    return out


def cast_fraction_zeroed(values: Iterable[float], fmt: FloatFormatSpec, flush_to_zero: bool = False) -> float:
    """Fraction of the nonzero inputs that cast to exactly zero.

    Inputs that are already zero are ignored; an all-zero list gives 0.0.
    """
    x = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.float64).ravel()
    if x.size == 0:
        raise EmptyInput("need at least one value")
    nonzero = x != 0
    count = int(nonzero.sum())
    if count == 0:
        return 0.0
    cast = cast_to_format(x[nonzero], fmt, flush_to_zero)
    return int((cast == 0).sum()) / count


@dataclass(frozen=True)
class LossScaleState:
    scale: float = 2.0**15
    steps_since_overflow: int = 0
    growth_interval: int = 2000
    growth_factor: float = 2.0
    backoff_factor: float = 0.5
    min_scale: float = 1.0

    def __post_init__(self):
        if not self.growth_factor > 1.0 > self.backoff_factor > 0.0:
            raise InputError("need growth_factor > 1 > backoff_factor > 0")
        if self.growth_interval < 1:
            raise InputError("growth_interval must be at least 1")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise InputError("scale must be positive and finite")
        if self.steps_since_overflow < 0:
            raise InputError("steps_since_overflow must be non-negative")


def loss_scale_step(state: LossScaleState, overflow_observed: bool) -> LossScaleState:
    """Next state of the dynamic loss scaler after one optimizer step.

    The scale is never reduced below ``state.min_scale``.
    """
    if overflow_observed:
        return replace(state, scale=max(state.scale * state.backoff_factor, state.min_scale), steps_since_overflow=0)
    count = state.steps_since_overflow + 1
    if count >= state.growth_interval:
        return replace(state, scale=state.scale * state.growth_factor, steps_since_overflow=0)
    return replace(state, steps_since_overflow=count)


def adam_epsilon_ok(velocity_mean: float, epsilon: float) -> tuple[bool, float]:
    """Check ``epsilon`` against ``sqrt(velocity_mean) / 1000``.

    A zero velocity mean gives a zero threshold, which no positive epsilon meets.
    """
    if not velocity_mean >= 0:
        raise InputError("velocity_mean must be non-negative")
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    threshold = math.sqrt(velocity_mean) / 1000.0
    return epsilon < threshold, threshold
