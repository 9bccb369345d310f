"""Loss-vs-compute power laws of the form ``L(f) = (f / a)**b + c``.

Fitting profiles out the irreducible loss ``c``: for a fixed ``c`` the
remaining two-parameter problem is solved by Levenberg-Marquardt, started
from the closed-form line fit of ``log(L - c)`` against ``log f``. The outer
search is a fixed 1000-point scan over ``c`` followed by golden-section
refinement around the best grid cell, so the result is deterministic and
does not depend on a user-supplied starting point.

Residuals are ``log L_pred - log L_obs`` with uniform weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from scalekit.errors import DegenerateData, InputError, TooFewPoints, ZeroTokens

MIN_POINTS = 4
C_GRID_SIZE = 1000
C_UPPER_FRACTION = 0.999

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PowerLawFit:
    """Compute-frontier law. ``a`` in FLOPs, ``c`` in nats/token."""

    a: float
    b: float
    c: float

    def __call__(self, flops: float) -> float:
        return predict_loss(self, flops)


# Published Cerebras-GPT compute-optimal frontier.
CEREBRAS_FRONTIER = PowerLawFit(a=5.984e22, b=-0.0737, c=0.5066)


@dataclass(frozen=True)
class LossPoint:
    flops: float
    loss: float

    def __post_init__(self):
        if not (self.flops > 0 and math.isfinite(self.flops)):
            raise InputError(f"flops must be positive and finite, got {self.flops!r}")
        if not (self.loss > 0 and math.isfinite(self.loss)):
            raise InputError(f"loss must be positive and finite, got {self.loss!r}")


def predict_loss(fit: PowerLawFit, flops: float) -> float:
    if not flops > 0:
        raise InputError(f"flops must be positive, got {flops!r}")
    return (flops / fit.a) ** fit.b + fit.c


def relative_gap(fit: PowerLawFit, point: LossPoint) -> float:
    """Signed percent distance of ``point`` above the frontier."""
    expected = predict_loss(fit, point.flops)
    return (point.loss - expected) / expected * 100.0


def loss_degradation(tau: float) -> float:
    """Fractional loss penalty for training at ``tau`` tokens per parameter.

    Symmetric in ``log(tau)`` about 20, where it vanishes.
    """
    if not tau > 0:
        raise InputError(f"tau must be positive, got {tau!r}")
    return 0.023 * math.log(math.sqrt(20.0 / tau)) ** 2


def correct_vocab_xent(xent: float, tokens_source_vocab: float, tokens_reference_vocab: float) -> float:
    """Re-express a per-token loss in the reference tokenizer's units.

    Keeps total nats over the corpus fixed: a tokenizer that needs fewer
    tokens for the same text reports a proportionally larger per-token loss.
    """
    if tokens_source_vocab <= 0 or tokens_reference_vocab <= 0:
        raise ZeroTokens("token counts must be positive")
    return xent * tokens_source_vocab / tokens_reference_vocab


# ---------------------------------------------------------------------------
# fitting


def _line_fit(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares intercept/slope of each row of ``y`` against centred ``x``."""
    k = y.mean(axis=-1)
    b = (y * x).sum(axis=-1) / (x * x).sum()
    return k, b


def _profile(
    x: np.ndarray, log_loss: np.ndarray, cs: np.ndarray, max_iter: int = 200
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Best (intercept, slope, SSR) for each candidate ``c``, batched.

    The model is ``exp(k + b * x) + c`` with ``x`` the centred log-FLOPs.
    """
    k, b = _line_fit(x, np.log(np.exp(log_loss)[None, :] - cs[:, None]))
    lam = np.full(cs.shape, 1e-3)

    def evaluate(k, b):
        m = np.exp(k[:, None] + b[:, None] * x)
        pred = m + cs[:, None]
        r = np.log(pred) - log_loss
        return r, m / pred, (r * r).sum(axis=1)

    r, w, ssr = evaluate(k, b)
    for _ in range(max_iter):
        jk, jb = w, w * x
        a11 = (jk * jk).sum(1)
        a12 = (jk * jb).sum(1)
        a22 = (jb * jb).sum(1)
        g1 = (jk * r).sum(1)
        g2 = (jb * r).sum(1)
        d11 = a11 * (1.0 + lam)
        d22 = a22 * (1.0 + lam)
        det = d11 * d22 - a12 * a12
        dk = -(d22 * g1 - a12 * g2) / det
        db = -(d11 * g2 - a12 * g1) / det
        dk = np.where(np.isfinite(dk), dk, 0.0)
        db = np.where(np.isfinite(db), db, 0.0)
        k_new, b_new = k + dk, b + db
        r_new, w_new, ssr_new = evaluate(k_new, b_new)
        better = np.isfinite(ssr_new) & (ssr_new < ssr)
        k = np.where(better, k_new, k)
        b = np.where(better, b_new, b)
        r = np.where(better[:, None], r_new, r)
        w = np.where(better[:, None], w_new, w)
        ssr = np.where(better, ssr_new, ssr)
        lam = np.where(better, lam * 0.2, lam * 10.0)
        step = np.maximum(np.abs(dk), np.abs(db))
        if np.all((step <= 1e-15 * (1.0 + np.abs(k) + np.abs(b))) | (lam > 1e12)):
            break
    return k, b, ssr


def _golden_section(func, lo: float, hi: float, tol: float) -> float:
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = func(x1), func(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = func(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = func(x2)
    return x1 if f1 <= f2 else x2


def _as_points(points: Iterable[LossPoint | tuple[float, float]]) -> list[LossPoint]:
    out = []
    for p in points:
        out.append(p if isinstance(p, LossPoint) else LossPoint(*p))
    return out


def fit_power_law(points: Iterable[LossPoint | tuple[float, float]]) -> PowerLawFit:
    """Fit ``(a, b, c)`` by least squares on log-loss residuals.

    Points are sorted by FLOPs first, so input order does not matter.

    Raises:
        TooFewPoints: fewer than four points.
        DegenerateData: repeated FLOPs values or a flat loss curve.
    """
    pts = sorted(_as_points(points), key=lambda p: (p.flops, p.loss))
    if len(pts) < MIN_POINTS:
        raise TooFewPoints(f"need at least {MIN_POINTS} points, got {len(pts)}")
    flops = np.array([p.flops for p in pts], dtype=float)
    loss = np.array([p.loss for p in pts], dtype=float)
    if np.unique(flops).size != flops.size:
        raise DegenerateData("FLOPs values must be distinct")
    if np.all(loss == loss[0]):
        raise DegenerateData("all losses are equal; the exponent is undetermined")

    log_f = np.log(flops)
    centre = log_f.mean()
    x = log_f - centre
    log_loss = np.log(loss)

    upper = C_UPPER_FRACTION * loss.min()
    grid = np.linspace(0.0, upper, C_GRID_SIZE, endpoint=False)
    _, _, ssr = _profile(x, log_loss, grid)
    best = int(np.argmin(ssr))
    lo = grid[max(best - 1, 0)]
    hi = grid[best + 1] if best + 1 < grid.size else upper

    def objective(c: float) -> float:
        return float(_profile(x, log_loss, np.array([c]))[2][0])

    c = _golden_section(objective, lo, hi, tol=1e-13 * max(1.0, upper))
    if objective(c) > ssr[best]:
        c = float(grid[best])
    k, b, _ = _profile(x, log_loss, np.array([c]))
    k, b = float(k[0]), float(b[0])
    if b == 0.0 or not math.isfinite(b):
        raise DegenerateData("fitted exponent is zero; no finite scale exists")
    log_a = centre - k / b
    if not math.isfinite(log_a) or abs(log_a) > 700:
        raise DegenerateData("fitted FLOPs scale is not finite")
    return PowerLawFit(a=math.exp(log_a), b=b, c=float(c))


def fit_residuals(fit: PowerLawFit, points: Sequence[LossPoint]) -> list[float]:
    """Relative error ``(predicted - observed) / observed`` per point."""
    return [(predict_loss(fit, p.flops) - p.loss) / p.loss for p in points]
