"""Compute-optimal scaling toolkit for GPT-style language models."""

from scalekit.accounting import ModelShape, count_params, flops_per_sequence, train_flops_total
from scalekit.planner import EvalRecord, TrainingPlan, pareto_frontier, plan_from_budget, suggest_shape
from scalekit.scaling import CEREBRAS_FRONTIER, PowerLawFit, fit_power_law, predict_loss

__all__ = [
    "CEREBRAS_FRONTIER",
    "EvalRecord",
    "ModelShape",
    "PowerLawFit",
    "TrainingPlan",
    "count_params",
    "fit_power_law",
    "flops_per_sequence",
    "pareto_frontier",
    "plan_from_budget",
    "predict_loss",
    "suggest_shape",
    "train_flops_total",
]

__version__ = "0.1.0"
