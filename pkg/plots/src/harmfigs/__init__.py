"""Figures for guardrail experiment logs."""

__version__ = "0.1.0"

from .figures import (
    FIGURE_KINDS,
    FigureSpec,
    SchemaError,
    bucket_estimates,
    overestimation_aggregates,
    render,
    reward_deaths_aggregates,
)

__all__ = [
    "FIGURE_KINDS",
    "FigureSpec",
    "SchemaError",
    "bucket_estimates",
    "overestimation_aggregates",
    "render",
    "reward_deaths_aggregates",
]
