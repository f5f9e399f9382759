"""Render figures from guardrail experiment CSV logs.

Consumes the simulator's file contracts only (no code dependency):

* reward-deaths episodes: ``guardrail,C,alpha,episode,steps,total_reward,died,all_rejected,seed``
* tightness records: ``alpha,episode,t,action,estimate,true_harm,overestimated``

Aggregates are always recomputed from the episode rows; the companion
summary JSON is never read for numbers. Unknown columns are ignored,
missing ones are fatal, and an input with no data rows is an error raised
before any file is written.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("reward-deaths", "overestimation", "harm-estimates")

REWARD_DEATHS_COLUMNS = {
    "guardrail": str,
    "C": float,
    "alpha": lambda s: float(s) if s else None,
    "episode": int,
    "steps": int,
    "total_reward": float,
    "died": lambda s: bool(int(s)),
    "all_rejected": lambda s: bool(int(s)),
    "seed": int,
}
TIGHTNESS_COLUMNS = {
    "alpha": float,
    "episode": int,
    "t": int,
    "action": int,
    "estimate": float,
    "true_harm": float,
    "overestimated": lambda s: bool(int(s)),
}


class SchemaError(ValueError):
    """The input CSV does not match the documented schema."""


@dataclass(frozen=True)
class FigureSpec:
    """What to draw and where to put it."""

    kind: str
    input_path: str
    output_path: str
    xlabel: str | None = None
    ylabel: str | None = None
    prior_truth: float = 2.0**-10
    bucket_center: float = 0.5
    bucket_width: float = 0.05

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(
                f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}"
            )


def read_rows(path: str | Path, columns: dict) -> list[dict]:
    """Parse a CSV under the given schema; missing columns or no rows are fatal."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [name for name in columns if name not in header]
        if missing:
            raise SchemaError(f"{path}: missing required columns {missing}")
        rows = []
        for raw in reader:
            rows.append({name: cast(raw[name]) for name, cast in columns.items()})
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def guardrail_label(guardrail: str, alpha: float | None) -> str:
    return guardrail if alpha is None else f"{guardrail} (alpha={alpha:g})"


def reward_deaths_aggregates(rows: list[dict]) -> list[dict]:
    """Per-(guardrail, C, alpha) means, in first-appearance order."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["guardrail"], row["C"], row["alpha"]), []).append(row)
    out = []
    for (guardrail, c, alpha), members in groups.items():
        out.append(
            {
                "guardrail": guardrail,
                "C": c,
                "alpha": alpha,
                "episodes": len(members),
                "mean_reward": float(np.mean([m["total_reward"] for m in members])),
                "death_rate": float(np.mean([m["died"] for m in members])),
                "all_rejected_rate": float(
                    np.mean([m["all_rejected"] for m in members])
                ),
                "mean_steps": float(np.mean([m["steps"] for m in members])),
            }
        )
    return out


def overestimation_aggregates(rows: list[dict]) -> list[dict]:
    """Overestimate frequency per alpha, alphas ascending."""
    groups: dict[float, list[dict]] = {}
    for row in rows:
        groups.setdefault(row["alpha"], []).append(row)
    return [
        {
            "alpha": alpha,
            "records": len(members),
            "overestimate_frequency": float(
                np.mean([m["overestimated"] for m in members])
            ),
        }
        for alpha, members in sorted(groups.items())
    ]


def bucket_estimates(
    rows: list[dict], center: float, width: float
) -> dict[float, np.ndarray]:
    """Estimates for rows whose true harm is within the bucket, per alpha."""
    out: dict[float, list[float]] = {}
    for row in rows:
        if abs(row["true_harm"] - center) <= width:
            out.setdefault(row["alpha"], []).append(row["estimate"])
    return {alpha: np.array(values) for alpha, values in sorted(out.items())}


def _render_reward_deaths(spec: FigureSpec) -> None:
    rows = read_rows(spec.input_path, REWARD_DEATHS_COLUMNS)
    aggregates = reward_deaths_aggregates(rows)
    series: dict[str, list[tuple[float, float, float]]] = {}
    for cell in aggregates:
        label = guardrail_label(cell["guardrail"], cell["alpha"])
        series.setdefault(label, []).append(
            (cell["C"], cell["death_rate"], cell["mean_reward"])
        )
    fig, (deaths_ax, reward_ax) = plt.subplots(1, 2, figsize=(11, 4.2))
    for label, points in series.items():
        points.sort()
        cs = [p[0] for p in points]
        deaths_ax.plot(cs, [p[1] for p in points], marker="o", label=label)
        reward_ax.plot(cs, [p[2] for p in points], marker="o", label=label)
    for ax, ylabel in ((deaths_ax, "mean episode deaths"), (reward_ax, "mean episode reward")):
        ax.set_xscale("log")
        ax.set_xlabel(spec.xlabel or "rejection threshold C")
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
    deaths_ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.output_path)
    plt.close(fig)


def _render_overestimation(spec: FigureSpec) -> None:
    rows = read_rows(spec.input_path, TIGHTNESS_COLUMNS)
    aggregates = overestimation_aggregates(rows)
    alphas = np.array([a["alpha"] for a in aggregates])
    freqs = np.array([a["overestimate_frequency"] for a in aggregates])
    reference = np.maximum(1.0 - alphas / spec.prior_truth, 0.0)
    fig, ax = plt.subplots(figsize=(6, 4.2))
    ax.plot(alphas, freqs, marker="o", label="observed frequency")
    ax.plot(
        alphas,
        reference,
        linestyle="--",
        color="gray",
        label="guaranteed lower bound",
    )
    ax.set_xscale("log")
    ax.set_ylim(-0.05, 1.05)
    ax.set_xlabel(spec.xlabel or "alpha")
    ax.set_ylabel(spec.ylabel or "overestimate frequency")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.output_path)
    plt.close(fig)


def _render_harm_estimates(spec: FigureSpec) -> None:
    rows = read_rows(spec.input_path, TIGHTNESS_COLUMNS)
    buckets = bucket_estimates(rows, spec.bucket_center, spec.bucket_width)
    if not buckets:
        raise SchemaError(
            f"{spec.input_path}: no rows with true harm within "
            f"{spec.bucket_width} of {spec.bucket_center}"
        )
    fig, ax = plt.subplots(figsize=(7, 4.2))
    labels = [f"{alpha:g}" for alpha in buckets]
    ax.boxplot(list(buckets.values()), tick_labels=labels, whis=(5, 95))
    ax.axhline(spec.bucket_center, linestyle="--", color="gray", linewidth=1)
    ax.set_xlabel(spec.xlabel or "alpha")
    ax.set_ylabel(spec.ylabel or "estimated harm probability")
    ax.tick_params(axis="x", labelrotation=45)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.output_path)
    plt.close(fig)


def render(spec: FigureSpec) -> Path:
    """Draw the figure; returns the written path. Nothing is written on error."""
    out = Path(spec.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    if spec.kind == "reward-deaths":
        _render_reward_deaths(spec)
    elif spec.kind == "overestimation":
        _render_overestimation(spec)
    else:
        _render_harm_estimates(spec)
    return out
