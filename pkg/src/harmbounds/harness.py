"""Experiment driver: guardrail sweeps, tightness studies, validation runs.

Everything is deterministic under the master seed: per-episode seeds are
SHA-256 digests of (master seed, cell key, episode index), so any episode can
be replayed from its recorded seed alone and execution order (including
worker pools) cannot change the results. Outputs are CSV files with fixed
column schemas plus a JSON summary that echoes the configuration.

CSV schemas (stable contract for downstream plotting):

* reward-deaths: ``guardrail,C,alpha,episode,steps,total_reward,died,all_rejected,seed``
* tightness: ``alpha,episode,t,action,estimate,true_harm,overestimated``

Booleans are written as 0/1; floats use ``repr`` (shortest round-trip).
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, validation
from . import posterior as post
from .bandit import (
    DEFAULT_MAX_STEPS,
    DEFAULT_N_ARMS,
    DEFAULT_D,
    DEFAULT_TEMPERATURE,
    BanditInstance,
    bit_vectors,
    boltzmann_policy,
    estimate_explosion_threshold,
    new_episode,
    step,
)
from .guardrails import GuardrailConfig, admissible_actions

EXPERIMENTS = ("reward-deaths", "tightness", "validate")

REWARD_DEATHS_HEADER = (
    "guardrail,C,alpha,episode,steps,total_reward,died,all_rejected,seed"
)
TIGHTNESS_HEADER = "alpha,episode,t,action,estimate,true_harm,overestimated"

DEFAULT_C_LIST = (0.01, 0.033, 0.1)
DEFAULT_SWEEP_ALPHAS = (0.001, 0.1, 0.999)
DEFAULT_TIGHTNESS_ALPHAS = tuple(2.0**-k for k in range(14, 0, -1)) + (0.9, 0.99, 1.0)


def derive_seed(*parts) -> int:
    """64-bit seed as a pure function of the parts (hash-seed independent)."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one experiment run."""

    experiment: str = "reward-deaths"
    episodes: int = 1000
    n_arms: int = DEFAULT_N_ARMS
    d: int = DEFAULT_D
    C_list: tuple[float, ...] = DEFAULT_C_LIST
    alpha_list: tuple[float, ...] | None = None
    guardrails: tuple[GuardrailConfig, ...] | None = None
    master_seed: int = 0
    threshold_samples: int = 100_000
    output_path: str | None = None
    max_steps: int = DEFAULT_MAX_STEPS
    temperature: float = DEFAULT_TEMPERATURE
    bucket_width: float = 0.05
    workers: int = 1
    condition_threshold_on_features: bool = False
    validation_scale: float = 1.0

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}"
            )
        if self.episodes < 0:
            raise ValueError("episodes must be nonnegative")
        for name in ("n_arms", "d", "max_steps", "threshold_samples", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.experiment == "reward-deaths" and not self.C_list:
            raise ValueError("reward-deaths needs a nonempty C_list")
        if self.experiment == "tightness" and self.alpha_list is not None and not self.alpha_list:
            raise ValueError("tightness needs a nonempty alpha_list")

    def resolved_alphas(self) -> tuple[float, ...]:
        if self.alpha_list is not None:
            return tuple(float(a) for a in self.alpha_list)
        if self.experiment == "tightness":
            return DEFAULT_TIGHTNESS_ALPHAS
        return DEFAULT_SWEEP_ALPHAS

    def resolved_guardrails(self) -> tuple[GuardrailConfig, ...]:
        if self.guardrails is not None:
            return self.guardrails
        templates = [
            GuardrailConfig(kind="cheating"),
            GuardrailConfig(kind="posterior-predictive"),
            GuardrailConfig(kind="iid-cautious"),
        ]
        templates += [
            GuardrailConfig(kind="cautious-set", alpha=a) for a in self.resolved_alphas()
        ]
        return tuple(templates)

    def cells(self) -> list[tuple[GuardrailConfig, str]]:
        """Guardrail x threshold grid, with stable per-cell keys."""
        out = []
        for template in self.resolved_guardrails():
            for c in self.C_list:
                guardrail = dataclasses.replace(template, C=float(c))
                key = f"{guardrail.kind}|C={guardrail.C!r}|alpha={guardrail.alpha!r}"
                out.append((guardrail, key))
        return out

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["C_list"] = list(self.C_list)
        out["alpha_list"] = None if self.alpha_list is None else list(self.alpha_list)
        out["guardrails"] = (
            None
            if self.guardrails is None
            else [
                {k: v for k, v in dataclasses.asdict(g).items() if v is not None}
                for g in self.guardrails
            ]
        )
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        for key in ("C_list", "alpha_list"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        if data.get("guardrails") is not None:
            data["guardrails"] = tuple(
                g if isinstance(g, GuardrailConfig) else GuardrailConfig(**g)
                for g in data["guardrails"]
            )
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class EpisodeRecord:
    """One guarded episode: what happened and how to replay it."""

    guardrail: str
    C: float
    alpha: float | None
    episode: int
    steps: int
    total_reward: float
    died: bool
    all_rejected: bool
    seed: int

    def csv_row(self) -> list[str]:
        return [
            self.guardrail,
            repr(float(self.C)),
            "" if self.alpha is None else repr(float(self.alpha)),
            str(self.episode),
            str(self.steps),
            repr(float(self.total_reward)),
            str(int(self.died)),
            str(int(self.all_rejected)),
            str(self.seed),
        ]


@dataclass(frozen=True)
class TightnessRecord:
    """One (step, alpha) comparison of the cautious estimate to the truth."""

    alpha: float
    episode: int
    t: int
    action: int
    estimate: float
    true_harm: float
    overestimated: bool

    def csv_row(self) -> list[str]:
        return [
            repr(float(self.alpha)),
            str(self.episode),
            str(self.t),
            str(self.action),
            repr(float(self.estimate)),
            repr(float(self.true_harm)),
            str(int(self.overestimated)),
        ]


def _write_csv(path: Path, header: str, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header.split(","))
        for row in rows:
            writer.writerow(row.csv_row())


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


def _version_string() -> str:
    return f"harmbounds-{__version__}"


def _episode_instance(config: ExperimentConfig, global_threshold: float | None,
                      rng: np.random.Generator) -> BanditInstance:
    """Fresh features and hidden vector; threshold global or per-episode."""
    features = rng.integers(0, 2, size=(config.n_arms, config.d))
    v_star = rng.integers(0, 2, size=config.d)
    if config.condition_threshold_on_features:
        means = features.astype(float) @ bit_vectors(config.d).T
        threshold = float(means.max(axis=0).mean())
    elif global_threshold is None:
        raise ValueError("a frozen explosion threshold is required")
    else:
        threshold = global_threshold
    return BanditInstance(
        n_arms=config.n_arms,
        d=config.d,
        features=features,
        v_star=v_star,
        explosion_threshold=threshold,
    )


def global_threshold(config: ExperimentConfig) -> float | None:
    """The frozen explosion threshold shared by all episodes of a run."""
    if config.condition_threshold_on_features:
        return None
    rng = np.random.default_rng(derive_seed(config.master_seed, "explosion-threshold"))
    return estimate_explosion_threshold(
        config.n_arms, config.d, config.threshold_samples, rng
    )


def run_guarded_episode(
    config: ExperimentConfig,
    guardrail: GuardrailConfig,
    threshold: float | None,
    seed: int,
) -> tuple[int, float, bool, bool]:
    """One episode under a guardrail: (steps, total reward, died, all rejected)."""
    rng = np.random.default_rng(seed)
    instance = _episode_instance(config, threshold, rng)
    episode = new_episode(instance, max_steps=config.max_steps)
    total_reward = 0.0
    died = False
    all_rejected = False
    while episode.alive and episode.t < episode.max_steps:
        mask, _ = admissible_actions(guardrail, episode.state, instance)
        if not mask.any():
            all_rejected = True
            break
        policy = boltzmann_policy(episode.state, instance, mask, config.temperature)
        action = policy.sample(rng)
        reward, harmed, episode = step(episode, action, rng)
        total_reward += reward
        died |= harmed
    return episode.t, total_reward, died, all_rejected


def _run_cell(args) -> list[EpisodeRecord]:
    config, guardrail, key, threshold = args
    records = []
    for index in range(config.episodes):
        seed = derive_seed(config.master_seed, key, index)
        steps, reward, died, all_rejected = run_guarded_episode(
            config, guardrail, threshold, seed
        )
        records.append(
            EpisodeRecord(
                guardrail=guardrail.kind,
                C=guardrail.C,
                alpha=guardrail.alpha,
                episode=index,
                steps=steps,
                total_reward=reward,
                died=died,
                all_rejected=all_rejected,
                seed=seed,
            )
        )
    return records


def aggregate_reward_deaths(records: list[EpisodeRecord]) -> list[dict]:
    """Per-cell means and standard errors, in first-appearance order."""
    cells: dict[tuple, list[EpisodeRecord]] = {}
    for record in records:
        cells.setdefault((record.guardrail, record.C, record.alpha), []).append(record)
    out = []
    for (guardrail, c, alpha), cell_records in cells.items():
        rewards = np.array([r.total_reward for r in cell_records])
        died = np.array([float(r.died) for r in cell_records])
        n = len(cell_records)
        out.append(
            {
                "guardrail": guardrail,
                "C": c,
                "alpha": alpha,
                "episodes": n,
                "mean_reward": float(rewards.mean()),
                "se_reward": float(rewards.std(ddof=1) / np.sqrt(n)) if n > 1 else None,
                "death_rate": float(died.mean()),
                "se_death_rate": float(died.std(ddof=1) / np.sqrt(n)) if n > 1 else None,
                "all_rejected_rate": float(
                    np.mean([r.all_rejected for r in cell_records])
                ),
                "mean_steps": float(np.mean([r.steps for r in cell_records])),
            }
        )
    return out


def run_reward_deaths(config: ExperimentConfig) -> tuple[list[EpisodeRecord], dict]:
    """Sweep guardrails over thresholds; write episode CSV and summary JSON."""
    if config.experiment != "reward-deaths":
        config = dataclasses.replace(config, experiment="reward-deaths")
    threshold = global_threshold(config)
    jobs = [(config, guardrail, key, threshold) for guardrail, key in config.cells()]
    if config.workers > 1 and len(jobs) > 1 and config.episodes > 0:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_cell = list(pool.map(_run_cell, jobs))
    else:
        per_cell = [_run_cell(job) for job in jobs]
    records = [record for cell in per_cell for record in cell]
    summary = {
        "experiment": "reward-deaths",
        "version": _version_string(),
        "config": config.to_dict(),
        "explosion_threshold": threshold,
        "cells": aggregate_reward_deaths(records),
    }
    if config.output_path is not None:
        out = Path(config.output_path)
        _write_csv(out / "reward_deaths.csv", REWARD_DEATHS_HEADER, records)
        _write_json(out / "reward_deaths_summary.json", summary)
    return records, summary


def run_tightness_episode(
    config: ExperimentConfig,
    threshold: float | None,
    alphas: tuple[float, ...],
    episode_index: int,
    seed: int,
) -> list[TightnessRecord]:
    """Uniform policy, explosions observed but never terminal.

    At each step, before observing the reward, record the cautious estimate
    of the sampled action's harm at every alpha next to its true harm.
    """
    rng = np.random.default_rng(seed)
    instance = _episode_instance(config, threshold, rng)
    episode = new_episode(instance, max_steps=config.max_steps)
    records = []
    for t in range(config.max_steps):
        action = int(rng.integers(config.n_arms))
        true_harm = float(instance.harm_table[action, instance.v_star_index])
        ranking = post.mass_ranking(episode.state)
        for alpha in alphas:
            n = post.prefix_length(ranking, alpha)
            estimate = float(instance.harm_table[action, ranking.order[:n]].max())
            records.append(
                TightnessRecord(
                    alpha=alpha,
                    episode=episode_index,
                    t=t,
                    action=action,
                    estimate=estimate,
                    true_harm=true_harm,
                    overestimated=estimate >= true_harm,
                )
            )
        _, _, episode = step(episode, action, rng, terminal_harm=False)
    return records


def summarize_tightness(
    records: list[TightnessRecord],
    alphas: tuple[float, ...],
    prior_truth: float,
    bucket_width: float,
) -> dict:
    per_alpha = []
    bucket_per_alpha = []
    for alpha in alphas:
        rows = [r for r in records if r.alpha == alpha]
        in_bucket = [r for r in rows if abs(r.true_harm - 0.5) <= bucket_width]
        per_alpha.append(
            {
                "alpha": alpha,
                "records": len(rows),
                "overestimate_frequency": (
                    float(np.mean([r.overestimated for r in rows])) if rows else None
                ),
                "reference_lower_bound": 1.0 - alpha / prior_truth,
            }
        )
        bucket_per_alpha.append(
            {
                "alpha": alpha,
                "count": len(in_bucket),
                "overestimate_frequency": (
                    float(np.mean([r.overestimated for r in in_bucket]))
                    if in_bucket
                    else None
                ),
                "median_estimate": (
                    float(np.median([r.estimate for r in in_bucket]))
                    if in_bucket
                    else None
                ),
            }
        )
    return {
        "per_alpha": per_alpha,
        "bucket": {"center": 0.5, "width": bucket_width, "per_alpha": bucket_per_alpha},
    }


def run_tightness(config: ExperimentConfig) -> tuple[list[TightnessRecord], dict]:
    """Uniform-policy study of how often the cautious estimate covers the truth."""
    if config.experiment != "tightness":
        config = dataclasses.replace(config, experiment="tightness")
    threshold = global_threshold(config)
    alphas = config.resolved_alphas()
    records = []
    for index in range(config.episodes):
        seed = derive_seed(config.master_seed, "tightness", index)
        records.extend(
            run_tightness_episode(config, threshold, alphas, index, seed)
        )
    summary = {
        "experiment": "tightness",
        "version": _version_string(),
        "config": config.to_dict(),
        "explosion_threshold": threshold,
        "prior_truth": 2.0**-config.d,
        **summarize_tightness(records, alphas, 2.0**-config.d, config.bucket_width),
    }
    if config.output_path is not None:
        out = Path(config.output_path)
        _write_csv(out / "tightness.csv", TIGHTNESS_HEADER, records)
        _write_json(out / "tightness_summary.json", summary)
    return records, summary


def run_validation(config: ExperimentConfig) -> dict:
    """Run the statistical suite; the report's ``passed`` drives the exit code."""
    checks = []
    for check in validation.CHECKS:
        name = check.__name__.removeprefix("check_").replace("_", "-")
        seed = derive_seed(config.master_seed, "validation", name)
        checks.append(check(seed, config.validation_scale))
    report = {
        "experiment": "validate",
        "version": _version_string(),
        "config": config.to_dict(),
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }
    if config.output_path is not None:
        _write_json(Path(config.output_path) / "validation_report.json", report)
    return report
