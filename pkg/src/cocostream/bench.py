"""Synthetic perturbation benchmark: streaming vs. exact error margins.

For each requested image count, the ground-truth pool is sampled, each
ground truth is jittered into a synthetic prediction, and both evaluation
paths run on the result. Repeating with fresh seeds yields per-metric
absolute-error distributions summarized as min/max/mean/std.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .config import METRIC_NAMES, UNDEFINED, EvalConfig
from .ingest import Dataset, PerturbationParams, perturb, sample_images
from .oracle import evaluate_exact
from .streaming import finalize, new_state, update


@dataclass(frozen=True)
class ErrorMarginRow:
    metric_name: str
    n_images: int
    run_index: int
    streaming_value: float
    exact_value: float
    abs_error: float  # UNDEFINED when either side is undefined

    @property
    def is_defined(self) -> bool:
        return self.streaming_value != UNDEFINED and self.exact_value != UNDEFINED


@dataclass(frozen=True)
class MetricSummary:
    metric_name: str
    n_runs: int
    min_error: float
    max_error: float
    mean_error: float
    std_error: float


def run_synth_bench(
    ground_truth: Dataset,
    config: EvalConfig,
    image_counts: Sequence[int],
    repeats: int = 10,
    seed: int = 0,
    params: PerturbationParams | None = None,
) -> list[ErrorMarginRow]:
    """One ErrorMarginRow per (image count, run, metric)."""
    for n in image_counts:
        if n > len(ground_truth.images):
            raise ValueError(
                f"image count {n} exceeds dataset size {len(ground_truth.images)}"
            )
    base_params = params or PerturbationParams()
    seeds = np.random.SeedSequence(seed).generate_state(2 * len(image_counts) * repeats)

    rows: list[ErrorMarginRow] = []
    s = 0
    for n in image_counts:
        for run in range(repeats):
            sampled = sample_images(ground_truth, n, seed=int(seeds[s]))
            synthetic = perturb(sampled, replace(base_params, seed=int(seeds[s + 1])))
            s += 2
            pairs = synthetic.pairs()
            streaming_report = finalize(update(new_state(config), pairs))
            exact_report = evaluate_exact(pairs, config)
            sd = streaming_report.as_dict()
            ed = exact_report.as_dict()
            for name in METRIC_NAMES:
                sv, ev = sd[name], ed[name]
                defined = sv != UNDEFINED and ev != UNDEFINED
                rows.append(
                    ErrorMarginRow(
                        metric_name=name,
                        n_images=n,
                        run_index=run,
                        streaming_value=sv,
                        exact_value=ev,
                        abs_error=abs(sv - ev) if defined else UNDEFINED,
                    )
                )
    return rows


def summarize(rows: Sequence[ErrorMarginRow]) -> list[MetricSummary]:
    """Min/max/mean/std of the absolute error per metric, defined runs only."""
    summaries = []
    for name in METRIC_NAMES:
        errors = [r.abs_error for r in rows if r.metric_name == name and r.is_defined]
        if errors:
            arr = np.array(errors)
            summaries.append(
                MetricSummary(
                    metric_name=name,
                    n_runs=len(errors),
                    min_error=float(arr.min()),
                    max_error=float(arr.max()),
                    mean_error=float(arr.mean()),
                    std_error=float(arr.std()),
                )
            )
        else:
            summaries.append(
                MetricSummary(name, 0, UNDEFINED, UNDEFINED, UNDEFINED, UNDEFINED)
            )
    return summaries
