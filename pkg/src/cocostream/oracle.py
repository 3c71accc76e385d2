"""Exact reference evaluation via the global sort-by-confidence procedure.

Keeps the full per-detection verdict list (the variable-size state the
streaming module avoids), sorts detections globally per cell, and walks
descending-confidence prefixes to build the exact precision-recall curve.
Uses the same matching module as the streaming path, so any difference
between the two is pure bucketing error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import UNDEFINED, EvalConfig, MetricReport
from .geometry import Detection, GroundTruth, box_area, strip_padding
from .matching import match_image
from .streaming import interpolate_ap


@dataclass(frozen=True)
class ScoredVerdict:
    confidence: float
    is_tp: bool
    class_id: int
    cell: tuple[int, int, int]  # (iou_idx, area_idx, maxdets_idx)


def evaluate_exact(
    dataset: Iterable[tuple[Sequence[Detection], Sequence[GroundTruth]]],
    config: EvalConfig,
) -> MetricReport:
    """Exact 12-metric report over an in-memory dataset."""
    n_t = len(config.iou_thresholds)
    n_k = config.num_classes
    n_a = len(config.area_ranges)
    n_m = len(config.max_dets_list)

    # (conf, is_tp) accumulated per (t, k, a, m) cell in dataset order.
    verdicts: dict[tuple[int, int, int, int], list[tuple[float, bool]]] = {}
    gamma = np.zeros((n_k, n_a), dtype=np.int64)

    for detections, ground_truths in dataset:
        matches = match_image(detections, ground_truths, config)
        for k in matches.present_classes:
            for a_idx in range(n_a):
                for m_idx in range(n_m):
                    for t_idx in range(n_t):
                        res = matches.result(k, t_idx, a_idx, m_idx)
                        if res.verdicts:
                            verdicts.setdefault((t_idx, k, a_idx, m_idx), []).extend(
                                (v.confidence, v.is_tp) for v in res.verdicts
                            )
            gts = [g for g in strip_padding(ground_truths) if g.class_id == k]
            for a_idx, (_, area) in enumerate(config.area_ranges):
                gamma[k, a_idx] += sum(
                    1 for g in gts if area.contains(box_area(g.box))
                )

    tp_totals = np.zeros((n_t, n_k, n_a, n_m), dtype=np.int64)
    for (t_idx, k, a_idx, m_idx), vs in verdicts.items():
        tp_totals[t_idx, k, a_idx, m_idx] = sum(1 for _, tp in vs if tp)

    m_top = n_m - 1

    def ap_for(t_idx: int, k: int, a_idx: int) -> float:
        vs = verdicts.get((t_idx, k, a_idx, m_top), [])
        if not vs:
            return 0.0
        conf = np.array([c for c, _ in vs])
        tp = np.array([t for _, t in vs], dtype=float)
        order = np.argsort(-conf, kind="stable")
        tpc = np.cumsum(tp[order])
        fpc = np.cumsum(1.0 - tp[order])
        recalls = tpc / gamma[k, a_idx]
        precisions = tpc / (tpc + fpc)
        return interpolate_ap(recalls, precisions, config.recall_thresholds)

    def mean_ap(t_indices: Sequence[int], area_name: str) -> float:
        a_idx = config.area_index(area_name)
        if a_idx is None:
            return UNDEFINED
        classes = [k for k in range(n_k) if gamma[k, a_idx] > 0]
        if not classes:
            return UNDEFINED
        vals = [ap_for(t, k, a_idx) for k in classes for t in t_indices]
        return float(np.mean(vals))

    def mean_recall(area_name: str, max_dets: int) -> float:
        a_idx = config.area_index(area_name)
        m_idx = config.max_dets_index(max_dets)
        if a_idx is None or m_idx is None:
            return UNDEFINED
        classes = [k for k in range(n_k) if gamma[k, a_idx] > 0]
        if not classes:
            return UNDEFINED
        vals = [
            tp_totals[t, k, a_idx, m_idx] / gamma[k, a_idx]
            for k in classes
            for t in range(n_t)
        ]
        return float(np.mean(vals))

    all_t = list(range(n_t))
    t50 = config.iou_index(0.5)
    t75 = config.iou_index(0.75)
    top_dets = config.max_dets_list[-1]

    return MetricReport(
        map_standard=mean_ap(all_t, "all"),
        map_50=mean_ap([t50], "all") if t50 is not None else UNDEFINED,
        map_75=mean_ap([t75], "all") if t75 is not None else UNDEFINED,
        map_small=mean_ap(all_t, "small"),
        map_medium=mean_ap(all_t, "medium"),
        map_large=mean_ap(all_t, "large"),
        recall_maxdets_1=mean_recall("all", 1),
        recall_maxdets_10=mean_recall("all", 10),
        recall_maxdets_100=mean_recall("all", top_dets),
        recall_small=mean_recall("small", top_dets),
        recall_medium=mean_recall("medium", top_dets),
        recall_large=mean_recall("large", top_dets),
    )
