"""Fixed-size bucketed counters for streaming COCO metric evaluation.

Instead of keeping every detection's confidence and TP/FP verdict, the
state holds per-bucket TP and FP counts plus ground-truth totals. Updates
are mini-batch friendly, states with identical configs merge by elementwise
addition, and finalization recovers exact recall and a close approximation
of mean average precision from the bucket histograms.

Counters stay exact integers until finalization, so merging is exactly
associative and commutative.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .config import UNDEFINED, ConfigError, EvalConfig, MetricReport
from .geometry import Detection, GroundTruth, box_area, strip_padding
from .matching import match_image


class MergeError(ValueError):
    """States with differing configs cannot be merged."""


def bucket_index(confidence: float, buckets: int) -> int:
    """Histogram bucket for a confidence score; result lies in [0, buckets).

    Realizes floor(c * (buckets - delta)) for an infinitesimal delta: exact
    integer products c * buckets land in the bucket below, and c = 1.0 maps
    to buckets - 1.
    """
    if buckets < 1:
        raise ConfigError(f"buckets must be >= 1, got {buckets}")
    if not (0.0 <= confidence <= 1.0):
        raise ValueError(f"confidence outside [0, 1]: {confidence}")
    if confidence == 0.0:
        return 0
    return math.ceil(confidence * buckets) - 1


@dataclass
class BucketedState:
    """Fixed-size streaming state.

    tp_buckets / fp_buckets have shape (|Theta|, classes, areas, maxdets,
    buckets); gt_counts has shape (classes, areas). Shapes are determined
    by the config and never change.
    """

    config: EvalConfig
    tp_buckets: np.ndarray
    fp_buckets: np.ndarray
    gt_counts: np.ndarray

    def copy(self) -> "BucketedState":
        return BucketedState(
            config=self.config,
            tp_buckets=self.tp_buckets.copy(),
            fp_buckets=self.fp_buckets.copy(),
            gt_counts=self.gt_counts.copy(),
        )


def new_state(config: EvalConfig) -> BucketedState:
    """All-zero state sized by the config grid."""
    shape = (
        len(config.iou_thresholds),
        config.num_classes,
        len(config.area_ranges),
        len(config.max_dets_list),
        config.buckets,
    )
    return BucketedState(
        config=config,
        tp_buckets=np.zeros(shape, dtype=np.int64),
        fp_buckets=np.zeros(shape, dtype=np.int64),
        gt_counts=np.zeros((config.num_classes, len(config.area_ranges)), dtype=np.int64),
    )


def update(
    state: BucketedState,
    batch: Iterable[tuple[Sequence[Detection], Sequence[GroundTruth]]],
) -> BucketedState:
    """Fold a batch of (detections, ground_truths) image pairs into the state.

    Returns the same state object, mutated in place. The update is atomic:
    if any image fails validation or matching, the state is left untouched.
    """
    cfg = state.config
    n_t = len(cfg.iou_thresholds)
    n_a = len(cfg.area_ranges)
    n_m = len(cfg.max_dets_list)

    # Stage all increments first so a failing image cannot half-apply.
    tp_idx: list[tuple[int, int, int, int, int]] = []
    fp_idx: list[tuple[int, int, int, int, int]] = []
    gt_delta = np.zeros_like(state.gt_counts)

    for detections, ground_truths in batch:
        matches = match_image(detections, ground_truths, cfg)
        for k in matches.present_classes:
            for a_idx in range(n_a):
                for m_idx in range(n_m):
                    for t_idx in range(n_t):
                        res = matches.result(k, t_idx, a_idx, m_idx)
                        for v in res.verdicts:
                            b = bucket_index(v.confidence, cfg.buckets)
                            cell = (t_idx, k, a_idx, m_idx, b)
                            if v.is_tp:
                                tp_idx.append(cell)
                            else:
                                fp_idx.append(cell)
            gts = [g for g in strip_padding(ground_truths) if g.class_id == k]
            for a_idx, (_, area) in enumerate(cfg.area_ranges):
                gt_delta[k, a_idx] += sum(
                    1 for g in gts if area.contains(box_area(g.box))
                )

    if tp_idx:
        np.add.at(state.tp_buckets, tuple(np.array(tp_idx).T), 1)
    if fp_idx:
        np.add.at(state.fp_buckets, tuple(np.array(fp_idx).T), 1)
    state.gt_counts += gt_delta
    return state


def merge(a: BucketedState, b: BucketedState) -> BucketedState:
    """Elementwise sum of two states with identical configs."""
    if a.config.to_dict() != b.config.to_dict():
        raise MergeError("cannot merge states with differing configs")
    return BucketedState(
        config=a.config,
        tp_buckets=a.tp_buckets + b.tp_buckets,
        fp_buckets=a.fp_buckets + b.fp_buckets,
        gt_counts=a.gt_counts + b.gt_counts,
    )


def interpolate_ap(
    recalls: Sequence[float],
    precisions: Sequence[float],
    recall_thresholds: Sequence[float],
) -> float:
    """Threshold-sampled area under a precision-recall sequence.

    Precisions are first replaced by their right-to-left running maximum
    (monotone envelope). For each recall threshold, the envelope value at
    the first point whose recall reaches the threshold contributes; missing
    thresholds contribute 0. Returns the mean contribution.
    """
    r = np.asarray(recalls, dtype=float)
    p = np.asarray(precisions, dtype=float)
    if r.shape != p.shape:
        raise ValueError(f"length mismatch: {r.shape} recalls vs {p.shape} precisions")
    if r.size == 0:
        return 0.0
    env = np.maximum.accumulate(p[::-1])[::-1]
    idx = np.searchsorted(r, np.asarray(recall_thresholds, dtype=float), side="left")
    valid = idx < r.size
    total = env[idx[valid]].sum()
    return float(total / len(recall_thresholds))


def _cell_pr_curve(
    tp_cell: np.ndarray, fp_cell: np.ndarray, gamma: int
) -> tuple[np.ndarray, np.ndarray]:
    """Recall/precision per bucket, highest confidence first.

    Suffix-cumulative sums over the bucket axis: entry i counts detections
    whose bucket index is >= buckets - 1 - i, i.e. the descending-confidence
    prefix ending at that bucket.
    """
    tpc = np.cumsum(tp_cell[::-1])
    fpc = np.cumsum(fp_cell[::-1])
    recalls = tpc / gamma
    denom = tpc + fpc
    precisions = np.divide(
        tpc, denom, out=np.zeros_like(tpc, dtype=float), where=denom > 0
    )
    return recalls, precisions


def finalize(state: BucketedState) -> MetricReport:
    """Reduce bucketed counters to the 12-metric report.

    Recall metrics are exact (total TP over total ground truths); MaP uses
    the bucket-granularity PR curve and is approximate up to bucket width.
    Classes with zero ground truths in a given area range are excluded from
    the average; if no class qualifies the metric is -1.
    """
    cfg = state.config
    n_t = len(cfg.iou_thresholds)
    n_k = cfg.num_classes
    gamma = state.gt_counts  # (classes, areas)

    m_top = len(cfg.max_dets_list) - 1  # MaP uses the largest max-dets limit

    def ap_for(t_idx: int, k: int, a_idx: int) -> float:
        recalls, precisions = _cell_pr_curve(
            state.tp_buckets[t_idx, k, a_idx, m_top],
            state.fp_buckets[t_idx, k, a_idx, m_top],
            int(gamma[k, a_idx]),
        )
        return interpolate_ap(recalls, precisions, cfg.recall_thresholds)

    def mean_ap(t_indices: Sequence[int], area_name: str) -> float:
        a_idx = cfg.area_index(area_name)
        if a_idx is None:
            return UNDEFINED
        classes = [k for k in range(n_k) if gamma[k, a_idx] > 0]
        if not classes:
            return UNDEFINED
        vals = [ap_for(t, k, a_idx) for k in classes for t in t_indices]
        return float(np.mean(vals))

    tp_totals = state.tp_buckets.sum(axis=-1)  # (T, K, A, M)

    def mean_recall(area_name: str, max_dets: int) -> float:
        a_idx = cfg.area_index(area_name)
        m_idx = cfg.max_dets_index(max_dets)
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
    t50 = cfg.iou_index(0.5)
    t75 = cfg.iou_index(0.75)
    top_dets = cfg.max_dets_list[-1]

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


# -- state snapshot serialization -----------------------------------------
#
# Layout: one JSON header line (config, array shapes/dtypes) followed by the
# raw little-endian array bytes in header order. Deterministic bytes, so
# merge outputs are grouping-independent and single-input merges are copies.

_MAGIC = "cocostream-state/1"


def save_state(state: BucketedState, fp: BinaryIO) -> None:
    arrays = [
        ("tp_buckets", state.tp_buckets),
        ("fp_buckets", state.fp_buckets),
        ("gt_counts", state.gt_counts),
    ]
    header = {
        "format": _MAGIC,
        "config": state.config.to_dict(),
        "arrays": [
            {"name": name, "shape": list(arr.shape), "dtype": "<i8"}
            for name, arr in arrays
        ],
    }
    fp.write(json.dumps(header, sort_keys=True).encode("utf-8"))
    fp.write(b"\n")
    for _, arr in arrays:
        fp.write(np.ascontiguousarray(arr, dtype="<i8").tobytes())


def load_state(fp: BinaryIO) -> BucketedState:
    header_line = fp.readline()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"not a state snapshot: {exc}") from exc
    if header.get("format") != _MAGIC:
        raise ValueError(f"unsupported snapshot format: {header.get('format')!r}")
    config = EvalConfig.from_dict(header["config"])
    arrays = {}
    for spec in header["arrays"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        buf = fp.read(count * 8)
        if len(buf) != count * 8:
            raise ValueError(f"truncated snapshot while reading {spec['name']}")
        arrays[spec["name"]] = np.frombuffer(buf, dtype="<i8").reshape(shape).astype(np.int64)
    state = BucketedState(
        config=config,
        tp_buckets=arrays["tp_buckets"],
        fp_buckets=arrays["fp_buckets"],
        gt_counts=arrays["gt_counts"],
    )
    expected = new_state(config)
    if state.tp_buckets.shape != expected.tp_buckets.shape:
        raise ValueError("snapshot array shape does not match its config")
    return state
