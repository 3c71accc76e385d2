"""Greedy detection-to-ground-truth assignment per image, class, and IoU threshold.

Detections are visited in descending confidence order (stable on ties).
Each detection claims the unmatched same-class ground truth with the
highest IoU when that IoU reaches the threshold; otherwise it is a false
positive. Area filtering removes both detections and ground truths before
matching, and max-dets truncation happens after area filtering.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import AreaRange, ConfigError, EvalConfig
from .geometry import Detection, GroundTruth, box_area, iou, strip_padding


class MatchingError(ValueError):
    """Inputs violate the matching contract (e.g. mixed class ids)."""


@dataclass(frozen=True)
class Verdict:
    confidence: float
    is_tp: bool


@dataclass(frozen=True)
class MatchResult:
    """TP/FP verdicts for one (image, class, theta, area, max-dets) cell.

    Verdicts are ordered by descending confidence; gt_count is the number
    of ground truths that survived the area filter.
    """

    verdicts: tuple[Verdict, ...]
    gt_count: int


EMPTY_MATCH = MatchResult(verdicts=(), gt_count=0)


def match_image_class(
    detections: Sequence[Detection],
    ground_truths: Sequence[GroundTruth],
    theta: float,
    max_dets: int,
    area: AreaRange,
) -> MatchResult:
    """Greedy-match one class's detections against its ground truths."""
    if not (0.0 < theta <= 1.0):
        raise ConfigError(f"IoU threshold outside (0, 1]: {theta}")
    if max_dets < 1:
        raise ConfigError(f"max_dets must be >= 1, got {max_dets}")
    class_ids = {d.class_id for d in detections} | {g.class_id for g in ground_truths}
    if len(class_ids) > 1:
        raise MatchingError(f"mixed class ids in one matching call: {sorted(class_ids)}")
    if -1 in class_ids:
        raise MatchingError("padding entries must be stripped before matching")

    gts = [g for g in ground_truths if area.contains(box_area(g.box))]
    dets = [d for d in detections if area.contains(box_area(d.box))]
    dets.sort(key=lambda d: -d.confidence)  # stable: ties keep input order
    dets = dets[:max_dets]

    matched = [False] * len(gts)
    verdicts = []
    for det in dets:
        best_iou = 0.0
        best_idx = -1
        for gi, gt in enumerate(gts):
            if matched[gi]:
                continue
            v = iou(det.box, gt.box)
            if v > best_iou:  # strict: ties keep the lowest gt index
                best_iou = v
                best_idx = gi
        if best_idx >= 0 and best_iou >= theta:
            matched[best_idx] = True
            verdicts.append(Verdict(det.confidence, True))
        else:
            verdicts.append(Verdict(det.confidence, False))
    return MatchResult(verdicts=tuple(verdicts), gt_count=len(gts))


@dataclass(frozen=True)
class ImageMatches:
    """Match results for every cell of a config grid on one image.

    Stored sparsely: classes absent from both inputs are represented by
    EMPTY_MATCH rather than materialized.
    """

    config: EvalConfig
    cells: dict[tuple[int, int, int, int], MatchResult]
    present_classes: tuple[int, ...]

    def result(self, class_id: int, iou_idx: int, area_idx: int, maxdets_idx: int) -> MatchResult:
        cfg = self.config
        if not (0 <= class_id < cfg.num_classes):
            raise MatchingError(f"class id {class_id} outside [0, {cfg.num_classes})")
        if not (0 <= iou_idx < len(cfg.iou_thresholds)):
            raise IndexError(f"iou index {iou_idx} out of range")
        if not (0 <= area_idx < len(cfg.area_ranges)):
            raise IndexError(f"area index {area_idx} out of range")
        if not (0 <= maxdets_idx < len(cfg.max_dets_list)):
            raise IndexError(f"max-dets index {maxdets_idx} out of range")
        return self.cells.get((class_id, iou_idx, area_idx, maxdets_idx), EMPTY_MATCH)


def match_image(
    detections: Sequence[Detection],
    ground_truths: Sequence[GroundTruth],
    config: EvalConfig,
) -> ImageMatches:
    """Match one image over the full (class, theta, area, max-dets) grid.

    Padding entries are stripped internally. Class ids must lie in
    [0, config.num_classes) after stripping.
    """
    dets = strip_padding(detections)
    gts = strip_padding(ground_truths)

    dets_by_class: dict[int, list[Detection]] = {}
    for d in dets:
        dets_by_class.setdefault(d.class_id, []).append(d)
    gts_by_class: dict[int, list[GroundTruth]] = {}
    for g in gts:
        gts_by_class.setdefault(g.class_id, []).append(g)

    present = sorted(set(dets_by_class) | set(gts_by_class))
    for k in present:
        if not (0 <= k < config.num_classes):
            raise MatchingError(
                f"class id {k} outside [0, {config.num_classes})"
            )

    cells: dict[tuple[int, int, int, int], MatchResult] = {}
    for k in present:
        k_dets = dets_by_class.get(k, [])
        k_gts = gts_by_class.get(k, [])
        _match_class_grid(k, k_dets, k_gts, config, cells)
    return ImageMatches(config=config, cells=cells, present_classes=tuple(present))


def _match_class_grid(
    class_id: int,
    detections: list[Detection],
    ground_truths: list[GroundTruth],
    config: EvalConfig,
    cells: dict[tuple[int, int, int, int], MatchResult],
) -> None:
    """Fill every grid cell for one class, sharing IoU work across cells.

    Equivalent to calling match_image_class per cell (asserted by tests);
    the IoU matrix is computed once per class instead of once per cell.
    """
    dets = sorted(detections, key=lambda d: -d.confidence)
    det_areas = np.array([box_area(d.box) for d in dets], dtype=float)
    gt_areas = np.array([box_area(g.box) for g in ground_truths], dtype=float)
    ious = _iou_matrix(dets, ground_truths)

    for a_idx, (_, area) in enumerate(config.area_ranges):
        det_rows = np.nonzero(
            (det_areas >= area.min_area) & (det_areas < area.max_area)
        )[0]
        gt_cols = np.nonzero(
            (gt_areas >= area.min_area) & (gt_areas < area.max_area)
        )[0]
        gt_count = len(gt_cols)
        for m_idx, max_dets in enumerate(config.max_dets_list):
            rows = det_rows[:max_dets]
            sub = ious[np.ix_(rows, gt_cols)]
            confs = [dets[r].confidence for r in rows]
            for t_idx, theta in enumerate(config.iou_thresholds):
                flags = _greedy_tp_flags(sub, theta)
                verdicts = tuple(
                    Verdict(c, bool(f)) for c, f in zip(confs, flags)
                )
                cells[(class_id, t_idx, a_idx, m_idx)] = MatchResult(
                    verdicts=verdicts, gt_count=gt_count
                )


def _iou_matrix(dets: Sequence[Detection], gts: Sequence[GroundTruth]) -> np.ndarray:
    if not dets or not gts:
        return np.zeros((len(dets), len(gts)))
    db = np.array([[d.box.left, d.box.top, d.box.right, d.box.bottom] for d in dets])
    gb = np.array([[g.box.left, g.box.top, g.box.right, g.box.bottom] for g in gts])
    iw = np.minimum(db[:, None, 2], gb[None, :, 2]) - np.maximum(db[:, None, 0], gb[None, :, 0])
    ih = np.minimum(db[:, None, 3], gb[None, :, 3]) - np.maximum(db[:, None, 1], gb[None, :, 1])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    da = (db[:, 2] - db[:, 0]) * (db[:, 3] - db[:, 1])
    ga = (gb[:, 2] - gb[:, 0]) * (gb[:, 3] - gb[:, 1])
    union = da[:, None] + ga[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(union > 0.0, inter / np.where(union > 0.0, union, 1.0), 0.0)
    return out


def _greedy_tp_flags(ious: np.ndarray, theta: float) -> list[bool]:
    """Greedy assignment over a (dets x gts) IoU matrix, rows in match order."""
    n_det, n_gt = ious.shape
    if n_gt == 0:
        return [False] * n_det
    avail = ious.copy()
    flags = []
    for r in range(n_det):
        j = int(np.argmax(avail[r]))  # first max: lowest gt index wins ties
        if avail[r, j] >= theta:
            avail[:, j] = -1.0
            flags.append(True)
        else:
            flags.append(False)
    return flags
