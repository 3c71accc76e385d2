"""Evaluation configuration and the 12-row metric report.

Defaults follow the standard COCO challenge setup: IoU thresholds
0.50:0.05:0.95, 101 recall thresholds, area ranges all/small/medium/large
with the 32^2 and 96^2 pixel boundaries, and max-detection limits 1/10/100.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence


class ConfigError(ValueError):
    """Invalid evaluation configuration."""


UNDEFINED = -1.0

COCO_AREA_SMALL_MAX = 32.0 ** 2
COCO_AREA_MEDIUM_MAX = 96.0 ** 2


@dataclass(frozen=True)
class AreaRange:
    """Box-area interval [min_area, max_area); max_area may be inf."""

    min_area: float
    max_area: float

    def __post_init__(self) -> None:
        if self.min_area < 0:
            raise ConfigError(f"min_area must be >= 0, got {self.min_area}")
        if not self.max_area > self.min_area:
            raise ConfigError(
                f"max_area must exceed min_area: [{self.min_area}, {self.max_area})"
            )

    def contains(self, area: float) -> bool:
        return self.min_area <= area < self.max_area


def default_iou_thresholds() -> tuple[float, ...]:
    return tuple(0.5 + 0.05 * i for i in range(10))


def default_recall_thresholds() -> tuple[float, ...]:
    return tuple(i / 100.0 for i in range(101))


def default_area_ranges() -> tuple[tuple[str, AreaRange], ...]:
    return (
        ("all", AreaRange(0.0, math.inf)),
        ("small", AreaRange(0.0, COCO_AREA_SMALL_MAX)),
        ("medium", AreaRange(COCO_AREA_SMALL_MAX, COCO_AREA_MEDIUM_MAX)),
        ("large", AreaRange(COCO_AREA_MEDIUM_MAX, math.inf)),
    )


@dataclass(frozen=True)
class EvalConfig:
    num_classes: int
    iou_thresholds: tuple[float, ...] = field(default_factory=default_iou_thresholds)
    recall_thresholds: tuple[float, ...] = field(default_factory=default_recall_thresholds)
    buckets: int = 10000
    area_ranges: tuple[tuple[str, AreaRange], ...] = field(default_factory=default_area_ranges)
    max_dets_list: tuple[int, ...] = (1, 10, 100)

    def __post_init__(self) -> None:
        if self.num_classes < 1:
            raise ConfigError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.buckets < 1:
            raise ConfigError(f"buckets must be >= 1, got {self.buckets}")
        if not self.iou_thresholds:
            raise ConfigError("iou_thresholds must be non-empty")
        _require_strictly_increasing("iou_thresholds", self.iou_thresholds)
        for t in self.iou_thresholds:
            if not (0.0 < t <= 1.0):
                raise ConfigError(f"IoU threshold outside (0, 1]: {t}")
        if not self.recall_thresholds:
            raise ConfigError("recall_thresholds must be non-empty")
        _require_strictly_increasing("recall_thresholds", self.recall_thresholds)
        for r in self.recall_thresholds:
            if not (0.0 <= r <= 1.0):
                raise ConfigError(f"recall threshold outside [0, 1]: {r}")
        if not self.area_ranges:
            raise ConfigError("area_ranges must be non-empty")
        names = [name for name, _ in self.area_ranges]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate area range names: {names}")
        if not self.max_dets_list:
            raise ConfigError("max_dets_list must be non-empty")
        for m in self.max_dets_list:
            if m < 1:
                raise ConfigError(f"max_dets must be >= 1, got {m}")

    # -- grid lookups -----------------------------------------------------

    def area_index(self, name: str) -> int | None:
        for i, (n, _) in enumerate(self.area_ranges):
            if n == name:
                return i
        return None

    def iou_index(self, theta: float) -> int | None:
        for i, t in enumerate(self.iou_thresholds):
            if math.isclose(t, theta, rel_tol=0.0, abs_tol=1e-9):
                return i
        return None

    def max_dets_index(self, max_dets: int) -> int | None:
        for i, m in enumerate(self.max_dets_list):
            if m == max_dets:
                return i
        return None

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "iou_thresholds": list(self.iou_thresholds),
            "recall_thresholds": list(self.recall_thresholds),
            "buckets": self.buckets,
            "area_ranges": [
                [name, r.min_area, None if math.isinf(r.max_area) else r.max_area]
                for name, r in self.area_ranges
            ],
            "max_dets_list": list(self.max_dets_list),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalConfig":
        return cls(
            num_classes=int(d["num_classes"]),
            iou_thresholds=tuple(float(t) for t in d["iou_thresholds"]),
            recall_thresholds=tuple(float(r) for r in d["recall_thresholds"]),
            buckets=int(d["buckets"]),
            area_ranges=tuple(
                (name, AreaRange(float(lo), math.inf if hi is None else float(hi)))
                for name, lo, hi in d["area_ranges"]
            ),
            max_dets_list=tuple(int(m) for m in d["max_dets_list"]),
        )


def _require_strictly_increasing(name: str, values: Sequence[float]) -> None:
    for a, b in zip(values, values[1:]):
        if not b > a:
            raise ConfigError(f"{name} must be strictly increasing, got {list(values)}")


METRIC_NAMES = (
    "map_standard",
    "map_50",
    "map_75",
    "map_small",
    "map_medium",
    "map_large",
    "recall_maxdets_1",
    "recall_maxdets_10",
    "recall_maxdets_100",
    "recall_small",
    "recall_medium",
    "recall_large",
)

METRIC_LABELS = {
    "map_standard": "Standard MaP",
    "map_50": "MaP IoU=0.5",
    "map_75": "MaP IoU=0.75",
    "map_small": "MaP Small Objects",
    "map_medium": "MaP Medium Objects",
    "map_large": "MaP Large Objects",
    "recall_maxdets_1": "Recall 1 Detection",
    "recall_maxdets_10": "Recall 10 Detections",
    "recall_maxdets_100": "Standard Recall",
    "recall_small": "Recall Small Objects",
    "recall_medium": "Recall Medium Objects",
    "recall_large": "Recall Large Objects",
}


@dataclass(frozen=True)
class MetricReport:
    """The 12 standard COCO scalars; -1 marks an undefined metric."""

    map_standard: float
    map_50: float
    map_75: float
    map_small: float
    map_medium: float
    map_large: float
    recall_maxdets_1: float
    recall_maxdets_10: float
    recall_maxdets_100: float
    recall_small: float
    recall_medium: float
    recall_large: float

    def __post_init__(self) -> None:
        for name in METRIC_NAMES:
            v = getattr(self, name)
            if v != UNDEFINED and not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} outside [0, 1]: {v}")

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}
