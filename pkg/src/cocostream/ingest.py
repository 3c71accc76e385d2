"""Dataset loading from COCO-style JSON plus the synthetic perturbation generator.

Annotation documents carry images/annotations/categories sections with
(x, y, width, height) boxes; results documents are flat lists of
{image_id, category_id, bbox, score}. Boxes are converted to corner format
on load and category ids are remapped to contiguous class indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .geometry import BoundingBox, Detection, GroundTruth


class ParseError(ValueError):
    """Structurally malformed input document."""


class ValidationError(ValueError):
    """Well-formed document with out-of-domain values."""


Source = Union[str, Path, dict, list]


@dataclass(frozen=True)
class ImageRecord:
    image_id: int
    ground_truths: tuple[GroundTruth, ...] = ()
    detections: tuple[Detection, ...] = ()


@dataclass(frozen=True)
class Dataset:
    """Image records plus the category-id-to-class-index mapping."""

    images: tuple[ImageRecord, ...]
    category_ids: tuple[int, ...]  # class index -> original category id

    @property
    def num_classes(self) -> int:
        return len(self.category_ids)

    def class_index(self, category_id: int) -> int:
        try:
            return self.category_ids.index(category_id)
        except ValueError:
            raise ValidationError(f"unknown category id: {category_id}") from None

    def pairs(self) -> list[tuple[tuple[Detection, ...], tuple[GroundTruth, ...]]]:
        return [(rec.detections, rec.ground_truths) for rec in self.images]


@dataclass(frozen=True)
class PerturbationParams:
    translate_fraction: float = 0.2
    scale_low: float = 0.8
    scale_high: float = 1.2
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.translate_fraction < 1.0):
            raise ValidationError(
                f"translate_fraction outside [0, 1): {self.translate_fraction}"
            )
        if not (0.0 < self.scale_low <= self.scale_high):
            raise ValidationError(
                f"need 0 < scale_low <= scale_high, got "
                f"{self.scale_low}, {self.scale_high}"
            )


def _load_document(source: Source) -> dict | list:
    if isinstance(source, (dict, list)):
        return source
    path = Path(source)
    try:
        with path.open("r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: cannot read: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def _corner_box(bbox: Sequence[float], where: str) -> BoundingBox:
    if len(bbox) != 4:
        raise ParseError(f"{where}: bbox must have 4 entries, got {len(bbox)}")
    x, y, w, h = (float(v) for v in bbox)
    if w < 0 or h < 0:
        raise ValidationError(f"{where}: negative box size ({w} x {h})")
    return BoundingBox(left=x, top=y, right=x + w, bottom=y + h)


def load_ground_truth(source: Source) -> Dataset:
    """Build a ground-truth-only dataset from an annotation document."""
    doc = _load_document(source)
    for section in ("images", "annotations", "categories"):
        if section not in doc:
            raise ParseError(f"annotation document missing '{section}' section")

    category_ids = tuple(sorted(int(c["id"]) for c in doc["categories"]))
    if len(set(category_ids)) != len(category_ids):
        raise ParseError(f"duplicate category ids: {category_ids}")
    index_of = {cid: i for i, cid in enumerate(category_ids)}

    gts_by_image: dict[int, list[GroundTruth]] = {}
    image_order = []
    for img in doc["images"]:
        image_id = int(img["id"])
        if image_id in gts_by_image:
            raise ParseError(f"duplicate image id: {image_id}")
        gts_by_image[image_id] = []
        image_order.append(image_id)

    for i, ann in enumerate(doc["annotations"]):
        where = f"annotations[{i}]"
        image_id = int(ann["image_id"])
        if image_id not in gts_by_image:
            raise ValidationError(f"{where}: unknown image id {image_id}")
        cat = int(ann["category_id"])
        if cat not in index_of:
            raise ValidationError(f"{where}: unknown category id {cat}")
        box = _corner_box(ann["bbox"], where)
        gts_by_image[image_id].append(GroundTruth(box=box, class_id=index_of[cat]))

    images = tuple(
        ImageRecord(image_id=iid, ground_truths=tuple(gts_by_image[iid]))
        for iid in image_order
    )
    return Dataset(images=images, category_ids=category_ids)


def load_detections(source: Source, base: Dataset) -> Dataset:
    """Attach detections from a results document to a ground-truth dataset."""
    doc = _load_document(source)
    if not isinstance(doc, list):
        if isinstance(doc, dict) and isinstance(doc.get("results"), list):
            doc = doc["results"]
        else:
            raise ParseError("results document must be a JSON list")

    by_image = {rec.image_id: i for i, rec in enumerate(base.images)}
    dets: dict[int, list[Detection]] = {rec.image_id: [] for rec in base.images}
    for i, row in enumerate(doc):
        where = f"results[{i}]"
        image_id = int(row["image_id"])
        if image_id not in by_image:
            raise ValidationError(f"{where}: unknown image id {image_id}")
        score = float(row["score"])
        if not (0.0 <= score <= 1.0):
            raise ValidationError(f"{where}: score outside [0, 1]: {score}")
        class_idx = base.class_index(int(row["category_id"]))
        box = _corner_box(row["bbox"], where)
        dets[image_id].append(Detection(box=box, class_id=class_idx, confidence=score))

    images = tuple(
        replace(rec, detections=tuple(dets[rec.image_id])) for rec in base.images
    )
    return Dataset(images=images, category_ids=base.category_ids)


def sample_images(dataset: Dataset, n: int, seed: int) -> Dataset:
    """Uniform sample of n image records without replacement."""
    if n > len(dataset.images):
        raise ValueError(
            f"cannot sample {n} images from a dataset of {len(dataset.images)}"
        )
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(dataset.images), size=n, replace=False)
    images = tuple(dataset.images[i] for i in idx)
    return Dataset(images=images, category_ids=dataset.category_ids)


def perturb(dataset: Dataset, params: PerturbationParams) -> Dataset:
    """Synthesize detections by jittering each ground truth box.

    The whole box translates by uniform fractions of its width/height, its
    size rescales by uniform factors, the class is preserved, and the
    confidence is drawn uniformly from (0, 1]. Deterministic given the seed
    (PCG64 generator).
    """
    rng = np.random.default_rng(params.seed)
    tf = params.translate_fraction
    images = []
    for rec in dataset.images:
        dets = []
        for gt in rec.ground_truths:
            b = gt.box
            w, h = b.width, b.height
            dx = rng.uniform(-tf, tf) * w
            dy = rng.uniform(-tf, tf) * h
            new_w = w * rng.uniform(params.scale_low, params.scale_high)
            new_h = h * rng.uniform(params.scale_low, params.scale_high)
            left = b.left + dx
            top = b.top + dy
            conf = 1.0 - rng.random()  # uniform over (0, 1]
            dets.append(
                Detection(
                    box=BoundingBox(left, top, left + new_w, top + new_h),
                    class_id=gt.class_id,
                    confidence=conf,
                )
            )
        images.append(replace(rec, detections=tuple(dets)))
    return Dataset(images=tuple(images), category_ids=dataset.category_ids)


# -- interchange export ----------------------------------------------------


def dataset_to_annotation_doc(dataset: Dataset) -> dict:
    """Ground truths back to the annotation interchange format."""
    images = [{"id": rec.image_id} for rec in dataset.images]
    annotations = []
    ann_id = 1
    for rec in dataset.images:
        for gt in rec.ground_truths:
            b = gt.box
            annotations.append(
                {
                    "id": ann_id,
                    "image_id": rec.image_id,
                    "category_id": dataset.category_ids[gt.class_id],
                    "bbox": [b.left, b.top, b.width, b.height],
                }
            )
            ann_id += 1
    categories = [{"id": cid} for cid in dataset.category_ids]
    return {"images": images, "annotations": annotations, "categories": categories}


def dataset_to_results_doc(dataset: Dataset) -> list[dict]:
    """Detections back to the results interchange format."""
    rows = []
    for rec in dataset.images:
        for det in rec.detections:
            b = det.box
            rows.append(
                {
                    "image_id": rec.image_id,
                    "category_id": dataset.category_ids[det.class_id],
                    "bbox": [b.left, b.top, b.width, b.height],
                    "score": det.confidence,
                }
            )
    return rows
