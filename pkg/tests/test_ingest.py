import pytest

from cocostream import (
    EvalConfig,
    ParseError,
    PerturbationParams,
    ValidationError,
    evaluate_exact,
    load_detections,
    load_ground_truth,
    perturb,
    sample_images,
)
from cocostream.ingest import dataset_to_annotation_doc, dataset_to_results_doc


def minimal_doc(annotations=()):
    return {
        "images": [{"id": 1}, {"id": 2}],
        "annotations": list(annotations),
        "categories": [{"id": 3}, {"id": 9}],
    }


class TestLoadGroundTruth:
    def test_zero_annotations_keeps_empty_records(self):
        ds = load_ground_truth(minimal_doc())
        assert len(ds.images) == 2
        assert all(rec.ground_truths == () for rec in ds.images)

    def test_xywh_to_corner_conversion(self):
        ds = load_ground_truth(
            minimal_doc([{"id": 1, "image_id": 1, "category_id": 3, "bbox": [10, 20, 30, 40]}])
        )
        box = ds.images[0].ground_truths[0].box
        assert (box.left, box.top, box.right, box.bottom) == (10, 20, 40, 60)

    def test_category_ids_mapped_contiguously(self):
        ds = load_ground_truth(
            minimal_doc([{"id": 1, "image_id": 1, "category_id": 9, "bbox": [0, 0, 1, 1]}])
        )
        assert ds.category_ids == (3, 9)
        assert ds.images[0].ground_truths[0].class_id == 1

    def test_unknown_category_rejected(self):
        with pytest.raises(ValidationError):
            load_ground_truth(
                minimal_doc([{"id": 1, "image_id": 1, "category_id": 5, "bbox": [0, 0, 1, 1]}])
            )

    def test_negative_size_rejected(self):
        with pytest.raises(ValidationError):
            load_ground_truth(
                minimal_doc([{"id": 1, "image_id": 1, "category_id": 3, "bbox": [0, 0, -1, 5]}])
            )

    def test_missing_section_rejected(self):
        with pytest.raises(ParseError):
            load_ground_truth({"images": [], "annotations": []})

    def test_invalid_json_file_names_location(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ParseError, match="bad.json"):
            load_ground_truth(path)

    def test_round_trips_through_interchange_doc(self, golden_paths):
        gt_path, _ = golden_paths
        ds = load_ground_truth(gt_path)
        again = load_ground_truth(dataset_to_annotation_doc(ds))
        assert again == ds


class TestLoadDetections:
    def test_empty_results(self):
        base = load_ground_truth(minimal_doc())
        ds = load_detections([], base)
        assert all(rec.detections == () for rec in ds.images)

    def test_row_conversion(self):
        base = load_ground_truth(minimal_doc())
        ds = load_detections(
            [{"image_id": 1, "category_id": 3, "bbox": [0, 0, 10, 10], "score": 0.7}],
            base,
        )
        det = ds.images[0].detections[0]
        assert (det.box.left, det.box.top, det.box.right, det.box.bottom) == (0, 0, 10, 10)
        assert det.confidence == 0.7
        assert det.class_id == 0

    def test_score_out_of_range_rejected(self):
        base = load_ground_truth(minimal_doc())
        with pytest.raises(ValidationError):
            load_detections(
                [{"image_id": 1, "category_id": 3, "bbox": [0, 0, 1, 1], "score": 1.5}],
                base,
            )

    def test_unknown_image_rejected(self):
        base = load_ground_truth(minimal_doc())
        with pytest.raises(ValidationError):
            load_detections(
                [{"image_id": 42, "category_id": 3, "bbox": [0, 0, 1, 1], "score": 0.5}],
                base,
            )

    def test_detections_round_trip(self, golden_paths):
        gt_path, det_path = golden_paths
        ds = load_detections(det_path, load_ground_truth(gt_path))
        again = load_detections(dataset_to_results_doc(ds), load_ground_truth(gt_path))
        assert again == ds


class TestSampleImages:
    def test_full_sample_is_permutation(self, synthetic_pool_path):
        ds = load_ground_truth(synthetic_pool_path)
        sampled = sample_images(ds, len(ds.images), seed=1)
        assert sorted(r.image_id for r in sampled.images) == sorted(
            r.image_id for r in ds.images
        )

    def test_deterministic(self, synthetic_pool_path):
        ds = load_ground_truth(synthetic_pool_path)
        a = sample_images(ds, 10, seed=42)
        b = sample_images(ds, 10, seed=42)
        assert a == b

    def test_distinct_ids(self, synthetic_pool_path):
        ds = load_ground_truth(synthetic_pool_path)
        sampled = sample_images(ds, 10, seed=3)
        ids = [r.image_id for r in sampled.images]
        assert len(set(ids)) == 10

    def test_oversample_rejected(self, golden_paths):
        ds = load_ground_truth(golden_paths[0])
        with pytest.raises(ValueError):
            sample_images(ds, 4, seed=0)


class TestPerturb:
    def test_identity_perturbation_preserves_geometry(self, golden_paths):
        ds = load_ground_truth(golden_paths[0])
        out = perturb(
            ds, PerturbationParams(translate_fraction=0.0, scale_low=1.0, scale_high=1.0, seed=1)
        )
        for rec in out.images:
            assert len(rec.detections) == len(rec.ground_truths)
            for det, gt in zip(rec.detections, rec.ground_truths):
                assert det.box == gt.box
                assert det.class_id == gt.class_id
                assert 0.0 < det.confidence <= 1.0

    def test_counts_and_classes_preserved(self, synthetic_pool_path):
        ds = load_ground_truth(synthetic_pool_path)
        out = perturb(ds, PerturbationParams(seed=5))
        for before, after in zip(ds.images, out.images):
            assert len(after.detections) == len(before.ground_truths)
            assert sorted(d.class_id for d in after.detections) == sorted(
                g.class_id for g in before.ground_truths
            )

    def test_deterministic(self, synthetic_pool_path):
        ds = load_ground_truth(synthetic_pool_path)
        assert perturb(ds, PerturbationParams(seed=9)) == perturb(
            ds, PerturbationParams(seed=9)
        )

    def test_scale_bounds_respected(self, synthetic_pool_path):
        ds = load_ground_truth(synthetic_pool_path)
        params = PerturbationParams(seed=11)
        out = perturb(ds, params)
        for before, after in zip(ds.images, out.images):
            for det, gt in zip(after.detections, before.ground_truths):
                if gt.box.width > 0:
                    assert (
                        params.scale_low - 1e-9
                        <= det.box.width / gt.box.width
                        <= params.scale_high + 1e-9
                    )

    def test_identity_perturbation_gives_full_recall(self, synthetic_pool_path):
        ds = sample_images(load_ground_truth(synthetic_pool_path), 20, seed=2)
        out = perturb(
            ds, PerturbationParams(translate_fraction=0.0, scale_low=1.0, scale_high=1.0, seed=3)
        )
        cfg = EvalConfig(num_classes=ds.num_classes)
        report = evaluate_exact(out.pairs(), cfg)
        assert report.recall_maxdets_100 == 1.0

    def test_invalid_params_rejected(self):
        with pytest.raises(ValidationError):
            PerturbationParams(translate_fraction=1.0)
        with pytest.raises(ValidationError):
            PerturbationParams(scale_low=1.2, scale_high=0.8)
