"""Box algebra: IoU/CIoU, cropping, anchor generation and labeling."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sensoryeval.boxes import (
    IGNORE,
    NEGATIVE,
    POSITIVE,
    AnchorSpec,
    BoundingBox,
    Detection,
    EmptyCropError,
    ciou_terms,
    crop,
    generate_anchors,
    iou,
    label_anchors,
)
from sensoryeval.validation import ValidationError

coords = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)
sizes = st.floats(min_value=0.1, max_value=40.0, allow_nan=False)
box_strategy = st.builds(BoundingBox, coords, coords, sizes, sizes)


def corners_box(x1, y1, x2, y2):
    return BoundingBox.from_corners(x1, y1, x2, y2)


class TestBoundingBox:
    def test_rejects_non_positive_extent(self):
        with pytest.raises(ValidationError):
            BoundingBox(0, 0, 0, 1)
        with pytest.raises(ValidationError):
            BoundingBox(0, 0, 1, -1)

    def test_corner_round_trip_exact_on_grid(self):
        for x1 in (0.0, 0.25, 1.5, 7.75):
            for w in (0.5, 1.0, 3.25):
                box = corners_box(x1, 2 * x1, x1 + w, 2 * x1 + w)
                assert box.corners() == (x1, 2 * x1, x1 + w, 2 * x1 + w)

    @given(box_strategy)
    def test_corner_round_trip(self, box):
        again = BoundingBox.from_corners(*box.corners())
        assert again.bx == pytest.approx(box.bx, abs=1e-12)
        assert again.bw == pytest.approx(box.bw, abs=1e-12)

    def test_pixel_normalized_conversions(self):
        box = BoundingBox(0.5, 0.5, 0.4, 0.6)
        px = box.to_pixels(100, 50)
        assert (px.bx, px.by, px.bw, px.bh) == (50.0, 25.0, 40.0, 30.0)
        back = px.to_normalized(100, 50)
        assert back == box


class TestIou:
    def test_identical_boxes(self):
        box = corners_box(1, 2, 4, 6)
        assert iou(box, box) == 1.0

    def test_disjoint_boxes(self):
        assert iou(corners_box(0, 0, 1, 1), corners_box(5, 5, 6, 6)) == 0.0

    def test_hand_geometry(self):
        # Intersection 1, union 7.
        a = corners_box(0, 0, 2, 2)
        b = corners_box(1, 1, 3, 3)
        assert iou(a, b) == pytest.approx(1 / 7)

    @given(box_strategy, box_strategy)
    def test_symmetric_and_bounded(self, a, b):
        v = iou(a, b)
        assert v == pytest.approx(iou(b, a), abs=1e-12)
        assert 0.0 <= v <= 1.0 + 1e-12

    @given(box_strategy, box_strategy, coords, coords)
    def test_translation_invariance(self, a, b, dx, dy):
        a2 = BoundingBox(a.bx + dx, a.by + dy, a.bw, a.bh)
        b2 = BoundingBox(b.bx + dx, b.by + dy, b.bw, b.bh)
        assert iou(a, b) == pytest.approx(iou(a2, b2), abs=1e-9)
        t1, t2 = ciou_terms(a, b), ciou_terms(a2, b2)
        assert t1.diou == pytest.approx(t2.diou, abs=1e-9)
        assert t1.ciou == pytest.approx(t2.ciou, abs=1e-9)

    def test_rasterized_counting_oracle(self):
        # Integer-cornered boxes let a unit-grid cell count compute the
        # exact intersection and union areas.
        rng = np.random.default_rng(42)
        for _ in range(1000):
            x1, y1 = rng.integers(0, 20, size=2)
            w1, h1 = rng.integers(1, 12, size=2)
            x2, y2 = rng.integers(0, 20, size=2)
            w2, h2 = rng.integers(1, 12, size=2)
            a = corners_box(x1, y1, x1 + w1, y1 + h1)
            b = corners_box(x2, y2, x2 + w2, y2 + h2)
            grid = np.zeros((40, 40, 2), dtype=bool)
            grid[y1:y1 + h1, x1:x1 + w1, 0] = True
            grid[y2:y2 + h2, x2:x2 + w2, 1] = True
            inter = np.sum(grid[..., 0] & grid[..., 1])
            union = np.sum(grid[..., 0] | grid[..., 1])
            assert iou(a, b) == pytest.approx(inter / union, abs=2 / union)


class TestCiouTerms:
    def test_identical_boxes_all_penalties_vanish(self):
        box = corners_box(0, 0, 3, 5)
        t = ciou_terms(box, box)
        assert t.iou == 1.0
        assert t.v == 0.0
        assert t.rho2 == 0.0
        assert t.ciou == 1.0

    def test_concentric_same_aspect(self):
        small = BoundingBox(5, 5, 2, 3)
        large = BoundingBox(5, 5, 4, 6)
        t = ciou_terms(small, large)
        assert t.rho2 == 0.0
        assert t.v == pytest.approx(0.0, abs=1e-15)
        assert t.ciou == pytest.approx(t.diou) == pytest.approx(t.iou)

    def test_concentric_squares_hand_evaluation(self):
        # Prediction 2x2, ground truth 4x1, sharing a center.
        pred = BoundingBox(0, 0, 2, 2)
        gt = BoundingBox(0, 0, 4, 1)
        t = ciou_terms(pred, gt)
        expected_iou = 2.0 / 6.0  # inter 2x1, union 4+4-2
        expected_v = (4 / math.pi ** 2) * (math.atan(4) - math.atan(1)) ** 2
        expected_alpha = expected_v / ((1 - expected_iou) + expected_v)
        assert t.iou == pytest.approx(expected_iou)
        assert t.rho2 == 0.0
        assert t.v == pytest.approx(expected_v)
        assert t.alpha == pytest.approx(expected_alpha)
        assert t.diou == pytest.approx(expected_iou)
        assert t.ciou == pytest.approx(expected_iou - expected_alpha * expected_v)

    @given(box_strategy, box_strategy)
    def test_penalty_ordering(self, a, b):
        t = ciou_terms(a, b)
        assert t.ciou <= t.diou + 1e-12
        assert t.diou <= t.iou + 1e-12


class TestCrop:
    def make_image(self, w=20, h=10):
        rng = np.random.default_rng(0)
        return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)

    def test_full_image_box_round_trips(self):
        img = self.make_image()
        h, w = img.shape[:2]
        out = crop(img, BoundingBox(w / 2, h / 2, w, h))
        assert np.array_equal(out, img)

    def test_copy_not_view(self):
        img = self.make_image()
        out = crop(img, BoundingBox(10, 5, 4, 4))
        out[:] = 0
        assert img.max() > 0

    def test_centered_half_box(self):
        img = self.make_image(w=20, h=10)
        out = crop(img, BoundingBox(10, 5, 10, 5))
        assert out.shape == (5, 10, 3)
        assert np.array_equal(out, img[3:8, 5:15])

    def test_clamps_at_right_edge(self):
        img = self.make_image(w=20, h=10)
        out = crop(img, BoundingBox(20, 5, 10, 4))  # half past the edge
        assert out.shape == (4, 5, 3)
        assert np.array_equal(out, img[3:7, 15:20])

    def test_fully_outside_raises(self):
        img = self.make_image()
        with pytest.raises(EmptyCropError):
            crop(img, BoundingBox(100, 100, 4, 4))

    def test_grayscale_supported(self):
        img = np.arange(100, dtype=np.uint8).reshape(10, 10)
        out = crop(img, BoundingBox(5, 5, 10, 10))
        assert np.array_equal(out, img)


class TestAnchors:
    def test_grid_arithmetic_224_over_8(self):
        # floor(224/8)^2 = 784 cells; the often-quoted 576 is 24^2 and
        # does not follow from this arithmetic.
        spec = AnchorSpec(scales=(8,), aspect_ratios=(1.0,), stride=8)
        anchors = generate_anchors(spec, 224, 224)
        assert len(anchors) == 784

    def test_single_cell(self):
        spec = AnchorSpec(scales=(8,), aspect_ratios=(1.0,), stride=8)
        anchors = generate_anchors(spec, 8, 8)
        assert len(anchors) == 1
        assert anchors[0] == BoundingBox(4.0, 4.0, 8.0, 8.0)

    def test_cartesian_product_of_shapes(self):
        spec = AnchorSpec(scales=(8, 16), aspect_ratios=(0.5, 1.0, 2.0), stride=8)
        anchors = generate_anchors(spec, 8, 8)
        assert len(anchors) == 6

    @given(st.integers(min_value=1, max_value=6),
           st.integers(min_value=1, max_value=4),
           st.integers(min_value=8, max_value=64),
           st.integers(min_value=8, max_value=64))
    def test_count_formula(self, n_scales, n_ratios, w, h):
        spec = AnchorSpec(scales=tuple(range(4, 4 + n_scales)),
                          aspect_ratios=tuple(0.5 + i for i in range(n_ratios)),
                          stride=8)
        anchors = generate_anchors(spec, w, h)
        assert len(anchors) == (w // 8) * (h // 8) * n_scales * n_ratios

    def test_aspect_ratio_preserves_area(self):
        spec = AnchorSpec(scales=(16,), aspect_ratios=(2.0,), stride=32)
        (anchor,) = generate_anchors(spec, 32, 32)
        assert anchor.bw / anchor.bh == pytest.approx(2.0)
        assert anchor.area() == pytest.approx(16 * 16)

    def test_stride_larger_than_image_rejected(self):
        spec = AnchorSpec(scales=(8,), aspect_ratios=(1.0,), stride=64)
        with pytest.raises(ValidationError):
            generate_anchors(spec, 32, 32)


class TestLabelAnchors:
    def test_identical_anchor_positive(self):
        gt = corners_box(0, 0, 4, 4)
        assert label_anchors([gt], [gt], 0.5, 0.3) == [POSITIVE]

    def test_disjoint_anchor_negative(self):
        anchor = corners_box(10, 10, 12, 12)
        gt = corners_box(0, 0, 4, 4)
        assert label_anchors([anchor], [gt], 0.5, 0.3) == [NEGATIVE]

    def test_intermediate_iou_ignored(self):
        # Unit squares offset so IoU = (4/7) / (2 - 4/7) = 0.4 exactly.
        anchor = corners_box(0, 0, 1, 1)
        gt = corners_box(0, 1 - 4 / 7, 1, 2 - 4 / 7)
        assert iou(anchor, gt) == pytest.approx(0.4)
        assert label_anchors([anchor], [gt], 0.5, 0.3) == [IGNORE]

    def test_no_ground_truths_all_negative(self):
        anchors = [corners_box(0, 0, 1, 1), corners_box(1, 1, 2, 2)]
        assert label_anchors(anchors, [], 0.5, 0.3) == [NEGATIVE, NEGATIVE]

    def test_threshold_ordering_enforced(self):
        with pytest.raises(ValidationError):
            label_anchors([], [], 0.3, 0.5)


class TestDetection:
    def test_confidence_range_enforced(self):
        box = corners_box(0, 0, 1, 1)
        with pytest.raises(ValidationError):
            Detection(box=box, category="guava", confidence=1.5)

    def test_category_required(self):
        box = corners_box(0, 0, 1, 1)
        with pytest.raises(ValidationError):
            Detection(box=box, category="", confidence=0.5)
