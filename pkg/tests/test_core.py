"""Core geometry and raster types."""

import numpy as np
import pytest

from trackcut.core import (
    BinaryMask,
    BoundingBox,
    DenseMap,
    FrameSize,
    RegionProposal,
    expand_box,
    iou,
    mask_area,
    unit_normalize,
)

SIZE = FrameSize(width=64, height=64)
SIZE_16 = FrameSize(width=16, height=16)


class TestBoundingBox:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            BoundingBox(x0=5, y0=5, x1=5, y1=10)

    def test_area_half_open(self):
        box = BoundingBox(x0=2, y0=3, x1=6, y1=5)
        assert box.width == 4
        assert box.height == 2
        assert box.area == 8

    def test_iou_disjoint_is_zero(self):
        a = BoundingBox(x0=0, y0=0, x1=4, y1=4)
        b = BoundingBox(x0=10, y0=10, x1=14, y1=14)
        assert iou(a, b) == 0.0

    def test_iou_identical_is_one(self):
        a = BoundingBox(x0=3, y0=4, x1=9, y1=8)
        assert iou(a, a) == 1.0

    def test_iou_half_overlapping_squares(self):
        # Two 2x2 squares sharing half their area: 2 / 6 = 1/3.
        a = BoundingBox(x0=0, y0=0, x1=2, y1=2)
        b = BoundingBox(x0=1, y0=0, x1=3, y1=2)
        assert iou(a, b) == pytest.approx(1.0 / 3.0)

    def test_expand_clamps_to_frame(self):
        box = BoundingBox(x0=5, y0=5, x1=10, y1=10)
        grown = expand_box(box, margin=10, frame=SIZE)
        assert (grown.x0, grown.y0, grown.x1, grown.y1) == (0, 0, 20, 20)

    def test_expand_never_leaves_frame(self):
        box = BoundingBox(x0=60, y0=60, x1=64, y1=64)
        grown = expand_box(box, margin=10, frame=SIZE)
        assert grown.x1 <= SIZE.width and grown.y1 <= SIZE.height

    def test_shifted_into_preserves_size(self):
        box = BoundingBox(x0=58, y0=2, x1=63, y1=7)
        moved = box.shifted_into(SIZE, 10, -5)
        assert moved.width == box.width and moved.height == box.height
        assert 0 <= moved.x0 and moved.x1 <= SIZE.width
        assert 0 <= moved.y0 and moved.y1 <= SIZE.height


class TestBinaryMask:
    def test_roundtrip_random(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            arr = rng.random((16, 16)) < 0.4
            mask = BinaryMask.from_array(arr)
            np.testing.assert_array_equal(mask.to_array(), arr)

    def test_rle_text_roundtrip(self):
        rng = np.random.default_rng(11)
        arr = rng.random((16, 16)) < 0.5
        mask = BinaryMask.from_array(arr)
        again = BinaryMask.from_rle_text(mask.to_rle_text())
        assert again == mask

    def test_tight_box(self):
        arr = np.zeros((16, 16), dtype=bool)
        arr[3:7, 2:9] = True
        mask = BinaryMask.from_array(arr)
        box = mask.tight_box()
        assert (box.x0, box.y0, box.x1, box.y1) == (2, 3, 9, 7)

    def test_empty_mask_has_no_tight_box(self):
        mask = BinaryMask.from_array(np.zeros((16, 16), dtype=bool))
        with pytest.raises(ValueError):
            mask.tight_box()

    def test_area(self):
        arr = np.zeros((16, 16), dtype=bool)
        arr[0, 0] = True
        arr[5, 5:9] = True
        mask = BinaryMask.from_array(arr)
        assert mask.area == 5
        assert mask_area(mask) == 5

    def test_overlapping_runs_rejected(self):
        with pytest.raises(ValueError):
            BinaryMask(size=SIZE_16, runs=((0, 5), (3, 2)))

    def test_run_beyond_frame_rejected(self):
        with pytest.raises(ValueError):
            BinaryMask(size=SIZE_16, runs=((250, 10),))


class TestDenseMap:
    def test_shape_checked(self):
        with pytest.raises(ValueError):
            DenseMap(size=SIZE_16, values=np.zeros((8, 16)))

    def test_rejects_nan(self):
        vals = np.zeros((16, 16))
        vals[0, 0] = np.nan
        with pytest.raises(ValueError):
            DenseMap(size=SIZE_16, values=vals)

    def test_values_immutable(self):
        m = DenseMap.zeros(SIZE_16)
        with pytest.raises(ValueError):
            m.values[0, 0] = 1.0


class TestRegionProposal:
    def _mask(self):
        arr = np.zeros((16, 16), dtype=bool)
        arr[4:8, 4:8] = True
        return BinaryMask.from_array(arr)

    def _build(self, **overrides):
        kwargs = dict(
            frame_index=0,
            mask=self._mask(),
            appearance_score=0.5,
            classifier_confidence=0.9,
            feature=np.zeros(4),
        )
        kwargs.update(overrides)
        return RegionProposal.build(**kwargs)

    def test_build_derives_box(self):
        p = self._build()
        assert (p.box.x0, p.box.y0, p.box.x1, p.box.y1) == (4, 4, 8, 8)

    def test_classifier_confidence_range_checked(self):
        with pytest.raises(ValueError):
            self._build(classifier_confidence=1.5)

    def test_feature_norm_capped(self):
        with pytest.raises(ValueError):
            self._build(feature=np.full(4, 1.0))

    def test_with_scores(self):
        p = self._build()
        q = p.with_scores(motion_score=2.0, combined_score=1.0, rescored=0.9)
        assert q.motion_score == 2.0
        assert p.motion_score is None


class TestUnitNormalize:
    def test_scales_to_unit(self):
        v = unit_normalize(np.array([3.0, 4.0]))
        assert np.linalg.norm(v) == pytest.approx(1.0)

    def test_zero_vector_unchanged(self):
        v = unit_normalize(np.zeros(3))
        np.testing.assert_array_equal(v, np.zeros(3))
