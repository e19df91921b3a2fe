"""Synthetic scene generator."""

import numpy as np
import pytest

from trackcut import io
from trackcut.pipeline import load_manifest, load_video
from trackcut.synthetic import SceneSpec, generate_synthetic


class TestSceneSpec:
    def test_object_must_stay_inside(self):
        with pytest.raises(ValueError, match="leaves the frame"):
            SceneSpec(object_start=(60, 24), object_velocity=(2, 0))

    def test_decoy_must_stay_inside(self):
        with pytest.raises(ValueError, match="decoy leaves"):
            SceneSpec(decoy_position=(60, 60))

    def test_noise_rate_bounds(self):
        with pytest.raises(ValueError, match="noise_rate"):
            SceneSpec(noise_rate=1.0)

    def test_distractor_count_follows_noise_rate(self):
        # 8 signal proposals per frame at rate 0.3: 0.3 * 8 / 0.7 -> 3
        assert SceneSpec().distractors_per_frame == 3
        assert SceneSpec(noise_rate=0.0).distractors_per_frame == 0

    def test_object_origin_moves_with_velocity(self):
        spec = SceneSpec()
        assert spec.object_origin(0) == (8, 24)
        assert spec.object_origin(4) == (16, 24)


@pytest.fixture(scope="module")
def scene(tmp_path_factory):
    root = tmp_path_factory.mktemp("synthetic")
    return generate_synthetic(SceneSpec(), 0, root)


class TestGenerate:
    def test_manifest_loads(self, scene):
        manifest = load_manifest(scene)
        assert manifest.classes == ("object",)
        assert manifest.num_frames == 10
        assert manifest.size.width == 64 and manifest.size.height == 64
        assert manifest.gt_dir is not None

    def test_video_loads_in_full(self, scene):
        data = load_video(load_manifest(scene))
        assert len(data.frames) == 10
        assert len(data.flows) == 9
        assert all(g is not None for g in data.gt)

    def test_ground_truth_tracks_the_object(self, scene):
        spec = SceneSpec()
        gt = io.read_imap(scene.parent / "gt" / "0003.imap")
        expected = np.zeros((64, 64), dtype=np.int32)
        ox, oy = spec.object_origin(3)
        expected[oy : oy + 16, ox : ox + 16] = 1
        np.testing.assert_array_equal(gt, expected)

    def test_flow_matches_object_velocity(self, scene):
        spec = SceneSpec()
        u, v = io.read_flow(
            scene.parent / "flow" / "0002.u.fmap",
            scene.parent / "flow" / "0002.v.fmap",
        )
        ox, oy = spec.object_origin(2)
        assert u.values[oy + 8, ox + 8] == 2.0
        assert v.values[oy + 8, ox + 8] == 0.0
        assert u.values[0, 0] == 0.0

    def test_proposal_mix_per_frame(self, scene):
        proposals = io.read_proposals(scene.parent / "proposals" / "object.tsv")
        assert len(proposals) == 10 * (4 + 4 + 3)
        frame0 = [p for p in proposals if p.frame_index == 0]
        # 4 object copies, 4 decoy copies, 3 distractors
        assert len(frame0) == 11
        features = {tuple(np.flatnonzero(p.feature)[:1]) for p in frame0}
        assert (0,) in features and (1,) in features

    def test_same_seed_same_bytes(self, scene, tmp_path):
        replay = generate_synthetic(SceneSpec(), 0, tmp_path / "replay")
        originals = sorted(p for p in scene.parent.rglob("*") if p.is_file())
        copies = sorted(p for p in replay.parent.rglob("*") if p.is_file())
        assert [p.relative_to(scene.parent) for p in originals] == [
            p.relative_to(replay.parent) for p in copies
        ]
        for a, b in zip(originals, copies):
            assert a.read_bytes() == b.read_bytes(), a.name

    def test_different_seed_changes_frames(self, scene, tmp_path):
        other = generate_synthetic(SceneSpec(), 1, tmp_path / "other")
        a = (scene.parent / "frames" / "0000.ppm").read_bytes()
        b = (other.parent / "frames" / "0000.ppm").read_bytes()
        assert a != b
