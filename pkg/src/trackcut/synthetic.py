"""Deterministic synthetic scenes with full pipeline inputs.

A scene is a flat background, one moving square (the tagged object) and
optionally one static square of the same colour (a decoy: scenery that
looks like the object but never moves). The generator emits frames,
exact motion maps and flow fields, region proposals with features, and
per-frame ground truth marking the moving square only.

The decoy is what separates the full pipeline from its no-selection
ablation: its proposals score well enough on appearance to survive
pooling and mining, so skipping subset selection leaks it into the
final confidence maps, while its motionlessness and unrelated feature
direction keep its track out of the selected subset.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from trackcut import io
from trackcut.core import BinaryMask, DenseMap, FrameSize, RegionProposal


@dataclass(frozen=True)
class SceneSpec:
    width: int = 64
    height: int = 64
    num_frames: int = 10
    object_size: int = 16
    object_start: tuple[int, int] = (8, 24)
    object_velocity: tuple[int, int] = (2, 0)
    object_colour: tuple[float, float, float] = (0.85, 0.25, 0.2)
    background_colour: tuple[float, float, float] = (0.35, 0.45, 0.55)
    include_decoy: bool = True
    decoy_size: int = 12
    decoy_position: tuple[int, int] = (44, 44)
    colour_noise: float = 0.02
    noise_rate: float = 0.3
    copies_per_object: int = 4
    object_appearance: float = 0.95
    object_classifier: float = 0.92
    decoy_appearance: float = 0.9
    decoy_classifier: float = 0.8
    feature_dim: int = 8

    def __post_init__(self):
        if self.width < 8 or self.height < 8 or self.num_frames < 1:
            raise ValueError("scene too small")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValueError("noise_rate must lie in [0, 1)")
        if self.copies_per_object < 1:
            raise ValueError("copies_per_object must be positive")
        if self.feature_dim < 2:
            raise ValueError("feature_dim must be at least 2")
        x0, y0 = self.object_start
        vx, vy = self.object_velocity
        for t in (0, self.num_frames - 1):
            if not (
                0 <= x0 + vx * t
                and x0 + vx * t + self.object_size <= self.width
                and 0 <= y0 + vy * t
                and y0 + vy * t + self.object_size <= self.height
            ):
                raise ValueError("object leaves the frame")
        if self.include_decoy:
            dx, dy = self.decoy_position
            if dx + self.decoy_size > self.width or dy + self.decoy_size > self.height:
                raise ValueError("decoy leaves the frame")

    @property
    def frame_size(self) -> FrameSize:
        return FrameSize(width=self.width, height=self.height)

    def object_origin(self, t: int) -> tuple[int, int]:
        return (
            self.object_start[0] + self.object_velocity[0] * t,
            self.object_start[1] + self.object_velocity[1] * t,
        )

    @property
    def distractors_per_frame(self) -> int:
        signal = self.copies_per_object * (2 if self.include_decoy else 1)
        return int(round(self.noise_rate * signal / (1.0 - self.noise_rate)))


def _square_mask(spec: SceneSpec, x0: int, y0: int, side: int) -> BinaryMask:
    arr = np.zeros((spec.height, spec.width), dtype=bool)
    arr[y0 : y0 + side, x0 : x0 + side] = True
    return BinaryMask.from_array(arr)


def _object_feature(spec: SceneSpec) -> np.ndarray:
    f = np.zeros(spec.feature_dim)
    f[0] = 1.0
    return f


def _decoy_feature(spec: SceneSpec) -> np.ndarray:
    f = np.zeros(spec.feature_dim)
    f[1] = 1.0
    return f


def _distractor_feature(spec: SceneSpec, rng: np.random.Generator) -> np.ndarray:
    f = np.zeros(spec.feature_dim)
    if spec.feature_dim > 2:
        tail = rng.normal(size=spec.feature_dim - 2)
        norm = float(np.linalg.norm(tail))
        if norm > 0.0:
            f[2:] = tail / norm
    return f


def _render_frame(spec: SceneSpec, t: int, rng: np.random.Generator) -> np.ndarray:
    image = np.empty((spec.height, spec.width, 3))
    image[:, :] = spec.background_colour
    ox, oy = spec.object_origin(t)
    image[oy : oy + spec.object_size, ox : ox + spec.object_size] = spec.object_colour
    if spec.include_decoy:
        dx, dy = spec.decoy_position
        image[dy : dy + spec.decoy_size, dx : dx + spec.decoy_size] = spec.object_colour
    image += rng.normal(scale=spec.colour_noise, size=image.shape)
    np.clip(image, 0.0, 1.0, out=image)
    return np.rint(image * 255.0).astype(np.uint8)


def _frame_proposals(
    spec: SceneSpec, t: int, rng: np.random.Generator
) -> list[RegionProposal]:
    out = []
    ox, oy = spec.object_origin(t)
    object_mask = _square_mask(spec, ox, oy, spec.object_size)
    for _ in range(spec.copies_per_object):
        out.append(
            RegionProposal.build(
                frame_index=t,
                mask=object_mask,
                appearance_score=spec.object_appearance,
                classifier_confidence=spec.object_classifier,
                feature=_object_feature(spec),
            )
        )
    if spec.include_decoy:
        decoy_mask = _square_mask(spec, *spec.decoy_position, spec.decoy_size)
        for _ in range(spec.copies_per_object):
            out.append(
                RegionProposal.build(
                    frame_index=t,
                    mask=decoy_mask,
                    appearance_score=spec.decoy_appearance,
                    classifier_confidence=spec.decoy_classifier,
                    feature=_decoy_feature(spec),
                )
            )
    for _ in range(spec.distractors_per_frame):
        w = int(rng.integers(8, 21))
        h = int(rng.integers(8, 21))
        x0 = int(rng.integers(0, spec.width - w + 1))
        y0 = int(rng.integers(0, spec.height - h + 1))
        arr = np.zeros((spec.height, spec.width), dtype=bool)
        arr[y0 : y0 + h, x0 : x0 + w] = True
        out.append(
            RegionProposal.build(
                frame_index=t,
                mask=BinaryMask.from_array(arr),
                appearance_score=float(rng.uniform(0.3, 0.8)),
                classifier_confidence=float(rng.uniform(0.02, 0.12)),
                feature=_distractor_feature(spec, rng),
            )
        )
    return out


def generate_synthetic(
    spec: SceneSpec, seed: int, out_dir: str | Path, video_id: str = "synthetic"
) -> Path:
    """Write a complete video directory and return the manifest path."""
    out = Path(out_dir)
    for sub in ("frames", "motion", "flow", "gt", "proposals"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    size = spec.frame_size

    proposals: list[RegionProposal] = []
    for t in range(spec.num_frames):
        image = _render_frame(spec, t, rng)
        io.write_ppm(out / "frames" / f"{t:04d}.ppm", image)

        ox, oy = spec.object_origin(t)
        gt = np.zeros((spec.height, spec.width), dtype=np.int32)
        gt[oy : oy + spec.object_size, ox : ox + spec.object_size] = 1
        io.write_imap(out / "gt" / f"{t:04d}.imap", gt)

        motion = np.zeros((spec.height, spec.width))
        motion[oy : oy + spec.object_size, ox : ox + spec.object_size] = 1.0
        io.write_fmap(out / "motion" / f"{t:04d}.fmap", DenseMap(size, motion))

        if t + 1 < spec.num_frames:
            u = np.zeros((spec.height, spec.width))
            v = np.zeros((spec.height, spec.width))
            u[oy : oy + spec.object_size, ox : ox + spec.object_size] = float(
                spec.object_velocity[0]
            )
            v[oy : oy + spec.object_size, ox : ox + spec.object_size] = float(
                spec.object_velocity[1]
            )
            io.write_flow(
                out / "flow" / f"{t:04d}.u.fmap",
                out / "flow" / f"{t:04d}.v.fmap",
                DenseMap(size, u),
                DenseMap(size, v),
            )
        proposals.extend(_frame_proposals(spec, t, rng))

    io.write_proposals(out / "proposals" / "object.tsv", proposals)
    manifest = {
        "video_id": video_id,
        "width": str(spec.width),
        "height": str(spec.height),
        "num_frames": str(spec.num_frames),
        "classes": "object",
        "feature_dim": str(spec.feature_dim),
        "frames_dir": "frames",
        "motion_dir": "motion",
        "flow_dir": "flow",
        "gt_dir": "gt",
        "proposals.object": "proposals/object.tsv",
    }
    manifest_path = out / "manifest.txt"
    io.write_keyvalues(manifest_path, manifest)
    return manifest_path
