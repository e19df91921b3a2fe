"""Weighted spatial average pooling of region confidences.

A frame's confidence map is the per-pixel sum of confidences of the
regions covering that pixel, divided by the total confidence of all
regions on the frame. The denominator is global per frame, which makes
the map scale-invariant in the confidences and bounded by [0, 1]:
pixels covered by every region pool to exactly 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from trackcut.core import BinaryMask, DenseMap, FrameSize

if TYPE_CHECKING:
    from trackcut.mining import Track


@dataclass(frozen=True)
class PooledFrame:
    frame_index: int
    map: DenseMap

    def __post_init__(self):
        vals = self.map.values
        if vals.size and (vals.min() < 0.0 or vals.max() > 1.0):
            raise ValueError("pooled confidences must lie in [0, 1]")


def pool_frame(
    size: FrameSize, proposals: Iterable[tuple[BinaryMask, float]]
) -> DenseMap:
    """Pool (mask, confidence) pairs of one frame into a dense map.

    An empty list, or one whose confidences sum to zero, yields the
    all-zero map: no detections means no evidence.
    """
    numerator = np.zeros((size.height, size.width))
    total = 0.0
    for mask, confidence in proposals:
        if mask.size != size:
            raise ValueError(
                f"mask frame size {mask.size} does not match pooling size {size}"
            )
        if confidence < 0:
            raise ValueError("confidences must be non-negative")
        if confidence > 0:
            numerator[mask.to_array()] += confidence
        total += confidence
    if total <= 0.0:
        return DenseMap.zeros(size)
    out = numerator / total
    # guard against accumulated rounding just past 1
    np.clip(out, 0.0, 1.0, out=out)
    return DenseMap(size, out)


def pool_tracks(
    tracks: Sequence["Track"], frames: Sequence[int], size: FrameSize
) -> list[PooledFrame]:
    """Pool the constituent proposals of the given tracks, frame by frame.

    Each constituent carries the confidence it was regenerated with.
    Frames covered by no track get the all-zero map.
    """
    per_frame: dict[int, list[tuple[BinaryMask, float]]] = {f: [] for f in frames}
    for track in tracks:
        for entry in track.entries:
            if entry.frame_index not in per_frame:
                continue
            for prop in entry.absorbed:
                per_frame[entry.frame_index].append((prop.mask, prop.confidence))
    return [
        PooledFrame(frame_index=f, map=pool_frame(size, per_frame[f])) for f in frames
    ]


def reduce_to_superpixels(map: DenseMap, superpixels: np.ndarray) -> np.ndarray:
    """Mean map value per superpixel.

    The label map must match the frame size and use contiguous labels
    0..S-1 with every label present.
    """
    labels = np.asarray(superpixels)
    if labels.shape != map.values.shape:
        raise ValueError("superpixel label map does not match the frame size")
    if labels.size == 0:
        raise ValueError("empty label map")
    if labels.min() < 0:
        raise ValueError("superpixel labels must be non-negative")
    counts = np.bincount(labels.ravel())
    if np.any(counts == 0):
        missing = int(np.flatnonzero(counts == 0)[0])
        raise ValueError(f"superpixel {missing} has no pixels")
    sums = np.bincount(labels.ravel(), weights=map.values.ravel())
    return sums / counts
