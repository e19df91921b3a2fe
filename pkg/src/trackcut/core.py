"""Geometric and raster primitives shared across the pipeline.

Pixel coordinates are half-open everywhere: a box [x0, x1) x [y0, y1)
covers columns x0..x1-1 and rows y0..y1-1. Binary masks are stored
run-length encoded over row-major pixel order, which keeps proposal
files compact and exact. All types are immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

FEATURE_NORM_TOL = 1e-6


@dataclass(frozen=True)
class FrameSize:
    """Frame dimensions in pixels."""

    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"frame size must be positive, got {self.width}x{self.height}")

    @property
    def num_pixels(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box with half-open pixel coordinates."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x0 >= self.x1 or self.y0 >= self.y1:
            raise ValueError(f"degenerate box ({self.x0},{self.y0},{self.x1},{self.y1})")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    def shifted(self, dx: int, dy: int) -> "BoundingBox":
        return BoundingBox(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)

    def shifted_into(self, frame: FrameSize, dx: int, dy: int) -> "BoundingBox":
        """Translate by (dx, dy), then pull back inside the frame without resizing.

        Requires the box to fit in the frame at all.
        """
        if self.width > frame.width or self.height > frame.height:
            raise ValueError("box larger than frame")
        nx0 = min(max(self.x0 + dx, 0), frame.width - self.width)
        ny0 = min(max(self.y0 + dy, 0), frame.height - self.height)
        return BoundingBox(nx0, ny0, nx0 + self.width, ny0 + self.height)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes, in [0, 1]."""
    ix = min(a.x1, b.x1) - max(a.x0, b.x0)
    iy = min(a.y1, b.y1) - max(a.y0, b.y0)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union


def expand_box(b: BoundingBox, margin: int, frame: FrameSize) -> BoundingBox:
    """Move every side of `b` outward by `margin` pixels and clamp to the frame."""
    if margin < 0:
        raise ValueError("margin must be non-negative")
    return BoundingBox(
        max(b.x0 - margin, 0),
        max(b.y0 - margin, 0),
        min(b.x1 + margin, frame.width),
        min(b.y1 + margin, frame.height),
    )


@dataclass(frozen=True)
class BinaryMask:
    """Run-length encoded binary region over row-major pixel order.

    Runs are (start, length) pairs with starts strictly increasing,
    non-overlapping and inside the frame. The text form used in files is
    "w h; start:len start:len ...".
    """

    size: FrameSize
    runs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        total = self.size.num_pixels
        prev_end = 0
        for pos, (start, length) in enumerate(self.runs):
            if length < 1:
                raise ValueError(f"run {pos} has non-positive length {length}")
            if start < prev_end:
                raise ValueError(f"run {pos} overlaps or is out of order")
            if start + length > total:
                raise ValueError(f"run {pos} exceeds frame bounds")
            prev_end = start + length

    @property
    def area(self) -> int:
        return sum(length for _, length in self.runs)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "BinaryMask":
        """Encode a (height, width) boolean array."""
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ValueError("mask array must be 2-D")
        h, w = arr.shape
        flat = arr.reshape(-1).astype(bool)
        # transitions of the padded sequence give run starts and ends
        padded = np.concatenate(([False], flat, [False]))
        delta = np.diff(padded.astype(np.int8))
        starts = np.flatnonzero(delta == 1)
        ends = np.flatnonzero(delta == -1)
        runs = tuple((int(s), int(e - s)) for s, e in zip(starts, ends))
        return cls(FrameSize(w, h), runs)

    def to_array(self) -> np.ndarray:
        """Decode to a (height, width) boolean array."""
        flat = np.zeros(self.size.num_pixels, dtype=bool)
        for start, length in self.runs:
            flat[start : start + length] = True
        return flat.reshape(self.size.height, self.size.width)

    def tight_box(self) -> BoundingBox:
        """Smallest box containing every set pixel. Errors on an empty mask."""
        if not self.runs:
            raise ValueError("empty mask has no bounding box")
        w = self.size.width
        x0, y0 = w, self.size.height
        x1 = y1 = 0
        for start, length in self.runs:
            end = start + length - 1
            row0, row1 = start // w, end // w
            y0 = min(y0, row0)
            y1 = max(y1, row1)
            if row0 == row1:
                x0 = min(x0, start % w)
                x1 = max(x1, end % w)
            else:
                # run wraps at least one row boundary, so it spans full width
                x0, x1 = 0, w - 1
        return BoundingBox(x0, y0, x1 + 1, y1 + 1)

    def to_rle_text(self) -> str:
        body = " ".join(f"{s}:{n}" for s, n in self.runs)
        return f"{self.size.width} {self.size.height};{' ' + body if body else ''}"

    @classmethod
    def from_rle_text(cls, text: str) -> "BinaryMask":
        head, _, body = text.partition(";")
        parts = head.split()
        if len(parts) != 2:
            raise ValueError(f"malformed RLE header {head!r}")
        size = FrameSize(int(parts[0]), int(parts[1]))
        runs = []
        for token in body.split():
            s, _, n = token.partition(":")
            runs.append((int(s), int(n)))
        return cls(size, tuple(runs))


def mask_area(m: BinaryMask) -> int:
    """Number of set pixels."""
    return m.area


@dataclass(frozen=True)
class DenseMap:
    """Dense per-pixel map of finite real values, stored as (height, width)."""

    size: FrameSize
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (self.size.height, self.size.width):
            raise ValueError(
                f"map shape {arr.shape} does not match frame "
                f"{self.size.width}x{self.size.height}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("map contains non-finite values")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, size: FrameSize) -> "DenseMap":
        return cls(size, np.zeros((size.height, size.width)))


@dataclass(frozen=True, eq=False)
class RegionProposal:
    """A candidate object region on one frame.

    The box is always the tight bounding box of the mask. The feature
    vector is capped at unit L2 norm; ingestion normalises raw features.
    Score fields are filled in stages: appearance and classifier
    confidence arrive with the proposal, motion/combined/rescored are
    computed by the scoring step.
    """

    frame_index: int
    mask: BinaryMask
    box: BoundingBox
    appearance_score: float
    classifier_confidence: float
    feature: np.ndarray = field(repr=False)
    motion_score: float | None = None
    combined_score: float | None = None
    rescored: float | None = None

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError("frame_index must be non-negative")
        if self.mask.area == 0:
            raise ValueError("empty proposal")
        if self.box != self.mask.tight_box():
            raise ValueError("box is not the tight bounding box of the mask")
        if not 0.0 <= self.classifier_confidence <= 1.0:
            raise ValueError(
                f"classifier confidence {self.classifier_confidence} outside [0, 1]"
            )
        feat = np.asarray(self.feature, dtype=np.float64)
        if feat.ndim != 1:
            raise ValueError("feature must be a 1-D vector")
        norm = float(np.linalg.norm(feat))
        if norm > 1.0 + FEATURE_NORM_TOL:
            raise ValueError(f"feature norm {norm} exceeds 1")
        feat = feat.copy()
        feat.flags.writeable = False
        object.__setattr__(self, "feature", feat)

    @classmethod
    def build(
        cls,
        frame_index: int,
        mask: BinaryMask,
        appearance_score: float,
        classifier_confidence: float,
        feature: np.ndarray,
    ) -> "RegionProposal":
        """Construct a proposal, deriving the box from the mask."""
        return cls(
            frame_index=frame_index,
            mask=mask,
            box=mask.tight_box(),
            appearance_score=appearance_score,
            classifier_confidence=classifier_confidence,
            feature=feature,
        )

    def with_scores(self, **updates) -> "RegionProposal":
        return replace(self, **updates)


def unit_normalize(vec: np.ndarray) -> np.ndarray:
    """Scale a vector to unit L2 norm; the zero vector stays zero."""
    vec = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return vec.copy()
    return vec / norm
