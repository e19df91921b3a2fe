"""Proposal regeneration from confidence maps and track mining.

Regeneration sweeps a rising threshold over a confidence map; connected
components at each level become new proposals whose confidence is the
mean map value inside. Mining repeatedly seeds a tracker on a random
proposal from the earliest unclaimed frame and absorbs every proposal
the tracked box overlaps, until the pool is empty. Tracks that absorb
proposals on fewer than two distinct frames are discarded.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from trackcut.core import BinaryMask, BoundingBox, DenseMap, FrameSize, iou

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class MiningConfig:
    levels: int = 10
    connectivity: str = "eight"
    iou_absorb: float = 0.5
    rng_seed: int = 0
    min_region_area: int = 9

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be at least 1")
        if self.connectivity not in ("four", "eight"):
            raise ValueError(f"unknown connectivity {self.connectivity!r}")
        if not 0.0 < self.iou_absorb <= 1.0:
            raise ValueError("iou_absorb must lie in (0, 1]")
        if self.min_region_area < 1:
            raise ValueError("min_region_area must be positive")

    @property
    def thresholds(self) -> tuple[float, ...]:
        return tuple(k / (self.levels + 1) for k in range(1, self.levels + 1))

    @property
    def structure(self) -> np.ndarray:
        return EIGHT_CONNECTED if self.connectivity == "eight" else FOUR_CONNECTED


@dataclass(frozen=True, eq=False)
class RegeneratedProposal:
    """A single connected region cut from a confidence map."""

    frame_index: int
    mask: BinaryMask
    box: BoundingBox
    confidence: float
    source_level: float
    feature: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if not 0.0 < self.source_level < 1.0:
            raise ValueError("source_level must lie strictly inside (0, 1)")
        if self.feature is not None:
            feat = np.asarray(self.feature, dtype=np.float64)
            feat = feat.copy()
            feat.flags.writeable = False
            object.__setattr__(self, "feature", feat)

    def with_feature(self, feature: np.ndarray) -> "RegeneratedProposal":
        return RegeneratedProposal(
            frame_index=self.frame_index,
            mask=self.mask,
            box=self.box,
            confidence=self.confidence,
            source_level=self.source_level,
            feature=feature,
        )


@dataclass(frozen=True, eq=False)
class TrackEntry:
    frame_index: int
    box: BoundingBox
    absorbed: tuple[RegeneratedProposal, ...]


@dataclass(frozen=True, eq=False)
class Track:
    """A temporal chain of absorbed proposals with an aggregate feature.

    Entries cover every visited frame contiguously; some may be empty.
    The feature is the mean of the constituent features (norm stays
    at most 1), and the confidence averages all absorbed proposals.
    """

    id: int
    entries: tuple[TrackEntry, ...]
    feature: np.ndarray | None
    confidence: float

    def __post_init__(self):
        frames = [e.frame_index for e in self.entries]
        if frames != list(range(frames[0], frames[0] + len(frames))):
            raise ValueError("track entries must cover contiguous frames")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("track confidence outside [0, 1]")
        if self.feature is not None:
            feat = np.asarray(self.feature, dtype=np.float64)
            if np.linalg.norm(feat) > 1.0 + 1e-6:
                raise ValueError("track feature norm exceeds 1")
            feat = feat.copy()
            feat.flags.writeable = False
            object.__setattr__(self, "feature", feat)

    @property
    def num_absorbing_frames(self) -> int:
        return sum(1 for e in self.entries if e.absorbed)

    def all_absorbed(self) -> list[RegeneratedProposal]:
        return [p for e in self.entries for p in e.absorbed]


class Tracker:
    """Single-object box propagation interface.

    predict(frame_index, box) returns the box on frame_index + 1; it must
    stay valid and inside the frame.
    """

    def predict(self, frame_index: int, box: BoundingBox) -> BoundingBox:
        raise NotImplementedError


class ZeroFlowTracker(Tracker):
    """Keeps the box where it is. Useful default for static scenes and tests."""

    def predict(self, frame_index: int, box: BoundingBox) -> BoundingBox:
        return box


class FlowShiftTracker(Tracker):
    """Moves the box by the median optical-flow vector inside it.

    flows[t] holds the (u, v) displacement maps for the transition from
    frame t to t + 1; a missing transition falls back to zero shift.
    """

    def __init__(self, flows: list[tuple[DenseMap, DenseMap] | None], frame: FrameSize):
        for pair in flows:
            if pair is None:
                continue
            u, v = pair
            if u.size != frame or v.size != frame:
                raise ValueError("flow field size does not match the frame")
        self.flows = list(flows)
        self.frame = frame

    def predict(self, frame_index: int, box: BoundingBox) -> BoundingBox:
        pair = None
        if 0 <= frame_index < len(self.flows):
            pair = self.flows[frame_index]
        if pair is None:
            return box.shifted_into(self.frame, 0, 0)
        u, v = pair
        region = (slice(box.y0, box.y1), slice(box.x0, box.x1))
        dx = int(np.rint(np.median(u.values[region])))
        dy = int(np.rint(np.median(v.values[region])))
        return box.shifted_into(self.frame, dx, dy)


def regenerate(map: DenseMap, cfg: MiningConfig) -> list[RegeneratedProposal]:
    """Threshold sweep over a confidence map.

    Rising thresholds produce nested superlevel sets; each connected
    component large enough becomes a proposal. Identical regions found
    at several levels are kept once, at the lowest level.
    """
    values = map.values
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise ValueError("confidence map values must lie in [0, 1]")
    seen: dict[tuple, RegeneratedProposal] = {}
    for level in cfg.thresholds:
        binary = values >= level
        labelled, count = ndimage.label(binary, structure=cfg.structure)
        for component in range(1, count + 1):
            region = labelled == component
            if int(region.sum()) < cfg.min_region_area:
                continue
            mask = BinaryMask.from_array(region)
            if mask.runs in seen:
                continue
            seen[mask.runs] = RegeneratedProposal(
                frame_index=0,
                mask=mask,
                box=mask.tight_box(),
                confidence=float(values[region].mean()),
                source_level=level,
            )
    return list(seen.values())


def regenerate_frame(
    frame_index: int, map: DenseMap, cfg: MiningConfig
) -> list[RegeneratedProposal]:
    """regenerate() with the frame index stamped on each proposal."""
    return [
        RegeneratedProposal(
            frame_index=frame_index,
            mask=p.mask,
            box=p.box,
            confidence=p.confidence,
            source_level=p.source_level,
        )
        for p in regenerate(map, cfg)
    ]


def attach_features(
    regenerated: list[RegeneratedProposal], sources: list
) -> list[RegeneratedProposal]:
    """Inherit each regenerated proposal's feature from the source proposal
    whose mask overlaps it the most (same frame only).

    Regeneration severs the link to the original feature vectors, so the
    best-overlapping source stands in. Proposals with no overlapping
    source keep feature None.
    """
    by_frame: dict[int, list] = {}
    for src in sources:
        by_frame.setdefault(src.frame_index, []).append(src)
    out = []
    for prop in regenerated:
        best_overlap = 0
        best_feature = None
        prop_arr = prop.mask.to_array()
        for src in by_frame.get(prop.frame_index, []):
            overlap = int(np.logical_and(prop_arr, src.mask.to_array()).sum())
            if overlap > best_overlap:
                best_overlap = overlap
                best_feature = src.feature
        out.append(prop.with_feature(best_feature) if best_feature is not None else prop)
    return out


def mine_tracks(
    proposals: list[RegeneratedProposal],
    tracker: Tracker,
    cfg: MiningConfig,
    last_frame: int | None = None,
) -> list[Track]:
    """Iterative tracking and eliminating over the proposal pool.

    Every proposal ends up in exactly one track or one discarded
    single-frame track. Deterministic for a fixed rng_seed, tracker and
    input order.
    """
    if not proposals:
        return []
    if last_frame is None:
        last_frame = max(p.frame_index for p in proposals)
    rng = random.Random(cfg.rng_seed)
    alive = list(range(len(proposals)))
    tracks: list[Track] = []
    track_id = 0
    while alive:
        earliest = min(proposals[i].frame_index for i in alive)
        candidates = [i for i in alive if proposals[i].frame_index == earliest]
        seed_index = candidates[rng.randrange(len(candidates))]
        box = proposals[seed_index].box
        entries = []
        for t in range(earliest, last_frame + 1):
            if t > earliest:
                box = tracker.predict(t - 1, box)
            absorbed = tuple(
                proposals[i]
                for i in alive
                if proposals[i].frame_index == t
                and iou(proposals[i].box, box) >= cfg.iou_absorb
            )
            if absorbed:
                taken = {id(p) for p in absorbed}
                alive = [i for i in alive if id(proposals[i]) not in taken]
            entries.append(TrackEntry(frame_index=t, box=box, absorbed=absorbed))
        covered = [e for e in entries if e.absorbed]
        if len(covered) < 2:
            continue
        members = [p for e in entries for p in e.absorbed]
        feats = [p.feature for p in members if p.feature is not None]
        feature = np.mean(feats, axis=0) if feats else None
        confidence = float(np.mean([p.confidence for p in members]))
        tracks.append(
            Track(
                id=track_id,
                entries=tuple(entries),
                feature=feature,
                confidence=confidence,
            )
        )
        track_id += 1
    return tracks
