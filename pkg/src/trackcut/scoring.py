"""Per-frame proposal confidences: motion, combined and rescored.

Each frame is treated independently. Appearance and motion scores are
normalised per frame, summed, and the sum is normalised again; the
rescored confidence multiplies the combined score by the classifier
confidence, giving a value in [0, 1] that downstream pooling consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from trackcut.core import BinaryMask, DenseMap, RegionProposal

NORMALIZATIONS = ("per_frame_max", "per_frame_minmax")


@dataclass(frozen=True)
class ScoringConfig:
    normalization: str = "per_frame_max"
    epsilon: float = 1e-12

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(
                f"unknown normalization {self.normalization!r}, expected one of {NORMALIZATIONS}"
            )
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def motion_score(proposal_mask: BinaryMask, motion_map: DenseMap) -> float:
    """Mean times sum of the motion map over the mask pixels.

    Regions that both concentrate and accumulate motion evidence score
    highest; the mask must be non-empty and share the map's frame size.
    """
    if proposal_mask.size != motion_map.size:
        raise ValueError("mask and motion map have different frame sizes")
    if proposal_mask.area == 0:
        raise ValueError("empty proposal")
    covered = motion_map.values[proposal_mask.to_array()]
    total = float(covered.sum())
    return (total / covered.size) * total


def normalize_scores(values: np.ndarray, cfg: ScoringConfig) -> np.ndarray:
    """Normalise one frame's scores into [0, 1].

    per_frame_max divides by the frame maximum and leaves all-zero frames
    at zero. per_frame_minmax maps the range onto [0, 1]; a frame where
    all scores are equal maps to all ones unless the shared value is zero.
    Raw scores must be non-negative.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return values.copy()
    if np.any(values < 0):
        raise ValueError("scores must be non-negative before normalization")
    top = float(values.max())
    if cfg.normalization == "per_frame_max":
        if top <= cfg.epsilon:
            return np.zeros_like(values)
        return values / top
    low = float(values.min())
    if top - low <= cfg.epsilon:
        # degenerate tie: keep the frame alive unless everything is zero
        return np.ones_like(values) if top > cfg.epsilon else np.zeros_like(values)
    return (values - low) / (top - low)


def combine_scores(
    frame_proposals: list[RegionProposal], cfg: ScoringConfig
) -> list[RegionProposal]:
    """Fill in combined_score for every proposal of one frame.

    Appearance and motion are normalised separately, summed, and the sum
    normalised again, so the best proposal on a frame ends up at 1.
    """
    if not frame_proposals:
        return []
    frames = {p.frame_index for p in frame_proposals}
    if len(frames) != 1:
        raise ValueError(f"proposals span multiple frames: {sorted(frames)}")
    if any(p.motion_score is None for p in frame_proposals):
        raise ValueError("motion_score must be populated before combining")
    appearance = np.array([p.appearance_score for p in frame_proposals])
    motion = np.array([p.motion_score for p in frame_proposals])
    combined = normalize_scores(appearance, cfg) + normalize_scores(motion, cfg)
    combined = normalize_scores(combined, cfg)
    return [
        p.with_scores(combined_score=float(s))
        for p, s in zip(frame_proposals, combined)
    ]


def rescore(proposal: RegionProposal) -> float:
    """Product of combined score and classifier confidence."""
    if proposal.combined_score is None:
        raise ValueError("combined_score must be populated before rescoring")
    return proposal.combined_score * proposal.classifier_confidence


def score_frame(
    frame_proposals: list[RegionProposal],
    motion_map: DenseMap,
    cfg: ScoringConfig,
) -> list[RegionProposal]:
    """Run the full scoring chain for one frame's proposals."""
    with_motion = [
        p.with_scores(motion_score=motion_score(p.mask, motion_map))
        for p in frame_proposals
    ]
    combined = combine_scores(with_motion, cfg)
    return [p.with_scores(rescored=rescore(p)) for p in combined]
