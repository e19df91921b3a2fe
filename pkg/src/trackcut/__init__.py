"""Semantic video object segmentation from precomputed region proposals.

The pipeline scores per-frame region proposals, pools them into dense
confidence maps, mines proposal tracks, selects a discriminative track
subset by greedy facility-location maximisation, and produces per-pixel
labelings with a space-time MRF solved by alpha-expansion.
"""

__version__ = "0.1.0"

from trackcut.core import (
    BinaryMask,
    BoundingBox,
    DenseMap,
    FrameSize,
    RegionProposal,
    expand_box,
    iou,
    mask_area,
)
from trackcut.pipeline import (
    EvalReport,
    InputError,
    PipelineConfig,
    StageError,
    VideoManifest,
    evaluate_video,
    load_manifest,
    run_pipeline,
)

__all__ = [
    "BinaryMask",
    "BoundingBox",
    "DenseMap",
    "EvalReport",
    "FrameSize",
    "InputError",
    "PipelineConfig",
    "RegionProposal",
    "StageError",
    "VideoManifest",
    "evaluate_video",
    "expand_box",
    "iou",
    "load_manifest",
    "mask_area",
    "run_pipeline",
    "__version__",
]
