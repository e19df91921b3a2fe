"""Stage orchestration: manifest and config handling, the stage chain,
and IoU evaluation.

A video runs through: score proposals, pool them into confidence maps,
regenerate regions from the maps, mine tracks, select a track subset,
re-pool the chosen tracks, and segment. Each stage writes its artifact
before the next starts, so a failing stage leaves everything before it
on disk. Confidence maps feeding segmentation can be taken from the
initial pooling, from all mined tracks, or from the selected subset,
which is how the no-mining and no-selection baselines are expressed.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from trackcut import io
from trackcut.core import DenseMap, FrameSize, RegionProposal
from trackcut.mining import (
    FlowShiftTracker,
    MiningConfig,
    RegeneratedProposal,
    Track,
    attach_features,
    mine_tracks,
    regenerate_frame,
)
from trackcut.pooling import PooledFrame, pool_frame, pool_tracks
from trackcut.scoring import ScoringConfig, score_frame
from trackcut.segmentation import (
    SegmentationConfig,
    build_graph,
    grid_superpixels,
    render_labels,
    segment,
)
from trackcut.selection import (
    SelectionConfig,
    SelectionResult,
    build_instance,
    greedy_select,
)

STAGES = ("score", "pool", "regen", "track", "select", "segment")
CONFIDENCE_SOURCES = ("pool", "track", "select")


class InputError(Exception):
    """Invalid or inconsistent input files or options."""


class StageError(Exception):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(stage, cause)
        self.stage = stage
        self.cause = cause

    def __str__(self) -> str:
        return f"stage {self.stage} failed: {self.cause}"


@dataclass(frozen=True)
class PipelineConfig:
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    mining: MiningConfig = field(default_factory=MiningConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    superpixel_cell: int = 2
    confidence_source: str = "select"

    def __post_init__(self):
        if self.superpixel_cell < 1:
            raise ValueError("superpixel_cell must be positive")
        if self.confidence_source not in CONFIDENCE_SOURCES:
            raise ValueError(
                f"confidence_source must be one of {CONFIDENCE_SOURCES}"
            )

    def with_seed(self, seed: int) -> "PipelineConfig":
        return replace(
            self,
            mining=replace(self.mining, rng_seed=seed),
            segmentation=replace(self.segmentation, gmm_seed=seed),
        )

    def to_keyvalues(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for group, obj in (
            ("scoring", self.scoring),
            ("mining", self.mining),
            ("selection", self.selection),
            ("segmentation", self.segmentation),
        ):
            for f in dataclasses.fields(obj):
                value = getattr(obj, f.name)
                out[f"{group}.{f.name}"] = "none" if value is None else repr(value) if isinstance(value, float) else str(value)
        out["pipeline.superpixel_cell"] = str(self.superpixel_cell)
        out["pipeline.confidence_source"] = self.confidence_source
        return out

    @classmethod
    def from_keyvalues(cls, values: dict[str, str]) -> "PipelineConfig":
        groups: dict[str, dict[str, str]] = {
            "scoring": {},
            "mining": {},
            "selection": {},
            "segmentation": {},
            "pipeline": {},
        }
        for key, value in values.items():
            group, _, name = key.partition(".")
            if group not in groups or not name:
                raise ValueError(f"unknown config key {key!r}")
            groups[group][name] = value
        parts = {}
        for group, config_cls in (
            ("scoring", ScoringConfig),
            ("mining", MiningConfig),
            ("selection", SelectionConfig),
            ("segmentation", SegmentationConfig),
        ):
            fields_by_name = {f.name: f for f in dataclasses.fields(config_cls)}
            kwargs = {}
            for name, raw in groups[group].items():
                if name not in fields_by_name:
                    raise ValueError(f"unknown config key {group}.{name!r}")
                kwargs[name] = _parse_config_value(raw, fields_by_name[name])
            parts[group] = config_cls(**kwargs)
        pipeline_kwargs = {}
        for name, raw in groups["pipeline"].items():
            if name == "superpixel_cell":
                pipeline_kwargs[name] = int(raw)
            elif name == "confidence_source":
                pipeline_kwargs[name] = raw
            else:
                raise ValueError(f"unknown config key pipeline.{name!r}")
        return cls(
            scoring=parts["scoring"],
            mining=parts["mining"],
            selection=parts["selection"],
            segmentation=parts["segmentation"],
            **pipeline_kwargs,
        )


def _parse_config_value(raw: str, f: dataclasses.Field):
    if raw == "none":
        return None
    text = str(f.type)
    if "int" in text and "float" not in text:
        return int(raw)
    if "float" in text:
        return float(raw)
    return raw


def load_config(path: str | Path) -> PipelineConfig:
    return PipelineConfig.from_keyvalues(io.read_keyvalues(path))


def save_config(path: str | Path, config: PipelineConfig) -> None:
    io.write_keyvalues(path, config.to_keyvalues())


# -------------------------------------------------------------- manifest


@dataclass(frozen=True)
class VideoManifest:
    video_id: str
    size: FrameSize
    num_frames: int
    classes: tuple[str, ...]
    feature_dim: int
    frames_dir: Path
    motion_dir: Path
    flow_dir: Path
    proposal_files: dict[str, Path]
    superpixel_dir: Path | None = None
    gt_dir: Path | None = None

    def frame_path(self, t: int) -> Path:
        return self.frames_dir / f"{t:04d}.ppm"

    def motion_path(self, t: int) -> Path:
        return self.motion_dir / f"{t:04d}.fmap"

    def flow_paths(self, t: int) -> tuple[Path, Path]:
        return self.flow_dir / f"{t:04d}.u.fmap", self.flow_dir / f"{t:04d}.v.fmap"

    def superpixel_path(self, t: int) -> Path | None:
        return None if self.superpixel_dir is None else self.superpixel_dir / f"{t:04d}.imap"

    def gt_path(self, t: int) -> Path | None:
        return None if self.gt_dir is None else self.gt_dir / f"{t:04d}.imap"


def load_manifest(path: str | Path) -> VideoManifest:
    path = Path(path)
    try:
        values = io.read_keyvalues(path)
    except (OSError, ValueError) as e:
        raise InputError(f"cannot read manifest {path}: {e}") from e
    root = path.parent
    try:
        classes = tuple(
            c.strip() for c in values["classes"].split(",") if c.strip()
        )
        if not classes:
            raise ValueError("classes must be non-empty")
        proposal_files = {}
        for cls in classes:
            key = f"proposals.{cls}"
            if key not in values:
                raise ValueError(f"missing key {key}")
            proposal_files[cls] = root / values[key]
        manifest = VideoManifest(
            video_id=values["video_id"],
            size=FrameSize(width=int(values["width"]), height=int(values["height"])),
            num_frames=int(values["num_frames"]),
            classes=classes,
            feature_dim=int(values["feature_dim"]),
            frames_dir=root / values["frames_dir"],
            motion_dir=root / values["motion_dir"],
            flow_dir=root / values["flow_dir"],
            proposal_files=proposal_files,
            superpixel_dir=root / values["superpixel_dir"] if "superpixel_dir" in values else None,
            gt_dir=root / values["gt_dir"] if "gt_dir" in values else None,
        )
    except (KeyError, ValueError) as e:
        raise InputError(f"invalid manifest {path}: {e}") from e
    if manifest.num_frames < 1:
        raise InputError(f"invalid manifest {path}: num_frames must be positive")
    missing = []
    for t in range(manifest.num_frames):
        for p in (manifest.frame_path(t), manifest.motion_path(t)):
            if not p.exists():
                missing.append(p)
        if t + 1 < manifest.num_frames:
            missing.extend(p for p in manifest.flow_paths(t) if not p.exists())
        sp = manifest.superpixel_path(t)
        if sp is not None and not sp.exists():
            missing.append(sp)
    missing.extend(p for p in manifest.proposal_files.values() if not p.exists())
    if missing:
        raise InputError(
            f"manifest {path} references missing files: "
            + ", ".join(str(m) for m in missing[:5])
        )
    return manifest


@dataclass(eq=False)
class VideoData:
    """Everything a pipeline run needs, loaded and size-checked."""

    manifest: VideoManifest
    frames: list[np.ndarray]
    motion: list[DenseMap]
    flows: list[tuple[DenseMap, DenseMap]]
    proposals: dict[str, list[RegionProposal]]
    superpixels: list[np.ndarray] | None
    gt: list[np.ndarray | None] | None


def load_video(manifest: VideoManifest) -> VideoData:
    size = manifest.size
    try:
        frames = []
        for t in range(manifest.num_frames):
            image = io.read_ppm(manifest.frame_path(t))
            if image.shape[:2] != (size.height, size.width):
                raise ValueError(f"frame {t} size differs from manifest")
            frames.append(image.astype(np.float64) / 255.0)
        motion = []
        for t in range(manifest.num_frames):
            m = io.read_fmap(manifest.motion_path(t))
            if m.size != size:
                raise ValueError(f"motion map {t} size differs from manifest")
            motion.append(m)
        flows = []
        for t in range(manifest.num_frames - 1):
            u, v = io.read_flow(*manifest.flow_paths(t))
            if u.size != size:
                raise ValueError(f"flow {t} size differs from manifest")
            flows.append((u, v))
        proposals = {}
        for cls, p in manifest.proposal_files.items():
            items = io.read_proposals(p)
            for prop in items:
                if prop.frame_index >= manifest.num_frames:
                    raise ValueError(
                        f"proposal on frame {prop.frame_index} beyond manifest"
                    )
                if prop.mask.size != size:
                    raise ValueError("proposal mask size differs from manifest")
                if prop.feature.shape != (manifest.feature_dim,):
                    raise ValueError("proposal feature dimension differs from manifest")
            proposals[cls] = items
        superpixels = None
        if manifest.superpixel_dir is not None:
            superpixels = []
            for t in range(manifest.num_frames):
                sp = io.read_imap(manifest.superpixel_path(t))
                if sp.shape != (size.height, size.width):
                    raise ValueError(f"superpixel map {t} size differs from manifest")
                superpixels.append(sp)
        gt = None
        if manifest.gt_dir is not None:
            gt = []
            for t in range(manifest.num_frames):
                p = manifest.gt_path(t)
                if p.exists():
                    m = io.read_imap(p)
                    if m.shape != (size.height, size.width):
                        raise ValueError(f"ground truth {t} size differs from manifest")
                    gt.append(m)
                else:
                    gt.append(None)
    except (OSError, ValueError) as e:
        raise InputError(f"video {manifest.video_id}: {e}") from e
    return VideoData(
        manifest=manifest,
        frames=frames,
        motion=motion,
        flows=flows,
        proposals=proposals,
        superpixels=superpixels,
        gt=gt,
    )


# ---------------------------------------------------------------- stages


def stage_score(
    data: VideoData, config: PipelineConfig
) -> dict[str, list[RegionProposal]]:
    out = {}
    for cls, proposals in data.proposals.items():
        by_frame: dict[int, list[RegionProposal]] = {}
        for p in proposals:
            by_frame.setdefault(p.frame_index, []).append(p)
        scored: list[RegionProposal] = []
        for t in sorted(by_frame):
            scored.extend(score_frame(by_frame[t], data.motion[t], config.scoring))
        out[cls] = scored
    return out


def stage_pool(
    data: VideoData, scored: dict[str, list[RegionProposal]]
) -> dict[str, list[PooledFrame]]:
    size = data.manifest.size
    out = {}
    for cls, proposals in scored.items():
        maps = []
        for t in range(data.manifest.num_frames):
            pairs = [
                (p.mask, p.rescored) for p in proposals if p.frame_index == t
            ]
            pooled = pool_frame(size, pairs)
            # Pooled maps cross stage boundaries through the float32 file
            # format; quantizing here keeps integrated runs byte-identical
            # to stagewise replays of the written artifacts.
            quantized = DenseMap(
                size=size, values=pooled.values.astype(np.float32)
            )
            maps.append(PooledFrame(frame_index=t, map=quantized))
        out[cls] = maps
    return out


def stage_regen(
    data: VideoData,
    pooled: dict[str, list[PooledFrame]],
    scored: dict[str, list[RegionProposal]],
    config: PipelineConfig,
) -> dict[str, list[RegeneratedProposal]]:
    out = {}
    for cls, maps in pooled.items():
        regenerated: list[RegeneratedProposal] = []
        for frame in maps:
            regenerated.extend(
                regenerate_frame(frame.frame_index, frame.map, config.mining)
            )
        out[cls] = attach_features(regenerated, scored[cls])
    return out


def stage_track(
    data: VideoData,
    regenerated: dict[str, list[RegeneratedProposal]],
    config: PipelineConfig,
) -> dict[str, list[Track]]:
    tracker = FlowShiftTracker(list(data.flows), data.manifest.size)
    return {
        cls: mine_tracks(
            props, tracker, config.mining, last_frame=data.manifest.num_frames - 1
        )
        for cls, props in regenerated.items()
    }


def stage_select(
    tracks: dict[str, list[Track]], config: PipelineConfig
) -> dict[str, SelectionResult]:
    return {
        cls: greedy_select(build_instance(cls_tracks), config.selection)
        if cls_tracks
        else SelectionResult(selected=(), objective=0.0, gains=())
        for cls, cls_tracks in tracks.items()
    }


def confidence_maps(
    data: VideoData,
    source: str,
    pooled: dict[str, list[PooledFrame]],
    tracks: dict[str, list[Track]] | None,
    selections: dict[str, SelectionResult] | None,
) -> dict[str, list[PooledFrame]]:
    """Pick the per-class maps that feed segmentation."""
    if source == "pool":
        return pooled
    frames = list(range(data.manifest.num_frames))
    size = data.manifest.size
    out = {}
    for cls, cls_tracks in tracks.items():
        if source == "track":
            chosen = cls_tracks
        else:
            ids = set(selections[cls].selected)
            chosen = [t for i, t in enumerate(cls_tracks) if i in ids]
        out[cls] = pool_tracks(chosen, frames, size)
    return out


def stage_segment(
    data: VideoData,
    maps: dict[str, list[PooledFrame]],
    config: PipelineConfig,
) -> list[np.ndarray]:
    if data.superpixels is not None:
        superpixel_maps = data.superpixels
    else:
        superpixel_maps = [
            grid_superpixels(data.manifest.size, config.superpixel_cell)
            for _ in range(data.manifest.num_frames)
        ]
    graph = build_graph(superpixel_maps, data.frames, list(data.flows))
    per_class = [
        [frame.map for frame in maps[cls]] for cls in data.manifest.classes
    ]
    labels, _ = segment(graph, per_class, config.segmentation)
    return render_labels(graph, labels)


# ------------------------------------------------------------ evaluation


@dataclass(frozen=True)
class EvalReport:
    """IoU summary; class and video averages are over non-empty sets."""

    per_class: dict[str, float]
    per_video: dict[str, float]
    class_average: float
    video_average: float

    def to_json_obj(self) -> dict:
        return {
            "per_class": dict(sorted(self.per_class.items())),
            "per_video": dict(sorted(self.per_video.items())),
            "class_average": self.class_average,
            "video_average": self.video_average,
        }


def evaluate_video(
    pred: list[np.ndarray],
    gt: list[np.ndarray | None],
    class_names: tuple[str, ...],
) -> dict[str, float]:
    """Per-class IoU over the annotated frames of one video.

    A class counts when ground truth or prediction uses it anywhere in
    an annotated frame; its IoU pools intersection and union pixels
    across those frames.
    """
    if len(pred) != len(gt):
        raise ValueError("prediction and ground truth must align frame by frame")
    pairs = [(p, g) for p, g in zip(pred, gt) if g is not None]
    if not pairs:
        raise ValueError("no annotated frames")
    inter: dict[int, int] = {}
    union: dict[int, int] = {}
    for p, g in pairs:
        if p.shape != g.shape:
            raise ValueError("prediction and ground truth sizes differ")
        present = np.union1d(np.unique(p), np.unique(g))
        for label in present:
            label = int(label)
            if label == 0:
                continue
            if label > len(class_names):
                raise ValueError(f"label {label} has no class name")
            inter[label] = inter.get(label, 0) + int(((p == label) & (g == label)).sum())
            union[label] = union.get(label, 0) + int(((p == label) | (g == label)).sum())
    return {class_names[k - 1]: inter[k] / union[k] for k in sorted(union)}


def aggregate_reports(video_class_iou: dict[str, dict[str, float]]) -> EvalReport:
    per_class_values: dict[str, list[float]] = {}
    per_video: dict[str, float] = {}
    for video_id, class_iou in video_class_iou.items():
        if class_iou:
            per_video[video_id] = float(np.mean(list(class_iou.values())))
        for cls, value in class_iou.items():
            per_class_values.setdefault(cls, []).append(value)
    per_class = {
        cls: float(np.mean(values)) for cls, values in per_class_values.items()
    }
    return EvalReport(
        per_class=per_class,
        per_video=per_video,
        class_average=float(np.mean(list(per_class.values()))) if per_class else 0.0,
        video_average=float(np.mean(list(per_video.values()))) if per_video else 0.0,
    )


# ----------------------------------------------------------------- runs


def run_video(
    manifest: VideoManifest,
    config: PipelineConfig,
    out_dir: str | Path,
    stop_after: str | None = None,
    confidence_source: str | None = None,
) -> dict[str, float] | None:
    """Run the stage chain for one video, writing artifacts as it goes.

    Returns the per-class IoU when ground truth is present and the run
    reaches segmentation, else None.
    """
    if stop_after is not None and stop_after not in STAGES:
        raise InputError(f"unknown stage {stop_after!r}")
    source = confidence_source or config.confidence_source
    if source not in CONFIDENCE_SOURCES:
        raise InputError(f"unknown confidence source {source!r}")
    data = load_video(manifest)
    out = Path(out_dir) / manifest.video_id
    out.mkdir(parents=True, exist_ok=True)

    def gate(stage: str) -> bool:
        return stop_after is not None and stop_after == stage

    try:
        scored = stage_score(data, config)
        for cls, items in scored.items():
            io.write_proposals(out / f"scored.{cls}.tsv", items)
    except ValueError as e:
        raise StageError("score", e) from e
    if gate("score"):
        return None

    try:
        pooled = stage_pool(data, scored)
        for cls, maps in pooled.items():
            map_dir = out / "pool" / cls
            map_dir.mkdir(parents=True, exist_ok=True)
            for frame in maps:
                io.write_fmap(map_dir / f"{frame.frame_index:04d}.fmap", frame.map)
    except ValueError as e:
        raise StageError("pool", e) from e
    if gate("pool"):
        return None

    try:
        regenerated = stage_regen(data, pooled, scored, config)
        for cls, items in regenerated.items():
            io.write_regenerated(out / f"regen.{cls}.tsv", items)
    except ValueError as e:
        raise StageError("regen", e) from e
    if gate("regen"):
        return None

    try:
        tracks = stage_track(data, regenerated, config)
        for cls, items in tracks.items():
            io.write_tracks(out / f"tracks.{cls}.json", items)
    except ValueError as e:
        raise StageError("track", e) from e
    if gate("track"):
        return None

    try:
        selections = stage_select(tracks, config)
        for cls, result in selections.items():
            io.write_selection(
                out / f"selection.{cls}.json", result, build_instance(tracks[cls])
            )
    except ValueError as e:
        raise StageError("select", e) from e
    if gate("select"):
        return None

    try:
        maps = confidence_maps(data, source, pooled, tracks, selections)
        for cls, cls_maps in maps.items():
            map_dir = out / "confidence" / cls
            map_dir.mkdir(parents=True, exist_ok=True)
            for frame in cls_maps:
                io.write_fmap(map_dir / f"{frame.frame_index:04d}.fmap", frame.map)
        labels = stage_segment(data, maps, config)
        label_dir = out / "labels"
        label_dir.mkdir(parents=True, exist_ok=True)
        for t, label_map in enumerate(labels):
            io.write_imap(label_dir / f"{t:04d}.imap", label_map)
    except ValueError as e:
        raise StageError("segment", e) from e

    if data.gt is None:
        return None
    class_iou = evaluate_video(labels, data.gt, data.manifest.classes)
    io.write_json(out / "report.json", class_iou)
    return class_iou


def run_pipeline(
    manifest_paths: list[str | Path],
    config: PipelineConfig,
    out_dir: str | Path,
    stop_after: str | None = None,
    confidence_source: str | None = None,
    jobs: int = 1,
) -> EvalReport | None:
    """Run every video, then aggregate evaluation when any video has
    ground truth. The resolved config is always written to the output
    directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_config(out / "config.txt", config)
    manifests = [load_manifest(p) for p in manifest_paths]
    seen: set[str] = set()
    for m in manifests:
        if m.video_id in seen:
            raise InputError(f"duplicate video id {m.video_id!r}")
        seen.add(m.video_id)

    results: dict[str, dict[str, float] | None] = {}
    if jobs > 1 and len(manifests) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                m.video_id: pool.submit(
                    run_video, m, config, out, stop_after, confidence_source
                )
                for m in manifests
            }
            results = {vid: f.result() for vid, f in futures.items()}
    else:
        for m in manifests:
            results[m.video_id] = run_video(
                m, config, out, stop_after, confidence_source
            )

    evaluated = {vid: iou for vid, iou in results.items() if iou is not None}
    if not evaluated:
        return None
    report = aggregate_reports(evaluated)
    io.write_json(out / "report.json", report.to_json_obj())
    return report
