"""Command line interface.

Each stage is a subcommand operating on a work directory, so a run can
be replayed or resumed piecewise; `run` chains them all and evaluates.
Exit codes: 0 success, 2 invalid input or options, 3 stage failure.
The TRACKCUT_SEED environment variable overrides the seeds in the
active config.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from trackcut import io
from trackcut.pipeline import (
    CONFIDENCE_SOURCES,
    STAGES,
    InputError,
    PipelineConfig,
    StageError,
    VideoManifest,
    aggregate_reports,
    confidence_maps,
    evaluate_video,
    load_config,
    load_manifest,
    load_video,
    run_pipeline,
    stage_pool,
    stage_regen,
    stage_score,
    stage_segment,
    stage_select,
    stage_track,
)
from trackcut.pooling import PooledFrame
from trackcut.selection import SelectionConfig
from trackcut.synthetic import SceneSpec, generate_synthetic

SCENARIO_SELECTION = SelectionConfig(open_cost=1.4, discriminative_weight=1.0)


def _config_from_args(args) -> PipelineConfig:
    path = getattr(args, "config", None)
    try:
        config = load_config(path) if path else PipelineConfig()
    except (OSError, ValueError) as e:
        raise InputError(f"cannot load config: {e}") from e
    return _apply_seed_env(config)


def _apply_seed_env(config: PipelineConfig) -> PipelineConfig:
    raw = os.environ.get("TRACKCUT_SEED")
    if raw is None:
        return config
    try:
        return config.with_seed(int(raw))
    except ValueError as e:
        raise InputError(f"TRACKCUT_SEED must be an integer, got {raw!r}") from e


def _manifests(args) -> list[VideoManifest]:
    return [load_manifest(p) for p in args.manifest]


def _video_dir(args, manifest: VideoManifest) -> Path:
    out = Path(args.out) / manifest.video_id
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_scored(video_dir: Path, manifest: VideoManifest) -> dict:
    out = {}
    for cls in manifest.classes:
        path = video_dir / f"scored.{cls}.tsv"
        if not path.exists():
            raise InputError(f"missing {path}; run the score stage first")
        items = io.read_proposals(path)
        if any(p.rescored is None for p in items):
            raise InputError(f"{path} holds unscored proposals")
        out[cls] = items
    return out


def _read_pooled(video_dir: Path, manifest: VideoManifest) -> dict:
    out = {}
    for cls in manifest.classes:
        maps = []
        for t in range(manifest.num_frames):
            path = video_dir / "pool" / cls / f"{t:04d}.fmap"
            if not path.exists():
                raise InputError(f"missing {path}; run the pool stage first")
            maps.append(PooledFrame(frame_index=t, map=io.read_fmap(path)))
        out[cls] = maps
    return out


def _read_regenerated(video_dir: Path, manifest: VideoManifest) -> dict:
    out = {}
    for cls in manifest.classes:
        path = video_dir / f"regen.{cls}.tsv"
        if not path.exists():
            raise InputError(f"missing {path}; run the regen stage first")
        out[cls] = io.read_regenerated(path)
    return out


def _read_tracks(video_dir: Path, manifest: VideoManifest) -> dict:
    out = {}
    for cls in manifest.classes:
        path = video_dir / f"tracks.{cls}.json"
        if not path.exists():
            raise InputError(f"missing {path}; run the track stage first")
        out[cls] = io.read_tracks(path)
    return out


def _read_selections(video_dir: Path, manifest: VideoManifest) -> dict:
    out = {}
    for cls in manifest.classes:
        path = video_dir / f"selection.{cls}.json"
        if not path.exists():
            raise InputError(f"missing {path}; run the select stage first")
        out[cls] = io.read_selection(path)
    return out


# ------------------------------------------------------------- commands


def cmd_score(args) -> None:
    config = _config_from_args(args)
    for manifest in _manifests(args):
        data = load_video(manifest)
        video_dir = _video_dir(args, manifest)
        try:
            scored = stage_score(data, config)
        except ValueError as e:
            raise StageError("score", e) from e
        for cls, items in scored.items():
            io.write_proposals(video_dir / f"scored.{cls}.tsv", items)
            print(f"{manifest.video_id}: scored {len(items)} {cls} proposals")


def cmd_pool(args) -> None:
    for manifest in _manifests(args):
        data = load_video(manifest)
        video_dir = _video_dir(args, manifest)
        scored = _read_scored(video_dir, manifest)
        try:
            pooled = stage_pool(data, scored)
        except ValueError as e:
            raise StageError("pool", e) from e
        for cls, maps in pooled.items():
            map_dir = video_dir / "pool" / cls
            map_dir.mkdir(parents=True, exist_ok=True)
            for frame in maps:
                io.write_fmap(map_dir / f"{frame.frame_index:04d}.fmap", frame.map)
            print(f"{manifest.video_id}: pooled {len(maps)} {cls} maps")


def cmd_regen(args) -> None:
    config = _config_from_args(args)
    for manifest in _manifests(args):
        data = load_video(manifest)
        video_dir = _video_dir(args, manifest)
        scored = _read_scored(video_dir, manifest)
        pooled = _read_pooled(video_dir, manifest)
        try:
            regenerated = stage_regen(data, pooled, scored, config)
        except ValueError as e:
            raise StageError("regen", e) from e
        for cls, items in regenerated.items():
            io.write_regenerated(video_dir / f"regen.{cls}.tsv", items)
            print(f"{manifest.video_id}: regenerated {len(items)} {cls} regions")


def cmd_track(args) -> None:
    config = _config_from_args(args)
    for manifest in _manifests(args):
        data = load_video(manifest)
        video_dir = _video_dir(args, manifest)
        regenerated = _read_regenerated(video_dir, manifest)
        try:
            tracks = stage_track(data, regenerated, config)
        except ValueError as e:
            raise StageError("track", e) from e
        for cls, items in tracks.items():
            io.write_tracks(video_dir / f"tracks.{cls}.json", items)
            print(f"{manifest.video_id}: mined {len(items)} {cls} tracks")


def cmd_select(args) -> None:
    config = _config_from_args(args)
    for manifest in _manifests(args):
        video_dir = _video_dir(args, manifest)
        tracks = _read_tracks(video_dir, manifest)
        try:
            selections = stage_select(tracks, config)
        except ValueError as e:
            raise StageError("select", e) from e
        from trackcut.selection import build_instance

        for cls, result in selections.items():
            io.write_selection(
                video_dir / f"selection.{cls}.json", result, build_instance(tracks[cls])
            )
            print(
                f"{manifest.video_id}: selected {len(result.selected)} of "
                f"{len(tracks[cls])} {cls} tracks"
            )


def cmd_segment(args) -> None:
    config = _config_from_args(args)
    source = args.confidence_source or config.confidence_source
    for manifest in _manifests(args):
        data = load_video(manifest)
        video_dir = _video_dir(args, manifest)
        pooled = _read_pooled(video_dir, manifest) if source == "pool" else None
        tracks = _read_tracks(video_dir, manifest) if source != "pool" else None
        if source == "select":
            stored = _read_selections(video_dir, manifest)
            tracks = {
                cls: [t for i, t in enumerate(items) if i in set(stored[cls]["selected"])]
                for cls, items in tracks.items()
            }
        try:
            maps = confidence_maps(
                data, "pool" if source == "pool" else "track", pooled, tracks, None
            )
            for cls, cls_maps in maps.items():
                map_dir = video_dir / "confidence" / cls
                map_dir.mkdir(parents=True, exist_ok=True)
                for frame in cls_maps:
                    io.write_fmap(map_dir / f"{frame.frame_index:04d}.fmap", frame.map)
            labels = stage_segment(data, maps, config)
        except ValueError as e:
            raise StageError("segment", e) from e
        label_dir = video_dir / "labels"
        label_dir.mkdir(parents=True, exist_ok=True)
        for t, label_map in enumerate(labels):
            io.write_imap(label_dir / f"{t:04d}.imap", label_map)
        print(f"{manifest.video_id}: segmented {len(labels)} frames")


def cmd_eval(args) -> None:
    per_video = {}
    for manifest in _manifests(args):
        if manifest.gt_dir is None:
            raise InputError(f"{manifest.video_id}: manifest lists no ground truth")
        video_dir = Path(args.out) / manifest.video_id
        pred = []
        for t in range(manifest.num_frames):
            path = video_dir / "labels" / f"{t:04d}.imap"
            if not path.exists():
                raise InputError(f"missing {path}; run the segment stage first")
            pred.append(io.read_imap(path))
        gt = []
        for t in range(manifest.num_frames):
            p = manifest.gt_path(t)
            gt.append(io.read_imap(p) if p.exists() else None)
        try:
            class_iou = evaluate_video(pred, gt, manifest.classes)
        except ValueError as e:
            raise InputError(f"{manifest.video_id}: {e}") from e
        io.write_json(video_dir / "report.json", class_iou)
        per_video[manifest.video_id] = class_iou
    report = aggregate_reports(per_video)
    io.write_json(Path(args.out) / "report.json", report.to_json_obj())
    for cls in sorted(report.per_class):
        print(f"class {cls}: iou = {report.per_class[cls]:.4f}")
    print(f"video average: iou = {report.video_average:.4f}")


def cmd_run(args) -> None:
    config = _config_from_args(args)
    report = run_pipeline(
        args.manifest,
        config,
        args.out,
        stop_after=args.stop_after,
        confidence_source=args.confidence_source,
        jobs=args.jobs,
    )
    if report is None:
        print("run complete; no evaluation (no ground truth or stopped early)")
        return
    for cls in sorted(report.per_class):
        print(f"class {cls}: iou = {report.per_class[cls]:.4f}")
    print(f"video average: iou = {report.video_average:.4f}")


def cmd_synth(args) -> None:
    spec = SceneSpec()
    try:
        manifest_path = generate_synthetic(spec, args.seed, args.out)
    except ValueError as e:
        raise InputError(str(e)) from e
    # The bundled scene carries a same-coloured static decoy, so the
    # selection stage needs a discriminative weight high enough to
    # reject it; the emitted config pins that choice.
    config = PipelineConfig(selection=SCENARIO_SELECTION)
    config_path = manifest_path.parent / "config.txt"
    io.write_keyvalues(config_path, config.to_keyvalues())
    print(f"manifest: {manifest_path}")
    print(f"config: {config_path}")


# --------------------------------------------------------------- parser


def _add_manifest_args(parser, with_config=True):
    parser.add_argument(
        "-m",
        "--manifest",
        action="append",
        required=True,
        help="video manifest path (repeatable)",
    )
    parser.add_argument("-o", "--out", required=True, help="work directory")
    if with_config:
        parser.add_argument("-c", "--config", help="pipeline config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trackcut",
        description="semantic video object segmentation from region proposals",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("score", help="score proposals with motion and confidence")
    _add_manifest_args(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("pool", help="pool scored proposals into confidence maps")
    _add_manifest_args(p, with_config=False)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("regen", help="regenerate regions from confidence maps")
    _add_manifest_args(p)
    p.set_defaults(func=cmd_regen)

    p = sub.add_parser("track", help="mine tracks from regenerated regions")
    _add_manifest_args(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("select", help="select a discriminative track subset")
    _add_manifest_args(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("segment", help="run the space-time segmentation")
    _add_manifest_args(p)
    p.add_argument(
        "--confidence-source",
        choices=CONFIDENCE_SOURCES,
        help="which maps feed segmentation (default from config)",
    )
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval", help="evaluate labels against ground truth")
    _add_manifest_args(p, with_config=False)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", help="run the full pipeline and evaluate")
    _add_manifest_args(p)
    p.add_argument("--stop-after", choices=STAGES, help="halt after this stage")
    p.add_argument(
        "--confidence-source",
        choices=CONFIDENCE_SOURCES,
        help="which maps feed segmentation (default from config)",
    )
    p.add_argument("--jobs", type=int, default=1, help="videos processed in parallel")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("synth", help="generate the bundled synthetic scene")
    p.add_argument("-o", "--out", required=True, help="scene output directory")
    p.add_argument("--seed", type=int, default=0, help="scene random seed")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
