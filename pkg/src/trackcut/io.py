"""File formats for pipeline inputs and stage artifacts.

Everything is either plain text (proposals, manifests, configs,
key-value files) or a small headed binary (dense float maps, integer
label maps, PPM frames). Binary payloads are little-endian and
row-major. Writers are deterministic: the same data produces the same
bytes, which the pipeline relies on for reproducibility checks.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from trackcut.core import BinaryMask, DenseMap, FrameSize, RegionProposal
from trackcut.mining import RegeneratedProposal, Track, TrackEntry

FMAP_MAGIC = b"FMAP"
IMAP_MAGIC = b"IMAP"


def _format_float(x: float) -> str:
    return repr(float(x))


# ----------------------------------------------------------------- maps


def write_fmap(path: str | Path, map: DenseMap) -> None:
    with open(path, "wb") as fh:
        fh.write(b"FMAP %d %d\n" % (map.size.width, map.size.height))
        fh.write(map.values.astype("<f4").tobytes(order="C"))


def read_fmap(path: str | Path) -> DenseMap:
    with open(path, "rb") as fh:
        header = fh.readline()
        size = _parse_map_header(header, FMAP_MAGIC, path)
        data = fh.read()
    expected = size.num_pixels * 4
    if len(data) != expected:
        raise ValueError(f"{path}: payload is {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f4").reshape(size.height, size.width)
    return DenseMap(size, values.astype(np.float64))


def write_imap(path: str | Path, labels: np.ndarray) -> None:
    labels = np.asarray(labels)
    if labels.ndim != 2 or labels.dtype.kind not in "iu":
        raise ValueError("label map must be a two-dimensional integer array")
    h, w = labels.shape
    with open(path, "wb") as fh:
        fh.write(b"IMAP %d %d\n" % (w, h))
        fh.write(labels.astype("<i4").tobytes(order="C"))


def read_imap(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline()
        size = _parse_map_header(header, IMAP_MAGIC, path)
        data = fh.read()
    expected = size.num_pixels * 4
    if len(data) != expected:
        raise ValueError(f"{path}: payload is {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<i4").reshape(size.height, size.width)
    return values.astype(np.int32)


def _parse_map_header(header: bytes, magic: bytes, path) -> FrameSize:
    parts = header.split()
    if len(parts) != 3 or parts[0] != magic:
        raise ValueError(f"{path}: bad {magic.decode()} header {header!r}")
    return FrameSize(width=int(parts[1]), height=int(parts[2]))


def write_flow(path_u: str | Path, path_v: str | Path, u: DenseMap, v: DenseMap) -> None:
    if u.size != v.size:
        raise ValueError("flow components must share a size")
    write_fmap(path_u, u)
    write_fmap(path_v, v)


def read_flow(path_u: str | Path, path_v: str | Path) -> tuple[DenseMap, DenseMap]:
    u = read_fmap(path_u)
    v = read_fmap(path_v)
    if u.size != v.size:
        raise ValueError("flow components must share a size")
    return u, v


# ---------------------------------------------------------------- frames


def write_ppm(path: str | Path, image: np.ndarray) -> None:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError("frame must be an HxWx3 uint8 array")
    h, w = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(image.tobytes(order="C"))


def read_ppm(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1
    if fields[0] != b"P6" or fields[3] != b"255":
        raise ValueError(f"{path}: not an 8-bit P6 image")
    w, h = int(fields[1]), int(fields[2])
    payload = data[pos : pos + w * h * 3]
    if len(payload) != w * h * 3:
        raise ValueError(f"{path}: truncated pixel data")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3).copy()


# ------------------------------------------------------------- proposals


def _feature_text(feature: np.ndarray | None) -> str:
    if feature is None or feature.size == 0:
        return "-"
    return ",".join(_format_float(x) for x in feature)


def _parse_feature(text: str) -> np.ndarray | None:
    if text == "-":
        return None
    return np.array([float(x) for x in text.split(",")], dtype=np.float64)


def write_proposals(path: str | Path, proposals: list[RegionProposal]) -> None:
    """One proposal per line: frame, mask, scores, feature."""
    with open(path, "w", encoding="ascii") as fh:
        for p in proposals:
            fields = [
                str(p.frame_index),
                p.mask.to_rle_text(),
                _format_float(p.appearance_score),
                _format_float(p.classifier_confidence),
                _feature_text(p.feature),
            ]
            if p.rescored is not None:
                fields.extend(
                    _format_float(x)
                    for x in (p.motion_score, p.combined_score, p.rescored)
                )
            fh.write("\t".join(fields) + "\n")


def read_proposals(path: str | Path) -> list[RegionProposal]:
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) not in (5, 8):
                raise ValueError(f"{path}:{lineno}: expected 5 or 8 fields")
            feature = _parse_feature(fields[4])
            if feature is None:
                feature = np.zeros(0)
            else:
                # Raw descriptors may come in at any scale; proposals cap
                # feature norms at one, so oversized vectors are rescaled.
                norm = float(np.linalg.norm(feature))
                if norm > 1.0:
                    feature = feature / norm
            proposal = RegionProposal.build(
                frame_index=int(fields[0]),
                mask=BinaryMask.from_rle_text(fields[1]),
                appearance_score=float(fields[2]),
                classifier_confidence=float(fields[3]),
                feature=feature,
            )
            if len(fields) == 8:
                proposal = proposal.with_scores(
                    motion_score=float(fields[5]),
                    combined_score=float(fields[6]),
                    rescored=float(fields[7]),
                )
            out.append(proposal)
    return out


def write_regenerated(path: str | Path, proposals: list[RegeneratedProposal]) -> None:
    """One regenerated region per line: frame, mask, confidence, level, feature."""
    with open(path, "w", encoding="ascii") as fh:
        for p in proposals:
            fh.write(
                "\t".join(
                    [
                        str(p.frame_index),
                        p.mask.to_rle_text(),
                        _format_float(p.confidence),
                        _format_float(p.source_level),
                        _feature_text(p.feature),
                    ]
                )
                + "\n"
            )


def read_regenerated(path: str | Path) -> list[RegeneratedProposal]:
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 fields")
            mask = BinaryMask.from_rle_text(fields[1])
            out.append(
                RegeneratedProposal(
                    frame_index=int(fields[0]),
                    mask=mask,
                    box=mask.tight_box(),
                    confidence=float(fields[2]),
                    source_level=float(fields[3]),
                    feature=_parse_feature(fields[4]),
                )
            )
    return out


# ---------------------------------------------------------------- tracks


def _proposal_obj(p: RegeneratedProposal) -> dict:
    return {
        "frame": p.frame_index,
        "mask": p.mask.to_rle_text(),
        "confidence": p.confidence,
        "level": p.source_level,
        "feature": None if p.feature is None else [float(x) for x in p.feature],
    }


def _proposal_from_obj(obj: dict) -> RegeneratedProposal:
    mask = BinaryMask.from_rle_text(obj["mask"])
    feature = obj["feature"]
    return RegeneratedProposal(
        frame_index=obj["frame"],
        mask=mask,
        box=mask.tight_box(),
        confidence=obj["confidence"],
        source_level=obj["level"],
        feature=None if feature is None else np.array(feature, dtype=np.float64),
    )


def write_tracks(path: str | Path, tracks: list[Track]) -> None:
    obj = [
        {
            "id": t.id,
            "confidence": t.confidence,
            "feature": None if t.feature is None else [float(x) for x in t.feature],
            "entries": [
                {
                    "frame": e.frame_index,
                    "box": [e.box.x0, e.box.y0, e.box.x1, e.box.y1],
                    "absorbed": [_proposal_obj(p) for p in e.absorbed],
                }
                for e in t.entries
            ],
        }
        for t in tracks
    ]
    _write_json(path, obj)


def read_tracks(path: str | Path) -> list[Track]:
    from trackcut.core import BoundingBox

    with open(path, "r", encoding="ascii") as fh:
        obj = json.load(fh)
    tracks = []
    for t in obj:
        entries = tuple(
            TrackEntry(
                frame_index=e["frame"],
                box=BoundingBox(*e["box"]),
                absorbed=tuple(_proposal_from_obj(p) for p in e["absorbed"]),
            )
            for e in t["entries"]
        )
        feature = t["feature"]
        tracks.append(
            Track(
                id=t["id"],
                entries=entries,
                feature=None if feature is None else np.array(feature),
                confidence=t["confidence"],
            )
        )
    return tracks


def write_selection(path: str | Path, result, instance) -> None:
    _write_json(
        path,
        {
            "selected": list(result.selected),
            "objective": result.objective,
            "gains": list(result.gains),
            "confidences": [float(x) for x in instance.confidences],
            "similarities": [[float(x) for x in row] for row in instance.similarities],
        },
    )


def read_selection(path: str | Path) -> dict:
    with open(path, "r", encoding="ascii") as fh:
        return json.load(fh)


def _write_json(path: str | Path, obj) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_json(path: str | Path, obj) -> None:
    _write_json(path, obj)


# ------------------------------------------------------------- key-value


def write_keyvalues(path: str | Path, values: dict[str, str]) -> None:
    """Flat `key = value` text, keys sorted, one per line."""
    lines = []
    for key in sorted(values):
        value = values[key]
        if "\n" in key or "\n" in str(value) or "=" in key:
            raise ValueError(f"key {key!r} or its value cannot be serialized")
        lines.append(f"{key} = {value}\n")
    with open(path, "w", encoding="ascii") as fh:
        fh.writelines(lines)


def read_keyvalues(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected `key = value`")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if not key:
                raise ValueError(f"{path}:{lineno}: empty key")
            if key in out:
                raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value.strip()
    return out
