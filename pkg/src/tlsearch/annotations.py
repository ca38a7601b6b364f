"""Per-frame annotation data model and its JSONL wire format.

One frame per line: `{"frame": int, "t": float, "det": [{"p": label,
"c": confidence}]}`. Detection entries may carry extra fields (for
example bounding boxes); they are preserved on read as far as parsing
goes but ignored by the engine. An optional header line of the form
`{"video_id": ..., "fps": ...}` (no "frame" key) may precede the frame
lines so a stream round-trips the video identity.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import DataError

log = logging.getLogger(__name__)

__all__ = [
    "DetectionRecord",
    "FrameAnnotation",
    "VideoAnnotation",
    "GroundTruthInterval",
    "read_annotations",
    "write_annotations",
    "ingest_ground_truth_labels",
    "read_ground_truth",
    "write_ground_truth",
]

_FRAME_KEYS = {"frame", "t", "det"}
_DET_KEYS = {"p", "c"}


@dataclass(frozen=True)
class DetectionRecord:
    proposition: str
    raw_confidence: float

    def __post_init__(self):
        if not self.proposition:
            raise DataError("detection with empty proposition label")
        if not 0.0 <= self.raw_confidence <= 1.0:
            raise DataError(
                f"confidence {self.raw_confidence} for {self.proposition!r} "
                "outside [0,1]"
            )


class FrameAnnotation:
    """Detections of one frame; repeated labels collapse to max confidence."""

    __slots__ = ("frame_index", "timestamp_s", "detections", "_conf")

    def __init__(
        self,
        frame_index: int,
        timestamp_s: float,
        detections: Sequence[DetectionRecord] = (),
    ):
        if frame_index < 0:
            raise DataError(f"negative frame index {frame_index}")
        if timestamp_s < 0:
            raise DataError(f"negative timestamp {timestamp_s}")
        merged: dict[str, float] = {}
        for det in detections:
            prev = merged.get(det.proposition)
            if prev is None or det.raw_confidence > prev:
                merged[det.proposition] = det.raw_confidence
        self.frame_index = frame_index
        self.timestamp_s = timestamp_s
        self.detections = tuple(
            DetectionRecord(p, c) for p, c in merged.items()
        )
        self._conf = merged

    def confidence_of(self, proposition: str) -> float:
        """Raw confidence for a proposition; absent detections count as 0."""
        return self._conf.get(proposition, 0.0)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FrameAnnotation)
            and self.frame_index == other.frame_index
            and self.timestamp_s == other.timestamp_s
            and self._conf == other._conf
        )

    def __repr__(self) -> str:
        return (
            f"FrameAnnotation({self.frame_index}, {self.timestamp_s}, "
            f"{sorted(self._conf.items())})"
        )


class VideoAnnotation:
    """Ordered frames of one video with identity and frame-rate metadata."""

    __slots__ = ("video_id", "fps", "frames")

    def __init__(self, video_id: str, fps: float, frames: Sequence[FrameAnnotation]):
        if fps <= 0:
            raise DataError(f"fps must be positive, got {fps}")
        prev = -1
        period = 1.0 / fps
        for fr in frames:
            if fr.frame_index <= prev:
                raise DataError(
                    f"frame indices must be strictly increasing "
                    f"({fr.frame_index} after {prev})"
                )
            expected_t = fr.frame_index * period
            if abs(fr.timestamp_s - expected_t) > period:
                raise DataError(
                    f"frame {fr.frame_index}: timestamp {fr.timestamp_s} "
                    f"inconsistent with fps {fps}"
                )
            prev = fr.frame_index
        self.video_id = video_id
        self.fps = fps
        self.frames = tuple(frames)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def length_frames(self) -> int:
        """Nominal video length: one past the last frame index."""
        return self.frames[-1].frame_index + 1 if self.frames else 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, VideoAnnotation)
            and self.video_id == other.video_id
            and self.fps == other.fps
            and self.frames == other.frames
        )

    def __repr__(self) -> str:
        return f"VideoAnnotation({self.video_id!r}, fps={self.fps}, frames={len(self.frames)})"


@dataclass(frozen=True)
class GroundTruthInterval:
    start_frame: int
    end_frame: int  # inclusive
    spec_id: str = ""

    def __post_init__(self):
        if self.start_frame > self.end_frame:
            raise DataError(
                f"interval start {self.start_frame} after end {self.end_frame}"
            )
        if self.start_frame < 0:
            raise DataError(f"negative interval start {self.start_frame}")


# ---------------------------------------------------------------------------
# JSONL reading / writing
# ---------------------------------------------------------------------------


def _parse_frame_obj(obj: dict, lineno: int) -> FrameAnnotation:
    unknown = set(obj) - _FRAME_KEYS
    if unknown:
        log.warning("line %d: ignoring unknown frame fields %s", lineno, sorted(unknown))
    try:
        frame = int(obj["frame"])
        t = float(obj.get("t", 0.0))
        det_list = obj.get("det", [])
    except (TypeError, ValueError, KeyError) as exc:
        raise DataError(f"line {lineno}: malformed frame record: {exc}") from exc
    if not isinstance(det_list, list):
        raise DataError(f"line {lineno}: field 'det' must be a list")
    dets = []
    for d in det_list:
        if not isinstance(d, dict) or "p" not in d or "c" not in d:
            raise DataError(f"line {lineno}: detection entries need fields 'p' and 'c'")
        extra = set(d) - _DET_KEYS
        if extra:
            log.warning("line %d: ignoring detection fields %s", lineno, sorted(extra))
        conf = d["c"]
        if not isinstance(conf, (int, float)) or not 0.0 <= conf <= 1.0:
            raise DataError(
                f"line {lineno}: field 'c' of {d.get('p')!r} must be in [0,1], got {conf!r}"
            )
        dets.append(DetectionRecord(str(d["p"]), float(conf)))
    try:
        return FrameAnnotation(frame, t, dets)
    except DataError as exc:
        raise DataError(f"line {lineno}: {exc}") from exc


def read_annotations(
    lines: Iterable[str],
    video_id: str = "",
    fps: float | None = None,
) -> VideoAnnotation:
    """Parse a JSONL stream into a validated VideoAnnotation.

    An optional leading header line may set video_id/fps; explicit
    arguments win over the header. Without either, fps is inferred from
    the first two timestamps and defaults to 30.
    """
    frames: list[FrameAnnotation] = []
    header_id: str | None = None
    header_fps: float | None = None
    seen = set()
    first = True
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DataError(f"line {lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise DataError(f"line {lineno}: expected a JSON object")
        if first and "frame" not in obj:
            header_id = str(obj.get("video_id", ""))
            if "fps" in obj:
                header_fps = float(obj["fps"])
            first = False
            continue
        first = False
        fr = _parse_frame_obj(obj, lineno)
        if fr.frame_index in seen:
            raise DataError(f"line {lineno}: duplicate frame index {fr.frame_index}")
        if frames and fr.frame_index < frames[-1].frame_index:
            raise DataError(
                f"line {lineno}: out-of-order frame index {fr.frame_index}"
            )
        seen.add(fr.frame_index)
        frames.append(fr)

    vid = video_id or header_id or ""
    if fps is None:
        fps = header_fps
    if fps is None:
        if len(frames) >= 2 and frames[1].timestamp_s > frames[0].timestamp_s:
            di = frames[1].frame_index - frames[0].frame_index
            dt = frames[1].timestamp_s - frames[0].timestamp_s
            fps = di / dt
        else:
            fps = 30.0
    return VideoAnnotation(vid, fps, frames)


def write_annotations(video: VideoAnnotation) -> Iterator[str]:
    """Serialize to JSONL lines (header first); inverse of read_annotations."""
    yield json.dumps({"video_id": video.video_id, "fps": video.fps})
    for fr in video.frames:
        yield json.dumps(
            {
                "frame": fr.frame_index,
                "t": fr.timestamp_s,
                "det": [
                    {"p": d.proposition, "c": d.raw_confidence}
                    for d in sorted(fr.detections, key=lambda d: d.proposition)
                ],
            },
            ensure_ascii=False,
        )


def ingest_ground_truth_labels(
    frame_labels: Sequence[Sequence[str]],
    vocabulary: Iterable[str],
    video_id: str = "",
    fps: float = 30.0,
) -> VideoAnnotation:
    """Turn per-frame ground-truth label lists into certainty-1 annotations."""
    vocab = set(vocabulary)
    frames = []
    for idx, labels in enumerate(frame_labels):
        bad = [lab for lab in labels if lab not in vocab]
        if bad:
            raise DataError(f"frame {idx}: labels outside vocabulary: {sorted(set(bad))}")
        dets = [DetectionRecord(lab, 1.0) for lab in labels]
        frames.append(FrameAnnotation(idx, idx / fps, dets))
    return VideoAnnotation(video_id, fps, frames)


# ---------------------------------------------------------------------------
# Ground-truth interval files: JSON array of {start, end, spec_id}
# ---------------------------------------------------------------------------


def read_ground_truth(text: str) -> list[GroundTruthInterval]:
    try:
        arr = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"ground-truth file: {exc}") from exc
    if not isinstance(arr, list):
        raise DataError("ground-truth file must be a JSON array")
    out = []
    for obj in arr:
        try:
            out.append(
                GroundTruthInterval(
                    int(obj["start"]), int(obj["end"]), str(obj.get("spec_id", ""))
                )
            )
        except (TypeError, KeyError, ValueError) as exc:
            raise DataError(f"bad ground-truth entry {obj!r}: {exc}") from exc
    return out


def write_ground_truth(intervals: Sequence[GroundTruthInterval]) -> str:
    return json.dumps(
        [
            {"start": iv.start_frame, "end": iv.end_frame, "spec_id": iv.spec_id}
            for iv in intervals
        ],
        indent=None,
        separators=(",", ":"),
    )
