"""Turn detector output into the engine's annotation JSONL."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator

from .detectors import AdapterError, get_detector
from .labelmap import LabelMap
from .readers import read_frames


def extract_annotations(
    video_path: str | Path,
    model_id: str,
    label_map: LabelMap,
    stride: int = 1,
    video_id: str | None = None,
    require_props: tuple[str, ...] = (),
) -> Iterator[str]:
    """Yield annotation JSONL lines (header first) for one video.

    One line per sampled frame (`frame_index % stride == 0`), carrying
    the label-mapped detector confidences. Output order follows frame
    order.
    """
    if stride < 1:
        raise AdapterError(f"stride must be >= 1, got {stride}")
    if require_props:
        label_map.require(require_props)
    detector = get_detector(model_id)
    detector.load()
    fps, frames = read_frames(video_path)
    vid = video_id if video_id is not None else Path(video_path).stem
    yield json.dumps({"video_id": vid, "fps": fps})
    for idx, frame in frames:
        if idx % stride:
            continue
        confidences = label_map.apply(detector.infer(frame))
        det = [
            {"p": prop, "c": conf}
            for prop, conf in sorted(confidences.items())
        ]
        yield json.dumps({"frame": idx, "t": idx / fps, "det": det})


def extract_to_file(
    video_path: str | Path,
    out_path: str | Path,
    model_id: str,
    label_map: LabelMap,
    stride: int = 1,
    video_id: str | None = None,
    require_props: tuple[str, ...] = (),
) -> int:
    """Write the JSONL stream to a file; returns the number of frame lines."""
    count = -1  # header line does not count
    with open(out_path, "w", encoding="utf-8") as fh:
        for count, line in enumerate(
            extract_annotations(
                video_path, model_id, label_map, stride, video_id, require_props
            )
        ):
            fh.write(line + "\n")
    return count
