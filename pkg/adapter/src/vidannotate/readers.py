"""Frame sources: scripted JSON videos for tests, OpenCV for real files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator

from .detectors import AdapterError


def read_frames(path: str | Path) -> tuple[float, Iterator[tuple[int, object]]]:
    """Open a video and return (fps, iterator of (frame_index, frame)).

    `.json` files are scripted videos: `{"fps": float, "frames": [...]}`
    where each frame entry is the payload handed to the detector. Any
    other extension is decoded with OpenCV.
    """
    path = Path(path)
    if not path.exists():
        raise AdapterError(f"video not found: {path}")
    if path.suffix == ".json":
        return _script_frames(path)
    return _opencv_frames(path)


def _script_frames(path: Path) -> tuple[float, Iterator[tuple[int, object]]]:
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
        fps = float(obj.get("fps", 30.0))
        frames = obj["frames"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise AdapterError(f"bad scripted video {path}: {exc}") from exc
    if fps <= 0:
        raise AdapterError(f"bad scripted video {path}: fps must be positive")

    def gen():
        for idx, frame in enumerate(frames):
            yield idx, frame

    return fps, gen()


def _opencv_frames(path: Path) -> tuple[float, Iterator[tuple[int, object]]]:
    try:
        import cv2
    except ImportError as exc:
        raise AdapterError(
            "decoding real video needs the [video] extra (opencv-python-headless)"
        ) from exc
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise AdapterError(f"could not open video: {path}")
    fps = cap.get(cv2.CAP_PROP_FPS) or 30.0

    def gen():
        idx = 0
        try:
            while True:
                ok, frame = cap.read()
                if not ok:
                    break
                yield idx, cv2.cvtColor(frame, cv2.COLOR_BGR2RGB)
                idx += 1
        finally:
            cap.release()

    return fps, gen()
