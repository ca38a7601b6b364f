"""Build calibration sample CSVs by matching detections to ground truth."""

from __future__ import annotations

import json
from typing import Iterable, Mapping, Sequence

from .detectors import AdapterError


def collect_calibration_samples(
    annotation_lines: Iterable[str],
    truth_labels: Mapping[int, Sequence[str]] | Sequence[Sequence[str]],
) -> str:
    """One `confidence,correct` row per detection in the annotation stream.

    A detection is correct when its proposition appears in the frame's
    ground-truth label list. Ground truth must cover every annotated
    frame index.
    """
    if not isinstance(truth_labels, Mapping):
        truth_labels = {i: labels for i, labels in enumerate(truth_labels)}
    rows = ["confidence,correct"]
    for lineno, raw in enumerate(annotation_lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise AdapterError(f"line {lineno}: invalid JSON: {exc}") from exc
        if "frame" not in obj:
            continue  # header line
        idx = int(obj["frame"])
        if idx not in truth_labels:
            raise AdapterError(
                f"line {lineno}: no ground-truth labels for frame {idx}"
            )
        gold = set(truth_labels[idx])
        for det in obj.get("det", []):
            correct = int(det["p"] in gold)
            rows.append(f"{float(det['c']):.10g},{correct}")
    return "\n".join(rows) + "\n"
