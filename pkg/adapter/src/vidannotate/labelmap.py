"""Proposition-to-detector-class mapping with max-confidence aggregation."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .detectors import AdapterError, Detection


class LabelMap:
    """Maps spec propositions to one or more detector class names.

    When several mapped classes (or several instances of one class) fire
    in a frame, the proposition takes the maximum confidence.
    """

    def __init__(self, mapping: Mapping[str, Sequence[str] | str]):
        if not mapping:
            raise AdapterError("label map is empty")
        self._by_prop: dict[str, tuple[str, ...]] = {}
        for prop, classes in mapping.items():
            if isinstance(classes, str):
                classes = (classes,)
            if not classes:
                raise AdapterError(f"proposition {prop!r} maps to no classes")
            self._by_prop[str(prop)] = tuple(str(c) for c in classes)

    @classmethod
    def identity(cls, class_names: Iterable[str]) -> "LabelMap":
        return cls({name: (name,) for name in class_names})

    @classmethod
    def load(cls, path: str | Path) -> "LabelMap":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix in (".yaml", ".yml"):
            import yaml

            try:
                obj = yaml.safe_load(text)
            except yaml.YAMLError as exc:
                raise AdapterError(f"bad label map {path}: {exc}") from exc
        else:
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise AdapterError(f"bad label map {path}: {exc}") from exc
        if not isinstance(obj, dict):
            raise AdapterError(f"label map {path} must be a mapping")
        return cls(obj)

    @property
    def propositions(self) -> tuple[str, ...]:
        return tuple(self._by_prop)

    def require(self, props: Iterable[str]) -> None:
        missing = [p for p in props if p not in self._by_prop]
        if missing:
            raise AdapterError(
                f"unmapped propositions: {missing}; add them to the label map "
                "or an open-vocabulary prompt"
            )

    def apply(self, detections: Sequence[Detection]) -> dict[str, float]:
        """Aggregate raw detections into per-proposition confidences."""
        best_by_class: dict[str, float] = {}
        for det in detections:
            prev = best_by_class.get(det.class_name)
            if prev is None or det.confidence > prev:
                best_by_class[det.class_name] = det.confidence
        out: dict[str, float] = {}
        for prop, classes in self._by_prop.items():
            confs = [best_by_class[c] for c in classes if c in best_by_class]
            if confs:
                out[prop] = max(confs)
        return out
