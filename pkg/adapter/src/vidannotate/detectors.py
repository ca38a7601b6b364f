"""Pluggable detector backends.

A backend implements two methods: `load()` (acquire weights or other
resources) and `infer(frame)` (return detections for one frame). The
stub backend replays scripted detections and is what CI runs; the
torchvision backend wraps a real pretrained detector and is an optional
extra.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence


class AdapterError(Exception):
    """Errors raised by the annotation adapter."""


@dataclass(frozen=True)
class Detection:
    class_name: str
    confidence: float
    box: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise AdapterError(
                f"detector returned confidence {self.confidence} outside [0,1]"
            )


class DetectorBackend(Protocol):
    def load(self) -> None: ...

    def infer(self, frame) -> Sequence[Detection]: ...


class StubDetector:
    """Deterministic backend for tests: the frame payload *is* the output.

    Script-format videos carry per-frame `[class, confidence, box?]`
    triples; this backend echoes them as detections, so pipelines can be
    exercised without model weights.
    """

    def load(self) -> None:
        return None

    def infer(self, frame) -> list[Detection]:
        if not isinstance(frame, (list, tuple)):
            raise AdapterError(
                "stub detector expects scripted frames (list of [class, confidence])"
            )
        out = []
        for entry in frame:
            if len(entry) < 2:
                raise AdapterError(f"bad scripted detection {entry!r}")
            box = tuple(entry[2]) if len(entry) > 2 and entry[2] is not None else None
            out.append(Detection(str(entry[0]), float(entry[1]), box))
        return out


class TorchvisionDetector:
    """Faster R-CNN from torchvision with COCO classes (optional extra).

    Weights download on first use; keep this off CI paths.
    """

    def __init__(self, score_floor: float = 0.05):
        self.score_floor = score_floor
        self._model = None
        self._categories: list[str] = []

    def load(self) -> None:
        try:
            import torch  # noqa: F401
            from torchvision.models import detection as tvd
        except ImportError as exc:
            raise AdapterError(
                "torchvision backend needs the [torch] extra installed"
            ) from exc
        weights = tvd.FasterRCNN_ResNet50_FPN_Weights.DEFAULT
        self._categories = list(weights.meta["categories"])
        self._model = tvd.fasterrcnn_resnet50_fpn(weights=weights)
        self._model.eval()

    def infer(self, frame) -> list[Detection]:
        if self._model is None:
            raise AdapterError("call load() before infer()")
        import torch

        tensor = torch.from_numpy(frame).permute(2, 0, 1).float() / 255.0
        with torch.no_grad():
            (pred,) = self._model([tensor])
        out = []
        for label, score, box in zip(
            pred["labels"].tolist(), pred["scores"].tolist(), pred["boxes"].tolist()
        ):
            if score < self.score_floor:
                continue
            out.append(Detection(self._categories[label], float(score), tuple(box)))
        return out


_BACKENDS = {
    "stub": StubDetector,
    "torchvision-frcnn": TorchvisionDetector,
}


def get_detector(model_id: str) -> DetectorBackend:
    try:
        backend = _BACKENDS[model_id]
    except KeyError as exc:
        raise AdapterError(
            f"unknown model {model_id!r}; available: {sorted(_BACKENDS)}"
        ) from exc
    return backend()
