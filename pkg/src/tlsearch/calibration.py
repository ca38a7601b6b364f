"""Confidence calibration: logistic mapping, hard thresholds, MLE fitting.

A raw detector confidence y_hat is mapped to a probability in two
stages: a fitted logistic z(y_hat) = 1 / (1 + exp(-k (y_hat - y0))),
then hard cutoffs that clamp unreliable scores to 0 (below gamma_fp)
and near-certain scores to 1 (above gamma_tp).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "CalibrationParams",
    "CalibrationSample",
    "CalibrationMap",
    "logistic_map",
    "calibrate_confidence",
    "fit_calibration",
    "read_samples_csv",
    "write_samples_csv",
]

K_CAP = 1e3  # slope cap for separable data
_MAX_NEWTON_ITER = 100
_GRAD_TOL = 1e-10


@dataclass(frozen=True)
class CalibrationParams:
    k: float
    y0: float
    gamma_fp: float
    gamma_tp: float

    def __post_init__(self):
        if not self.k > 0:
            raise DataError(f"calibration scale k must be positive, got {self.k}")
        if not 0.0 <= self.y0 <= 1.0:
            raise DataError(f"inflection point y0 must be in [0,1], got {self.y0}")
        if not 0.0 <= self.gamma_fp < self.gamma_tp <= 1.0:
            raise DataError(
                f"thresholds must satisfy 0 <= gamma_fp < gamma_tp <= 1, "
                f"got ({self.gamma_fp}, {self.gamma_tp})"
            )

    def to_dict(self, model_id: str = "default") -> dict:
        return {
            "v": 1,
            "model_id": model_id,
            "k": self.k,
            "y0": self.y0,
            "gamma_fp": self.gamma_fp,
            "gamma_tp": self.gamma_tp,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "CalibrationParams":
        try:
            return cls(
                k=float(obj["k"]),
                y0=float(obj["y0"]),
                gamma_fp=float(obj["gamma_fp"]),
                gamma_tp=float(obj["gamma_tp"]),
            )
        except KeyError as exc:
            raise DataError(f"calibration file missing key {exc}") from exc


#: Engine default when no calibration file is supplied: saturates exact
#: detections (g(1) = 1) and silences absent ones (g(0) = 0).
DEFAULT_PARAMS = CalibrationParams(k=10.0, y0=0.5, gamma_fp=0.1, gamma_tp=0.9)


@dataclass(frozen=True)
class CalibrationSample:
    raw_confidence: float
    is_correct: bool

    def __post_init__(self):
        if not 0.0 <= self.raw_confidence <= 1.0:
            raise DataError(
                f"sample confidence {self.raw_confidence} outside [0,1]"
            )


@dataclass(frozen=True)
class CalibrationMap:
    """Per-model parameters with optional per-proposition overrides."""

    default: CalibrationParams = DEFAULT_PARAMS
    overrides: dict[str, CalibrationParams] = field(default_factory=dict)

    def params_for(self, proposition: str) -> CalibrationParams:
        return self.overrides.get(proposition, self.default)


def logistic_map(y_hat: float, params: CalibrationParams) -> float:
    """z(y_hat): strictly increasing logistic through (y0, 0.5)."""
    return 1.0 / (1.0 + math.exp(-params.k * (y_hat - params.y0)))


def calibrate_confidence(y_hat: float, params: CalibrationParams) -> float:
    """g(y_hat): 0 below gamma_fp, 1 above gamma_tp, z(y_hat) between."""
    if y_hat < params.gamma_fp:
        return 0.0
    if y_hat > params.gamma_tp:
        return 1.0
    return logistic_map(y_hat, params)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


def _loglik(w: float, b: float, c: np.ndarray, y: np.ndarray) -> float:
    # log sigma(t) = -log(1 + exp(-t)), computed stably
    t = w * c + b
    return float(np.sum(np.where(y == 1, -np.logaddexp(0.0, -t), -np.logaddexp(0.0, t))))


def _newton_2d(c: np.ndarray, y: np.ndarray) -> tuple[float, float, bool]:
    """Damped Newton ascent of the logistic log-likelihood in (w, b).

    Returns (w, b, converged); diverging w (separable data) is reported
    through w escaping past K_CAP rather than as convergence failure.
    """
    w, b = 1.0, -0.5
    ll = _loglik(w, b, c, y)
    for _ in range(_MAX_NEWTON_ITER):
        t = w * c + b
        p = 1.0 / (1.0 + np.exp(-t))
        r = y - p
        g_w = float(np.dot(r, c))
        g_b = float(np.sum(r))
        if max(abs(g_w), abs(g_b)) < _GRAD_TOL:
            return w, b, True
        s = p * (1.0 - p)
        h_ww = float(np.dot(s, c * c))
        h_wb = float(np.dot(s, c))
        h_bb = float(np.sum(s))
        det = h_ww * h_bb - h_wb * h_wb
        if det <= 1e-300 or h_bb <= 0.0:
            break
        dw = (g_w * h_bb - g_b * h_wb) / det
        db = (g_b * h_ww - g_w * h_wb) / det
        step = 1.0
        while step > 1e-8:
            nw, nb = w + step * dw, b + step * db
            nll = _loglik(nw, nb, c, y)
            if nll >= ll - 1e-15:
                w, b, ll = nw, nb, nll
                break
            step *= 0.5
        else:
            return w, b, False
        if w > 4.0 * K_CAP:
            return w, b, True  # running away: separable, handled by caller
    return w, b, max(abs(g_w), abs(g_b)) < 1e-6


def _newton_1d_b(c: np.ndarray, y: np.ndarray, w: float) -> float:
    """MLE of the intercept b for fixed slope w (1-D concave Newton)."""
    b = -w * 0.5
    for _ in range(_MAX_NEWTON_ITER):
        p = 1.0 / (1.0 + np.exp(-(w * c + b)))
        g = float(np.sum(y - p))
        h = float(np.sum(p * (1.0 - p)))
        if h <= 1e-300 or abs(g) < _GRAD_TOL:
            break
        b += g / h
    return b


def _newton_1d_w(c: np.ndarray, y: np.ndarray, y0: float) -> float:
    """MLE of the slope w for fixed inflection y0, clamped to (0, K_CAP]."""
    w = 1.0
    x = c - y0
    for _ in range(_MAX_NEWTON_ITER):
        p = 1.0 / (1.0 + np.exp(-w * x))
        g = float(np.dot(y - p, x))
        h = float(np.dot(p * (1.0 - p), x * x))
        if h <= 1e-300 or abs(g) < _GRAD_TOL:
            break
        w += g / h
        if w >= K_CAP:
            return K_CAP
        if w <= 1e-6:
            w = 1e-6
    return min(max(w, 1e-6), K_CAP)


def _precision_threshold(
    samples: Sequence[CalibrationSample], floor: float
) -> float:
    """Smallest confidence c with precision(conf >= c) >= floor, else 1.0."""
    ordered = sorted(samples, key=lambda s: s.raw_confidence, reverse=True)
    best: float | None = None
    correct = 0
    total = 0
    i = 0
    n = len(ordered)
    while i < n:
        conf = ordered[i].raw_confidence
        # consume the whole tie group so precision is well-defined per cutoff
        while i < n and ordered[i].raw_confidence == conf:
            correct += int(ordered[i].is_correct)
            total += 1
            i += 1
        if correct / total >= floor:
            best = conf
    return best if best is not None else 1.0


def fit_calibration(
    samples: Iterable[CalibrationSample],
    target_fp_rate: float = 0.05,
    target_tp_rate: float = 0.95,
) -> CalibrationParams:
    """Fit (k, y0) by maximum likelihood and pick thresholds by precision sweep.

    gamma_fp is the smallest cutoff at which kept detections reach the
    precision floor implied by target_fp_rate (1 - target_fp_rate);
    gamma_tp is the smallest cutoff reaching target_tp_rate precision.
    If the two estimates cross they are widened symmetrically toward
    (0, 1) to restore gamma_fp < gamma_tp.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise DataError("need at least 2 calibration samples")
    if not 0.0 < target_fp_rate < 1.0 or not 0.0 < target_tp_rate < 1.0:
        raise DataError("calibration targets must lie in (0,1)")
    y = np.array([1.0 if s.is_correct else 0.0 for s in samples])
    c = np.array([s.raw_confidence for s in samples])
    if y.min() == y.max():
        raise DataError("inseparable calibration data: only one class present")
    if c.min() == c.max():
        raise DataError("inseparable calibration data: constant confidences")

    separable = float(c[y == 0].max()) < float(c[y == 1].min())
    if separable:
        # likelihood is unbounded in k; pin the slope at the cap
        w, b, converged = K_CAP, _newton_1d_b(c, y, K_CAP), True
    else:
        w, b, converged = _newton_2d(c, y)
    if not converged and w <= K_CAP:
        raise DataError(
            f"calibration fit did not converge (last iterate k={w:.6g}, "
            f"y0={-b / w if w else math.nan:.6g})"
        )
    if w > K_CAP:
        w = K_CAP
        b = _newton_1d_b(c, y, w)
    if w <= 0:
        w = 1e-6
        b = _newton_1d_b(c, y, w)
    y0 = -b / w
    if y0 < 0.0 or y0 > 1.0:
        y0 = min(max(y0, 0.0), 1.0)
        w = _newton_1d_w(c, y, y0)
    k = min(max(w, 1e-6), K_CAP)

    gamma_fp = _precision_threshold(samples, 1.0 - target_fp_rate)
    gamma_tp = _precision_threshold(samples, target_tp_rate)
    if gamma_fp >= gamma_tp:
        mid = 0.5 * (gamma_fp + gamma_tp)
        gamma_fp = max(0.0, mid - 0.05)
        gamma_tp = min(1.0, mid + 0.05)
    return CalibrationParams(k=k, y0=y0, gamma_fp=gamma_fp, gamma_tp=gamma_tp)


# ---------------------------------------------------------------------------
# File formats: JSON params, CSV samples
# ---------------------------------------------------------------------------


def load_params(path: str) -> CalibrationParams:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"calibration file {path}: {exc}") from exc
    return CalibrationParams.from_dict(obj)


def read_samples_csv(lines: Iterable[str]) -> list[CalibrationSample]:
    """Parse `confidence,correct` rows; a header row is recognized and skipped."""
    out: list[CalibrationSample] = []
    for lineno, row in enumerate(csv.reader(lines), start=1):
        if not row or (lineno == 1 and row[0].strip().lower() == "confidence"):
            continue
        if len(row) < 2:
            raise DataError(f"samples row {lineno}: expected confidence,correct")
        try:
            conf = float(row[0])
        except ValueError as exc:
            raise DataError(f"samples row {lineno}: bad confidence {row[0]!r}") from exc
        flag = row[1].strip().lower()
        if flag in ("1", "true", "yes"):
            correct = True
        elif flag in ("0", "false", "no"):
            correct = False
        else:
            raise DataError(f"samples row {lineno}: bad correctness flag {row[1]!r}")
        try:
            out.append(CalibrationSample(conf, correct))
        except DataError as exc:
            raise DataError(f"samples row {lineno}: {exc}") from exc
    return out


def write_samples_csv(samples: Iterable[CalibrationSample]) -> str:
    rows = ["confidence,correct"]
    rows += [f"{s.raw_confidence:.10g},{int(s.is_correct)}" for s in samples]
    return "\n".join(rows) + "\n"
