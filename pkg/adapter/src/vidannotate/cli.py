"""Adapter CLI: `extract` video -> annotation JSONL, `collect-samples` -> CSV."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .calib import collect_calibration_samples
from .detectors import AdapterError
from .extract import extract_annotations
from .labelmap import LabelMap


def _cmd_extract(args) -> int:
    if args.label_map:
        label_map = LabelMap.load(args.label_map)
    elif args.classes:
        label_map = LabelMap.identity(args.classes.split(","))
    else:
        raise AdapterError("extract needs --label-map or --classes")
    require = tuple(args.require.split(",")) if args.require else ()
    lines = extract_annotations(
        args.video,
        args.model,
        label_map,
        stride=args.stride,
        video_id=args.video_id,
        require_props=require,
    )
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for line in lines:
            out.write(line + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def _cmd_collect_samples(args) -> int:
    truth = json.loads(Path(args.truth_labels).read_text(encoding="utf-8"))
    if isinstance(truth, dict):
        truth = {int(k): v for k, v in truth.items()}
    csv_text = collect_calibration_samples(
        Path(args.annotations).read_text(encoding="utf-8").splitlines(), truth
    )
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
    else:
        sys.stdout.write(csv_text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vidannotate",
        description="Run detectors over video and emit annotation JSONL.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="annotate a video file")
    p.add_argument("--video", required=True, help="video file (.json = scripted stub)")
    p.add_argument("--model", default="stub", help="detector backend id")
    p.add_argument("--label-map", help="YAML/JSON proposition -> class map")
    p.add_argument("--classes", help="comma-separated identity-mapped classes")
    p.add_argument("--stride", type=int, default=1, help="sample every Nth frame")
    p.add_argument("--video-id", default=None)
    p.add_argument("--require", help="propositions that must be mapped")
    p.add_argument("--out", help="output JSONL path (default stdout)")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("collect-samples", help="calibration CSV from annotations + truth")
    p.add_argument("--annotations", required=True, help="annotation JSONL")
    p.add_argument("--truth-labels", required=True,
                   help="JSON: per-frame label lists (array or {frame: labels})")
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.set_defaults(func=_cmd_collect_samples)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AdapterError as exc:
        sys.stderr.write(json.dumps({"v": 1, "error": "adapter_error", "message": str(exc)}) + "\n")
        return 3
    except FileNotFoundError as exc:
        sys.stderr.write(json.dumps({"v": 1, "error": "data_error", "message": str(exc)}) + "\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
