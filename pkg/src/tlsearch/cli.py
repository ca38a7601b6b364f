"""Command-line interface.

Subcommands: search, calibrate, gen, eval, check, sweep. Data goes to
stdout, diagnostics to stderr; exit codes are 0 (success), 2 (spec
error), 3 (data error), 4 (engine/internal error).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
from pathlib import Path

from . import __version__
from .annotations import read_annotations, read_ground_truth
from .automaton import ProbabilisticAutomaton
from .calibration import fit_calibration, read_samples_csv
from .checker import check as run_check
from .config import build_search_config, load_config
from .datagen import (
    NoiseModel,
    TEMPLATE_IDS,
    TlvTemplate,
    generate_suite,
    generate_synthetic,
)
from .errors import DataError, EngineError, SpecError
from .evaluate import evaluate, length_sweep, sweep_csv
from .formula import parse_spec
from .search import SceneInterval, result_to_dict, search
from .annotations import write_annotations, write_ground_truth

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=False) + "\n")


def _read_spec(args) -> "object":
    if args.spec is not None:
        return parse_spec(args.spec)
    text = Path(args.spec_file).read_text(encoding="utf-8").strip()
    return parse_spec(text)


def _load_cfg(args, **overrides):
    obj = None
    base = None
    if getattr(args, "config", None):
        obj = load_config(args.config)
        base = Path(args.config).parent
    return build_search_config(obj, base_dir=base, **overrides)


def _search_one(path: Path, spec_text: str, cfg) -> dict:
    spec = parse_spec(spec_text)
    video = read_annotations(
        path.read_text(encoding="utf-8").splitlines(), video_id=path.stem
    )
    intervals = search(video, spec, cfg)
    lam = cfg.lam
    from .formula import strip_quantifier

    _, explicit, _ = strip_quantifier(spec)
    if explicit is not None:
        lam = explicit
    return result_to_dict(video, spec, lam, intervals)


def _cmd_search(args) -> int:
    cfg = _load_cfg(
        args,
        **{
            "lambda": args.lam,
            "invalid_frame_policy": args.policy,
            "vc_mode": args.vc_mode,
            "presence_threshold": args.presence_threshold,
            "prune_epsilon": args.prune_epsilon,
            "max_automaton_layers": args.max_layers,
        },
    )
    spec = _read_spec(args)
    from .formula import to_text

    spec_text = to_text(spec)
    root = Path(args.annotations)
    if root.is_dir():
        files = sorted(root.glob("*.jsonl"))
        if not files:
            raise DataError(f"no .jsonl files under {root}")
        if args.jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(
                    pool.map(_search_one, files, [spec_text] * len(files), [cfg] * len(files))
                )
        else:
            results = [_search_one(f, spec_text, cfg) for f in files]
        _emit(results)
    else:
        if not root.exists():
            raise DataError(f"annotations file not found: {root}")
        _emit(_search_one(root, spec_text, cfg))
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    path = Path(args.samples)
    if not path.exists():
        raise DataError(f"samples file not found: {path}")
    samples = read_samples_csv(path.read_text(encoding="utf-8").splitlines())
    if not samples:
        raise DataError(f"samples file {path} is empty")
    params = fit_calibration(
        samples, target_fp_rate=args.target_fp_rate, target_tp_rate=args.target_tp_rate
    )
    _emit(params.to_dict(model_id=args.model_id))
    return EXIT_OK


def _noise_from_args(args) -> NoiseModel:
    if args.noise_free:
        return NoiseModel.noiseless(seed=args.noise_seed)
    return NoiseModel(
        fp_rate=args.fp_rate,
        tp_alpha=args.tp_alpha,
        tp_beta=args.tp_beta,
        fp_alpha=args.fp_alpha,
        fp_beta=args.fp_beta,
        seed=args.noise_seed,
    )


def _cmd_gen(args) -> int:
    out_dir = Path(args.out_dir)
    noise = _noise_from_args(args)
    if args.suite:
        manifest = generate_suite(
            out_dir, scale=args.scale, noise=noise, base_seed=args.seed, fps=args.fps
        )
        _emit(manifest)
        return EXIT_OK
    if args.template is None:
        raise DataError("gen needs --template (or --suite)")
    template = TlvTemplate.default(args.template)
    stem = args.name or f"{args.template}-{args.seed}"
    video, truth = generate_synthetic(
        template,
        args.length,
        noise,
        placement_seed=args.seed,
        events=args.events,
        fps=args.fps,
        video_id=stem,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    ann = out_dir / f"{stem}.jsonl"
    tru = out_dir / f"{stem}.truth.json"
    ann.write_text("\n".join(write_annotations(video)) + "\n", encoding="utf-8")
    tru.write_text(write_ground_truth(truth), encoding="utf-8")
    _emit(
        {
            "v": 1,
            "template": args.template,
            "annotations": str(ann),
            "truth": str(tru),
            "frames": len(video),
            "seed": args.seed,
            "noise": noise.to_dict(),
        }
    )
    return EXIT_OK


def _cmd_eval(args) -> int:
    pred_obj = json.loads(Path(args.pred).read_text(encoding="utf-8"))
    truth = read_ground_truth(Path(args.truth).read_text(encoding="utf-8"))
    try:
        intervals = [
            SceneInterval(iv["start"], iv["end"], iv.get("probability", 1.0), "")
            for iv in pred_obj["intervals"]
        ]
        length = args.length or int(pred_obj["frames"])
    except (KeyError, TypeError) as exc:
        raise DataError(f"prediction file {args.pred}: missing field {exc}") from exc
    report = evaluate(intervals, truth, length)
    if args.csv:
        from .evaluate import report_csv

        Path(args.csv).write_text(report_csv(report), encoding="utf-8")
    _emit(report.to_dict())
    return EXIT_OK


def _cmd_check(args) -> int:
    auto = ProbabilisticAutomaton.from_json(
        Path(args.automaton).read_text(encoding="utf-8")
    )
    spec = _read_spec(args)
    result = run_check(auto, spec, default_lambda=args.lam if args.lam is not None else 0.5)
    _emit(result.to_dict())
    return EXIT_OK


def _cmd_sweep(args) -> int:
    lengths = [int(x) for x in args.lengths.split(",") if x]
    cfg = _load_cfg(args, **{"lambda": args.lam})
    noise = _noise_from_args(args)
    rows = length_sweep(lengths, noise=noise, cfg=cfg, fps=args.fps)
    if args.csv:
        Path(args.csv).write_text(sweep_csv(rows), encoding="utf-8")
    # timing is machine-dependent; keep stdout deterministic
    _emit(
        {
            "v": 1,
            "rows": [
                {k: row[k] for k in ("length", "f1", "precision", "recall")}
                for row in rows
            ],
        }
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tlsearch",
        description="Temporal-logic scene search over per-frame video annotations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_spec_args(p):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--spec", help="specification text")
        group.add_argument("--spec-file", help="file containing the specification")

    p = sub.add_parser("search", help="find scene intervals satisfying a specification")
    p.add_argument("--annotations", required=True, help="JSONL file or directory")
    add_spec_args(p)
    p.add_argument("--config", help="engine config file (JSON, or TOML on 3.11+)")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--policy", choices=("skip", "reset"), default=None,
                   help="invalid-frame policy")
    p.add_argument("--vc-mode", choices=("literal", "positive", "any"), default=None)
    p.add_argument("--presence-threshold", type=float, default=None)
    p.add_argument("--prune-epsilon", type=float, default=None)
    p.add_argument("--max-layers", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1, help="parallel workers across videos")
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("calibrate", help="fit calibration parameters from labeled samples")
    p.add_argument("--samples", required=True, help="CSV of confidence,correct rows")
    p.add_argument("--target-fp-rate", type=float, default=0.05)
    p.add_argument("--target-tp-rate", type=float, default=0.95)
    p.add_argument("--model-id", default="default")
    p.set_defaults(func=_cmd_calibrate)

    def add_noise_args(p):
        p.add_argument("--noise-free", action="store_true")
        p.add_argument("--fp-rate", type=float, default=0.05)
        p.add_argument("--tp-alpha", type=float, default=8.0)
        p.add_argument("--tp-beta", type=float, default=2.0)
        p.add_argument("--fp-alpha", type=float, default=2.0)
        p.add_argument("--fp-beta", type=float, default=8.0)
        p.add_argument("--noise-seed", type=int, default=0)

    p = sub.add_parser("gen", help="generate synthetic annotated videos")
    p.add_argument("--template", choices=TEMPLATE_IDS, default=None)
    p.add_argument("--length", type=int, default=157)
    p.add_argument("--events", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--name", default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--suite", action="store_true", help="emit the scaled template mix")
    p.add_argument("--scale", type=float, default=0.01)
    add_noise_args(p)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("eval", help="score predicted intervals against ground truth")
    p.add_argument("--pred", required=True, help="search result JSON")
    p.add_argument("--truth", required=True, help="ground-truth interval JSON")
    p.add_argument("--length", type=int, default=None, help="override video length")
    p.add_argument("--csv", help="also write the report as CSV here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("check", help="model-check an automaton JSON against a spec")
    p.add_argument("--automaton", required=True)
    add_spec_args(p)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("sweep", help="F1/latency across video lengths")
    p.add_argument("--lengths", required=True, help="comma-separated frame counts")
    p.add_argument("--config", help="engine config file")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--fps", type=float, default=25.0)
    p.add_argument("--csv", help="write the full table (with latency) here")
    add_noise_args(p)
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        _fail("spec_error", exc)
        return EXIT_SPEC
    except (DataError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        _fail("data_error", exc)
        return EXIT_DATA
    except EngineError as exc:
        _fail("engine_error", exc)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        _fail("internal_error", exc)
        return EXIT_INTERNAL


def _fail(kind: str, exc: Exception) -> None:
    sys.stderr.write(json.dumps({"v": 1, "error": kind, "message": str(exc)}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
