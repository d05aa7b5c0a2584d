"""Command line interface: ``mespot {spot,eval,sweep,synth}``.

Options can also come from a config file (``--config run.toml``) holding
``key = value`` pairs named like the long flags with dashes turned into
underscores, e.g.::

    profile = "samm"
    kind = "micro"
    p = 0.05
    frames_root = "data/frames"
    jobs = 4

Flags given on the command line override the file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from ._validation import check_grid, check_kinds, flatten
from .crop import FaceCropper
from .estimator import MDMDSpotter
from .ingest import (
    FormatError, FrameSequence, load_frame_sequence, load_profile, normalize_ground_truth,
    parse_annotations, parse_landmarks, save_frame_sequence, write_annotations, write_landmarks,
)
from .intervals import read_predictions, write_predictions
from .metrics import SCOPES, evaluate, sweep_report, write_report, write_sweep
from .synth import full_frame_landmarks, generate, load_synth_specs

logger = logging.getLogger("mespot")

DEFAULTS = {
    "profile": "casme2",
    "kind": "both",
    "p": 0.01,
    "flow": "reference",
    "jobs": 1,
    "no_crop": False,
    "p_start": 0.01,
    "p_end": 0.99,
    "p_step": 0.01,
}


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    import tomli

    with open(path, "rb") as fh:
        return tomli.load(fh)


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    config = _load_config(args.config)
    unused = set(config) - set(vars(args))
    if unused:
        logger.info("config keys not used by %s: %s", args.command, ", ".join(sorted(unused)))
    for key, value in vars(args).items():
        if value is None:
            setattr(args, key, config.get(key, DEFAULTS.get(key)))
    return args


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) in (None, "")]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        print(f"mespot {args.command}: error: missing required option(s) {flags}", file=sys.stderr)
        raise SystemExit(2)


def _find_landmarks(root: Path, video_id: str) -> Optional[Path]:
    for suffix in (".csv", ".json"):
        path = root / f"{video_id}{suffix}"
        if path.is_file():
            return path
    return None


def load_videos(frames_root, landmarks_root, profile, crop: bool = True
                ) -> tuple[list[FrameSequence], dict[str, str]]:
    """Load and crop every video directory under ``frames_root``.

    Returns the sequences plus a ``{video_id: reason}`` map of failures.
    """
    frames_root = Path(frames_root)
    failures: dict[str, str] = {}
    seqs, landmarks = [], {}
    for video_dir in sorted(p for p in frames_root.iterdir() if p.is_dir()):
        video_id = video_dir.name
        if crop:
            lm_path = _find_landmarks(Path(landmarks_root), video_id)
            if lm_path is None:
                failures[video_id] = "no landmark file"
                logger.warning("%s: no landmark file, skipped", video_id)
                continue
            try:
                landmarks[video_id] = parse_landmarks(lm_path, video_id)
            except FormatError as exc:
                failures[video_id] = str(exc)
                continue
        try:
            seqs.append(load_frame_sequence(video_dir, video_id, profile.fps))
        except (OSError, FormatError) as exc:
            failures[video_id] = str(exc)
            logger.warning("%s: %s", video_id, exc)
    if crop:
        cropped = []
        cropper = FaceCropper(landmarks, profile.crop_size)
        for seq in seqs:
            try:
                cropped.extend(cropper.transform([seq]))
            except ValueError as exc:
                failures[seq.video_id] = f"crop failed: {exc}"
        seqs = cropped
    return seqs, failures


def _spotter(args, profile) -> MDMDSpotter:
    p = getattr(args, "p", None)
    return MDMDSpotter(profile=profile, kinds=check_kinds(args.kind), p=DEFAULTS["p"] if p is None else p,
                       flow=args.flow, n_jobs=args.jobs).fit()


def _report_failures(failures: dict[str, str]) -> int:
    if not failures:
        return 0
    print(f"{len(failures)} video(s) failed:", file=sys.stderr)
    for video_id, reason in sorted(failures.items()):
        print(f"  {video_id}: {reason}", file=sys.stderr)
    return 1


def cmd_spot(args) -> int:
    _require(args, "frames_root", "out")
    if not args.no_crop:
        _require(args, "landmarks_root")
    profile = load_profile(args.profile)
    seqs, failures = load_videos(args.frames_root, args.landmarks_root, profile, not args.no_crop)
    spotter = _spotter(args, profile)
    features = spotter.transform(seqs)
    if args.dump_series:
        _dump_series(features, Path(args.dump_series), args.p)
    predictions = flatten(spotter.predict_features(features))
    write_predictions(predictions, args.out)
    logger.info("wrote %d intervals for %d videos to %s", len(predictions), len(seqs), args.out)
    return _report_failures(failures)


def _dump_series(features, out_dir: Path, p: float) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for per_kind in features:
        for kind, series in per_kind.items():
            if series is not None:
                series.dump_csv(out_dir / f"{series.video_id}_{kind}.csv", p)


def _load_truth(path):
    return [normalize_ground_truth(g) for g in parse_annotations(path)]


def _format(x) -> str:
    return "n/a" if x is None else f"{x:.4f}"


def cmd_eval(args) -> int:
    _require(args, "pred", "gt")
    videos, dataset = evaluate(read_predictions(args.pred), _load_truth(args.gt))
    if args.out:
        write_report(videos, dataset, args.out)
    for scope in SCOPES:
        print(f"{scope} F1: {_format(dataset[scope].f1)}")
    return 0


def cmd_sweep(args) -> int:
    _require(args, "frames_root", "gt", "out")
    if not args.no_crop:
        _require(args, "landmarks_root")
    grid = check_grid(args.p_start, args.p_end, args.p_step)
    profile = load_profile(args.profile)
    truth = _load_truth(args.gt)
    seqs, failures = load_videos(args.frames_root, args.landmarks_root, profile, not args.no_crop)
    spotter = _spotter(args, profile)
    features = spotter.transform(seqs)
    results = []
    for p in grid:
        _, dataset = evaluate(flatten(spotter.predict_features(features, p)), truth)
        results.append((p, dataset))
    write_sweep(sweep_report(results), args.out)
    return _report_failures(failures)


def cmd_synth(args) -> int:
    _require(args, "spec", "out")
    specs = load_synth_specs(args.spec, args.seed)
    out = Path(args.out)
    (out / "landmarks").mkdir(parents=True, exist_ok=True)
    truth = []
    for spec in specs:
        seq, gt = generate(spec)
        save_frame_sequence(seq, out / "frames" / spec.video_id)
        write_landmarks(full_frame_landmarks(spec.video_id, spec.size), out / "landmarks" / f"{spec.video_id}.csv")
        truth.extend(gt)
    write_annotations(truth, out / "annotations.csv")
    print(f"wrote {len(specs)} video(s) to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mespot", description="MDMD macro/micro-expression spotting")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML file with default option values")
        p.add_argument("--out")

    def pipeline(p):
        p.add_argument("--profile", help="casme2, samm, or a profile JSON/TOML file")
        p.add_argument("--kind", choices=["macro", "micro", "both"])
        p.add_argument("--flow", help="flow backend name")
        p.add_argument("--frames-root", help="directory with one frame directory per video")
        p.add_argument("--landmarks-root", help="directory with <video_id>.csv/.json landmark files")
        p.add_argument("--no-crop", action="store_true", default=None, help="frames are already cropped faces")
        p.add_argument("--jobs", type=int)

    spot = sub.add_parser("spot", help="spot intervals and write a prediction CSV")
    common(spot)
    pipeline(spot)
    spot.add_argument("--p", type=float)
    spot.add_argument("--dump-series", help="directory for per-video frame,dbar,r,flagged CSVs")
    spot.set_defaults(func=cmd_spot)

    ev = sub.add_parser("eval", help="score predictions against ground truth")
    common(ev)
    ev.add_argument("--pred")
    ev.add_argument("--gt")
    ev.set_defaults(func=cmd_eval)

    sweep = sub.add_parser("sweep", help="spot and score over a grid of p values")
    common(sweep)
    pipeline(sweep)
    sweep.add_argument("--gt")
    sweep.add_argument("--p-start", type=float)
    sweep.add_argument("--p-end", type=float)
    sweep.add_argument("--p-step", type=float)
    sweep.set_defaults(func=cmd_sweep)

    synth = sub.add_parser("synth", help="generate a synthetic dataset")
    common(synth)
    synth.add_argument("--spec", help="JSON description of the videos")
    synth.add_argument("--seed", type=int)
    synth.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _resolve(args)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"mespot {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
