"""Command-line entry point: ``timelayer <subcommand> ...``.

Results go to stdout as one JSON object; logs and errors go to stderr.
Exit codes: 0 success, 1 usage error, 2 data or I/O error. Errors are
printed as a single JSON line ``{"error": <type>, "message": <text>}``.

Summary keys per subcommand:

  transform  input_frames, adjusted_length, cell_size, output_shape, frames_written
  extract    input_frames, cells, cell_size, frames_written
  mask       rows, cols, t, ratio, seed, masked_patches, fraction, outputs[, applied_frames]
  synth      samples, frame_size, frames, labels
  probe      n, arrangement, train_accuracy, test_accuracy, per_class_test_accuracy,
             train_samples, test_samples, final_loss[, saved]
  diff       layers, unmatched_a, unmatched_b, min_similarity, report
  sweep      rows, out
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .core import as_video
from .diagnostics import SweepConfig, compare_checkpoints, sweep, sweep_to_csv
from .io import ArchiveError, FrameError, read_video_dir, write_video_dir
from .masking import apply_mask, generate_tube_mask, mask_to_json, write_mask_pbm
from .probe import ProbeConfig, load_labeled_videos, run_probe
from .synth import generate_direction_dataset, write_dataset
from .transform import AugmentSpec, TimeConfig, extract_cells, time_transform

log = logging.getLogger("timelayer")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _crop(text: str):
    if text.startswith("random:"):
        hw = _int_list(text[len("random:"):])
        if len(hw) != 2:
            raise argparse.ArgumentTypeError("random crop takes random:H,W")
        return ("random", tuple(hw))
    vals = _int_list(text)
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("crop takes T,L,H,W or random:H,W")
    return tuple(vals)


def _rotate(text: str):
    if text == "random":
        return text
    try:
        q = int(text)
    except ValueError:
        q = -1
    if q not in (0, 1, 2, 3):
        raise argparse.ArgumentTypeError("rotate takes 0, 1, 2, 3 or 'random'")
    return q


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="timelayer", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("transform", help="apply the TIME layer to a frame directory")
    t.add_argument("--in", dest="input", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--n", type=int, default=2)
    t.add_argument("--t-star", type=int, default=16)
    t.add_argument("--height", type=int, default=224)
    t.add_argument("--width", type=int, default=224)
    t.add_argument("--arrangement", choices=["spatial", "temporal"], default="spatial")
    t.add_argument("--flip", action="store_true", help="mirror every frame horizontally")
    t.add_argument("--random-flip", action="store_true", help="flip with probability 1/2 (seeded)")
    t.add_argument("--crop", type=_crop, help="T,L,H,W or random:H,W")
    t.add_argument("--rotate", type=_rotate, default=0, help="clockwise quarter turns or 'random'")
    t.add_argument("--scale", type=float, help="uniform scale applied before cropping")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--format", choices=["png", "ppm", "pgm"], default="png")
    t.add_argument("--pattern", help="glob selecting input frames")

    e = sub.add_parser("extract", help="undo the grid layout (exact mode)")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--t-star", type=int, required=True)
    e.add_argument("--arrangement", choices=["spatial", "temporal"], default="spatial",
                   help="arrangement the grid frames were built with")
    e.add_argument("--format", choices=["png", "ppm", "pgm"], default="png")

    m = sub.add_parser("mask", help="generate (and optionally apply) a tube mask")
    m.add_argument("--rows", type=int, default=14)
    m.add_argument("--cols", type=int, default=14)
    m.add_argument("--t", type=int, default=16)
    m.add_argument("--ratio", type=float, default=0.9)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", required=True, help="FILE.json, or a directory for per-step PBMs")
    m.add_argument("--apply", help="frame directory to mask")
    m.add_argument("--apply-out", help="where masked frames go (default: <apply>_masked)")
    m.add_argument("--fill", type=float, default=0.0)
    m.add_argument("--format", choices=["png", "ppm", "pgm"], default="png")

    s = sub.add_parser("synth", help="write the left/right motion dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--samples", type=int, default=2000)
    s.add_argument("--size", type=int, default=64)
    s.add_argument("--frames", type=int, default=32)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--format", choices=["png", "pgm"], default="png")

    def probe_flags(q):
        q.add_argument("--data", required=True)
        q.add_argument("--labels", help="labels CSV (default: <data>/labels.csv)")
        q.add_argument("--t-star", type=int, default=16)
        q.add_argument("--height", type=int, help="TIME output height (default: frame height)")
        q.add_argument("--width", type=int, help="TIME output width (default: frame width)")
        q.add_argument("--probe-size", type=int, default=32)
        q.add_argument("--epochs", type=int, default=ProbeConfig.epochs)
        q.add_argument("--lr", type=float, default=ProbeConfig.lr)
        q.add_argument("--l2", type=float, default=ProbeConfig.l2)
        q.add_argument("--seed", type=int, default=0)

    r = sub.add_parser("probe", help="train and test the single-frame probe")
    probe_flags(r)
    r.add_argument("--n", type=int, default=2)
    r.add_argument("--arrangement", choices=["spatial", "temporal"], default="spatial")
    r.add_argument("--save", help="write the trained probe as an NTA1 archive")

    d = sub.add_parser("diff", help="per-layer cosine similarity of two NTA1 checkpoints")
    d.add_argument("--a", required=True)
    d.add_argument("--b", required=True)
    d.add_argument("--out", required=True)

    w = sub.add_parser("sweep", help="probe accuracy over n values and arrangements")
    probe_flags(w)
    w.add_argument("--n-list", type=_int_list, default=[1, 2, 4])
    w.add_argument("--arrangements", type=_str_list, default=["spatial", "temporal"])
    w.add_argument("--out", required=True)
    return p


def _augment_from_args(args, frame_hw) -> AugmentSpec | None:
    crop = args.crop
    random_crop = isinstance(crop, tuple) and crop and crop[0] == "random"
    random_rotate = args.rotate == "random"
    if not (args.random_flip or random_crop or random_rotate):
        spec = AugmentSpec(horizontal_flip=args.flip, crop=crop,
                           rotation_quarter_turns=args.rotate, scale=args.scale, seed=args.seed)
        return None if spec.is_identity else spec
    drawn = AugmentSpec.sample(args.seed, frame_hw, flip=args.random_flip, rotate=random_rotate,
                               crop_hw=crop[1] if random_crop else None,
                               scale_range=(args.scale, args.scale) if args.scale else None)
    return AugmentSpec(
        horizontal_flip=drawn.horizontal_flip or args.flip,
        crop=drawn.crop if random_crop else crop,
        rotation_quarter_turns=drawn.rotation_quarter_turns if random_rotate else args.rotate,
        scale=args.scale, seed=args.seed)


def cmd_transform(args) -> dict:
    video = read_video_dir(args.input, args.pattern)
    aug = _augment_from_args(args, video.shape[1:3])
    cfg = TimeConfig(n=args.n, t_star=args.t_star, out_h=args.height, out_w=args.width,
                     arrangement=args.arrangement, augmentation=aug)
    log.info("transform: %d frames -> %d x %dx%d (n=%d, %s)", len(video), cfg.t_star,
             cfg.out_h, cfg.out_w, cfg.n, cfg.arrangement.value)
    out = time_transform(video, cfg)
    written = write_video_dir(out, args.out, args.format)
    return {"input_frames": int(len(video)), "adjusted_length": cfg.required_length,
            "cell_size": list(cfg.cell_size), "output_shape": list(out.shape),
            "frames_written": written}


def cmd_extract(args) -> dict:
    video = read_video_dir(args.input)
    _, h, w, _ = video.shape
    cfg = TimeConfig(n=args.n, t_star=args.t_star, out_h=h, out_w=w, arrangement=args.arrangement)
    cells = extract_cells(video, cfg)
    written = write_video_dir(cells, args.out, args.format)
    return {"input_frames": int(len(video)), "cells": int(len(cells)),
            "cell_size": list(cells.shape[1:3]), "frames_written": written}


def cmd_mask(args) -> dict:
    mask = generate_tube_mask(args.rows, args.cols, args.t, args.ratio, args.seed)
    out = Path(args.out)
    if out.suffix.lower() == ".json":
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(mask_to_json(mask, seed=args.seed) + "\n")
        outputs = [str(out)]
    else:
        outputs = [str(p) for p in write_mask_pbm(mask, out)]
    summary = {"rows": args.rows, "cols": args.cols, "t": args.t, "ratio": args.ratio,
               "seed": args.seed, "masked_patches": int(mask.masked.sum()),
               "fraction": mask.fraction, "outputs": outputs}
    if args.apply:
        video = read_video_dir(args.apply)
        masked = apply_mask(video, mask, args.fill)
        dest = args.apply_out or f"{Path(args.apply).as_posix().rstrip('/')}_masked"
        summary["applied_frames"] = write_video_dir(masked, dest, args.format)
    return summary


def cmd_synth(args) -> dict:
    samples = generate_direction_dataset(args.samples, args.size, args.frames, args.seed)
    labels = write_dataset(samples, args.out, args.format)
    return {"samples": len(samples), "frame_size": args.size, "frames": args.frames,
            "labels": str(labels)}


def _probe_config(args) -> ProbeConfig:
    return ProbeConfig(lr=args.lr, epochs=args.epochs, l2=args.l2, seed=args.seed)


def cmd_probe(args) -> dict:
    data = load_labeled_videos(args.data, args.labels)
    _, h, w, _ = as_video(data.videos[0]).shape
    tc = TimeConfig(n=args.n, t_star=args.t_star, out_h=args.height or h, out_w=args.width or w,
                    arrangement=args.arrangement)
    model, summary = run_probe(data, tc, args.probe_size, _probe_config(args))
    if args.save:
        model.save(args.save)
        summary["saved"] = args.save
    return summary


def cmd_diff(args) -> dict:
    report = compare_checkpoints(args.a, args.b)
    report.write_csv(args.out)
    sims = [r[1] for r in report.rows]
    return {"layers": len(report.rows), "unmatched_a": report.unmatched_a,
            "unmatched_b": report.unmatched_b, "min_similarity": min(sims) if sims else None,
            "report": args.out}


def cmd_sweep(args) -> dict:
    cfg = SweepConfig(t_star=args.t_star, out_h=args.height, out_w=args.width,
                      probe_size=args.probe_size, probe=_probe_config(args))
    rows = sweep(args.data, args.n_list, args.arrangements, cfg, labels_csv=args.labels)
    Path(args.out).write_text(sweep_to_csv(rows))
    return {"rows": rows, "out": args.out}


COMMANDS = {
    "transform": cmd_transform, "extract": cmd_extract, "mask": cmd_mask, "synth": cmd_synth,
    "probe": cmd_probe, "diff": cmd_diff, "sweep": cmd_sweep,
}


def _fail(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": " ".join(str(message).split())}), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _fail("usage", exc)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        summary = COMMANDS[args.command](args)
    except (FrameError, ArchiveError, ValueError, TypeError, KeyError, OSError) as exc:
        _fail(type(exc).__name__, exc)
        return 2
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
