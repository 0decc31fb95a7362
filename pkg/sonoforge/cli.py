"""Command line entry point: ``sonoforge <command> ...``."""

import argparse
import json
import logging
import sys
from itertools import product
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pydantic

from sonoforge import __version__
from sonoforge.adapters import image_io, score_files, wav_io
from sonoforge.adapters.manifest import manifest_splits, parse_manifest
from sonoforge.adapters.storage import atomic_write
from sonoforge.config import settings
from sonoforge.domain.exceptions import NotFoundError, SonoforgeException, ValidationError
from sonoforge.domain.models import TSM_ALGORITHMS, TSM_FACTOR_PRESETS, PipelineConfig
from sonoforge.log_config import configure_logging
from sonoforge.services import fusion_service, pipeline_service, plot_service, protocol_service
from sonoforge.services.audio_service import resample
from sonoforge.services.repr_service import clip_to_image
from sonoforge.services.rng_service import derive_seed

logger = logging.getLogger(__name__)

PROTOCOLS = tuple(protocol_service.PROTOCOL_SPECS)
REPRESENTATIONS = ("dgt", "mel", "gamma", "cochlea")
IMAGE_SUFFIXES = (".png", ".pgm")
AUGMENT_SUFFIXES = (".wav",) + IMAGE_SUFFIXES


def load_config(path: Optional[str], overrides: Dict[str, Any]) -> PipelineConfig:
    """JSON run configuration with command line values layered on top."""
    data: Dict[str, Any] = {}
    if path:
        config_path = Path(path)
        if not config_path.is_file():
            raise NotFoundError(f"Config file not found: {config_path}")
        try:
            data = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{config_path}: invalid JSON ({exc})") from exc

    representation = overrides.pop("representation_name", None)
    if representation:
        data["representation"] = {**data.get("representation", {}), "name": representation}
    factors = overrides.pop("tsm_factors", None)
    if factors:
        presets = data.setdefault("presets", {})
        presets["tsm"] = {**presets.get("tsm", {}), "factors": factors}
    alphas = overrides.pop("tsm_alphas", None)
    if alphas:
        presets = data.setdefault("presets", {})
        presets["tsm"] = {**presets.get("tsm", {}), "alphas": list(alphas)}
    data.setdefault("workers", settings.WORKERS)
    data.update({key: value for key, value in overrides.items() if value is not None})

    try:
        return PipelineConfig.model_validate(data)
    except pydantic.ValidationError as exc:
        raise ValidationError(f"Invalid configuration: {exc}") from exc


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    return load_config(
        getattr(args, "config", None),
        {
            "representation_name": getattr(args, "repr", None),
            "tsm_factors": getattr(args, "tsm_factors", None),
            "tsm_alphas": getattr(args, "alphas", None),
            "protocols": tuple(args.protocol) if getattr(args, "protocol", None) else None,
            "seed": getattr(args, "seed", None),
            "out_dir": getattr(args, "out", None),
            "export_format": getattr(args, "format", None),
            "workers": getattr(args, "workers", None),
            "skip_errors": True if getattr(args, "skip_errors", False) else None,
            "previews": True if getattr(args, "previews", False) else None,
            "working_rate": getattr(args, "rate", None),
        },
    )


def _load_clip(path: str, rate: int):
    return resample(wav_io.load_wav(path), rate)


def cmd_repr(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    clip = _load_clip(args.input, config.working_rate)
    image = clip_to_image(clip, config.representation)
    out = Path(args.output or Path(args.input).with_suffix(f".{config.export_format}").name)
    image_io.export_image(image, out, config.export_format)
    print(f"{out} ({image.shape[0]}x{image.shape[1]})")
    return 0


def parse_alphas(text: str) -> Tuple[float, ...]:
    """Comma-separated stretch factors such as "0.8,1.5"."""
    try:
        alphas = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"Not a list of numbers: {text!r}") from exc
    if not alphas or any(alpha <= 0 for alpha in alphas):
        raise argparse.ArgumentTypeError(f"Stretch factors must be positive: {text!r}")
    return alphas


def copy_names(protocol: str, stem: str, count: int, config: PipelineConfig) -> List[str]:
    """File stems for the copies of one input, in the order the protocol returns them."""
    if protocol == "tsm":
        grid = product(TSM_ALGORITHMS, config.presets.tsm.resolved_alphas())
        return [f"{stem}_tsm_{algorithm}_{alpha:g}" for algorithm, alpha in grid]
    return [f"{stem}_{protocol}_{copy:02d}" for copy in range(1, count + 1)]


def _augment_inputs(path: Path) -> List[Path]:
    if not path.is_dir():
        return [path]
    inputs = sorted(p for p in path.iterdir() if p.suffix.lower() in AUGMENT_SUFFIXES)
    if not inputs:
        raise NotFoundError(f"No WAV, PNG or PGM files in {path}")
    return inputs


def _augment_one(path: Path, protocol: str, config: PipelineConfig, fmt: str) -> int:
    out_dir = Path(config.out_dir)
    stem = path.stem
    rng = derive_seed(config.seed, stem, 0, PROTOCOLS.index(protocol))
    is_image = path.suffix.lower() in IMAGE_SUFFIXES

    if protocol_service.protocol_domain(protocol) == "signal":
        if is_image:
            raise ValidationError(f"Protocol {protocol} needs audio, got image {path}")
        clip = _load_clip(str(path), config.working_rate)
        clips = protocol_service.augment_clip(protocol, clip, rng, config.presets)
        for name, augmented in zip(copy_names(protocol, stem, len(clips), config), clips):
            wav_io.save_wav(augmented, out_dir / f"{name}.wav")
        return len(clips)

    if is_image:
        image = image_io.import_image(path)
    else:
        image = clip_to_image(_load_clip(str(path), config.working_rate), config.representation)
    copies = protocol_service.augment_image(protocol, image, rng, config.presets)
    for name, augmented in zip(copy_names(protocol, stem, len(copies), config), copies):
        image_io.export_image(augmented, out_dir / f"{name}.{fmt}", fmt)
    return len(copies)


def cmd_augment(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    fmt = args.format or "png"
    for path in _augment_inputs(Path(args.input)):
        for protocol in config.protocols:
            count = _augment_one(path, protocol, config, fmt)
            print(f"{count} {protocol} copies of {path.stem} written to {config.out_dir}")
    return 0


def cmd_fuse(args: argparse.Namespace) -> int:
    members = []
    truth: Dict[str, str] = {}
    for path in args.scores:
        matrix, labels = score_files.read_score_file(path)
        members.append(matrix)
        for pattern_id, label in labels.items():
            truth.setdefault(pattern_id, label)

    if args.ensemble:
        by_tag = {m.source_tag: m for m in members}
        members = fusion_service.select_members(by_tag, args.ensemble)

    fused = fusion_service.fuse(members, normalized=args.normalize)
    if args.out:
        score_files.write_score_file(fused, truth, args.out)
    for member in members:
        accuracy = fusion_service.accuracy(fusion_service.sanitize(member), truth)
        print(f"{member.source_tag}: {accuracy:.4f}")
    print(f"fused ({len(members)} members): {fusion_service.accuracy(fused, truth):.4f}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    manifest = parse_manifest(args.manifest)
    protocols = args.protocol or ["noaug"]
    reports = pipeline_service.evaluate_run(
        args.out or settings.OUTPUT_DIR, manifest, protocols, args.down, args.format or "pgm"
    )
    for name, report in reports.items():
        folds = ", ".join(f"{acc:.4f}" for _, acc in sorted(report.fold_accuracies.items()))
        print(f"{name}: mean {report.mean_accuracy:.4f} (folds {folds})")
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    manifest = parse_manifest(args.manifest)
    summary = pipeline_service.run_pipeline(config, manifest)
    print(
        f"{summary.files_written} files written to {config.out_dir} "
        f"({len(manifest_splits(manifest))} folds, {len(summary.failures)} failure(s))"
    )
    for failure in summary.failures:
        print(f"skipped: {failure}", file=sys.stderr)
    return 0


def cmd_preview(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    clip = _load_clip(args.input, config.working_rate)
    out = Path(args.output or f"{Path(args.input).stem}_{config.representation.name}.png")
    atomic_write(out, plot_service.preview_png(clip, config.representation, Path(args.input).stem))
    print(out)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("sonoforge.main:app", host=args.host, port=args.port, log_config=None)
    return 0


def _add_run_options(parser: argparse.ArgumentParser, protocol: bool = True) -> None:
    parser.add_argument("--config", help="JSON run configuration (schema_version 1)")
    parser.add_argument("--repr", choices=REPRESENTATIONS, help="Time-frequency representation")
    parser.add_argument("--format", choices=("png", "pgm"), help="Image export format")
    parser.add_argument("--rate", type=int, help="Working sample rate in Hz")
    parser.add_argument("--seed", type=int, help="Global seed (unsigned 64-bit)")
    parser.add_argument("--out", help="Output directory")
    if protocol:
        parser.add_argument(
            "--protocol", action="append", choices=PROTOCOLS, help="Protocol, repeatable"
        )
        parser.add_argument(
            "--tsm-factors", choices=sorted(TSM_FACTOR_PRESETS), help="TSM stretch factor preset"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sonoforge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Logging level")
    commands = parser.add_subparsers(dest="command", required=True)

    repr_cmd = commands.add_parser("repr", help="Convert a WAV file into a grayscale image")
    repr_cmd.add_argument("input")
    repr_cmd.add_argument("-o", "--output", help="Image path")
    _add_run_options(repr_cmd, protocol=False)
    repr_cmd.set_defaults(handler=cmd_repr)

    augment_cmd = commands.add_parser("augment", help="Write the copies of each --protocol")
    augment_cmd.add_argument(
        "input", help="WAV, PNG or PGM file, or a directory of them (images: spectrogram protocols)"
    )
    _add_run_options(augment_cmd)
    augment_cmd.add_argument(
        "--alphas", type=parse_alphas, help="TSM stretch factors, e.g. 0.8,1.5"
    )
    augment_cmd.set_defaults(handler=cmd_augment)

    fuse_cmd = commands.add_parser("fuse", help="Sum-rule fusion of score CSV files")
    fuse_cmd.add_argument("scores", nargs="+")
    fuse_cmd.add_argument("--normalize", action="store_true", help="Mean 0 / std 1 per member")
    fuse_cmd.add_argument("--ensemble", choices=sorted(fusion_service.ENSEMBLES))
    fuse_cmd.add_argument("--out", help="Fused score CSV")
    fuse_cmd.set_defaults(handler=cmd_fuse)

    eval_cmd = commands.add_parser("eval", help="Prototype classifier and fusion on a run")
    eval_cmd.add_argument("--manifest", required=True)
    eval_cmd.add_argument("--out", help="Run directory")
    eval_cmd.add_argument("--protocol", action="append", choices=PROTOCOLS)
    eval_cmd.add_argument("--format", choices=("png", "pgm"))
    eval_cmd.add_argument("--down", type=int, default=32, help="Prototype side length")
    eval_cmd.set_defaults(handler=cmd_eval)

    pipeline_cmd = commands.add_parser("pipeline", help="Convert and augment a whole manifest")
    pipeline_cmd.add_argument("--manifest", required=True)
    _add_run_options(pipeline_cmd)
    pipeline_cmd.add_argument("--workers", type=int, help="Worker processes (SONOFORGE_WORKERS)")
    pipeline_cmd.add_argument("--skip-errors", action="store_true")
    pipeline_cmd.add_argument("--previews", action="store_true", help="Also write PNG plots")
    pipeline_cmd.set_defaults(handler=cmd_pipeline)

    preview_cmd = commands.add_parser("preview", help="Plot a representation to PNG")
    preview_cmd.add_argument("input")
    preview_cmd.add_argument("-o", "--output", help="PNG path")
    _add_run_options(preview_cmd, protocol=False)
    preview_cmd.set_defaults(handler=cmd_preview)

    serve_cmd = commands.add_parser("serve", help="Run the HTTP API")
    serve_cmd.add_argument("--host", default="127.0.0.1")
    serve_cmd.add_argument("--port", type=int, default=8000)
    serve_cmd.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level.upper())

    try:
        return args.handler(args)
    except SonoforgeException as exc:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
