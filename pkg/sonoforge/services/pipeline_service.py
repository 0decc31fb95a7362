"""
Manifest-driven batch runs.

Layout written under config.out_dir:

    {fold}/train/{protocol}/{pattern_id}_{copy:02}.{ext}   copy 0 is the original
    {fold}/test/noaug/{pattern_id}_00.{ext}
    run_summary.json

Training patterns are augmented, test patterns are only converted. A pattern
is processed once and its images are written to every fold that trains on it.
"""

import logging
import uuid
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from sonoforge.adapters import image_io, score_files
from sonoforge.adapters.manifest import manifest_splits
from sonoforge.adapters.storage import atomic_write, safe_child
from sonoforge.adapters.wav_io import load_wav
from sonoforge.domain.entities import (
    AudioClip,
    EvalReport,
    GrayImage,
    Manifest,
    ManifestRow,
    ScoreMatrix,
)
from sonoforge.domain.exceptions import NotFoundError, PipelineError, SonoforgeException
from sonoforge.domain.models import PipelineConfig, ProtocolCounts, RunSummary
from sonoforge.services import fusion_service, plot_service, protocol_service
from sonoforge.services.audio_service import resample
from sonoforge.services.repr_service import clip_to_image
from sonoforge.services.rng_service import derive_seed

logger = logging.getLogger(__name__)

SUMMARY_FILE = "run_summary.json"
TEST_PROTOCOL = "noaug"
PROTOCOL_ORDER = tuple(protocol_service.PROTOCOL_SPECS)


@dataclass
class PatternResult:
    pattern_id: str
    original: bytes = b""
    # protocol -> encoded augmented copies, original excluded
    copies: Dict[str, List[bytes]] = field(default_factory=dict)
    preview: Optional[bytes] = None
    error: Optional[str] = None


def image_name(pattern_id: str, copy: int, fmt: str) -> str:
    return f"{pattern_id}_{copy:02d}.{fmt}"


def pattern_of(path: Path) -> str:
    """Pattern id from an output file name: strip the _{copy} suffix."""
    return path.stem.rsplit("_", 1)[0]


def augment_pattern(
    clip: AudioClip, pattern_id: str, config: PipelineConfig, train: bool
) -> Tuple[GrayImage, Dict[str, List[GrayImage]]]:
    """Original image plus, for a training pattern, the augmented images of every protocol."""
    original = clip_to_image(clip, config.representation)
    copies: Dict[str, List[GrayImage]] = {}
    if not train:
        return original, copies

    for protocol in config.protocols:
        rng = derive_seed(config.seed, pattern_id, 0, PROTOCOL_ORDER.index(protocol))
        domain = protocol_service.protocol_domain(protocol)
        if domain == "signal":
            clips = protocol_service.augment_clip(protocol, clip, rng, config.presets)
            copies[protocol] = [clip_to_image(c, config.representation) for c in clips]
        elif domain == "spectrogram":
            copies[protocol] = protocol_service.augment_image(
                protocol, original, rng, config.presets
            )
        else:
            copies[protocol] = []
    return original, copies


def _process_pattern(row: ManifestRow, config: PipelineConfig, train: bool) -> PatternResult:
    """Worker entry point; never raises domain errors, reports them instead."""
    result = PatternResult(pattern_id=row.pattern_id)
    try:
        clip = resample(load_wav(row.wav_path), config.working_rate)
        original, copies = augment_pattern(clip, row.pattern_id, config, train)
        fmt = config.export_format
        result.original = image_io.encode_image(original, fmt)
        result.copies = {
            protocol: [image_io.encode_image(img, fmt) for img in images]
            for protocol, images in copies.items()
        }
        if config.previews:
            result.preview = plot_service.preview_png(clip, config.representation, row.pattern_id)
    except SonoforgeException as exc:
        result.error = f"{row.pattern_id} ({row.wav_path}): {exc}"
    return result


def _run_all(
    rows: Sequence[ManifestRow], config: PipelineConfig, train_flags: Sequence[bool], workers: int
) -> List[PatternResult]:
    configs = [config] * len(rows)
    if workers <= 1:
        return list(map(_process_pattern, rows, configs, train_flags))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_process_pattern, rows, configs, train_flags))


def _write_pattern(
    result: PatternResult,
    row: ManifestRow,
    train_folds: Sequence[int],
    out_dir: Path,
    fmt: str,
) -> int:
    written = 0
    test_path = safe_child(
        out_dir, str(row.fold), "test", TEST_PROTOCOL, image_name(row.pattern_id, 0, fmt)
    )
    atomic_write(test_path, result.original)
    written += 1

    for fold in train_folds:
        for protocol, copies in result.copies.items():
            for copy, data in enumerate([result.original] + copies):
                path = safe_child(
                    out_dir, str(fold), "train", protocol, image_name(row.pattern_id, copy, fmt)
                )
                atomic_write(path, data)
                written += 1

    if result.preview is not None:
        atomic_write(safe_child(out_dir, "previews", f"{row.pattern_id}.png"), result.preview)
    return written


def run_pipeline(
    config: PipelineConfig, manifest: Manifest, run_id: Optional[str] = None
) -> RunSummary:
    """Convert and augment every pattern; failures raise PipelineError unless skip_errors."""
    run_id = run_id or uuid.uuid4().hex[:12]
    log_extra = {"run_id": run_id}
    out_dir = Path(config.out_dir)
    splits = manifest_splits(manifest)

    train_sets = [(s.fold_id, set(s.train_ids)) for s in splits]
    train_folds = {
        row.pattern_id: [fold for fold, ids in train_sets if row.pattern_id in ids]
        for row in manifest.rows
    }
    train_flags = [bool(train_folds[row.pattern_id]) for row in manifest.rows]

    logger.info(
        f"Pipeline start: {len(manifest)} patterns, {len(splits)} folds, "
        f"protocols {', '.join(config.protocols)}, workers {config.workers}",
        extra=log_extra,
    )
    results = _run_all(manifest.rows, config, train_flags, config.workers)

    failures: List[str] = []
    failed_ids = set()
    files_written = 0
    for row, result in zip(manifest.rows, results):
        if result.error is not None:
            logger.error(f"Pattern failed: {result.error}", extra=log_extra)
            failures.append(result.error)
            failed_ids.add(row.pattern_id)
            continue
        try:
            files_written += _write_pattern(
                result, row, train_folds[row.pattern_id], out_dir, config.export_format
            )
        except SonoforgeException as exc:
            logger.error(f"Writing {row.pattern_id} failed: {exc}", extra=log_extra)
            failures.append(f"{row.pattern_id}: {exc}")
            failed_ids.add(row.pattern_id)

    folds: Dict[str, Dict[str, ProtocolCounts]] = {}
    for split in splits:
        n_train = sum(1 for p in split.train_ids if p not in failed_ids)
        n_test = sum(1 for p in split.test_ids if p not in failed_ids)
        folds[str(split.fold_id)] = {
            protocol: ProtocolCounts(
                train=n_train * (1 + protocol_service.copies_for(protocol, config.presets)),
                test=n_test,
            )
            for protocol in config.protocols
        }

    summary = RunSummary(
        seed=config.seed,
        representation=config.representation.name,
        export_format=config.export_format,
        protocols=list(config.protocols),
        folds=folds,
        files_written=files_written,
        failures=failures,
    )
    atomic_write(out_dir / SUMMARY_FILE, summary.model_dump_json(indent=2).encode("utf-8"))
    logger.info(
        f"Pipeline done: {files_written} files written, {len(failures)} failure(s)",
        extra=log_extra,
    )

    if failures and not config.skip_errors:
        raise PipelineError(failures)
    if failures:
        logger.warning(f"Skipped {len(failures)} failed pattern(s)", extra=log_extra)
    return summary


# --- Evaluation of a written run -------------------------------------------------------


def _load_images(directory: Path, fmt: str) -> List[Tuple[str, GrayImage]]:
    if not directory.is_dir():
        raise NotFoundError(f"No images at {directory}; was the pipeline run?")
    return [
        (pattern_of(path), image_io.import_image(path))
        for path in sorted(directory.glob(f"*.{fmt}"))
    ]


def protocol_scores(
    out_dir: Union[str, Path],
    manifest: Manifest,
    protocol: str,
    down: int = 32,
    fmt: str = "pgm",
) -> ScoreMatrix:
    """Prototype classifier trained per fold on the protocol's train images, scored on test."""
    base = Path(out_dir)
    labels = manifest.labels
    class_names = sorted(set(labels.values()))
    scores = []
    for split in manifest_splits(manifest):
        train = _load_images(base / str(split.fold_id) / "train" / protocol, fmt)
        centroids = fusion_service.prototype_train(
            [img for _, img in train], [labels[p] for p, _ in train], down, class_names
        )
        tested = dict(_load_images(base / str(split.fold_id) / "test" / TEST_PROTOCOL, fmt))
        fold_scores = fusion_service.prototype_scores(tested, centroids, source_tag=protocol)
        scores.append(fold_scores)

    pattern_ids = tuple(p for m in scores for p in m.pattern_ids)
    return ScoreMatrix(
        pattern_ids=pattern_ids,
        class_names=tuple(class_names),
        scores=np.vstack([m.scores for m in scores]),
        source_tag=protocol,
    )


def evaluate_run(
    out_dir: Union[str, Path],
    manifest: Manifest,
    protocols: Sequence[str],
    down: int = 32,
    fmt: str = "pgm",
) -> Dict[str, EvalReport]:
    """
    Score, evaluate and fuse a written run.

    Writes eval/scores_{protocol}.csv, eval/report.csv, eval/report.txt and one
    confusion plot per score source; returns the reports keyed by source.
    """
    base = Path(out_dir)
    eval_dir = base / "eval"
    splits = manifest_splits(manifest)
    truth = manifest.labels

    members: Dict[str, ScoreMatrix] = {}
    reports: Dict[str, EvalReport] = {}
    for protocol in protocols:
        matrix = protocol_scores(base, manifest, protocol, down, fmt)
        score_files.write_score_file(matrix, truth, eval_dir / f"scores_{protocol}.csv")
        members[protocol] = matrix
        reports[protocol] = fusion_service.evaluate(splits, matrix, truth)

    if len(members) > 1:
        fused = fusion_service.fuse(list(members.values()))
        score_files.write_score_file(fused, truth, eval_dir / "scores_fused.csv")
        reports["fused"] = fusion_service.evaluate(splits, fused, truth)

    score_files.write_report(reports, eval_dir)
    for name, report in reports.items():
        atomic_write(eval_dir / f"confusion_{name}.png", plot_service.confusion_png(report))
    return reports
