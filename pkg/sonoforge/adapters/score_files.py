"""Score CSV files: "pattern_id,true_label,score_<class>,..." one row per test pattern."""

import io
import logging
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from sonoforge.adapters.storage import atomic_write
from sonoforge.domain.entities import EvalReport, ScoreMatrix
from sonoforge.domain.exceptions import NotFoundError, ValidationError

logger = logging.getLogger(__name__)

SCORE_PREFIX = "score_"
ID_COLUMNS = ("pattern_id", "true_label")
# only score cells read these as missing; ids and labels stay literal
MISSING_SCORES = ("", "NA", "N/A", "NaN", "nan", "null")


def parse_score_csv(
    data: Union[bytes, str], source_tag: str = ""
) -> Tuple[ScoreMatrix, Dict[str, str]]:
    """
    Parse score CSV content.

    Args:
        data: CSV text or UTF-8 bytes
        source_tag: Name carried by the resulting matrix

    Returns:
        The score matrix (NaN kept, sanitize before fusing) and the true labels by pattern id
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ValidationError(f"{source_tag or 'score file'}: unreadable CSV ({exc})") from exc

    missing = [column for column in ID_COLUMNS if column not in frame.columns]
    if missing:
        raise ValidationError(
            f"{source_tag or 'score file'}: missing column(s) {', '.join(missing)}"
        )
    score_columns = [c for c in frame.columns if str(c).startswith(SCORE_PREFIX)]
    if not score_columns:
        raise ValidationError(f"{source_tag or 'score file'}: no {SCORE_PREFIX}<class> columns")

    try:
        cells = frame[score_columns].replace(list(MISSING_SCORES), np.nan)
        scores = cells.apply(pd.to_numeric, errors="raise").to_numpy(np.float64)
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"{source_tag or 'score file'}: non-numeric score ({exc})") from exc

    matrix = ScoreMatrix(
        pattern_ids=tuple(frame["pattern_id"]),
        class_names=tuple(c[len(SCORE_PREFIX) :] for c in score_columns),
        scores=scores,
        source_tag=source_tag,
    )
    truth = dict(zip(frame["pattern_id"], frame["true_label"]))
    return matrix, truth


def read_score_file(
    path: Union[str, Path], source_tag: Optional[str] = None
) -> Tuple[ScoreMatrix, Dict[str, str]]:
    score_path = Path(path)
    if not score_path.is_file():
        raise NotFoundError(f"Score file not found: {score_path}")
    return parse_score_csv(score_path.read_bytes(), source_tag or score_path.stem)


def score_csv(m: ScoreMatrix, truth: Mapping[str, str]) -> str:
    frame = pd.DataFrame(m.scores, columns=[f"{SCORE_PREFIX}{c}" for c in m.class_names])
    frame.insert(0, "true_label", [truth.get(p, "") for p in m.pattern_ids])
    frame.insert(0, "pattern_id", list(m.pattern_ids))
    return frame.to_csv(index=False, float_format="%.17g", na_rep="NaN")


def write_score_file(m: ScoreMatrix, truth: Mapping[str, str], path: Union[str, Path]) -> Path:
    return atomic_write(path, score_csv(m, truth).encode("utf-8"))


def report_text(report: EvalReport) -> str:
    lines = [f"Scores: {report.source_tag or '-'}"]
    for fold, accuracy in sorted(report.fold_accuracies.items()):
        lines.append(f"  fold {fold}: {accuracy:.4f}")
    lines.append(f"  mean accuracy: {report.mean_accuracy:.4f}")
    lines.append("  per class:")
    for name, accuracy in report.per_class_accuracy.items():
        lines.append(f"    {name}: {accuracy:.4f}")
    lines.append("  confusion (rows = true, columns = predicted):")
    confusion = pd.DataFrame(report.confusion, index=report.class_names, columns=report.class_names)
    lines.extend(f"    {row}" for row in confusion.to_string().splitlines())
    return "\n".join(lines) + "\n"


def write_report(reports: Mapping[str, EvalReport], out_dir: Union[str, Path]) -> Tuple[Path, Path]:
    """One CSV row per fold and scores source, plus a text summary with confusion matrices."""
    rows = []
    for name, report in reports.items():
        for fold, accuracy in sorted(report.fold_accuracies.items()):
            rows.append({"scores": name, "fold": str(fold), "accuracy": accuracy})
        rows.append({"scores": name, "fold": "mean", "accuracy": report.mean_accuracy})

    frame = pd.DataFrame(rows, columns=["scores", "fold", "accuracy"])
    base = Path(out_dir)
    csv_path = atomic_write(
        base / "report.csv", frame.to_csv(index=False, float_format="%.6f").encode("utf-8")
    )
    text = "".join(report_text(report) for report in reports.values())
    text_path = atomic_write(base / "report.txt", text.encode("utf-8"))
    logger.info(f"Wrote evaluation report for {len(reports)} score source(s) to {base}")
    return csv_path, text_path
