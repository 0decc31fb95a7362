import io
import logging
from pathlib import Path
from typing import List, Optional, Union

import pandas as pd

from sonoforge.domain.entities import FoldSplit, Manifest, ManifestRow
from sonoforge.domain.exceptions import DuplicateError, ManifestError, NotFoundError

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("pattern_id", "wav_path", "label", "fold")
# header is line 1
FIRST_DATA_LINE = 2


def parse_manifest_text(text: str, base_dir: Optional[Path] = None) -> Manifest:
    """
    Parse manifest CSV content.

    Args:
        text: CSV with header "pattern_id,wav_path,label,fold"
        base_dir: Directory relative wav paths resolve against

    Returns:
        Validated manifest with contiguous folds 1..K
    """
    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ManifestError(f"Unreadable manifest CSV: {exc}") from exc

    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [column for column in REQUIRED_COLUMNS if column not in frame.columns]
    if missing:
        raise ManifestError(f"Missing column(s): {', '.join(missing)}")
    if frame.empty:
        raise ManifestError("Manifest has no rows")

    rows: List[ManifestRow] = []
    seen = set()
    for index, record in enumerate(frame[list(REQUIRED_COLUMNS)].itertuples(index=False)):
        line = index + FIRST_DATA_LINE
        pattern_id = record.pattern_id.strip()
        if not pattern_id:
            raise ManifestError("Empty pattern_id", row=line)
        if pattern_id in seen:
            raise DuplicateError(f"row {line}: duplicate pattern_id {pattern_id}")
        seen.add(pattern_id)

        try:
            fold = int(record.fold.strip())
        except ValueError:
            raise ManifestError(f"Fold must be an integer, got {record.fold!r}", row=line) from None

        wav_path = Path(record.wav_path.strip())
        if not wav_path.is_absolute() and base_dir is not None:
            wav_path = base_dir / wav_path
        label = record.label.strip()
        rows.append(ManifestRow(pattern_id=pattern_id, wav_path=wav_path, label=label, fold=fold))

    folds = sorted({row.fold for row in rows})
    if folds != list(range(1, len(folds) + 1)):
        raise ManifestError(f"Folds must form a contiguous range 1..K, got {folds}")

    logger.info(f"Parsed manifest with {len(rows)} rows and {len(folds)} folds")
    return Manifest(rows=tuple(rows))


def parse_manifest(path: Union[str, Path]) -> Manifest:
    manifest_path = Path(path)
    if not manifest_path.is_file():
        raise NotFoundError(f"Manifest not found: {manifest_path}")
    manifest = parse_manifest_text(
        manifest_path.read_text(encoding="utf-8"), base_dir=manifest_path.parent
    )
    return Manifest(rows=manifest.rows, source=manifest_path)


def manifest_splits(manifest: Manifest) -> List[FoldSplit]:
    """Fold k tests on the rows of fold k and trains on all other rows."""
    splits = []
    for fold in manifest.folds:
        splits.append(
            FoldSplit(
                fold_id=fold,
                train_ids=tuple(r.pattern_id for r in manifest.rows if r.fold != fold),
                test_ids=tuple(r.pattern_id for r in manifest.rows if r.fold == fold),
            )
        )
    return splits
