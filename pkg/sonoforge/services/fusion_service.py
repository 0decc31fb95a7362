"""Sum-rule fusion of classifier scores, fold-wise evaluation and a prototype baseline."""

import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix

from sonoforge.adapters.image_io import resize_image
from sonoforge.domain.entities import Centroids, EvalReport, FoldSplit, GrayImage, ScoreMatrix
from sonoforge.domain.exceptions import (
    DegenerateScoresError,
    EmptyClassError,
    MissingPatternError,
    ShapeMismatchError,
    ValidationError,
)

logger = logging.getLogger(__name__)

ENSEMBLES: Dict[str, Optional[Tuple[str, ...]]] = {
    "fusion_local": None,
    "fusion_short": ("sgn", "ssa", "sspa"),
    "fusion_short_super": ("sgn", "ssa", "sspa", "ssia", "susa"),
    "fusion_super": ("sgn", "ssia", "susa", "tsm"),
    "fusion_all": ("sgn", "ssa", "ssia", "tsm", "sspa", "susa"),
}


def sanitize(m: ScoreMatrix) -> ScoreMatrix:
    """NaN and +-Inf become 0."""
    return m.with_scores(np.nan_to_num(m.scores, nan=0.0, posinf=0.0, neginf=0.0))


def zero_degenerate(m: ScoreMatrix) -> ScoreMatrix:
    """A classifier that gives every pattern the same scores carries no information."""
    scores = m.scores
    if scores.shape[0] > 1 and np.all(scores == scores[0]) and np.any(scores != 0):
        logger.warning(f"Classifier {m.source_tag or '<unnamed>'} scores all patterns alike")
        return m.with_scores(np.zeros_like(scores))
    return m


def normalize(m: ScoreMatrix) -> ScoreMatrix:
    """Mean 0 and population std 1 over every entry of the matrix."""
    scores = m.scores
    if scores.size < 2:
        raise DegenerateScoresError("Normalization needs at least two scores")
    std = float(np.std(scores))
    if std == 0.0:
        raise DegenerateScoresError(
            f"Scores of {m.source_tag or 'classifier'} are constant, cannot normalize"
        )
    return m.with_scores((scores - np.mean(scores)) / std)


def _check_aligned(members: Sequence[ScoreMatrix]) -> None:
    first = members[0]
    for member in members[1:]:
        if member.pattern_ids != first.pattern_ids:
            raise ShapeMismatchError(
                f"Member {member.source_tag or '?'} lists different pattern ids than "
                f"{first.source_tag or '?'}"
            )
        if member.class_names != first.class_names:
            raise ShapeMismatchError(
                f"Member {member.source_tag or '?'} has classes {member.class_names}, "
                f"expected {first.class_names}"
            )


def sum_rule(members: Sequence[ScoreMatrix], source_tag: str = "sum_rule") -> ScoreMatrix:
    """
    Entrywise mean of the members' scores.

    Per entry the values are offset by their minimum and summed in sorted
    order, so the result does not depend on member order and K equal
    members give back that member exactly.
    """
    if not members:
        raise ValidationError("Sum rule needs at least one member")
    _check_aligned(members)

    stacked = np.stack([member.scores for member in members])
    lowest = stacked.min(axis=0)
    offsets = np.sort(stacked - lowest, axis=0)
    mean = lowest + offsets.sum(axis=0) / len(members)
    return members[0].with_scores(mean, source_tag=source_tag)


def align(m: ScoreMatrix, pattern_ids: Sequence[str]) -> ScoreMatrix:
    """Reorder rows to `pattern_ids`; every id must be present."""
    known = set(m.pattern_ids)
    missing = [p for p in pattern_ids if p not in known]
    if missing:
        raise MissingPatternError(
            f"{m.source_tag or 'Score matrix'} has no scores for: {', '.join(missing[:5])}"
        )
    if tuple(pattern_ids) == m.pattern_ids:
        return m
    return ScoreMatrix(
        pattern_ids=tuple(pattern_ids),
        class_names=m.class_names,
        scores=m.scores[m.rows_for(pattern_ids)],
        source_tag=m.source_tag,
    )


def predict(m: ScoreMatrix) -> List[str]:
    """Argmax per pattern; np.argmax keeps the lowest class index on ties."""
    return [m.class_names[i] for i in np.argmax(m.scores, axis=1)]


def fuse(members: Sequence[ScoreMatrix], normalized: bool = False) -> ScoreMatrix:
    """Sanitize, drop degenerate classifiers, optionally normalize, then apply the sum rule."""
    if not members:
        raise ValidationError("Fusion needs at least one score matrix")
    reference = members[0].pattern_ids
    prepared = []
    for member in members:
        member = zero_degenerate(sanitize(align(member, reference)))
        if normalized and np.any(member.scores):
            member = normalize(member)
        prepared.append(member)
    return sum_rule(prepared, source_tag="fused")


def fuse_heterogeneous(groups: Sequence[Sequence[ScoreMatrix]]) -> ScoreMatrix:
    """Sum rule inside each ensemble, normalize each ensemble, sum rule across them."""
    if not groups:
        raise ValidationError("Heterogeneous fusion needs at least one group")
    ensembles = [normalize(fuse(group)) for group in groups]
    return sum_rule(ensembles, source_tag="fused_heterogeneous")


def select_members(
    members_by_protocol: Mapping[str, ScoreMatrix], ensemble: str
) -> List[ScoreMatrix]:
    if ensemble not in ENSEMBLES:
        raise ValidationError(f"Unknown ensemble: {ensemble}")
    wanted = ENSEMBLES[ensemble]
    if wanted is None:
        return list(members_by_protocol.values())

    missing = [name for name in wanted if name not in members_by_protocol]
    if missing:
        raise ValidationError(f"Ensemble {ensemble} needs scores for: {', '.join(missing)}")
    return [members_by_protocol[name] for name in wanted]


def evaluate(
    splits: Sequence[FoldSplit], m: ScoreMatrix, truth: Mapping[str, str]
) -> EvalReport:
    """Accuracy per fold on each fold's test ids, their mean, per-class accuracy and confusion."""
    if not splits:
        raise ValidationError("Evaluation needs at least one fold")

    predictions = dict(zip(m.pattern_ids, predict(m)))
    fold_accuracies: Dict[int, float] = {}
    y_true: List[str] = []
    y_pred: List[str] = []
    for split in splits:
        missing = [p for p in split.test_ids if p not in predictions or p not in truth]
        if missing:
            raise MissingPatternError(
                f"Fold {split.fold_id}: no scores or label for {', '.join(missing[:5])}"
            )
        if not split.test_ids:
            raise ValidationError(f"Fold {split.fold_id} has no test patterns")

        fold_true = [truth[p] for p in split.test_ids]
        fold_pred = [predictions[p] for p in split.test_ids]
        correct = sum(t == p for t, p in zip(fold_true, fold_pred))
        fold_accuracies[split.fold_id] = correct / len(split.test_ids)
        y_true.extend(fold_true)
        y_pred.extend(fold_pred)

    unknown = sorted(set(y_true) - set(m.class_names))
    if unknown:
        raise ValidationError(f"Labels not among score classes: {', '.join(unknown)}")

    labels = list(m.class_names)
    confusion = confusion_matrix(y_true, y_pred, labels=labels)
    support = confusion.sum(axis=1)
    per_class = {
        name: float(confusion[i, i] / support[i]) if support[i] else 0.0
        for i, name in enumerate(labels)
    }

    report = EvalReport(
        fold_accuracies=fold_accuracies,
        mean_accuracy=float(np.mean(list(fold_accuracies.values()))),
        per_class_accuracy=per_class,
        confusion=confusion,
        class_names=m.class_names,
        source_tag=m.source_tag,
    )
    logger.info(f"Evaluated {m.source_tag or 'scores'}: mean accuracy {report.mean_accuracy:.4f}")
    return report


# --- Prototype classifier ---------------------------------------------------------


def _vectorize(img: GrayImage, down: int) -> np.ndarray:
    return resize_image(img, down, down).pixels.astype(np.float64).ravel() / 255.0


def prototype_train(
    images: Sequence[GrayImage],
    labels: Sequence[str],
    down: int = 32,
    class_names: Optional[Sequence[str]] = None,
) -> Centroids:
    """Per-class mean of the images shrunk to down x down and scaled to [0, 1]."""
    if len(images) != len(labels):
        raise ShapeMismatchError(f"{len(images)} images but {len(labels)} labels")
    if down < 1:
        raise ValidationError(f"Prototype side must be positive, got {down}")
    names = tuple(class_names) if class_names is not None else tuple(sorted(set(labels)))
    if not names:
        raise EmptyClassError("No classes to train on")

    vectors = []
    counts = []
    for name in names:
        members = [_vectorize(img, down) for img, label in zip(images, labels) if label == name]
        if not members:
            raise EmptyClassError(f"Class {name} has no training images")
        vectors.append(np.mean(members, axis=0))
        counts.append(len(members))

    return Centroids(class_names=names, vectors=np.stack(vectors), down=down, counts=tuple(counts))


def prototype_score(image: GrayImage, centroids: Centroids) -> np.ndarray:
    """Negated L2 distance to each centroid; 0 is the best possible score."""
    vector = _vectorize(image, centroids.down)
    return -np.linalg.norm(centroids.vectors - vector, axis=1)


def prototype_scores(
    images: Mapping[str, GrayImage], centroids: Centroids, source_tag: str = ""
) -> ScoreMatrix:
    pattern_ids = tuple(images)
    if pattern_ids:
        scores = np.stack([prototype_score(images[p], centroids) for p in pattern_ids])
    else:
        scores = np.zeros((0, len(centroids.class_names)))
    return ScoreMatrix(
        pattern_ids=pattern_ids,
        class_names=centroids.class_names,
        scores=scores,
        source_tag=source_tag,
    )


def accuracy(m: ScoreMatrix, truth: Mapping[str, str]) -> float:
    """Share of labelled patterns whose argmax class matches the label."""
    labelled = [(p, c) for p, c in zip(m.pattern_ids, predict(m)) if truth.get(p)]
    if not labelled:
        raise ValidationError(f"{m.source_tag or 'Scores'}: no labelled patterns to score")
    return sum(truth[p] == c for p, c in labelled) / len(labelled)
