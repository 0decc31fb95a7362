"""PNG previews of representations and confusion matrices."""

import io
import logging

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from sonoforge.domain.entities import AudioClip, EvalReport  # noqa: E402
from sonoforge.domain.models import RepresentationConfig  # noqa: E402
from sonoforge.services.repr_service import clip_to_matrix, to_db  # noqa: E402

logger = logging.getLogger(__name__)

PREVIEW_DPI = 100
AXIS_LABELS = {
    "dgt": "Frequency (Hz)",
    "mel": "Mel filter center (Hz)",
    "gamma": "Gammatone center (Hz)",
    "cochlea": "Gammatone center (Hz)",
}


def _to_png(fig) -> bytes:
    buffer = io.BytesIO()
    fig.savefig(buffer, format="png", dpi=PREVIEW_DPI, bbox_inches="tight")
    plt.close(fig)
    return buffer.getvalue()


def preview_png(
    clip: AudioClip, config: RepresentationConfig = RepresentationConfig(), title: str = ""
) -> bytes:
    """Representation of a clip in dB with the lowest frequency at the bottom."""
    matrix = clip_to_matrix(clip, config)
    if config.db:
        matrix = to_db(matrix, config.floor_db)

    n_rows, n_cols = matrix.shape
    times = np.arange(n_cols + 1) * matrix.frame_s
    rows = np.arange(n_rows + 1)

    fig, ax = plt.subplots(figsize=(8, 4))
    mesh = ax.pcolormesh(times, rows, matrix.values, cmap="magma", shading="flat")
    ticks = np.linspace(0, n_rows - 1, min(n_rows, 6)).astype(int)
    ax.set_yticks(ticks + 0.5)
    ax.set_yticklabels([f"{matrix.frequencies[i]:.0f}" for i in ticks])
    ax.set_xlabel("Time (s)")
    ax.set_ylabel(AXIS_LABELS[config.name])
    ax.set_title(title or f"{config.name} representation")
    fig.colorbar(mesh, ax=ax, label="dB" if config.db else "magnitude")
    return _to_png(fig)


def confusion_png(report: EvalReport) -> bytes:
    names = list(report.class_names)
    fig, ax = plt.subplots(figsize=(1.2 * len(names) + 3, 1.2 * len(names) + 2))
    image = ax.imshow(report.confusion, cmap="Blues")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names)
    for (i, j), count in np.ndenumerate(report.confusion):
        ax.text(j, i, str(count), ha="center", va="center")
    ax.set_xlabel("Predicted label")
    ax.set_ylabel("True label")
    ax.set_title(f"{report.source_tag or 'scores'}: mean accuracy {report.mean_accuracy:.2%}")
    fig.colorbar(image, ax=ax)
    return _to_png(fig)
