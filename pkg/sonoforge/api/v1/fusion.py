import logging
from pathlib import Path
from typing import List

from fastapi import APIRouter, File, Query, UploadFile

from sonoforge.adapters.score_files import parse_score_csv
from sonoforge.api.dependencies import read_upload
from sonoforge.domain.exceptions import ValidationError
from sonoforge.domain.models import FusionMember, FusionResponse
from sonoforge.services import fusion_service

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("", response_model=FusionResponse)
async def fuse_scores(
    files: List[UploadFile] = File(...),
    normalize: bool = Query(False, description="Normalize each member to mean 0, std 1"),
) -> FusionResponse:
    """Sum-rule fusion of score CSV files; accuracy is measured against true_label."""
    if not files:
        raise ValidationError("At least one score file is required")

    members = []
    truth = {}
    for index, upload in enumerate(files):
        tag = Path(upload.filename).stem if upload.filename else f"member_{index}"
        matrix, labels = parse_score_csv(await read_upload(upload), source_tag=tag)
        members.append(matrix)
        for pattern_id, label in labels.items():
            truth.setdefault(pattern_id, label)

    fused = fusion_service.fuse(members, normalized=normalize)
    member_reports = [
        FusionMember(
            source_tag=m.source_tag,
            accuracy=fusion_service.accuracy(fusion_service.sanitize(m), truth),
        )
        for m in members
    ]
    result = FusionResponse(
        members=member_reports,
        normalized=normalize,
        accuracy=fusion_service.accuracy(fused, truth),
        predictions=dict(zip(fused.pattern_ids, fusion_service.predict(fused))),
    )
    logger.info(f"Fused {len(members)} score files, accuracy {result.accuracy:.4f}")
    return result
