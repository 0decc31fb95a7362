"""Registry of augmentation protocols and dispatch to their generators."""

import logging
from typing import Dict, List

from sonoforge.domain.entities import AudioClip, GrayImage, RngStream
from sonoforge.domain.exceptions import ValidationError
from sonoforge.domain.models import ProtocolPresets, ProtocolSpec
from sonoforge.services import signal_aug_service, spec_aug_service, tsm_service

logger = logging.getLogger(__name__)

PROTOCOL_SPECS: Dict[str, ProtocolSpec] = {
    "noaug": ProtocolSpec(name="noaug", copies=0, domain="none", rule="none", transforms=()),
    "sgn": ProtocolSpec(
        name="sgn",
        copies=signal_aug_service.SGN_COPIES,
        domain="signal",
        rule="each-with-prob",
        transforms=signal_aug_service.SGN_TRANSFORMS,
    ),
    "ssa": ProtocolSpec(
        name="ssa",
        copies=signal_aug_service.SSA_COPIES,
        domain="signal",
        rule="one-per-copy",
        transforms=(
            "wow",
            "noise",
            "clip",
            "speed",
            "distortion",
            "gain",
            "shift",
            "drc",
            "pitch_up",
            "pitch_down",
        ),
    ),
    "ssia": ProtocolSpec(
        name="ssia",
        copies=signal_aug_service.SSIA_COPIES,
        domain="signal",
        rule="all-per-copy",
        transforms=("wow", "speed", "gain", "shift", "pitch"),
    ),
    "tsm": ProtocolSpec(
        name="tsm",
        copies=10,
        domain="signal",
        rule="grid",
        transforms=("ola", "wsola", "pv", "pv_ipl", "hpss"),
    ),
    "sspa": ProtocolSpec(
        name="sspa",
        copies=spec_aug_service.SSPA_COPIES,
        domain="spectrogram",
        rule="one-per-copy",
        transforms=("shift", "vtln", "circular_shift", "tps_mask", "noise"),
    ),
    "susa": ProtocolSpec(
        name="susa",
        copies=spec_aug_service.SUSA_COPIES,
        domain="spectrogram",
        rule="all-per-copy",
        transforms=("pitch_shift", "vtln", "circular_shift", "mask", "noise"),
    ),
}


def get_protocol(name: str) -> ProtocolSpec:
    try:
        return PROTOCOL_SPECS[name]
    except KeyError:
        raise ValidationError(f"Unknown protocol: {name}") from None


def protocol_domain(name: str) -> str:
    return get_protocol(name).domain


def copies_for(name: str, presets: ProtocolPresets = ProtocolPresets()) -> int:
    """Copy count; TSM depends on how many stretch factors are configured."""
    if name == "tsm":
        return len(tsm_service.TSM_ALGORITHMS) * len(presets.tsm.resolved_alphas())
    return get_protocol(name).copies


def augment_clip(
    protocol: str,
    clip: AudioClip,
    rng: RngStream,
    presets: ProtocolPresets = ProtocolPresets(),
) -> List[AudioClip]:
    """Augmented copies only; the original is never part of the result."""
    domain = protocol_domain(protocol)
    if domain == "none":
        return []
    if domain != "signal":
        raise ValidationError(f"Protocol {protocol} works on spectrogram images, not audio")

    if protocol == "sgn":
        return signal_aug_service.augment_sgn(clip, rng, presets.sgn, tsm=presets.tsm)
    if protocol == "ssa":
        return signal_aug_service.augment_ssa(clip, rng, presets.ssa, tsm=presets.tsm)
    if protocol == "ssia":
        return signal_aug_service.augment_ssia(clip, rng, presets.ssia, tsm=presets.tsm)
    return tsm_service.augment_tsm(clip, presets.tsm)


def augment_image(
    protocol: str,
    img: GrayImage,
    rng: RngStream,
    presets: ProtocolPresets = ProtocolPresets(),
) -> List[GrayImage]:
    domain = protocol_domain(protocol)
    if domain == "none":
        return []
    if domain != "spectrogram":
        raise ValidationError(f"Protocol {protocol} works on audio, not spectrogram images")

    if protocol == "sspa":
        return spec_aug_service.augment_sspa(img, rng, presets.sspa)
    return spec_aug_service.augment_susa(img, rng, presets.susa)
