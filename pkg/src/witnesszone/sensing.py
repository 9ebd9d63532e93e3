"""Witness-local environmental sensing.

Two sensors carry the evaluation weight: an RF fingerprint sensor that
scores how well the observed path loss matches the loss expected at the
prover's *claimed* position, and a visual sensor answering semantic
object queries against the witness's scene.  Audio and IMU modalities
exist in the descriptor vocabulary and the policy schema but are wired to
pass-through sensors: they always yield a satisfying descriptor.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import canonical
from .channel import ChannelParams, deterministic_path_loss, sample_path_loss
from .geometry import Vector3, WitnessIdentity, distance

__all__ = [
    "Modality",
    "FeatureDescriptor",
    "Scene",
    "rf_similarity",
    "sample_rf_feature",
    "visual_detect",
    "sample_visual_feature",
    "passthrough_feature",
]

# Full-scale mismatch of the RF similarity score: a 30 dB difference
# between observed and expected path loss scores 0.  Linear mapping keeps
# the honest pass probability above 1 - 2*Phi(-5) under 3 dB shadowing
# with the 0.5 admission threshold.
RF_SIMILARITY_SPAN_DB = 30.0

# Per-witness semantic detection probability for objects actually present,
# calibrated so the visual-policy admission probability is ~0.973 at the
# baseline prover position (see simulation.calibrate, visual_admission).
DEFAULT_DETECTION_PROB = 0.9695


class Modality(str, Enum):
    RF_FINGERPRINT = "rf_fingerprint"
    VISUAL = "visual"
    AUDIO = "audio"
    IMU = "imu"


@dataclass(frozen=True)
class FeatureDescriptor:
    """Compact, policy-relevant representation of one sensor sample."""

    modality: Modality
    value: bool | int | float
    quality: float = 1.0
    freshness: float = 0.0
    witness_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "modality", Modality(self.modality))
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError("quality must be in [0, 1]")
        if self.freshness < 0:
            raise ValueError("freshness must be non-negative")


canonical.register(
    "feature",
    FeatureDescriptor,
    (
        ("modality", canonical.STR),
        ("value", canonical.SCALAR),
        ("quality", canonical.F64),
        ("freshness", canonical.F64),
        ("witness_id", canonical.STR),
    ),
)


@dataclass(frozen=True)
class Scene:
    """Semantic ground truth around a witness: which objects are present."""

    objects: frozenset[str] = frozenset()

    @staticmethod
    def of(*labels: str) -> "Scene":
        return Scene(frozenset(labels))

    def contains(self, label: str) -> bool:
        return label in self.objects


def rf_similarity(observed_pl: float, expected_pl: float) -> float:
    """Similarity in [0, 1] between observed and expected path loss.

    1.0 at a perfect match, falling linearly to 0 at a mismatch of
    ``RF_SIMILARITY_SPAN_DB`` or more.
    """
    return max(0.0, 1.0 - abs(observed_pl - expected_pl) / RF_SIMILARITY_SPAN_DB)


def sample_rf_feature(
    witness: WitnessIdentity,
    true_prover_pos: Vector3,
    claimed_pos: Vector3,
    params: ChannelParams,
    rng: np.random.Generator,
    freshness: float = 0.0,
) -> FeatureDescriptor:
    """Sample the RF fingerprint similarity for one witness.

    The observation is drawn from the channel at the prover's *true*
    position; the expectation is the deterministic loss at the *claimed*
    position.  A prover lying about its position therefore shifts the
    score by the path-loss difference between the two geometries.
    """
    observed = sample_path_loss(distance(witness.position, true_prover_pos), params, rng)
    expected = deterministic_path_loss(distance(witness.position, claimed_pos), params)
    return FeatureDescriptor(
        modality=Modality.RF_FINGERPRINT,
        value=rf_similarity(observed, expected),
        quality=1.0,
        freshness=freshness,
        witness_id=witness.witness_id,
    )


def visual_detect(
    scene: Scene,
    query: str,
    p_det: float,
    rng: np.random.Generator,
) -> bool:
    """Answer a semantic object query against the witness scene.

    Objects actually present are detected with probability ``p_det``;
    absent objects are never reported (zero false-positive rate).
    """
    if not 0.0 <= p_det <= 1.0:
        raise ValueError("p_det must be in [0, 1]")
    if not scene.contains(query):
        return False
    return bool(rng.random() < p_det)


def sample_visual_feature(
    witness: WitnessIdentity,
    scene: Scene,
    queries: tuple[str, ...],
    p_det: float,
    rng: np.random.Generator,
    freshness: float = 0.0,
) -> FeatureDescriptor:
    """Evaluate all asserted object queries; the descriptor is true only
    when every asserted object is detected.  A claim asserting nothing
    cannot satisfy a visual requirement."""
    detected = bool(queries) and all(visual_detect(scene, q, p_det, rng) for q in queries)
    return FeatureDescriptor(
        modality=Modality.VISUAL,
        value=detected,
        quality=1.0,
        freshness=freshness,
        witness_id=witness.witness_id,
    )


def passthrough_feature(
    witness_id: str,
    modality: Modality,
    value: bool | int | float = True,
    freshness: float = 0.0,
) -> FeatureDescriptor:
    """Descriptor from a pass-through sensor (audio, IMU, beacon count)."""
    return FeatureDescriptor(
        modality=modality,
        value=value,
        quality=1.0,
        freshness=freshness,
        witness_id=witness_id,
    )
