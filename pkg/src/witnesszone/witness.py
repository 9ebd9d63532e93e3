"""Per-witness execution and the per-interval quorum round.

Each witness independently ranges against the prover's *true* position,
samples the sensing modalities its policy requires, evaluates the admit
predicate, and, when admitting, commits the decision inputs to a Merkle
root and signs.  A deterministic coordinator tallies the signed
attestations: at least ``k`` distinct same-interval witnesses admit the
claim, an evidence object is assembled, and the interval is finalized as
one block of the zone's hash chain.

Byzantine behavior is injected per witness: ``offline`` witnesses stay
silent, ``colluder`` witnesses sign an admit regardless of their checks,
and ``equivocator`` witnesses additionally sign a conflicting claim in
the same interval.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import canonical
from .channel import RangingResult, range_estimate
from .evidence import (
    Attestation,
    Claim,
    EvidenceObject,
    Block,
    GENESIS_PREV_DIGEST,
    InsufficientQuorumError,
    WitnessRegistry,
    assemble_evidence,
    append_block,
    make_claim,
    payload_assertions,
    sign_attestation,
    verify_attestation,
)
from .geometry import Vector3, WitnessIdentity, ZoneConfig, distance
from .merkle import merkle_root
from .policy import (
    AdmitDecision,
    Policy,
    Requirement,
    RequirementKind,
    RequirementFlags,
    evaluate_admit,
)
from .sensing import (
    DEFAULT_DETECTION_PROB,
    FeatureDescriptor,
    Modality,
    Scene,
    passthrough_feature,
    sample_rf_feature,
    sample_visual_feature,
)

__all__ = [
    "WitnessBehavior",
    "WitnessNode",
    "Environment",
    "IntervalOutcome",
    "decision_merkle_leaves",
    "witness_decision",
    "witness_step",
    "quorum_round",
    "build_registry",
    "find_equivocations",
]


class WitnessBehavior(str, Enum):
    HONEST = "honest"
    OFFLINE = "offline"
    COLLUDER = "colluder"
    EQUIVOCATOR = "equivocator"


@dataclass(frozen=True)
class WitnessNode:
    """A witness: identity, signing key, and injected behavior mode."""

    identity: WitnessIdentity
    secret_key: bytes
    behavior: WitnessBehavior = WitnessBehavior.HONEST


@dataclass(frozen=True)
class Environment:
    """World state for one claim: where the prover really is and what the
    witnesses can sense around themselves."""

    true_prover_pos: Vector3
    scene: Scene = Scene()
    p_det: float = DEFAULT_DETECTION_PROB
    prover_extra_delay_m: float = 0.0


@dataclass(frozen=True)
class IntervalOutcome:
    """Result of one quorum round, including the finalized block."""

    interval_index: int
    attestations: tuple[Attestation, ...]
    admitted: bool
    evidence: EvidenceObject | None
    block: Block


def sample_features(
    witness: WitnessIdentity,
    claim: Claim,
    env: Environment,
    policy: Policy,
    zone: ZoneConfig,
    rng: np.random.Generator,
) -> tuple[FeatureDescriptor, ...]:
    """Sample one descriptor per feature-backed policy requirement."""
    features: list[FeatureDescriptor] = []
    for req in policy.requirements:
        if req.kind is RequirementKind.DISTANCE_BOUND:
            continue
        if req.kind is RequirementKind.RF_SIMILARITY:
            features.append(
                sample_rf_feature(
                    witness, env.true_prover_pos, claim.claimed_position, zone.channel, rng
                )
            )
        elif req.kind is RequirementKind.VISUAL_SIMILARITY:
            queries = payload_assertions(claim.payload)
            features.append(
                sample_visual_feature(witness, env.scene, queries, env.p_det, rng)
            )
        elif req.kind is RequirementKind.BEACON_OVERLAP:
            features.append(
                passthrough_feature(witness.witness_id, Modality.RF_FINGERPRINT, int(req.threshold))
            )
        elif req.kind is RequirementKind.AUDIO_HASH_MATCH:
            features.append(passthrough_feature(witness.witness_id, Modality.AUDIO, True))
        elif req.kind is RequirementKind.IMU_PATTERN:
            features.append(passthrough_feature(witness.witness_id, Modality.IMU, True))
    return tuple(features)


def witness_decision(
    witness: WitnessIdentity,
    claim: Claim,
    env: Environment,
    policy: Policy,
    zone: ZoneConfig,
    rng: np.random.Generator,
) -> tuple[RangingResult, tuple[FeatureDescriptor, ...], AdmitDecision]:
    """The evaluation pipeline of one honest witness, without commitments.

    Ranging and RF sensing run against the prover's *true* position; the
    claimed position only enters expected-value computations, which is
    what makes distance fraud observable.
    """
    true_d = distance(witness.position, env.true_prover_pos)
    ranging = range_estimate(
        true_d,
        zone.channel,
        rng,
        witness_id=witness.witness_id,
        extra_delay_m=env.prover_extra_delay_m,
    )
    features = sample_features(witness, claim, env, policy, zone, rng)
    gate = zone.d_acc if _uses_zone_gate(policy, zone) else None
    decision = evaluate_admit(policy, claim, ranging, features, acceptance_distance=gate)
    return ranging, features, decision


def _uses_zone_gate(policy: Policy, zone: ZoneConfig) -> bool:
    # The calibrated noisy gate applies when the policy's max_distance is
    # the zone's noise-free d_max; any other document value is literal.
    for req in policy.requirements:
        if req.kind is RequirementKind.DISTANCE_BOUND:
            return float(req.threshold) == zone.d_max
    return False


def decision_merkle_leaves(
    claim: Claim,
    ranging: RangingResult,
    features: Sequence[FeatureDescriptor],
    decision: AdmitDecision,
    policy_id: str,
) -> list[bytes]:
    """Canonical leaf encodings committed by an admitting witness.

    Each input that influenced the decision is its own leaf so it can be
    opened individually during a dispute.
    """
    leaves = [
        canonical.encode_scalar(claim.claim_id),
        canonical.encode_scalar(ranging.estimate),
    ]
    leaves.extend(canonical.encode(f) for f in features)
    leaves.append(canonical.encode(RequirementFlags(dict(decision.per_requirement))))
    leaves.append(canonical.encode_scalar(policy_id))
    return leaves


def _attest(
    witness: WitnessNode,
    claim: Claim,
    ranging: RangingResult,
    features: Sequence[FeatureDescriptor],
    decision: AdmitDecision,
    policy: Policy,
    block_ref: bytes,
) -> Attestation:
    leaves = decision_merkle_leaves(claim, ranging, features, decision, policy.policy_id)
    root = merkle_root(leaves)
    return sign_attestation(
        witness.secret_key,
        witness.identity.witness_id,
        claim.interval_index,
        block_ref,
        claim.claim_id,
        root,
        policy.policy_id,
        claim.zone_id,
    )


def witness_step(
    witness: WitnessNode,
    claim: Claim,
    env: Environment,
    policy: Policy,
    zone: ZoneConfig,
    block_ref: bytes,
    rng: np.random.Generator,
    log: list | None = None,
) -> Attestation | None:
    """Execute one witness for one claim; returns an attestation or nothing.

    All failure paths (not admitted, offline) return ``None``; only an
    admit produces a signature.
    """
    if witness.behavior is WitnessBehavior.OFFLINE:
        _log(log, witness, claim, None, None, False, "offline")
        return None

    ranging, features, decision = witness_decision(
        witness.identity, claim, env, policy, zone, rng
    )

    if witness.behavior is WitnessBehavior.HONEST:
        _log(log, witness, claim, ranging, features, decision.admitted, "honest")
        if not decision.admitted:
            return None
        return _attest(witness, claim, ranging, features, decision, policy, block_ref)

    # colluder / equivocator: sign an admit regardless of the checks
    forced = AdmitDecision(
        admitted=True,
        per_requirement={k: True for k in decision.per_requirement},
        evaluated_inputs_digest=decision.evaluated_inputs_digest,
    )
    _log(log, witness, claim, ranging, features, True, witness.behavior.value)
    return _attest(witness, claim, ranging, features, forced, policy, block_ref)


def conflicting_attestation(
    witness: WitnessNode,
    claim: Claim,
    env: Environment,
    policy: Policy,
    zone: ZoneConfig,
    block_ref: bytes,
    rng: np.random.Generator,
) -> Attestation:
    """Equivocation twin: an admit signed for a conflicting claim in the
    same interval (different claimed position, same prover)."""
    shifted = Vector3(
        claim.claimed_position.x + 1.0,
        claim.claimed_position.y,
        claim.claimed_position.z,
    )
    conflict = make_claim(
        claim.interval_index,
        claim.zone_id,
        shifted,
        claim.disclosed_features,
        claim.payload + b"/equivocation",
    )
    ranging, features, decision = witness_decision(
        witness.identity, conflict, env, policy, zone, rng
    )
    forced = AdmitDecision(
        admitted=True,
        per_requirement={k: True for k in decision.per_requirement},
        evaluated_inputs_digest=decision.evaluated_inputs_digest,
    )
    return _attest(witness, conflict, ranging, features, forced, policy, block_ref)


def _log(log, witness, claim, ranging, features, decided, mode) -> None:
    if log is None:
        return
    log.append(
        {
            "interval_index": claim.interval_index,
            "witness_id": witness.identity.witness_id,
            "behavior": mode,
            "decision": bool(decided),
            "estimate": None if ranging is None else ranging.estimate,
            "features": {}
            if not features
            else {f.modality.value: f.value for f in features},
        }
    )


def build_registry(zone_id: str, witnesses: Sequence[WitnessNode]) -> WitnessRegistry:
    registry = WitnessRegistry()
    for w in witnesses:
        registry.add(zone_id, w.identity.witness_id, w.identity.public_key)
    return registry


def quorum_round(
    witnesses: Sequence[WitnessNode],
    claim: Claim,
    zone: ZoneConfig,
    policy: Policy,
    env: Environment,
    rng: np.random.Generator,
    chain: list[Block],
    registry: WitnessRegistry | None = None,
    log: list | None = None,
) -> IntervalOutcome:
    """Run one interval: witness steps, signature tally, block append.

    The tally counts each witness at most once per claim; equivocating
    attestations are recorded in the outcome for post-hoc detection but
    cannot contribute to this claim's quorum (their claim id differs).
    """
    if registry is None:
        registry = build_registry(zone.zone_id, witnesses)
    block_ref = chain[-1].digest if chain else GENESIS_PREV_DIGEST

    attestations: list[Attestation] = []
    for witness in witnesses:
        att = witness_step(witness, claim, env, policy, zone, block_ref, rng, log=log)
        if att is not None:
            attestations.append(att)
        if witness.behavior is WitnessBehavior.EQUIVOCATOR:
            attestations.append(
                conflicting_attestation(witness, claim, env, policy, zone, block_ref, rng)
            )

    verified = [a for a in attestations if verify_attestation(a, registry)]
    try:
        evidence = assemble_evidence(verified, zone, claim)
    except InsufficientQuorumError:
        evidence = None
    admitted = evidence is not None

    block = append_block(
        chain,
        claim.interval_index,
        [claim.claim_id] if admitted else [],
        zone.zone_id,
    )
    return IntervalOutcome(
        interval_index=claim.interval_index,
        attestations=tuple(attestations),
        admitted=admitted,
        evidence=evidence,
        block=block,
    )


def find_equivocations(attestations: Sequence[Attestation]) -> dict[str, set[bytes]]:
    """Witnesses that signed more than one claim id in the same interval.

    Returns ``{witness_id: {claim ids}}`` for offenders only.
    """
    seen: dict[tuple[str, int], set[bytes]] = {}
    for att in attestations:
        seen.setdefault((att.witness_id, att.interval_index), set()).add(att.claim_id)
    return {
        witness_id: ids
        for (witness_id, _), ids in seen.items()
        if len(ids) > 1
    }
