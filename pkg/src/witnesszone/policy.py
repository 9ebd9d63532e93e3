"""Versioned admission policies and the admit predicate.

A policy is parsed from a small machine-readable document (see
``policies/*.pol`` for the shipped profiles) and evaluated as a
conjunction of requirements over the distance bound and the witness's
feature descriptors.  Evaluation is deterministic; all randomness lives
in ranging and sensing.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Any, Iterable, Mapping, Sequence

from . import canonical
from .channel import RangingResult
from .configtext import ConfigSyntaxError, emit_config, meters, parse_config_text, seconds
from .sensing import FeatureDescriptor, Modality

__all__ = [
    "PolicyError",
    "PolicySyntaxError",
    "UnknownRequirementError",
    "ThresholdRangeError",
    "MissingQuorumError",
    "PolicyInvariantError",
    "RequirementKind",
    "Requirement",
    "Policy",
    "AdmitDecision",
    "parse_policy",
    "serialize_policy",
    "load_policy",
    "builtin_policy",
    "builtin_policy_ids",
    "evaluate_admit",
]


class PolicyError(ValueError):
    """Base class for policy parsing and validation failures."""


class PolicySyntaxError(PolicyError):
    """Malformed document or a key outside the policy schema."""


class UnknownRequirementError(PolicyError):
    """Requirement kind not in the supported vocabulary."""


class ThresholdRangeError(PolicyError):
    """Requirement threshold outside its documented range."""


class MissingQuorumError(PolicyError):
    """Document lacks the quorum block or its k/n entries."""


class PolicyInvariantError(PolicyError):
    """Structurally valid document violating a policy invariant (e.g. k > n)."""


class RequirementKind(str, Enum):
    DISTANCE_BOUND = "distance_bound"
    RF_SIMILARITY = "rf_similarity"
    VISUAL_SIMILARITY = "visual_similarity"
    AUDIO_HASH_MATCH = "audio_hash_match"
    BEACON_OVERLAP = "beacon_overlap"
    IMU_PATTERN = "imu_pattern"


# modality consulted by each feature-backed requirement
_REQUIREMENT_MODALITY = {
    RequirementKind.RF_SIMILARITY: Modality.RF_FINGERPRINT,
    RequirementKind.VISUAL_SIMILARITY: Modality.VISUAL,
    RequirementKind.AUDIO_HASH_MATCH: Modality.AUDIO,
    RequirementKind.BEACON_OVERLAP: Modality.RF_FINGERPRINT,
    RequirementKind.IMU_PATTERN: Modality.IMU,
}


@dataclass(frozen=True)
class Requirement:
    """One admission gate: a kind plus its threshold.

    Threshold units depend on the kind: meters for ``distance_bound``,
    a similarity in [0, 1] for ``rf_similarity``/``visual_similarity``,
    a minimum count for ``beacon_overlap``, and ``True`` for the boolean
    gates (``audio_hash_match``, ``imu_pattern``).
    """

    kind: RequirementKind
    threshold: float | int | bool
    metric: str | None = None


@dataclass(frozen=True)
class Policy:
    """Immutable, versioned admission policy bound to one zone."""

    policy_id: str
    zone_id: str
    interval_seconds: float
    quorum_k: int
    quorum_n: int
    requirements: tuple[Requirement, ...]
    on_fail: str = "reject"


@dataclass(frozen=True)
class AdmitDecision:
    """Outcome of the admit predicate plus its per-requirement breakdown."""

    admitted: bool
    per_requirement: Mapping[str, bool]
    evaluated_inputs_digest: bytes

    def __post_init__(self) -> None:
        if self.admitted != all(self.per_requirement.values()):
            raise ValueError("admitted must equal the conjunction of requirements")


canonical.register(
    "admit_decision",
    AdmitDecision,
    (
        ("admitted", canonical.BOOL),
        ("per_requirement", canonical.map_of(canonical.BOOL)),
        ("evaluated_inputs_digest", canonical.BYTES),
    ),
)


@dataclass(frozen=True)
class _DecisionInputs:
    claim_id: bytes
    estimate: float
    features: tuple[FeatureDescriptor, ...]
    policy_id: str


canonical.register(
    "decision_inputs",
    _DecisionInputs,
    (
        ("claim_id", canonical.BYTES),
        ("estimate", canonical.F64),
        ("features", canonical.seq_of(canonical.record_of("feature"))),
        ("policy_id", canonical.STR),
    ),
)


@dataclass(frozen=True)
class RequirementFlags:
    """Standalone encoding of a per-requirement outcome map (Merkle leaf)."""

    flags: Mapping[str, bool]


canonical.register(
    "requirement_flags",
    RequirementFlags,
    (("flags", canonical.map_of(canonical.BOOL)),),
)


# -- parsing -----------------------------------------------------------------

_TOP_KEYS = {"policy", "zone_id", "interval", "quorum", "requirements", "on_fail"}


def parse_policy(text: str) -> Policy:
    """Parse a policy document; unknown keys and bad ranges are rejected."""
    try:
        doc = parse_config_text(text)
    except ConfigSyntaxError as exc:
        raise PolicySyntaxError(str(exc)) from exc

    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise PolicySyntaxError(f"unknown keys: {sorted(unknown)}")
    for key in ("policy", "zone_id", "interval", "requirements"):
        if key not in doc:
            raise PolicySyntaxError(f"missing key {key!r}")

    policy_id = doc["policy"]
    if not isinstance(policy_id, str) or not policy_id:
        raise PolicyInvariantError("policy id must be a non-empty string")
    zone_id = doc["zone_id"]
    if not isinstance(zone_id, str) or not zone_id:
        raise PolicyInvariantError("zone_id must be a non-empty string")
    try:
        interval = seconds(doc["interval"])
    except ValueError as exc:
        raise PolicySyntaxError(str(exc)) from exc
    if interval <= 0:
        raise PolicyInvariantError("interval must be positive")

    if "quorum" not in doc:
        raise MissingQuorumError("missing quorum block")
    quorum = doc["quorum"]
    if not isinstance(quorum, dict) or set(quorum) != {"k", "n"}:
        raise MissingQuorumError("quorum block must define exactly k and n")
    k, n = quorum["k"], quorum["n"]
    if not (isinstance(k, int) and isinstance(n, int)) or isinstance(k, bool) or isinstance(n, bool):
        raise MissingQuorumError("quorum k and n must be integers")
    if k < 1 or n < 1:
        raise PolicyInvariantError("quorum k and n must be positive")
    if k > n:
        raise PolicyInvariantError(f"quorum k={k} exceeds n={n}")

    reqs_doc = doc["requirements"]
    if not isinstance(reqs_doc, dict) or not reqs_doc:
        raise PolicySyntaxError("requirements must be a non-empty mapping")
    requirements = tuple(_parse_requirement(kind, val) for kind, val in reqs_doc.items())

    on_fail = doc.get("on_fail", "reject")
    if on_fail != "reject":
        raise PolicySyntaxError(f"unsupported on_fail action {on_fail!r}")

    return Policy(
        policy_id=policy_id,
        zone_id=zone_id,
        interval_seconds=interval,
        quorum_k=k,
        quorum_n=n,
        requirements=requirements,
        on_fail=on_fail,
    )


def _parse_requirement(kind_text: str, value: Any) -> Requirement:
    try:
        kind = RequirementKind(kind_text)
    except ValueError:
        raise UnknownRequirementError(f"unknown requirement kind {kind_text!r}") from None

    if kind is RequirementKind.DISTANCE_BOUND:
        body = _require_mapping(kind, value, {"max_distance"})
        try:
            max_distance = meters(body["max_distance"])
        except ValueError as exc:
            raise ThresholdRangeError(str(exc)) from exc
        if max_distance <= 0:
            raise ThresholdRangeError("max_distance must be positive")
        return Requirement(kind, max_distance)

    if kind in (RequirementKind.RF_SIMILARITY, RequirementKind.VISUAL_SIMILARITY):
        body = _require_mapping(kind, value, {"threshold", "metric"})
        if "threshold" not in body:
            raise ThresholdRangeError(f"{kind.value} requires a threshold")
        threshold = body["threshold"]
        if isinstance(threshold, bool) or not isinstance(threshold, (int, float)):
            raise ThresholdRangeError(f"{kind.value} threshold must be numeric")
        if not 0.0 <= float(threshold) <= 1.0:
            raise ThresholdRangeError(f"{kind.value} threshold {threshold} outside [0, 1]")
        metric = body.get("metric")
        if metric is not None and not isinstance(metric, str):
            raise PolicySyntaxError(f"{kind.value} metric must be a string")
        return Requirement(kind, float(threshold), metric)

    if kind is RequirementKind.BEACON_OVERLAP:
        body = _require_mapping(kind, value, {"min_count"})
        min_count = body.get("min_count")
        if not isinstance(min_count, int) or isinstance(min_count, bool) or min_count < 1:
            raise ThresholdRangeError("beacon_overlap min_count must be a positive integer")
        return Requirement(kind, min_count)

    # boolean gates: audio_hash_match, imu_pattern
    if value is not True:
        raise ThresholdRangeError(f"{kind.value} must be 'true'")
    return Requirement(kind, True)


def _require_mapping(kind: RequirementKind, value: Any, allowed: set[str]) -> dict:
    if not isinstance(value, dict):
        raise PolicySyntaxError(f"{kind.value} requires a nested block")
    unknown = set(value) - allowed
    if unknown:
        raise PolicySyntaxError(f"{kind.value}: unknown keys {sorted(unknown)}")
    return value


def serialize_policy(policy: Policy) -> str:
    """Emit a policy back into the document syntax (round-trip stable)."""
    reqs: dict[str, Any] = {}
    for req in policy.requirements:
        if req.kind is RequirementKind.DISTANCE_BOUND:
            reqs[req.kind.value] = {"max_distance": _meters_text(req.threshold)}
        elif req.kind in (RequirementKind.RF_SIMILARITY, RequirementKind.VISUAL_SIMILARITY):
            body: dict[str, Any] = {}
            if req.metric is not None:
                body["metric"] = req.metric
            body["threshold"] = req.threshold
            reqs[req.kind.value] = body
        elif req.kind is RequirementKind.BEACON_OVERLAP:
            reqs[req.kind.value] = {"min_count": req.threshold}
        else:
            reqs[req.kind.value] = True
    doc = {
        "policy": policy.policy_id,
        "zone_id": policy.zone_id,
        "interval": _seconds_text(policy.interval_seconds),
        "quorum": {"k": policy.quorum_k, "n": policy.quorum_n},
        "requirements": reqs,
        "on_fail": policy.on_fail,
    }
    return emit_config(doc)


def _seconds_text(value: float) -> str:
    return f"{int(value)}s" if float(value).is_integer() else f"{value}s"


def _meters_text(value: float) -> str:
    return f"{int(value)}m" if float(value).is_integer() else f"{value}m"


def load_policy(path: str) -> Policy:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_policy(fh.read())


_BUILTIN_FILES = {
    "supply_chain_v1": "supply_chain_v1.pol",
    "visual_v1": "visual_v1.pol",
    "cocoa_v1": "cocoa_v1.pol",
    "media_v2": "media_v2.pol",
    "mobility_v3": "mobility_v3.pol",
}


def builtin_policy_ids() -> tuple[str, ...]:
    return tuple(_BUILTIN_FILES)


def builtin_policy(policy_id: str) -> Policy:
    """Load one of the shipped policy documents by id."""
    filename = _BUILTIN_FILES.get(policy_id)
    if filename is None:
        raise PolicyError(f"unknown built-in policy {policy_id!r}")
    text = resources.files("witnesszone.policies").joinpath(filename).read_text("utf-8")
    return parse_policy(text)


# -- evaluation --------------------------------------------------------------

def evaluate_admit(
    policy: Policy,
    claim: Any,
    ranging: RangingResult,
    features: Sequence[FeatureDescriptor],
    acceptance_distance: float | None = None,
) -> AdmitDecision:
    """Evaluate the admit predicate for one witness.

    ``acceptance_distance`` is the zone's calibrated noisy gate; when the
    policy's ``max_distance`` equals the zone's noise-free ``d_max`` the
    runtime passes ``d_acc`` here.  Without it the document threshold is
    applied verbatim.  Stale features (freshness at or beyond the policy
    interval) are treated as missing, and a missing required modality
    evaluates the requirement to False rather than raising.
    """
    fresh = [f for f in features if f.freshness < policy.interval_seconds]
    per: dict[str, bool] = {}
    for req in policy.requirements:
        per[req.kind.value] = _requirement_holds(req, ranging, fresh, acceptance_distance)
    digest = hashlib.sha256(
        canonical.encode(
            _DecisionInputs(
                claim_id=claim.claim_id,
                estimate=ranging.estimate,
                features=tuple(features),
                policy_id=policy.policy_id,
            )
        )
    ).digest()
    return AdmitDecision(
        admitted=all(per.values()),
        per_requirement=per,
        evaluated_inputs_digest=digest,
    )


def _requirement_holds(
    req: Requirement,
    ranging: RangingResult,
    features: Iterable[FeatureDescriptor],
    acceptance_distance: float | None,
) -> bool:
    if req.kind is RequirementKind.DISTANCE_BOUND:
        gate = acceptance_distance if acceptance_distance is not None else float(req.threshold)
        return ranging.estimate <= gate

    modality = _REQUIREMENT_MODALITY[req.kind]
    if req.kind is RequirementKind.RF_SIMILARITY:
        f = _first(features, modality, float)
        return f is not None and f.value > req.threshold
    if req.kind is RequirementKind.BEACON_OVERLAP:
        f = _first(features, modality, int)
        return f is not None and f.value >= req.threshold
    # boolean-valued gates: visual, audio, imu
    f = _first(features, modality, bool)
    return f is not None and bool(f.value)


def _first(features: Iterable[FeatureDescriptor], modality: Modality, value_type: type):
    for f in features:
        if f.modality is not modality:
            continue
        if value_type is bool and isinstance(f.value, bool):
            return f
        if value_type is int and isinstance(f.value, int) and not isinstance(f.value, bool):
            return f
        if value_type is float and isinstance(f.value, float):
            return f
    return None
