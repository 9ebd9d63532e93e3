"""Witnessing-zone proof-of-location: protocol primitives plus a
deterministic Monte Carlo simulator.

A bounded zone of fixed, authenticated witnesses collectively attests
prover claims per block interval: each witness distance-bounds the
prover, samples its local environment, evaluates a versioned admission
policy, and, on admit, signs a Merkle commitment to its decision inputs.
A k-of-n quorum of same-interval signatures yields an externally
verifiable evidence object, and every interval finalizes one block of a
hash-chained, tamper-evident log.
"""

from .channel import (
    ChannelParams,
    RangingResult,
    deterministic_path_loss,
    range_estimate,
    ranging_sigma,
    sample_path_loss,
)
from .geometry import (
    ConfigurationError,
    Vector3,
    WitnessIdentity,
    ZoneConfig,
    distance,
    noise_free_effective_zone,
    witness_layout,
)
from .sensing import (
    FeatureDescriptor,
    Modality,
    Scene,
    rf_similarity,
    sample_rf_feature,
    visual_detect,
)
from .policy import (
    AdmitDecision,
    Policy,
    PolicyError,
    Requirement,
    RequirementKind,
    builtin_policy,
    builtin_policy_ids,
    evaluate_admit,
    parse_policy,
    serialize_policy,
)
from .merkle import MerkleProof, merkle_root, prove_leaf, verify_leaf
from .evidence import (
    Attestation,
    Block,
    Claim,
    EvidenceObject,
    Verdict,
    VerdictCode,
    WitnessRegistry,
    append_block,
    assemble_evidence,
    make_claim,
    sign_attestation,
    verify_attestation,
    verify_chain,
    verify_evidence,
)
from .witness import (
    Environment,
    IntervalOutcome,
    WitnessBehavior,
    WitnessNode,
    find_equivocations,
    quorum_round,
    witness_step,
)
from .simulation import (
    SCENARIO_NAMES,
    CalibrationResult,
    GridSpec,
    HeatmapGrid,
    RunResult,
    ScenarioConfig,
    Summary,
    build_scenario,
    calibrate,
    heatmap,
    load_scenario,
    monte_carlo,
    run_scenario,
)

__version__ = "0.1.0"
