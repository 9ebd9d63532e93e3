import numpy as np
import pytest
from hypothesis import given, strategies as st

from witnesszone import (
    FeatureDescriptor,
    Modality,
    RequirementKind,
    Vector3,
    builtin_policy,
    builtin_policy_ids,
    evaluate_admit,
    make_claim,
    parse_policy,
    serialize_policy,
)
from witnesszone.channel import RangingResult
from witnesszone.policy import (
    MissingQuorumError,
    PolicyInvariantError,
    PolicySyntaxError,
    ThresholdRangeError,
    UnknownRequirementError,
)

MEDIA_DOC = """\
policy: media_v2
zone_id: Z-17
interval: 2s
quorum:
    k: 3
    n: 4
requirements:
    distance_bound:
        max_distance: 20m
    visual_similarity:
        metric: vlm_embedding
        threshold: 0.7
    audio_hash_match: true
    beacon_overlap:
        min_count: 2
on_fail: reject
"""


def ranging(estimate, witness="w1"):
    return RangingResult(witness_id=witness, true_distance=estimate, estimate=estimate, rounds_used=32)


def claim():
    return make_claim(0, "Z-01", Vector3(5, 5, 0), (), b"{}")


def rf(value, freshness=0.0):
    return FeatureDescriptor(Modality.RF_FINGERPRINT, float(value), freshness=freshness)


def visual(value):
    return FeatureDescriptor(Modality.VISUAL, bool(value))


class TestParsePolicy:
    def test_media_profile_values(self):
        policy = parse_policy(MEDIA_DOC)
        assert policy.policy_id == "media_v2"
        assert policy.zone_id == "Z-17"
        assert policy.interval_seconds == 2.0
        assert (policy.quorum_k, policy.quorum_n) == (3, 4)
        by_kind = {r.kind: r for r in policy.requirements}
        assert by_kind[RequirementKind.DISTANCE_BOUND].threshold == 20.0
        assert by_kind[RequirementKind.VISUAL_SIMILARITY].threshold == 0.7
        assert by_kind[RequirementKind.VISUAL_SIMILARITY].metric == "vlm_embedding"
        assert by_kind[RequirementKind.AUDIO_HASH_MATCH].threshold is True
        assert by_kind[RequirementKind.BEACON_OVERLAP].threshold == 2
        assert policy.on_fail == "reject"

    def test_quorum_k_exceeds_n(self):
        doc = MEDIA_DOC.replace("k: 3", "k: 5")
        with pytest.raises(PolicyInvariantError):
            parse_policy(doc)

    def test_similarity_out_of_range(self):
        doc = MEDIA_DOC.replace("threshold: 0.7", "threshold: 1.5")
        with pytest.raises(ThresholdRangeError):
            parse_policy(doc)

    def test_unknown_requirement_kind(self):
        doc = MEDIA_DOC.replace("audio_hash_match", "aura_match")
        with pytest.raises(UnknownRequirementError):
            parse_policy(doc)

    def test_missing_quorum(self):
        doc = "\n".join(
            line for line in MEDIA_DOC.splitlines() if line.split(":")[0].strip() not in ("quorum", "k", "n")
        )
        with pytest.raises(MissingQuorumError):
            parse_policy(doc)

    def test_unknown_top_level_key(self):
        with pytest.raises(PolicySyntaxError):
            parse_policy(MEDIA_DOC + "flavor: mint\n")

    def test_syntax_error(self):
        with pytest.raises(PolicySyntaxError):
            parse_policy("policy media_v2\n")

    def test_unsupported_on_fail(self):
        with pytest.raises(PolicySyntaxError):
            parse_policy(MEDIA_DOC.replace("on_fail: reject", "on_fail: defer"))

    @pytest.mark.parametrize("policy_id", ["cocoa_v1", "media_v2", "mobility_v3"])
    def test_profile_round_trip(self, policy_id):
        original = builtin_policy(policy_id)
        assert parse_policy(serialize_policy(original)) == original

    def test_builtin_ids(self):
        assert set(builtin_policy_ids()) == {
            "supply_chain_v1",
            "visual_v1",
            "cocoa_v1",
            "media_v2",
            "mobility_v3",
        }

    def test_cocoa_threshold(self):
        cocoa = builtin_policy("cocoa_v1")
        by_kind = {r.kind: r for r in cocoa.requirements}
        assert by_kind[RequirementKind.RF_SIMILARITY].threshold == 0.85


class TestEvaluateAdmit:
    def setup_method(self):
        self.policy = builtin_policy("supply_chain_v1")

    def test_supply_chain_admits(self):
        decision = evaluate_admit(self.policy, claim(), ranging(12.0), [rf(0.9)])
        assert decision.admitted is True
        assert decision.per_requirement == {"distance_bound": True, "rf_similarity": True}

    def test_distance_gate_rejects(self):
        decision = evaluate_admit(self.policy, claim(), ranging(25.0), [rf(0.9)])
        assert decision.admitted is False
        assert decision.per_requirement["distance_bound"] is False

    def test_acceptance_distance_overrides_document_gate(self):
        decision = evaluate_admit(
            self.policy, claim(), ranging(20.4), [rf(0.9)], acceptance_distance=21.425
        )
        assert decision.per_requirement["distance_bound"] is True
        strict = evaluate_admit(self.policy, claim(), ranging(20.4), [rf(0.9)])
        assert strict.per_requirement["distance_bound"] is False

    def test_rf_threshold_is_strict(self):
        decision = evaluate_admit(self.policy, claim(), ranging(12.0), [rf(0.5)])
        assert decision.per_requirement["rf_similarity"] is False

    def test_missing_modality_is_false_not_error(self):
        decision = evaluate_admit(self.policy, claim(), ranging(12.0), [])
        assert decision.admitted is False
        assert decision.per_requirement["rf_similarity"] is False

    def test_stale_feature_treated_as_missing(self):
        decision = evaluate_admit(self.policy, claim(), ranging(12.0), [rf(0.9, freshness=2.5)])
        assert decision.per_requirement["rf_similarity"] is False

    def test_visual_policy_rejects_missing_object(self):
        policy = builtin_policy("visual_v1")
        decision = evaluate_admit(policy, claim(), ranging(12.0), [rf(0.9), visual(False)])
        assert decision.admitted is False
        assert decision.per_requirement["visual_similarity"] is False

    def test_media_profile_gates(self):
        policy = parse_policy(MEDIA_DOC)
        beacon = FeatureDescriptor(Modality.RF_FINGERPRINT, 2)
        audio = FeatureDescriptor(Modality.AUDIO, True)
        features = [visual(True), audio, beacon]
        decision = evaluate_admit(policy, claim(), ranging(12.0), features)
        assert decision.admitted is True
        low_beacon = [visual(True), audio, FeatureDescriptor(Modality.RF_FINGERPRINT, 1)]
        decision = evaluate_admit(policy, claim(), ranging(12.0), low_beacon)
        assert decision.per_requirement["beacon_overlap"] is False

    def test_deterministic(self):
        a = evaluate_admit(self.policy, claim(), ranging(12.0), [rf(0.75)])
        b = evaluate_admit(self.policy, claim(), ranging(12.0), [rf(0.75)])
        assert a == b

    def test_digest_tracks_inputs(self):
        a = evaluate_admit(self.policy, claim(), ranging(12.0), [rf(0.75)])
        b = evaluate_admit(self.policy, claim(), ranging(12.5), [rf(0.75)])
        assert a.evaluated_inputs_digest != b.evaluated_inputs_digest
        assert len(a.evaluated_inputs_digest) == 32

    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=30.0),
    )
    def test_raising_threshold_never_admits_a_rejection(self, thr, bump, estimate):
        import dataclasses

        policy = builtin_policy("supply_chain_v1")
        reqs = tuple(
            dataclasses.replace(r, threshold=thr)
            if r.kind is RequirementKind.RF_SIMILARITY
            else r
            for r in policy.requirements
        )
        base = dataclasses.replace(policy, requirements=reqs)
        raised_thr = min(1.0, thr + bump)
        raised = dataclasses.replace(
            base,
            requirements=tuple(
                dataclasses.replace(r, threshold=raised_thr)
                if r.kind is RequirementKind.RF_SIMILARITY
                else r
                for r in reqs
            ),
        )
        features = [rf(0.6)]
        admitted_base = evaluate_admit(base, claim(), ranging(estimate), features).admitted
        admitted_raised = evaluate_admit(raised, claim(), ranging(estimate), features).admitted
        if not admitted_base:
            assert not admitted_raised

    def test_conjunction_exhaustive_small_case(self):
        # every combination of gate outcomes composes by AND
        policy = builtin_policy("supply_chain_v1")
        for dist_ok in (False, True):
            for rf_ok in (False, True):
                estimate = 12.0 if dist_ok else 25.0
                value = 0.9 if rf_ok else 0.1
                decision = evaluate_admit(policy, claim(), ranging(estimate), [rf(value)])
                assert decision.admitted == (dist_ok and rf_ok)
                assert decision.admitted == all(decision.per_requirement.values())
