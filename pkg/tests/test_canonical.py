import pytest

from witnesszone import canonical
from witnesszone import (
    AdmitDecision,
    FeatureDescriptor,
    Modality,
    Vector3,
    make_claim,
)
from witnesszone.channel import RangingResult
from witnesszone.evidence import Attestation, Block, QuorumSignature


def corpus():
    feature = FeatureDescriptor(Modality.RF_FINGERPRINT, 0.875, 1.0, 0.0, "w1")
    claim = make_claim(3, "Z-01", Vector3(5.0, 5.0, 0.0), (feature,), b'{"asserts":[]}')
    attestation = Attestation(
        witness_id="w2",
        interval_index=3,
        block_ref=b"\x11" * 32,
        claim_id=claim.claim_id,
        merkle_root=b"\x22" * 32,
        policy_id="supply_chain_v1",
        zone_id="Z-01",
        signature=b"\x33" * 64,
    )
    block = Block(
        interval_index=0,
        prev_digest=b"\x00" * 32,
        admitted_claim_ids=(claim.claim_id,),
        zone_id="Z-01",
        digest=b"\x44" * 32,
    )
    decision = AdmitDecision(
        admitted=True,
        per_requirement={"distance_bound": True, "rf_similarity": True},
        evaluated_inputs_digest=b"\x55" * 32,
    )
    ranging = RangingResult("w1", 15.0, 14.75, 32)
    return [
        Vector3(1.5, -2.0, 0.0),
        feature,
        FeatureDescriptor(Modality.VISUAL, True),
        FeatureDescriptor(Modality.RF_FINGERPRINT, 2),
        claim,
        attestation,
        QuorumSignature("w1", b"\x66" * 64),
        block,
        decision,
        ranging,
    ]


@pytest.mark.parametrize("record", corpus(), ids=lambda r: type(r).__name__)
def test_round_trip(record):
    encoded = canonical.encode(record)
    assert canonical.encode(record) == encoded  # determinism
    assert canonical.decode(encoded) == record


def test_field_change_changes_bytes():
    a = Vector3(1.0, 2.0, 3.0)
    b = Vector3(1.0, 2.0, 3.5)
    assert canonical.encode(a) != canonical.encode(b)


def test_injectivity_over_corpus():
    encodings = [canonical.encode(r) for r in corpus()]
    assert len(set(encodings)) == len(encodings)


def test_unregistered_type_rejected():
    with pytest.raises(canonical.CanonicalError):
        canonical.encode(object())


def test_truncated_bytes_rejected():
    encoded = canonical.encode(Vector3(1.0, 2.0, 3.0))
    with pytest.raises(canonical.CanonicalError):
        canonical.decode(encoded[:-3])


def test_trailing_bytes_rejected():
    encoded = canonical.encode(Vector3(1.0, 2.0, 3.0))
    with pytest.raises(canonical.CanonicalError):
        canonical.decode(encoded + b"\x00")


def test_scalar_tagging_distinguishes_types():
    assert canonical.encode_scalar(True) != canonical.encode_scalar(1)
    assert canonical.encode_scalar(1) != canonical.encode_scalar(1.0)
    assert canonical.decode_scalar(canonical.encode_scalar(0.875)) == 0.875
    assert canonical.decode_scalar(canonical.encode_scalar(b"\x01\x02")) == b"\x01\x02"


def test_float_shortest_round_trip_text():
    # representative values keep their exact bit pattern through text
    for value in (0.1, 1 / 3, 21.425, -0.0, 1e-9, 123456.789):
        v = Vector3(value, 0.0, 0.0)
        assert canonical.decode(canonical.encode(v)).x == value


def test_map_encoding_independent_of_insertion_order():
    a = AdmitDecision(True, {"a": True, "b": True}, b"\x00" * 32)
    b = AdmitDecision(True, {"b": True, "a": True}, b"\x00" * 32)
    assert canonical.encode(a) == canonical.encode(b)
