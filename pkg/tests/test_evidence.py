import dataclasses

import numpy as np
import pytest

from witnesszone import (
    Vector3,
    VerdictCode,
    ZoneConfig,
    append_block,
    assemble_evidence,
    builtin_policy,
    make_claim,
    sign_attestation,
    verify_attestation,
    verify_chain,
    verify_evidence,
)
from witnesszone.evidence import (
    GENESIS_PREV_DIGEST,
    BlockBindingError,
    ChainError,
    InsufficientQuorumError,
    MalformedFileError,
    UnknownWitnessError,
    WitnessRegistry,
    block_digest,
    claim_digest,
    claim_payload,
    generate_keypair,
    payload_assertions,
    read_chain_file,
    read_evidence_file,
    write_chain_file,
    write_evidence_file,
)

ZONE = ZoneConfig("Z-01")
POLICIES = {"supply_chain_v1": builtin_policy("supply_chain_v1")}


def make_witness_keys(n=4):
    keys = {}
    for i in range(n):
        wid = f"w{i + 1}"
        keys[wid] = generate_keypair(wid.encode())
    return keys


KEYS = make_witness_keys()
REGISTRY = WitnessRegistry()
for wid, (_, pub) in KEYS.items():
    REGISTRY.add("Z-01", wid, pub)


def make_test_claim(interval=0):
    return make_claim(interval, "Z-01", Vector3(5, 5, 0), (), claim_payload())


def attest(wid, claim, block_ref=GENESIS_PREV_DIGEST, root=None, policy_id="supply_chain_v1"):
    secret, _ = KEYS[wid]
    return sign_attestation(
        secret,
        wid,
        claim.interval_index,
        block_ref,
        claim.claim_id,
        root if root is not None else b"\x77" * 32,
        policy_id,
        claim.zone_id,
    )


class TestClaims:
    def test_claim_id_matches_digest_of_fields(self):
        claim = make_test_claim()
        assert claim.claim_id == claim_digest(claim)
        assert len(claim.claim_id) == 32

    def test_claim_id_depends_on_every_field(self):
        base = make_test_claim()
        variants = [
            make_claim(1, "Z-01", Vector3(5, 5, 0), (), claim_payload()),
            make_claim(0, "Z-02", Vector3(5, 5, 0), (), claim_payload()),
            make_claim(0, "Z-01", Vector3(5, 5.5, 0), (), claim_payload()),
            make_claim(0, "Z-01", Vector3(5, 5, 0), (), claim_payload(["red car"])),
        ]
        ids = {base.claim_id} | {v.claim_id for v in variants}
        assert len(ids) == 5

    def test_payload_assertions_round_trip(self):
        assert payload_assertions(claim_payload(["red car", "fountain"])) == (
            "fountain",
            "red car",
        )
        assert payload_assertions(b"not json") == ()


class TestAttestations:
    def test_sign_then_verify(self):
        att = attest("w1", make_test_claim())
        assert verify_attestation(att, REGISTRY) is True

    def test_wrong_witness_key_fails(self):
        att = attest("w1", make_test_claim())
        forged = dataclasses.replace(att, witness_id="w2")
        assert verify_attestation(forged, REGISTRY) is False

    def test_flipped_root_fails(self):
        att = attest("w1", make_test_claim())
        bad = bytearray(att.merkle_root)
        bad[0] ^= 0x01
        assert verify_attestation(dataclasses.replace(att, merkle_root=bytes(bad)), REGISTRY) is False

    def test_unknown_witness_raises(self):
        att = attest("w1", make_test_claim())
        with pytest.raises(UnknownWitnessError):
            verify_attestation(dataclasses.replace(att, witness_id="w9"), REGISTRY)

    def test_signature_is_deterministic(self):
        a = attest("w1", make_test_claim())
        b = attest("w1", make_test_claim())
        assert a.signature == b.signature


class TestAssembleEvidence:
    def test_exact_quorum(self):
        claim = make_test_claim()
        atts = [attest(w, claim) for w in ("w1", "w2", "w3")]
        ev = assemble_evidence(atts, ZONE, claim)
        assert len(ev.witness_roots) == 3
        assert ev.policy_id == "supply_chain_v1"
        assert ev.block_ref == GENESIS_PREV_DIGEST

    def test_interval_mismatch_breaks_quorum(self):
        claim = make_test_claim(interval=0)
        later = make_test_claim(interval=1)
        atts = [attest("w1", claim), attest("w2", claim), attest("w3", later)]
        with pytest.raises(InsufficientQuorumError):
            assemble_evidence(atts, ZONE, claim)

    def test_duplicate_witness_counts_once(self):
        claim = make_test_claim()
        atts = [attest(w, claim) for w in ("w1", "w1", "w2", "w3")]
        ev = assemble_evidence(atts, ZONE, claim)
        assert sorted(ev.witness_roots) == ["w1", "w2", "w3"]
        atts = [attest(w, claim) for w in ("w1", "w1", "w2")]
        with pytest.raises(InsufficientQuorumError):
            assemble_evidence(atts, ZONE, claim)

    def test_conflicting_block_refs_rejected(self):
        claim = make_test_claim()
        atts = [
            attest("w1", claim),
            attest("w2", claim),
            attest("w3", claim, block_ref=b"\x01" * 32),
        ]
        with pytest.raises(BlockBindingError):
            assemble_evidence(atts, ZONE, claim)

    def test_quorum_soundness_random_multisets(self):
        # no multiset with fewer than k distinct same-interval witnesses
        # ever assembles (smaller sibling of the acceptance-level test)
        rng = np.random.default_rng(42)
        claim0 = make_test_claim(0)
        claim1 = make_test_claim(1)
        for _ in range(500):
            n = rng.integers(0, 6)
            atts = []
            for _ in range(n):
                wid = f"w{rng.integers(1, 5)}"
                c = claim0 if rng.random() < 0.7 else claim1
                atts.append(attest(wid, c))
            distinct = {a.witness_id for a in atts if a.interval_index == 0}
            if len(distinct) < ZONE.quorum_k:
                with pytest.raises(InsufficientQuorumError):
                    assemble_evidence(atts, ZONE, claim0)
            else:
                assert len(assemble_evidence(atts, ZONE, claim0).witness_roots) >= 3


class TestVerifyEvidence:
    def build(self):
        claim = make_test_claim()
        atts = [attest(w, claim) for w in ("w1", "w2", "w3")]
        return assemble_evidence(atts, ZONE, claim)

    def test_untampered_passes(self):
        verdict = verify_evidence(self.build(), REGISTRY, POLICIES)
        assert verdict.ok and verdict.code is VerdictCode.PASS

    def test_unknown_policy(self):
        ev = dataclasses.replace(self.build(), policy_id="media_v3")
        verdict = verify_evidence(ev, REGISTRY, POLICIES)
        assert verdict.code is VerdictCode.UNKNOWN_POLICY

    def test_unknown_zone(self):
        ev = self.build()
        claim = dataclasses.replace(ev.claim, zone_id="Z-99")
        ev = dataclasses.replace(ev, zone_id="Z-99", claim=claim)
        verdict = verify_evidence(ev, REGISTRY, POLICIES)
        assert verdict.code is VerdictCode.UNKNOWN_ZONE

    def test_flipped_signature_fails(self):
        ev = self.build()
        sig = bytearray(ev.quorum_signatures[0].signature)
        sig[10] ^= 0x04
        sigs = (
            dataclasses.replace(ev.quorum_signatures[0], signature=bytes(sig)),
        ) + ev.quorum_signatures[1:]
        verdict = verify_evidence(dataclasses.replace(ev, quorum_signatures=sigs), REGISTRY, POLICIES)
        assert verdict.code is VerdictCode.SIGNATURE_FAILURE

    def test_tampered_claim_field_fails(self):
        ev = self.build()
        claim = dataclasses.replace(ev.claim, payload=b'{"asserts":["x"]}')
        verdict = verify_evidence(dataclasses.replace(ev, claim=claim), REGISTRY, POLICIES)
        assert verdict.code is VerdictCode.CLAIM_DIGEST_MISMATCH

    def test_insufficient_quorum(self):
        ev = self.build()
        pruned = dataclasses.replace(
            ev,
            witness_roots={"w1": ev.witness_roots["w1"], "w2": ev.witness_roots["w2"]},
            quorum_signatures=ev.quorum_signatures[:2],
        )
        verdict = verify_evidence(pruned, REGISTRY, POLICIES)
        assert verdict.code is VerdictCode.INSUFFICIENT_QUORUM

    def test_block_binding_mismatch(self):
        ev = self.build()
        verdict = verify_evidence(ev, REGISTRY, POLICIES, expected_block_ref=b"\x09" * 32)
        assert verdict.code is VerdictCode.BLOCK_BINDING_MISMATCH


class TestBlockChain:
    def test_genesis_digest_definition(self):
        chain = []
        block = append_block(chain, 0, [], "Z-01")
        assert block.prev_digest == GENESIS_PREV_DIGEST
        assert block.digest == block_digest(GENESIS_PREV_DIGEST, 0, "Z-01", ())

    def test_chain_grows_and_verifies(self):
        chain = []
        claim = make_test_claim()
        for i in range(30):
            append_block(chain, i, [claim.claim_id] if i % 2 == 0 else [], "Z-01")
        assert verify_chain(chain) is True

    def test_non_contiguous_interval_rejected(self):
        chain = []
        append_block(chain, 0, [], "Z-01")
        with pytest.raises(ChainError):
            append_block(chain, 2, [], "Z-01")

    def test_genesis_must_start_at_zero(self):
        with pytest.raises(ChainError):
            append_block([], 1, [], "Z-01")

    def test_historical_mutation_detected(self):
        chain = []
        claim = make_test_claim()
        for i in range(5):
            append_block(chain, i, [claim.claim_id], "Z-01")
        other = make_test_claim(9)
        chain[2] = dataclasses.replace(chain[2], admitted_claim_ids=(other.claim_id,))
        assert verify_chain(chain) is False

    def test_admitted_ids_sorted_and_deduped(self):
        a = make_test_claim(0).claim_id
        b = make_test_claim(1).claim_id
        chain = []
        block = append_block(chain, 0, [b, a, b], "Z-01")
        assert block.admitted_claim_ids == tuple(sorted({a, b}))


class TestEvidenceFiles:
    def test_evidence_round_trip(self, tmp_path):
        claim = make_test_claim()
        atts = [attest(w, claim) for w in ("w1", "w2", "w3")]
        ev = assemble_evidence(atts, ZONE, claim)
        path = tmp_path / "evidence.bin"
        write_evidence_file(str(path), ev)
        loaded = read_evidence_file(str(path))
        assert loaded == ev
        assert verify_evidence(loaded, REGISTRY, POLICIES).ok

    def test_truncated_evidence_file(self, tmp_path):
        claim = make_test_claim()
        atts = [attest(w, claim) for w in ("w1", "w2", "w3")]
        path = tmp_path / "evidence.bin"
        write_evidence_file(str(path), assemble_evidence(atts, ZONE, claim))
        data = path.read_bytes()
        path.write_bytes(data[: len(data) // 2])
        with pytest.raises(MalformedFileError):
            read_evidence_file(str(path))

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "evidence.bin"
        path.write_bytes(b"NOPE\x01junk")
        with pytest.raises(MalformedFileError):
            read_evidence_file(str(path))

    def test_chain_round_trip(self, tmp_path):
        chain = []
        for i in range(4):
            append_block(chain, i, [], "Z-01")
        path = tmp_path / "chain.bin"
        write_chain_file(str(path), chain)
        assert read_chain_file(str(path)) == tuple(chain)

    def test_registry_round_trip(self):
        text = REGISTRY.to_json()
        loaded = WitnessRegistry.from_json(text)
        assert loaded.zones == REGISTRY.zones
        with pytest.raises(MalformedFileError):
            WitnessRegistry.from_json("{}")
