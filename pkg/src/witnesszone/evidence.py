"""Claims, attestations, evidence objects, and the hash-chained block log.

The externally verifiable artifact is the evidence object

    < block_ref, claim, {witness roots}, quorum signatures, policy_id, zone_id >

assembled once at least ``k`` distinct witnesses signed the same claim in
the same interval.  The quorum signature is realized as the multiset of
individual witness signatures; verification is written against that
surface so a true threshold scheme could replace it without changing
callers.  Attestations bind to the digest of the *previous* finalized
block (the current block cannot be known before signing).

Signatures are Ed25519 (deterministic); hashes are SHA-256.  Simulation
keys derive from the scenario master seed, never from OS entropy.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from . import canonical
from .geometry import Vector3, ZoneConfig
from .sensing import FeatureDescriptor

__all__ = [
    "EvidenceError",
    "UnknownWitnessError",
    "InsufficientQuorumError",
    "BlockBindingError",
    "ChainError",
    "MalformedFileError",
    "Claim",
    "Attestation",
    "QuorumSignature",
    "EvidenceObject",
    "Block",
    "VerdictCode",
    "Verdict",
    "WitnessRegistry",
    "GENESIS_PREV_DIGEST",
    "generate_keypair",
    "claim_payload",
    "payload_assertions",
    "make_claim",
    "claim_digest",
    "sign_attestation",
    "verify_attestation",
    "assemble_evidence",
    "verify_evidence",
    "block_digest",
    "append_block",
    "verify_chain",
    "write_evidence_file",
    "read_evidence_file",
    "write_chain_file",
    "read_chain_file",
]

GENESIS_PREV_DIGEST = b"\x00" * 32

EVIDENCE_MAGIC = b"WZEV"
CHAIN_MAGIC = b"WZCH"
FILE_FORMAT_VERSION = 1


class EvidenceError(ValueError):
    """Base class for evidence assembly/verification failures."""


class UnknownWitnessError(EvidenceError):
    pass


class InsufficientQuorumError(EvidenceError):
    pass


class BlockBindingError(EvidenceError):
    pass


class ChainError(EvidenceError):
    pass


class MalformedFileError(EvidenceError):
    pass


# -- record types ------------------------------------------------------------

@dataclass(frozen=True)
class Claim:
    """Per-interval context-bearing assertion broadcast by the prover."""

    claim_id: bytes
    interval_index: int
    zone_id: str
    claimed_position: Vector3
    disclosed_features: tuple[FeatureDescriptor, ...]
    payload: bytes


@dataclass(frozen=True)
class _ClaimBody:
    interval_index: int
    zone_id: str
    claimed_position: Vector3
    disclosed_features: tuple[FeatureDescriptor, ...]
    payload: bytes


@dataclass(frozen=True)
class Attestation:
    """One witness's signed commitment to its local admit decision."""

    witness_id: str
    interval_index: int
    block_ref: bytes
    claim_id: bytes
    merkle_root: bytes
    policy_id: str
    zone_id: str
    signature: bytes


@dataclass(frozen=True)
class _AttestationBody:
    block_ref: bytes
    claim_id: bytes
    merkle_root: bytes
    policy_id: str
    zone_id: str


@dataclass(frozen=True)
class QuorumSignature:
    witness_id: str
    signature: bytes


@dataclass(frozen=True)
class EvidenceObject:
    """Externally verifiable quorum artifact for one admitted claim."""

    block_ref: bytes
    claim: Claim
    witness_roots: Mapping[str, bytes]
    quorum_signatures: tuple[QuorumSignature, ...]
    policy_id: str
    zone_id: str

    @property
    def interval_index(self) -> int:
        return self.claim.interval_index


@dataclass(frozen=True)
class Block:
    """One finalized interval: admitted claim ids chained to the parent."""

    interval_index: int
    prev_digest: bytes
    admitted_claim_ids: tuple[bytes, ...]
    zone_id: str
    digest: bytes


@dataclass(frozen=True)
class _BlockBody:
    prev_digest: bytes
    interval_index: int
    zone_id: str
    admitted_claim_ids: tuple[bytes, ...]


_VEC3 = canonical.record_of("vector3")
_FEATURES = canonical.seq_of(canonical.record_of("feature"))

canonical.register(
    "claim_body",
    _ClaimBody,
    (
        ("interval_index", canonical.I64),
        ("zone_id", canonical.STR),
        ("claimed_position", _VEC3),
        ("disclosed_features", _FEATURES),
        ("payload", canonical.BYTES),
    ),
)
canonical.register(
    "claim",
    Claim,
    (
        ("claim_id", canonical.BYTES),
        ("interval_index", canonical.I64),
        ("zone_id", canonical.STR),
        ("claimed_position", _VEC3),
        ("disclosed_features", _FEATURES),
        ("payload", canonical.BYTES),
    ),
)
canonical.register(
    "attestation_body",
    _AttestationBody,
    (
        ("block_ref", canonical.BYTES),
        ("claim_id", canonical.BYTES),
        ("merkle_root", canonical.BYTES),
        ("policy_id", canonical.STR),
        ("zone_id", canonical.STR),
    ),
)
canonical.register(
    "attestation",
    Attestation,
    (
        ("witness_id", canonical.STR),
        ("interval_index", canonical.I64),
        ("block_ref", canonical.BYTES),
        ("claim_id", canonical.BYTES),
        ("merkle_root", canonical.BYTES),
        ("policy_id", canonical.STR),
        ("zone_id", canonical.STR),
        ("signature", canonical.BYTES),
    ),
)
canonical.register(
    "quorum_signature",
    QuorumSignature,
    (("witness_id", canonical.STR), ("signature", canonical.BYTES)),
)
canonical.register(
    "evidence_object",
    EvidenceObject,
    (
        ("block_ref", canonical.BYTES),
        ("claim", canonical.record_of("claim")),
        ("witness_roots", canonical.map_of(canonical.BYTES)),
        ("quorum_signatures", canonical.seq_of(canonical.record_of("quorum_signature"))),
        ("policy_id", canonical.STR),
        ("zone_id", canonical.STR),
    ),
)
canonical.register(
    "block_body",
    _BlockBody,
    (
        ("prev_digest", canonical.BYTES),
        ("interval_index", canonical.I64),
        ("zone_id", canonical.STR),
        ("admitted_claim_ids", canonical.seq_of(canonical.BYTES)),
    ),
)
canonical.register(
    "block",
    Block,
    (
        ("interval_index", canonical.I64),
        ("prev_digest", canonical.BYTES),
        ("admitted_claim_ids", canonical.seq_of(canonical.BYTES)),
        ("zone_id", canonical.STR),
        ("digest", canonical.BYTES),
    ),
)


# -- keys and registry ---------------------------------------------------------

def generate_keypair(seed_material: bytes) -> tuple[bytes, bytes]:
    """Derive a deterministic Ed25519 keypair from arbitrary seed bytes.

    Returns (secret key bytes, public key bytes).  Simulation-grade only:
    real deployments provision keys through the zone's identity layer.
    """
    secret = hashlib.sha256(b"witnesszone/keygen" + seed_material).digest()
    private = Ed25519PrivateKey.from_private_bytes(secret)
    public = private.public_key().public_bytes_raw()
    return secret, public


@dataclass
class WitnessRegistry:
    """Zone-scoped directory of witness verification keys."""

    zones: dict[str, dict[str, bytes]] = field(default_factory=dict)
    _cache: dict[bytes, Ed25519PublicKey] = field(default_factory=dict, repr=False)

    def add(self, zone_id: str, witness_id: str, public_key: bytes) -> None:
        self.zones.setdefault(zone_id, {})[witness_id] = public_key

    def has_zone(self, zone_id: str) -> bool:
        return zone_id in self.zones

    def public_key(self, zone_id: str, witness_id: str) -> Ed25519PublicKey:
        zone = self.zones.get(zone_id)
        if zone is None or witness_id not in zone:
            raise UnknownWitnessError(f"no key for witness {witness_id!r} in zone {zone_id!r}")
        raw = zone[witness_id]
        key = self._cache.get(raw)
        if key is None:
            key = Ed25519PublicKey.from_public_bytes(raw)
            self._cache[raw] = key
        return key

    def to_json(self) -> str:
        doc = {
            "format": "witnesszone-registry",
            "version": FILE_FORMAT_VERSION,
            "zones": {
                z: {w: k.hex() for w, k in sorted(ws.items())}
                for z, ws in sorted(self.zones.items())
            },
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "WitnessRegistry":
        try:
            doc = json.loads(text)
            if doc.get("format") != "witnesszone-registry":
                raise ValueError("not a witness registry file")
            zones = {
                z: {w: bytes.fromhex(k) for w, k in ws.items()}
                for z, ws in doc["zones"].items()
            }
        except (ValueError, KeyError, AttributeError, TypeError) as exc:
            raise MalformedFileError(f"bad registry file: {exc}") from exc
        return WitnessRegistry(zones=zones)


# -- claims --------------------------------------------------------------------

def claim_payload(assertions: Sequence[str] = ()) -> bytes:
    """Encode the prover's structured assertion (asserted scene objects)."""
    return json.dumps({"asserts": sorted(assertions)}, sort_keys=True, separators=(",", ":")).encode()


def payload_assertions(payload: bytes) -> tuple[str, ...]:
    """Extract asserted scene objects; an unparseable payload asserts nothing."""
    try:
        doc = json.loads(payload.decode("utf-8"))
        asserts = doc.get("asserts", [])
        return tuple(str(a) for a in asserts)
    except (ValueError, AttributeError, UnicodeDecodeError):
        return ()


def claim_digest(claim: Claim) -> bytes:
    """Recompute the claim id from the claim's own fields."""
    body = _ClaimBody(
        interval_index=claim.interval_index,
        zone_id=claim.zone_id,
        claimed_position=claim.claimed_position,
        disclosed_features=tuple(claim.disclosed_features),
        payload=claim.payload,
    )
    return hashlib.sha256(canonical.encode(body)).digest()


def make_claim(
    interval_index: int,
    zone_id: str,
    claimed_position: Vector3,
    disclosed_features: Sequence[FeatureDescriptor] = (),
    payload: bytes = b"",
) -> Claim:
    """Build a claim with its content-derived id."""
    body = _ClaimBody(
        interval_index=interval_index,
        zone_id=zone_id,
        claimed_position=claimed_position,
        disclosed_features=tuple(disclosed_features),
        payload=payload,
    )
    cid = hashlib.sha256(canonical.encode(body)).digest()
    return Claim(
        claim_id=cid,
        interval_index=interval_index,
        zone_id=zone_id,
        claimed_position=claimed_position,
        disclosed_features=tuple(disclosed_features),
        payload=payload,
    )


# -- attestations ----------------------------------------------------------------

def _attestation_message(
    block_ref: bytes, claim_id: bytes, merkle_root: bytes, policy_id: str, zone_id: str
) -> bytes:
    return canonical.encode(
        _AttestationBody(
            block_ref=block_ref,
            claim_id=claim_id,
            merkle_root=merkle_root,
            policy_id=policy_id,
            zone_id=zone_id,
        )
    )


def sign_attestation(
    secret_key: bytes,
    witness_id: str,
    interval_index: int,
    block_ref: bytes,
    claim_id: bytes,
    merkle_root: bytes,
    policy_id: str,
    zone_id: str,
) -> Attestation:
    """Sign the (block_ref, claim, root, policy, zone) tuple for one witness."""
    message = _attestation_message(block_ref, claim_id, merkle_root, policy_id, zone_id)
    signature = Ed25519PrivateKey.from_private_bytes(secret_key).sign(message)
    return Attestation(
        witness_id=witness_id,
        interval_index=interval_index,
        block_ref=block_ref,
        claim_id=claim_id,
        merkle_root=merkle_root,
        policy_id=policy_id,
        zone_id=zone_id,
        signature=signature,
    )


def verify_attestation(att: Attestation, registry: WitnessRegistry) -> bool:
    """True iff the signature verifies under the registered witness key.

    Raises :class:`UnknownWitnessError` when the registry has no key for
    the attestation's witness in its zone.
    """
    key = registry.public_key(att.zone_id, att.witness_id)
    message = _attestation_message(
        att.block_ref, att.claim_id, att.merkle_root, att.policy_id, att.zone_id
    )
    try:
        key.verify(att.signature, message)
        return True
    except InvalidSignature:
        return False


# -- evidence assembly and verification -------------------------------------------

def assemble_evidence(
    attestations: Iterable[Attestation],
    zone: ZoneConfig,
    claim: Claim,
) -> EvidenceObject:
    """Combine verified attestations into an evidence object.

    Only attestations matching the claim's interval, id, zone, and a single
    policy version are quorum-composable; duplicate witnesses count once.
    Raises :class:`InsufficientQuorumError` below the zone's quorum and
    :class:`BlockBindingError` when matching attestations disagree on the
    block reference.
    """
    matching = [
        a
        for a in attestations
        if a.interval_index == claim.interval_index
        and a.claim_id == claim.claim_id
        and a.zone_id == claim.zone_id == zone.zone_id
    ]
    policy_ids = {a.policy_id for a in matching}
    if len(policy_ids) > 1:
        raise EvidenceError(f"attestations span multiple policies: {sorted(policy_ids)}")

    by_witness: dict[str, Attestation] = {}
    for att in matching:
        by_witness.setdefault(att.witness_id, att)  # duplicates count once

    if len(by_witness) < zone.quorum_k:
        raise InsufficientQuorumError(
            f"{len(by_witness)} distinct same-interval attestations < quorum k={zone.quorum_k}"
        )

    block_refs = {a.block_ref for a in by_witness.values()}
    if len(block_refs) != 1:
        raise BlockBindingError("attestations disagree on the block reference")

    ordered = sorted(by_witness.values(), key=lambda a: a.witness_id)
    return EvidenceObject(
        block_ref=next(iter(block_refs)),
        claim=claim,
        witness_roots={a.witness_id: a.merkle_root for a in ordered},
        quorum_signatures=tuple(QuorumSignature(a.witness_id, a.signature) for a in ordered),
        policy_id=ordered[0].policy_id,
        zone_id=claim.zone_id,
    )


class VerdictCode(str, Enum):
    PASS = "pass"
    UNKNOWN_ZONE = "unknown_zone"
    UNKNOWN_POLICY = "unknown_policy"
    CLAIM_DIGEST_MISMATCH = "claim_digest_mismatch"
    INSUFFICIENT_QUORUM = "insufficient_quorum"
    SIGNATURE_FAILURE = "signature_failure"
    BLOCK_BINDING_MISMATCH = "block_binding_mismatch"


@dataclass(frozen=True)
class Verdict:
    code: VerdictCode
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.code is VerdictCode.PASS


def verify_evidence(
    ev: EvidenceObject,
    registry: WitnessRegistry,
    known_policies: Mapping[str, "object"],
    expected_block_ref: bytes | None = None,
) -> Verdict:
    """Check an evidence object; returns PASS or the first failure found."""
    if not registry.has_zone(ev.zone_id):
        return Verdict(VerdictCode.UNKNOWN_ZONE, f"zone {ev.zone_id!r} not in registry")
    policy = known_policies.get(ev.policy_id)
    if policy is None:
        return Verdict(VerdictCode.UNKNOWN_POLICY, f"policy {ev.policy_id!r} unknown")
    if ev.claim.zone_id != ev.zone_id:
        return Verdict(
            VerdictCode.BLOCK_BINDING_MISMATCH,
            "claim zone differs from evidence zone",
        )

    recomputed = claim_digest(ev.claim)
    if recomputed != ev.claim.claim_id:
        return Verdict(VerdictCode.CLAIM_DIGEST_MISMATCH, "claim id does not match claim fields")

    roots = dict(ev.witness_roots)
    signatures = {qs.witness_id: qs.signature for qs in ev.quorum_signatures}
    if set(roots) != set(signatures) or len(ev.quorum_signatures) != len(signatures):
        return Verdict(
            VerdictCode.INSUFFICIENT_QUORUM,
            "witness roots and quorum signatures do not pair up",
        )
    if len(roots) < policy.quorum_k:
        return Verdict(
            VerdictCode.INSUFFICIENT_QUORUM,
            f"{len(roots)} witnesses < quorum k={policy.quorum_k}",
        )

    for witness_id in sorted(roots):
        att = Attestation(
            witness_id=witness_id,
            interval_index=ev.claim.interval_index,
            block_ref=ev.block_ref,
            claim_id=recomputed,
            merkle_root=roots[witness_id],
            policy_id=ev.policy_id,
            zone_id=ev.zone_id,
            signature=signatures[witness_id],
        )
        try:
            if not verify_attestation(att, registry):
                return Verdict(
                    VerdictCode.SIGNATURE_FAILURE, f"signature of {witness_id!r} invalid"
                )
        except UnknownWitnessError:
            return Verdict(
                VerdictCode.SIGNATURE_FAILURE, f"witness {witness_id!r} not in registry"
            )

    if expected_block_ref is not None and ev.block_ref != expected_block_ref:
        return Verdict(VerdictCode.BLOCK_BINDING_MISMATCH, "block reference mismatch")
    return Verdict(VerdictCode.PASS)


# -- hash-chained block log --------------------------------------------------------

def block_digest(
    prev_digest: bytes,
    interval_index: int,
    zone_id: str,
    admitted_claim_ids: Sequence[bytes],
) -> bytes:
    body = _BlockBody(
        prev_digest=prev_digest,
        interval_index=interval_index,
        zone_id=zone_id,
        admitted_claim_ids=tuple(admitted_claim_ids),
    )
    return hashlib.sha256(canonical.encode(body)).digest()


def append_block(
    chain: list[Block],
    interval_index: int,
    admitted_claim_ids: Sequence[bytes],
    zone_id: str,
) -> Block:
    """Append the block for one finalized interval; returns the new block."""
    if chain:
        expected = chain[-1].interval_index + 1
        prev = chain[-1].digest
        if zone_id != chain[-1].zone_id:
            raise ChainError("zone id differs from the chain's zone")
    else:
        expected = 0
        prev = GENESIS_PREV_DIGEST
    if interval_index != expected:
        raise ChainError(f"interval {interval_index} is not contiguous (expected {expected})")
    admitted = tuple(sorted(set(admitted_claim_ids)))
    block = Block(
        interval_index=interval_index,
        prev_digest=prev,
        admitted_claim_ids=admitted,
        zone_id=zone_id,
        digest=block_digest(prev, interval_index, zone_id, admitted),
    )
    chain.append(block)
    return block


def verify_chain(blocks: Sequence[Block]) -> bool:
    """Recompute every digest and check linkage and index monotonicity."""
    prev = GENESIS_PREV_DIGEST
    for i, block in enumerate(blocks):
        if block.interval_index != i:
            return False
        if block.prev_digest != prev:
            return False
        if blocks and block.zone_id != blocks[0].zone_id:
            return False
        if block.digest != block_digest(
            block.prev_digest, block.interval_index, block.zone_id, block.admitted_claim_ids
        ):
            return False
        prev = block.digest
    return True


# -- binary files -------------------------------------------------------------------

def _write_framed(path: str, magic: bytes, payload: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(magic + bytes([FILE_FORMAT_VERSION]) + payload)


def _read_framed(path: str, magic: bytes) -> bytes:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 5 or data[:4] != magic:
        raise MalformedFileError(f"bad magic, expected {magic!r}")
    if data[4] != FILE_FORMAT_VERSION:
        raise MalformedFileError(f"unsupported format version {data[4]}")
    return data[5:]


def write_evidence_file(path: str, ev: EvidenceObject) -> None:
    _write_framed(path, EVIDENCE_MAGIC, canonical.encode(ev))


def read_evidence_file(path: str) -> EvidenceObject:
    payload = _read_framed(path, EVIDENCE_MAGIC)
    try:
        obj = canonical.decode(payload)
    except canonical.CanonicalError as exc:
        raise MalformedFileError(f"bad evidence encoding: {exc}") from exc
    if not isinstance(obj, EvidenceObject):
        raise MalformedFileError("file does not contain an evidence object")
    return obj


def write_chain_file(path: str, blocks: Sequence[Block]) -> None:
    payload = struct.pack(">I", len(blocks))
    for block in blocks:
        encoded = canonical.encode(block)
        payload += struct.pack(">I", len(encoded)) + encoded
    _write_framed(path, CHAIN_MAGIC, payload)


def read_chain_file(path: str) -> tuple[Block, ...]:
    payload = _read_framed(path, CHAIN_MAGIC)
    try:
        (count,) = struct.unpack_from(">I", payload, 0)
        offset = 4
        blocks = []
        for _ in range(count):
            (n,) = struct.unpack_from(">I", payload, offset)
            offset += 4
            obj = canonical.decode(payload[offset : offset + n])
            offset += n
            if not isinstance(obj, Block):
                raise MalformedFileError("chain file contains a non-block record")
            blocks.append(obj)
        if offset != len(payload):
            raise MalformedFileError("trailing bytes in chain file")
    except (struct.error, canonical.CanonicalError) as exc:
        raise MalformedFileError(f"bad chain encoding: {exc}") from exc
    return tuple(blocks)
