"""Binary Merkle tree with domain-separated hashing and selective opening.

Leaves hash with a 0x00 prefix, interior nodes with 0x01, preventing a
leaf from being reinterpreted as a node.  Odd levels duplicate the last
node.  Proofs are sibling paths from leaf to root and support opening a
single committed value without revealing the rest.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "MerkleError",
    "MerkleProof",
    "hash_leaf",
    "hash_nodes",
    "merkle_root",
    "prove_leaf",
    "verify_leaf",
]

LEAF_PREFIX = b"\x00"
NODE_PREFIX = b"\x01"


class MerkleError(ValueError):
    pass


def hash_leaf(data: bytes) -> bytes:
    return hashlib.sha256(LEAF_PREFIX + data).digest()


def hash_nodes(left: bytes, right: bytes) -> bytes:
    return hashlib.sha256(NODE_PREFIX + left + right).digest()


@dataclass(frozen=True)
class MerkleProof:
    """Sibling path for one leaf; each entry is (digest, sibling_is_right)."""

    leaf_index: int
    path: tuple[tuple[bytes, bool], ...]


def _level_up(nodes: list[bytes]) -> list[bytes]:
    if len(nodes) % 2 == 1:
        nodes = nodes + [nodes[-1]]
    return [hash_nodes(nodes[i], nodes[i + 1]) for i in range(0, len(nodes), 2)]


def merkle_root(leaves: Sequence[bytes]) -> bytes:
    """Root digest over the given leaf byte strings."""
    if not leaves:
        raise MerkleError("cannot build a Merkle tree over zero leaves")
    nodes = [hash_leaf(leaf) for leaf in leaves]
    while len(nodes) > 1:
        nodes = _level_up(nodes)
    return nodes[0]


def prove_leaf(leaves: Sequence[bytes], index: int) -> MerkleProof:
    """Produce the opening proof for ``leaves[index]``."""
    if not leaves:
        raise MerkleError("cannot build a Merkle tree over zero leaves")
    if not 0 <= index < len(leaves):
        raise MerkleError(f"leaf index {index} out of range for {len(leaves)} leaves")
    nodes = [hash_leaf(leaf) for leaf in leaves]
    path: list[tuple[bytes, bool]] = []
    pos = index
    while len(nodes) > 1:
        if len(nodes) % 2 == 1:
            nodes = nodes + [nodes[-1]]
        if pos % 2 == 0:
            path.append((nodes[pos + 1], True))
        else:
            path.append((nodes[pos - 1], False))
        nodes = [hash_nodes(nodes[i], nodes[i + 1]) for i in range(0, len(nodes), 2)]
        pos //= 2
    return MerkleProof(leaf_index=index, path=tuple(path))


def verify_leaf(root: bytes, leaf: bytes, proof: MerkleProof) -> bool:
    """Check an opening proof against a root; False on any tampering."""
    node = hash_leaf(leaf)
    for sibling, sibling_is_right in proof.path:
        node = hash_nodes(node, sibling) if sibling_is_right else hash_nodes(sibling, node)
    return node == root
