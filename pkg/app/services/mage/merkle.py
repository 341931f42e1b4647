# File: app/services/mage/merkle.py

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from ...core.errors import ProofError, RecordFormatError
from ...models.mage import DIGEST_SIZE, MAINFO_SIZE, Mainfo, MerkleSidecar


def _h(b: bytes) -> bytes:
    return hashlib.sha256(b).digest()


def leaf_hash(index: int, entry: Mainfo) -> bytes:
    return _h(index.to_bytes(8, "little") + entry.to_bytes())


def tree_depth(leaf_count: int) -> int:
    """ceil(log2(leaf_count)); the tree is padded to a power of two."""
    if leaf_count < 1:
        raise ValueError("a Merkle tree needs at least one leaf")
    return (leaf_count - 1).bit_length()


@dataclass
class MerkleTree:
    entries: List[Mainfo]
    levels: List[List[bytes]]  # level 0 = padded leaves

    @classmethod
    def build(cls, entries: Sequence[Mainfo]) -> "MerkleTree":
        if not entries:
            raise ValueError("no leaves")
        lvl = [leaf_hash(i, e) for i, e in enumerate(entries)]
        width = 1 << tree_depth(len(lvl))
        lvl += [lvl[-1]] * (width - len(lvl))  # duplicate last leaf
        levels = [lvl]
        while len(lvl) > 1:
            lvl = [_h(lvl[i] + lvl[i + 1]) for i in range(0, len(lvl), 2)]
            levels.append(lvl)
        return cls(list(entries), levels)

    @property
    def root(self) -> bytes:
        return self.levels[-1][0]

    @property
    def leaf_count(self) -> int:
        return len(self.entries)

    def proof(self, index: int) -> Tuple[bytes, ...]:
        """Sibling hashes from leaf to root."""
        if not 0 <= index < self.leaf_count:
            raise IndexError(f"leaf {index} outside 0..{self.leaf_count - 1}")
        path = []
        idx = index
        for level in self.levels[:-1]:
            path.append(level[idx ^ 1])
            idx >>= 1
        return tuple(path)

    def sidecar(self) -> MerkleSidecar:
        return MerkleSidecar(
            entries=tuple(self.entries),
            proofs=tuple(self.proof(i) for i in range(self.leaf_count)),
        )


def compute_root(index: int, entry: Mainfo, proof: Sequence[bytes]) -> bytes:
    h = leaf_hash(index, entry)
    idx = index
    for sibling in proof:
        h = _h(sibling + h) if idx & 1 else _h(h + sibling)
        idx >>= 1
    return h


def verify_proof(root: bytes, index: int, leaf_count: int, entry: Mainfo, proof: Sequence[bytes]) -> None:
    """Raise ProofError unless (index, entry, proof) reproduces root."""
    if not 0 <= index < leaf_count:
        raise ProofError(f"leaf index {index} outside 0..{leaf_count - 1}")
    if len(proof) != tree_depth(leaf_count):
        raise ProofError(
            f"proof has {len(proof)} nodes, a {leaf_count}-leaf tree needs {tree_depth(leaf_count)}"
        )
    if any(len(node) != DIGEST_SIZE for node in proof):
        raise ProofError("proof nodes must be 32-byte hashes")
    if not hmac.compare_digest(compute_root(index, entry, proof), root):
        raise ProofError(f"inclusion proof for entry {index} does not match the stored root")


def encode_sidecar(sidecar: MerkleSidecar) -> bytes:
    """[leaf_count 8 LE][entries 48 bytes each][proofs, 32 bytes per node]"""
    out = bytearray(sidecar.leaf_count.to_bytes(8, "little"))
    for entry in sidecar.entries:
        out += entry.to_bytes()
    for proof in sidecar.proofs:
        for node in proof:
            out += node
    return bytes(out)


def decode_sidecar(data: bytes) -> MerkleSidecar:
    if len(data) < 8:
        raise RecordFormatError("sidecar shorter than its header")
    n = int.from_bytes(data[:8], "little")
    if n < 1:
        raise RecordFormatError("sidecar holds no entries")
    depth = tree_depth(n)
    expected = 8 + n * MAINFO_SIZE + n * depth * DIGEST_SIZE
    if len(data) != expected:
        raise RecordFormatError(f"sidecar is {len(data)} bytes, {expected} expected for {n} leaves")
    pos = 8
    entries = []
    for _ in range(n):
        try:
            entries.append(Mainfo.from_bytes(data[pos:pos + MAINFO_SIZE]))
        except ValueError as e:
            raise RecordFormatError(f"sidecar entry: {e}") from e
        pos += MAINFO_SIZE
    proofs = []
    for _ in range(n):
        proofs.append(tuple(data[pos + k * DIGEST_SIZE:pos + (k + 1) * DIGEST_SIZE] for k in range(depth)))
        pos += depth * DIGEST_SIZE
    return MerkleSidecar(entries=tuple(entries), proofs=tuple(proofs))
