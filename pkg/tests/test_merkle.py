import random

import pytest

from app.core.errors import DerivationIndexError, ProofError, RecordFormatError
from app.models.enclave import PAGE_SIZE
from app.models.mage import MageView, Mainfo
from app.services.mage.builder import final_measurement
from app.services.mage.derive import mage_size, merkle_derive
from app.services.mage.merkle import (
    MerkleTree,
    compute_root,
    decode_sidecar,
    encode_sidecar,
    tree_depth,
    verify_proof,
)


def _entries(n: int):
    r = random.Random(n)
    return [Mainfo(premr=r.randbytes(32), count=64 * r.randint(1, 1000), offset=PAGE_SIZE * r.randint(0, 64))
            for _ in range(n)]


def _flip(node: bytes, bit: int) -> bytes:
    b = bytearray(node)
    b[bit // 8] ^= 1 << (bit % 8)
    return bytes(b)


@pytest.mark.parametrize("n", range(1, 17))
def test_all_proofs_verify(n):
    tree = MerkleTree.build(_entries(n))
    for i, entry in enumerate(tree.entries):
        proof = tree.proof(i)
        assert len(proof) == tree_depth(n) == (n - 1).bit_length()
        verify_proof(tree.root, i, n, entry, proof)


@pytest.mark.parametrize("n", [2, 3, 5, 8, 16])
def test_single_bit_corruptions_fail(n):
    tree = MerkleTree.build(_entries(n))
    for i, entry in enumerate(tree.entries):
        proof = tree.proof(i)
        for k, node in enumerate(proof):
            for bit in (0, 7, 100, 255):
                bad = proof[:k] + (_flip(node, bit),) + proof[k + 1:]
                with pytest.raises(ProofError):
                    verify_proof(tree.root, i, n, entry, bad)


def test_entry_and_index_are_bound():
    tree = MerkleTree.build(_entries(4))
    with pytest.raises(ProofError):
        verify_proof(tree.root, 1, 4, tree.entries[0], tree.proof(0))
    with pytest.raises(ProofError):
        verify_proof(tree.root, 0, 4, tree.entries[1], tree.proof(0))


def test_proof_length_checked():
    tree = MerkleTree.build(_entries(5))
    with pytest.raises(ProofError):
        verify_proof(tree.root, 0, 5, tree.entries[0], tree.proof(0)[:-1])


def test_single_leaf_root_is_the_leaf():
    tree = MerkleTree.build(_entries(1))
    assert tree.proof(0) == ()
    assert compute_root(0, tree.entries[0], ()) == tree.root


def test_sidecar_codec():
    sidecar = MerkleTree.build(_entries(6)).sidecar()
    raw = encode_sidecar(sidecar)
    assert len(raw) == 8 + 6 * 48 + 6 * 3 * 32
    assert decode_sidecar(raw) == sidecar
    with pytest.raises(RecordFormatError):
        decode_sidecar(raw[:-1])


def test_merkle_derivation_matches_measurements(merkle_group):
    _, result = merkle_group
    sidecar = result.sidecar
    view = MageView.from_image(result.images[0])
    assert mage_size(view) == len(result.images)
    for j, img in enumerate(result.images):
        derived = merkle_derive(view, j, sidecar.entries[j], sidecar.proofs[j])
        assert derived == final_measurement(img)


def test_merkle_derivation_rejects_swapped_entry(merkle_group):
    _, result = merkle_group
    sidecar = result.sidecar
    view = MageView.from_image(result.images[1])
    with pytest.raises(ProofError):
        merkle_derive(view, 0, sidecar.entries[1], sidecar.proofs[0])
    with pytest.raises(DerivationIndexError):
        merkle_derive(view, len(result.images), sidecar.entries[0], sidecar.proofs[0])


def test_proof_is_logarithmic():
    entry = _entries(1)[0]
    tree = MerkleTree.build([entry] * 1024)
    assert len(tree.proof(513)) == 10
    verify_proof(tree.root, 513, 1024, entry, tree.proof(513))
