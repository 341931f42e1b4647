import hashlib
import random

import pytest

from app.core.errors import FormatError
from app.models.hash_state import SHA256_IV, HashState
from app.services.hashing import (
    absorb,
    hs_digest_hex,
    hs_export,
    hs_finalize,
    hs_import,
    hs_init,
    hs_update_block,
)


def test_init_is_the_standard_iv():
    state = hs_init()
    assert state.words == SHA256_IV
    assert state.byte_count == 0


def test_empty_message_digest():
    assert hs_digest_hex(hs_init()) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def test_one_block_matches_hashlib():
    block = bytes(range(64))
    state = hs_update_block(hs_init(), block)
    assert state.byte_count == 64
    assert hs_finalize(state) == hashlib.sha256(block).digest()


def test_two_blocks_known_vector():
    # 64 'a' characters, then another 64
    state = absorb(hs_init(), b"a" * 128)
    assert hs_finalize(state).hex() == hashlib.sha256(b"a" * 128).hexdigest()


def test_random_messages_match_hashlib():
    r = random.Random(42)
    for _ in range(1000):
        data = r.randbytes(64 * r.randint(0, 8))
        assert hs_finalize(absorb(hs_init(), data)) == hashlib.sha256(data).digest()


def test_abc_vector_through_a_padded_block():
    # "abc" padded by hand into one block and compressed without finalization
    block = b"abc\x80" + bytes(52) + (24).to_bytes(8, "big")
    state = hs_update_block(hs_init(), block)
    assert state.premr.hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


def test_update_rejects_short_block():
    with pytest.raises(FormatError):
        hs_update_block(hs_init(), b"\x00" * 63)


def test_absorb_rejects_partial_block():
    with pytest.raises(FormatError):
        absorb(hs_init(), b"\x00" * 100)


def test_absorb_accepts_iterable_of_blocks():
    blocks = [bytes([i]) * 64 for i in range(4)]
    assert absorb(hs_init(), blocks) == absorb(hs_init(), b"".join(blocks))


def test_export_layout():
    state = absorb(hs_init(), bytes(128))
    blob = hs_export(state)
    assert len(blob) == 40
    assert blob[:32] == state.premr
    assert int.from_bytes(blob[32:], "little") == 128


def test_export_import_resumes_anywhere():
    r = random.Random(7)
    data = r.randbytes(64 * 6)
    for cut in range(0, 7):
        head = absorb(hs_init(), data[:64 * cut])
        resumed = absorb(hs_import(hs_export(head)), data[64 * cut:])
        assert hs_finalize(resumed) == hashlib.sha256(data).digest()


def test_import_rejects_wrong_size():
    with pytest.raises(FormatError):
        hs_import(bytes(39))


def test_finalize_leaves_state_usable():
    state = absorb(hs_init(), bytes(64))
    first = hs_finalize(state)
    assert hs_finalize(state) == first
    assert state.byte_count == 64


def test_state_validates_words():
    with pytest.raises(ValueError):
        HashState(words=(1 << 32,) + SHA256_IV[1:], byte_count=0)


def test_import_rejects_partial_block_count():
    blob = hs_export(absorb(hs_init(), bytes(64)))
    with pytest.raises(FormatError):
        hs_import(blob[:32] + (100).to_bytes(8, "little"))
    with pytest.raises(ValueError):
        HashState(byte_count=63)
