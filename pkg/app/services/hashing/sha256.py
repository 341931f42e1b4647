# File: app/services/hashing/sha256.py
"""
Resumable SHA-256.

hashlib cannot hand out its chaining value, so the compression function is
implemented here. Every state is an immutable ``HashState``; callers feed
whole 64-byte blocks and may export the state at any block boundary, ship
it somewhere else and resume from it.
"""

import struct
from typing import Iterable, List, Sequence, Tuple

from ...core.errors import FormatError
from ...models.hash_state import SHA256_IV, STATE_SIZE, HashState

BLOCK_SIZE = 64

_K = (
    0x428A2F98, 0x71374491, 0xB5C0FBCF, 0xE9B5DBA5, 0x3956C25B, 0x59F111F1, 0x923F82A4, 0xAB1C5ED5,
    0xD807AA98, 0x12835B01, 0x243185BE, 0x550C7DC3, 0x72BE5D74, 0x80DEB1FE, 0x9BDC06A7, 0xC19BF174,
    0xE49B69C1, 0xEFBE4786, 0x0FC19DC6, 0x240CA1CC, 0x2DE92C6F, 0x4A7484AA, 0x5CB0A9DC, 0x76F988DA,
    0x983E5152, 0xA831C66D, 0xB00327C8, 0xBF597FC7, 0xC6E00BF3, 0xD5A79147, 0x06CA6351, 0x14292967,
    0x27B70A85, 0x2E1B2138, 0x4D2C6DFC, 0x53380D13, 0x650A7354, 0x766A0ABB, 0x81C2C92E, 0x92722C85,
    0xA2BFE8A1, 0xA81A664B, 0xC24B8B70, 0xC76C51A3, 0xD192E819, 0xD6990624, 0xF40E3585, 0x106AA070,
    0x19A4C116, 0x1E376C08, 0x2748774C, 0x34B0BCB5, 0x391C0CB3, 0x4ED8AA4A, 0x5B9CCA4F, 0x682E6FF3,
    0x748F82EE, 0x78A5636F, 0x84C87814, 0x8CC70208, 0x90BEFFFA, 0xA4506CEB, 0xBEF9A3F7, 0xC67178F2,
)

_M = 0xFFFFFFFF
_WORDS = struct.Struct(">16L")
_STATE = struct.Struct(">8LQ")


def _compress(h: Sequence[int], block) -> Tuple[int, ...]:
    """One SHA-256 compression of a 64-byte block into chaining value h."""
    w: List[int] = list(_WORDS.unpack(block))
    for i in range(16, 64):
        x = w[i - 15]
        y = w[i - 2]
        s0 = ((x >> 7) | (x << 25)) ^ ((x >> 18) | (x << 14)) ^ (x >> 3)
        s1 = ((y >> 17) | (y << 15)) ^ ((y >> 19) | (y << 13)) ^ (y >> 10)
        w.append((w[i - 16] + (s0 & _M) + w[i - 7] + (s1 & _M)) & _M)

    a, b, c, d, e, f, g, hh = h
    for i in range(64):
        s1 = (((e >> 6) | (e << 26)) ^ ((e >> 11) | (e << 21)) ^ ((e >> 25) | (e << 7))) & _M
        ch = (e & f) ^ (~e & g)
        t1 = hh + s1 + ch + _K[i] + w[i]
        s0 = (((a >> 2) | (a << 30)) ^ ((a >> 13) | (a << 19)) ^ ((a >> 22) | (a << 10))) & _M
        maj = (a & b) ^ (a & c) ^ (b & c)
        hh = g
        g = f
        f = e
        e = (d + t1) & _M
        d = c
        c = b
        b = a
        a = (t1 + s0 + maj) & _M

    return (
        (h[0] + a) & _M, (h[1] + b) & _M, (h[2] + c) & _M, (h[3] + d) & _M,
        (h[4] + e) & _M, (h[5] + f) & _M, (h[6] + g) & _M, (h[7] + hh) & _M,
    )


def hs_init() -> HashState:
    return HashState(words=SHA256_IV, byte_count=0)


def hs_update_block(state: HashState, block: bytes) -> HashState:
    """Advance the state by exactly one 512-bit block."""
    if len(block) != BLOCK_SIZE:
        raise FormatError(f"SHA-256 block must be {BLOCK_SIZE} bytes, got {len(block)}")
    return HashState(
        words=_compress(state.words, block),
        byte_count=state.byte_count + BLOCK_SIZE,
    )


def absorb(state: HashState, data) -> HashState:
    """Absorb a whole number of blocks, given as bytes or an iterable of blocks."""
    if isinstance(data, (bytes, bytearray, memoryview)):
        if len(data) % BLOCK_SIZE:
            raise FormatError(
                f"absorb expects a multiple of {BLOCK_SIZE} bytes, got {len(data)}"
            )
        view = memoryview(data)
        blocks: Iterable = (view[i:i + BLOCK_SIZE] for i in range(0, len(data), BLOCK_SIZE))
    else:
        blocks = data

    words = state.words
    count = state.byte_count
    for block in blocks:
        if len(block) != BLOCK_SIZE:
            raise FormatError(f"SHA-256 block must be {BLOCK_SIZE} bytes, got {len(block)}")
        words = _compress(words, block)
        count += BLOCK_SIZE
    return HashState(words=words, byte_count=count)


def hs_export(state: HashState) -> bytes:
    """40 bytes: words big-endian, then byte_count little-endian."""
    return state.premr + state.byte_count.to_bytes(8, "little")


def hs_import(blob: bytes) -> HashState:
    if len(blob) != STATE_SIZE:
        raise FormatError(f"hash state blob must be {STATE_SIZE} bytes, got {len(blob)}")
    words = struct.unpack(">8L", blob[:32])
    try:
        return HashState(words=words, byte_count=int.from_bytes(blob[32:], "little"))
    except ValueError as e:
        raise FormatError(f"bad hash state: {e}") from e


def hs_finalize(state: HashState) -> bytes:
    """Merkle-Damgard padding over byte_count * 8 bits, then the digest.

    Finalization is pure: the input state is left untouched, the caller
    just never resumes from it.
    """
    bit_length = (state.byte_count * 8) & 0xFFFFFFFFFFFFFFFF
    tail = b"\x80" + b"\x00" * 55 + bit_length.to_bytes(8, "big")
    words = _compress(state.words, tail)
    return struct.pack(">8L", *words)


def hs_digest_hex(state: HashState) -> str:
    return hs_finalize(state).hex()
