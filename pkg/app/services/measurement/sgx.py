# File: app/services/measurement/sgx.py

import struct
from typing import Iterator, List, Sequence

from loguru import logger

from ...core.errors import FormatError, MisalignedError, OutOfRangeError, OverlappingPagesError
from ...models.enclave import (
    CHUNK_SIZE,
    PAGE_SIZE,
    SECINFO_MEASURED,
    EnclaveParams,
    MeasuredPage,
    SecInfo,
)
from ...models.hash_state import HashState
from ..hashing import absorb, hs_finalize, hs_init

# 1 EADD block + 16 EEXTEND groups of 5 blocks
BLOCKS_PER_PAGE = 1 + (PAGE_SIZE // CHUNK_SIZE) * 5

_ECREATE = struct.Struct("<8sLQ44s")
_EADD = struct.Struct("<8sQ48s")
_EEXTEND = struct.Struct("<8sQ48s")


def ecreate_block(params: EnclaveParams) -> bytes:
    return _ECREATE.pack(b"ECREATE", params.ssa_frame_pages, params.enclave_size, b"")


def eadd_block(offset: int, secinfo: SecInfo) -> bytes:
    if offset % PAGE_SIZE:
        raise MisalignedError(f"EADD offset {offset:#x} is not {PAGE_SIZE}-aligned")
    return _EADD.pack(b"EADD", offset, secinfo.to_bytes()[:SECINFO_MEASURED])


def eextend_blocks(offset: int, chunk: bytes) -> List[bytes]:
    """The five blocks one EEXTEND of a 256-byte chunk feeds the measurement."""
    if offset % CHUNK_SIZE:
        raise MisalignedError(f"EEXTEND offset {offset:#x} is not {CHUNK_SIZE}-aligned")
    if len(chunk) != CHUNK_SIZE:
        raise FormatError(f"EEXTEND chunk must be {CHUNK_SIZE} bytes, got {len(chunk)}")
    chunk = bytes(chunk)
    return [_EEXTEND.pack(b"EEXTEND", offset, b"")] + [
        chunk[i:i + 64] for i in range(0, CHUNK_SIZE, 64)
    ]


def page_blocks(offset: int, secinfo: SecInfo, content: bytes) -> Iterator[bytes]:
    """All 81 blocks of one page: EADD, then EEXTEND per 256-byte chunk.

    The EEXTEND offset advances by 256 per chunk.
    """
    yield eadd_block(offset, secinfo)
    for k in range(0, PAGE_SIZE, CHUNK_SIZE):
        yield from eextend_blocks(offset + k, content[k:k + CHUNK_SIZE])


def absorb_page(state: HashState, page: MeasuredPage) -> HashState:
    return absorb(state, page_blocks(page.offset, page.secinfo, page.content))


def validate_layout(params: EnclaveParams, pages: Sequence[MeasuredPage]) -> None:
    """Reject pages outside the enclave range or sharing an offset."""
    seen = set()
    for page in pages:
        if page.offset + PAGE_SIZE > params.enclave_size:
            raise OutOfRangeError(
                f"page at {page.offset:#x} exceeds enclave size {params.enclave_size:#x}"
            )
        if page.offset in seen:
            raise OverlappingPagesError(f"two pages at offset {page.offset:#x}")
        seen.add(page.offset)


def premeasure_enclave(params: EnclaveParams, pages: Sequence[MeasuredPage]) -> HashState:
    """ECREATE plus the given pages, left unfinalized (PREMR and COUNT)."""
    validate_layout(params, pages)
    state = absorb(hs_init(), [ecreate_block(params)])
    for page in pages:
        state = absorb_page(state, page)
    return state


def measure_enclave(params: EnclaveParams, pages: Sequence[MeasuredPage]) -> bytes:
    state = premeasure_enclave(params, pages)
    digest = hs_finalize(state)
    logger.debug(f"🔍 measured {len(pages)} pages ({state.byte_count} bytes): {digest.hex()}")
    return digest
