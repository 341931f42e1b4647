# File: app/services/mage/derive.py
"""
Runtime side: recover any group member's measurement from the MARS alone.

Start from the member's (PREMR, COUNT), replay the MARS pages at the member's
OFFSET with the constant MARS SECINFO, finalize.
"""

import hashlib
import hmac
from typing import List, Sequence

from loguru import logger

from ...core.errors import DerivationIndexError, IntegrityError, MalformedSectionError, RecordFormatError
from ...models.enclave import PAGE_SIZE, SECINFO_SIZE, MeasuredPage, SecInfo, Variant
from ...models.hash_state import HashState
from ...models.mage import AnyMainfo, MageView, Mainfo, SplitMainfo, record_size_for
from ..hashing import absorb, hs_finalize
from ..measurement import absorb_page, page_blocks
from .merkle import verify_proof
from .section import decode_entry, decode_merkle_root, read_entry_count

POST_RECORD_SIZE = 8 + SECINFO_SIZE + PAGE_SIZE


def mage_size(view: MageView) -> int:
    """Number of MAINFOs the view's section describes."""
    if view.variant == Variant.MERKLE:
        if not any(view.mars_bytes):
            return 0
        return decode_merkle_root(view.mars_bytes).leaf_count
    return read_entry_count(view.mars_bytes, record_size_for(view.variant))


def _entry(view: MageView, idx: int) -> AnyMainfo:
    size = mage_size(view)
    if not 0 <= idx < size:
        raise DerivationIndexError(f"index {idx} out of range: section holds {size} MAINFOs")
    return decode_entry(view.mars_bytes, idx, view.variant)


def _absorb_mars(state: HashState, view: MageView, offset: int) -> HashState:
    """EADD + EEXTENDs for every MARS page, placed at the target's OFFSET."""
    mars = view.mars_bytes
    secinfo = SecInfo.mars()

    def blocks():
        for p in range(view.mars_pages):
            yield from page_blocks(offset + p * PAGE_SIZE, secinfo, mars[p * PAGE_SIZE:(p + 1) * PAGE_SIZE])

    return absorb(state, blocks())


def derive_state_from(view: MageView, entry: Mainfo) -> HashState:
    return _absorb_mars(entry.state, view, entry.offset)


def derive_state(view: MageView, idx: int) -> HashState:
    """The state right before finalization; COUNT + 81 blocks per MARS page."""
    if view.variant == Variant.MERKLE:
        raise MalformedSectionError("a Merkle MARS holds no entries; use merkle_derive")
    entry = _entry(view, idx)
    if isinstance(entry, SplitMainfo):
        raise MalformedSectionError("split entries need the host-supplied C_post; use derive_measurement_split")
    return derive_state_from(view, entry)


def derive_measurement(view: MageView, idx: int) -> bytes:
    digest = hs_finalize(derive_state(view, idx))
    logger.debug(f"🔍 derived measurement of member {idx}: {digest.hex()}")
    return digest


def parse_post_content(post_content: bytes) -> List[MeasuredPage]:
    if len(post_content) % POST_RECORD_SIZE:
        raise RecordFormatError(
            f"C_post is {len(post_content)} bytes, not a multiple of {POST_RECORD_SIZE}"
        )
    pages = []
    for pos in range(0, len(post_content), POST_RECORD_SIZE):
        try:
            pages.append(
                MeasuredPage(
                    offset=int.from_bytes(post_content[pos:pos + 8], "little"),
                    secinfo=SecInfo.from_bytes(post_content[pos + 8:pos + 8 + SECINFO_SIZE]),
                    content=post_content[pos + 8 + SECINFO_SIZE:pos + POST_RECORD_SIZE],
                )
            )
        except ValueError as e:
            raise RecordFormatError(f"C_post record at {pos}: {e}") from e
    return pages


def derive_measurement_split(view: MageView, idx: int, post_content: bytes) -> bytes:
    """Derivation for images loaded in file order.

    ``post_content`` comes from the untrusted host; it is only used after its
    digest matches the one stored in the MARS.
    """
    entry = _entry(view, idx)
    if not isinstance(entry, SplitMainfo):
        raise MalformedSectionError("entry is not a split MAINFO")
    if not hmac.compare_digest(hashlib.sha256(post_content).digest(), entry.post_digest):
        logger.warning(f"⚠️ C_post for member {idx} does not match its recorded digest")
        raise IntegrityError(f"host-supplied C_post for member {idx} failed its integrity check")
    pages = parse_post_content(post_content)
    if len(pages) != entry.post_pages:
        raise IntegrityError(f"expected {entry.post_pages} C_post pages, got {len(pages)}")

    state = derive_state_from(view, entry)
    for page in pages:
        state = absorb_page(state, page)
    return hs_finalize(state)


def merkle_derive(root_view: MageView, idx: int, entry: Mainfo, proof: Sequence[bytes]) -> bytes:
    """Authenticate an externally stored MAINFO against the MARS root, then derive."""
    root = decode_merkle_root(root_view.mars_bytes)
    if not 0 <= idx < root.leaf_count:
        raise DerivationIndexError(f"index {idx} out of range: tree holds {root.leaf_count} MAINFOs")
    verify_proof(root.root, idx, root.leaf_count, entry, proof)
    return hs_finalize(derive_state_from(root_view, entry))
