# File: app/services/mage/section.py
"""
MARS section layout.

    [entry_count: 8 LE][entry_count records][zero padding to whole pages]

Records are 48 bytes (basic) or 88 bytes (split). The Merkle variant stores
[leaf_count: 8 LE][root: 32] followed by zeros.
"""

import math
from typing import List, Sequence

from ...core.errors import CapacityError, MalformedSectionError
from ...models.enclave import PAGE_SIZE, Variant
from ...models.mage import (
    DIGEST_SIZE,
    MAINFO_SIZE,
    SECTION_HEADER_SIZE,
    AnyMainfo,
    MarsSection,
    MemoryOverhead,
    MerkleRoot,
    mainfo_class_for,
    record_size_for,
)

# Non-section code and data the derivation library adds to an enclave
CODE_OVERHEAD_KB = 58


def mars_capacity(section_bytes: int, record_size: int = MAINFO_SIZE) -> int:
    """floor((L - 8) / record_size)"""
    if section_bytes < SECTION_HEADER_SIZE:
        return 0
    return (section_bytes - SECTION_HEADER_SIZE) // record_size


def pages_required(n: int, record_size: int = MAINFO_SIZE) -> int:
    """ceil((record_size * n + 8) / 4096)"""
    return math.ceil((record_size * n + SECTION_HEADER_SIZE) / PAGE_SIZE)


def memory_overhead(mars_pages: int, code_overhead_kb: int = CODE_OVERHEAD_KB) -> MemoryOverhead:
    section_kb = mars_pages * PAGE_SIZE // 1024
    return MemoryOverhead(
        mars_pages=mars_pages,
        section_kb=section_kb,
        code_kb=code_overhead_kb,
        total_kb=section_kb + code_overhead_kb,
        capacity=mars_capacity(mars_pages * PAGE_SIZE),
    )


def build_mars(mainfos: Sequence[AnyMainfo], section_pages: int, variant: Variant = Variant.BASIC) -> MarsSection:
    record_size = record_size_for(variant)
    capacity = mars_capacity(section_pages * PAGE_SIZE, record_size)
    if len(mainfos) > capacity:
        raise CapacityError(
            f"{len(mainfos)} MAINFOs do not fit a {section_pages}-page MARS "
            f"(capacity {capacity}, {mars_capacity(PAGE_SIZE, record_size)} per page); "
            f"{pages_required(len(mainfos), record_size)} pages needed"
        )
    expected = mainfo_class_for(variant)
    for m in mainfos:
        if type(m) is not expected:
            raise MalformedSectionError(f"{variant.label} section expects {expected.__name__} entries")
    return MarsSection(entries=tuple(mainfos), section_pages=section_pages, record_size=record_size)


def encode_section(section: MarsSection) -> bytes:
    body = section.entry_count.to_bytes(8, "little") + b"".join(m.to_bytes() for m in section.entries)
    return body + bytes(section.byte_length - len(body))


def read_entry_count(mars_bytes: bytes, record_size: int = MAINFO_SIZE) -> int:
    """entry_count, checked against what the section can physically hold."""
    if len(mars_bytes) < SECTION_HEADER_SIZE:
        raise MalformedSectionError("MARS shorter than its header")
    count = int.from_bytes(mars_bytes[:SECTION_HEADER_SIZE], "little")
    capacity = mars_capacity(len(mars_bytes), record_size)
    if count > capacity:
        raise MalformedSectionError(
            f"entry_count {count} exceeds section capacity {capacity}"
        )
    return count


def decode_entry(mars_bytes: bytes, idx: int, variant: Variant = Variant.BASIC) -> AnyMainfo:
    record_size = record_size_for(variant)
    start = SECTION_HEADER_SIZE + idx * record_size
    try:
        return mainfo_class_for(variant).from_bytes(mars_bytes[start:start + record_size])
    except ValueError as e:
        raise MalformedSectionError(f"entry {idx}: {e}") from e


def decode_section(mars_bytes: bytes, variant: Variant = Variant.BASIC) -> MarsSection:
    if len(mars_bytes) % PAGE_SIZE:
        raise MalformedSectionError(f"MARS length {len(mars_bytes)} is not page granular")
    record_size = record_size_for(variant)
    count = read_entry_count(mars_bytes, record_size)
    entries: List[AnyMainfo] = [decode_entry(mars_bytes, i, variant) for i in range(count)]
    end = SECTION_HEADER_SIZE + count * record_size
    if any(mars_bytes[end:]):
        raise MalformedSectionError("non-zero bytes after the last MAINFO")
    return MarsSection(
        entries=tuple(entries),
        section_pages=len(mars_bytes) // PAGE_SIZE,
        record_size=record_size,
    )


def encode_merkle_root(root: MerkleRoot) -> bytes:
    body = root.leaf_count.to_bytes(8, "little") + root.root
    return body + bytes(root.section_pages * PAGE_SIZE - len(body))


def decode_merkle_root(mars_bytes: bytes) -> MerkleRoot:
    if len(mars_bytes) < PAGE_SIZE or len(mars_bytes) % PAGE_SIZE:
        raise MalformedSectionError("Merkle MARS must be whole pages")
    end = SECTION_HEADER_SIZE + DIGEST_SIZE
    if any(mars_bytes[end:]):
        raise MalformedSectionError("non-zero bytes after the Merkle root")
    leaf_count = int.from_bytes(mars_bytes[:SECTION_HEADER_SIZE], "little")
    if leaf_count == 0:
        raise MalformedSectionError("Merkle MARS holds no leaves")
    return MerkleRoot(
        leaf_count=leaf_count,
        root=bytes(mars_bytes[SECTION_HEADER_SIZE:end]),
        section_pages=len(mars_bytes) // PAGE_SIZE,
    )


def check_section(mars_bytes: bytes, variant: Variant) -> None:
    """Accept an all-zero placeholder or a well-formed section of the variant."""
    if not any(mars_bytes):
        return
    if variant == Variant.MERKLE:
        decode_merkle_root(mars_bytes)
    else:
        decode_section(mars_bytes, variant)
