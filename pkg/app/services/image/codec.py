# File: app/services/image/codec.py
"""
Flat enclave image format (.mimg).

    magic "MAGEIMG1" | version u32 | ssa_frame_pages u32 | enclave_size u64
    | page_count u64 | mars_first u64 | mars_count u64
    then page_count x [offset u64][secinfo 64 bytes][content 4096 bytes]

All integers little-endian. ``version`` holds the group variant.
"""

import struct
from pathlib import Path
from typing import List, Optional, Tuple

from loguru import logger
from pydantic import ValidationError

from ...core.errors import (
    BadMagicError,
    FormatError,
    MarsRangeError,
    MisalignedError,
    TruncatedImageError,
    UnsupportedVersionError,
)
from ...models.enclave import (
    PAGE_SIZE,
    SECINFO_SIZE,
    EnclaveImage,
    EnclaveParams,
    LoaderKind,
    MeasuredPage,
    SecInfo,
    Variant,
)
from ..measurement import validate_layout
from ..mage.section import check_section

MAGIC = b"MAGEIMG1"
NO_MARS = 0xFFFFFFFFFFFFFFFF

_HEADER = struct.Struct("<8sLLQQQQ")
HEADER_SIZE = _HEADER.size
RECORD_SIZE = 8 + SECINFO_SIZE + PAGE_SIZE


def image_file_size(page_count: int) -> int:
    return HEADER_SIZE + page_count * RECORD_SIZE


def serialize_image(img: EnclaveImage) -> bytes:
    if img.mars_range is None:
        mars_first, mars_count = NO_MARS, 0
    else:
        mars_first, mars_count = img.mars_range
    out = bytearray(
        _HEADER.pack(
            MAGIC,
            int(img.variant),
            img.params.ssa_frame_pages,
            img.params.enclave_size,
            len(img.pages),
            mars_first,
            mars_count,
        )
    )
    for page in img.pages:
        out += page.offset.to_bytes(8, "little")
        out += page.secinfo.to_bytes()
        out += page.content
    return bytes(out)


def _parse_header(data: bytes) -> Tuple[Variant, EnclaveParams, int, Optional[Tuple[int, int]]]:
    if len(data) < HEADER_SIZE:
        raise TruncatedImageError(f"image is {len(data)} bytes, header needs {HEADER_SIZE}")
    magic, version, ssa, size, page_count, mars_first, mars_count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    try:
        variant = Variant(version)
    except ValueError:
        raise UnsupportedVersionError(f"unsupported image version {version}")
    try:
        params = EnclaveParams(ssa_frame_pages=ssa, enclave_size=size)
    except ValidationError as e:
        raise FormatError(f"invalid enclave parameters: {e.errors()[0]['msg']}") from e

    if mars_first == NO_MARS:
        if mars_count:
            raise MarsRangeError("MARS count set without a MARS start")
        mars_range = None
    else:
        if mars_count == 0 or mars_first + mars_count > page_count:
            raise MarsRangeError(
                f"MARS pages {mars_first}+{mars_count} outside {page_count} pages"
            )
        mars_range = (mars_first, mars_count)
    return variant, params, page_count, mars_range


def parse_image(data: bytes) -> EnclaveImage:
    variant, params, page_count, mars_range = _parse_header(data)
    expected = image_file_size(page_count)
    if len(data) < expected:
        raise TruncatedImageError(f"image is {len(data)} bytes, {expected} expected")
    if len(data) > expected:
        raise FormatError(f"{len(data) - expected} trailing bytes after the last page")

    view = memoryview(data)
    pages: List[MeasuredPage] = []
    pos = HEADER_SIZE
    for i in range(page_count):
        offset = int.from_bytes(view[pos:pos + 8], "little")
        if offset % PAGE_SIZE:
            raise MisalignedError(f"page {i} offset {offset:#x} is not page aligned")
        try:
            secinfo = SecInfo.from_bytes(bytes(view[pos + 8:pos + 8 + SECINFO_SIZE]))
        except ValueError as e:
            raise FormatError(f"page {i}: {e}") from e
        content = bytes(view[pos + 8 + SECINFO_SIZE:pos + RECORD_SIZE])
        pages.append(MeasuredPage(offset=offset, secinfo=secinfo, content=content))
        pos += RECORD_SIZE

    validate_layout(params, pages)

    if mars_range is not None:
        first, count = mars_range
        if any(p.secinfo != SecInfo.mars() for p in pages[first:first + count]):
            raise MarsRangeError("MARS pages must be REG read-only")
        for a, b in zip(pages[first:first + count - 1], pages[first + 1:first + count]):
            if b.offset != a.offset + PAGE_SIZE:
                raise MarsRangeError("MARS pages must be contiguous in the enclave")
        check_section(b"".join(p.content for p in pages[first:first + count]), variant)

    return EnclaveImage(params=params, pages=tuple(pages), mars_range=mars_range, variant=variant)


def load_order(img: EnclaveImage, loader: LoaderKind = LoaderKind.MODIFIED) -> List[MeasuredPage]:
    """Pages in the order a loader EADDs them.

    The modified loader skips the MARS in its first pass and loads it last.
    """
    if loader == LoaderKind.UNMODIFIED or not img.has_mars:
        return list(img.pages)
    mars = set(img.mars_indices)
    rest = [p for i, p in enumerate(img.pages) if i not in mars]
    return rest + img.mars_pages


def pre_mars_pages(img: EnclaveImage) -> List[MeasuredPage]:
    """Pages the modified loader adds before it reaches the MARS."""
    mars = set(img.mars_indices)
    return [p for i, p in enumerate(img.pages) if i not in mars]


def read_image(path) -> EnclaveImage:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e}") from e
    logger.debug(f"📄 parsing {path} ({len(data)} bytes)")
    try:
        return parse_image(data)
    except FormatError as e:
        raise type(e)(f"{path.name}: {e}") from e


def write_image(path, img: EnclaveImage) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = serialize_image(img)
    path.write_bytes(data)
    logger.debug(f"💾 wrote {path} ({len(data)} bytes)")
    return path
