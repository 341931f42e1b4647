# File: app/models/mage.py

from pydantic import BaseModel, ConfigDict, field_validator
from typing import Optional, Tuple, Union
from enum import Enum

from ..core.errors import MissingMarsError
from .enclave import PAGE_SIZE, EnclaveImage, SecInfo, Variant
from .hash_state import HashState

MAINFO_SIZE = 48
SPLIT_MAINFO_SIZE = 88
SECTION_HEADER_SIZE = 8
DIGEST_SIZE = 32


def _u64(v: int, name: str) -> int:
    if v < 0 or v >= 1 << 64:
        raise ValueError(f"{name} must be a 64-bit unsigned integer")
    return v


class Mainfo(BaseModel):
    """What it takes to finish another member's measurement.

    SECINFO is not serialized: every MARS page is REG read-only.
    """

    model_config = ConfigDict(frozen=True)

    premr: bytes
    count: int
    offset: int

    @field_validator("premr")
    def premr_is_digest_sized(cls, v):
        if len(v) != DIGEST_SIZE:
            raise ValueError(f"PREMR must be {DIGEST_SIZE} bytes")
        return v

    @field_validator("count")
    def count_is_blocks(cls, v):
        _u64(v, "COUNT")
        if v % 64:
            raise ValueError("COUNT must be a whole number of 64-byte blocks")
        return v

    @field_validator("offset")
    def offset_is_page(cls, v):
        _u64(v, "OFFSET")
        if v % PAGE_SIZE:
            raise ValueError(f"OFFSET {v:#x} is not page aligned")
        return v

    @property
    def secinfo(self) -> SecInfo:
        return SecInfo.mars()

    @property
    def state(self) -> HashState:
        words = tuple(int.from_bytes(self.premr[i:i + 4], "big") for i in range(0, 32, 4))
        return HashState(words=words, byte_count=self.count)

    @classmethod
    def from_state(cls, state: HashState, offset: int) -> "Mainfo":
        return cls(premr=state.premr, count=state.byte_count, offset=offset)

    def to_bytes(self) -> bytes:
        return self.premr + self.count.to_bytes(8, "little") + self.offset.to_bytes(8, "little")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Mainfo":
        if len(raw) != MAINFO_SIZE:
            raise ValueError(f"MAINFO record must be {MAINFO_SIZE} bytes, got {len(raw)}")
        return cls(
            premr=bytes(raw[:32]),
            count=int.from_bytes(raw[32:40], "little"),
            offset=int.from_bytes(raw[40:48], "little"),
        )


class SplitMainfo(Mainfo):
    """MAINFO for images loaded in plain file order.

    premr/count cover C_pre only; C_post is represented by the SHA-256 of its
    serialized page records and its page count.
    """

    post_digest: bytes
    post_pages: int = 0

    @field_validator("post_digest")
    def post_digest_sized(cls, v):
        if len(v) != DIGEST_SIZE:
            raise ValueError(f"post digest must be {DIGEST_SIZE} bytes")
        return v

    @field_validator("post_pages")
    def post_pages_u64(cls, v):
        return _u64(v, "post page count")

    def to_bytes(self) -> bytes:
        return super().to_bytes() + self.post_digest + self.post_pages.to_bytes(8, "little")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "SplitMainfo":
        if len(raw) != SPLIT_MAINFO_SIZE:
            raise ValueError(f"split MAINFO record must be {SPLIT_MAINFO_SIZE} bytes, got {len(raw)}")
        base = Mainfo.from_bytes(raw[:MAINFO_SIZE])
        return cls(
            premr=base.premr,
            count=base.count,
            offset=base.offset,
            post_digest=bytes(raw[48:80]),
            post_pages=int.from_bytes(raw[80:88], "little"),
        )


AnyMainfo = Union[SplitMainfo, Mainfo]


class MarsSection(BaseModel):
    """The shared section: entry count, entries, zero padding to whole pages."""

    model_config = ConfigDict(frozen=True)

    entries: Tuple[AnyMainfo, ...] = ()
    section_pages: int = 1
    record_size: int = MAINFO_SIZE

    @property
    def entry_count(self) -> int:
        return len(self.entries)

    @property
    def byte_length(self) -> int:
        return self.section_pages * PAGE_SIZE


class MerkleRoot(BaseModel):
    """Contents of a Merkle-variant MARS: leaf count and root hash only."""

    model_config = ConfigDict(frozen=True)

    leaf_count: int
    root: bytes
    section_pages: int = 1

    @field_validator("root")
    def root_sized(cls, v):
        if len(v) != DIGEST_SIZE:
            raise ValueError(f"Merkle root must be {DIGEST_SIZE} bytes")
        return v


class MerkleSidecar(BaseModel):
    """Untrusted storage for the Merkle variant: entries plus their proofs."""

    model_config = ConfigDict(frozen=True)

    entries: Tuple[Mainfo, ...]
    proofs: Tuple[Tuple[bytes, ...], ...]

    @property
    def leaf_count(self) -> int:
        return len(self.entries)


class ViewSource(str, Enum):
    IN_ENCLAVE = "in_enclave"
    EXTERNAL = "external"


class MageView(BaseModel):
    """What a running enclave can see of its own MARS."""

    model_config = ConfigDict(frozen=True)

    mars_bytes: bytes
    mars_offset: Optional[int] = None
    source: ViewSource = ViewSource.IN_ENCLAVE
    variant: Variant = Variant.BASIC

    @field_validator("mars_bytes")
    def whole_pages(cls, v):
        if not v or len(v) % PAGE_SIZE:
            raise ValueError(f"MARS bytes must be a non-empty multiple of {PAGE_SIZE}")
        return v

    @property
    def mars_pages(self) -> int:
        return len(self.mars_bytes) // PAGE_SIZE

    @classmethod
    def from_image(cls, img: EnclaveImage, source: ViewSource = ViewSource.IN_ENCLAVE) -> "MageView":
        if not img.has_mars:
            raise MissingMarsError("image has no MARS range")
        return cls(
            mars_bytes=img.mars_bytes,
            mars_offset=img.mars_offset,
            source=source,
            variant=img.variant,
        )


class MemoryOverhead(BaseModel):
    mars_pages: int
    section_kb: int
    code_kb: int
    total_kb: int
    capacity: int


class GroupManifestEntry(BaseModel):
    filename: str
    measurement: bytes
    index: int


def record_size_for(variant: Variant) -> int:
    return SPLIT_MAINFO_SIZE if variant == Variant.SPLIT else MAINFO_SIZE


def mainfo_class_for(variant: Variant):
    return SplitMainfo if variant == Variant.SPLIT else Mainfo


