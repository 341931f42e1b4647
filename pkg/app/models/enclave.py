# File: app/models/enclave.py

from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from typing import List, Optional, Tuple
from enum import Enum, IntEnum

PAGE_SIZE = 4096
CHUNK_SIZE = 256
SECINFO_SIZE = 64
SECINFO_MEASURED = 48


class PageType(IntEnum):
    SECS = 0
    TCS = 1
    REG = 2


class LoaderKind(str, Enum):
    MODIFIED = "modified"      # MARS pages loaded last
    UNMODIFIED = "unmodified"  # plain file order


class Variant(IntEnum):
    """Group variant, stored in the image header's version field."""
    BASIC = 1
    SPLIT = 2
    MERKLE = 3

    @classmethod
    def from_name(cls, name: str) -> "Variant":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError(f"unknown variant {name!r}; expected basic, split or merkle")

    @property
    def label(self) -> str:
        return self.name.lower()


class SecInfo(BaseModel):
    """Page metadata. Bits 0-2 are R/W/X, bits 8-15 the page type."""

    model_config = ConfigDict(frozen=True)

    flags: int = 0

    @field_validator("flags")
    def flags_are_u64(cls, v):
        if v < 0 or v >= 1 << 64:
            raise ValueError("SECINFO flags must be a 64-bit unsigned integer")
        return v

    @classmethod
    def build(cls, page_type: PageType, r: bool = False, w: bool = False, x: bool = False) -> "SecInfo":
        return cls(flags=int(r) | int(w) << 1 | int(x) << 2 | int(page_type) << 8)

    @classmethod
    def reg(cls, r: bool = True, w: bool = False, x: bool = False) -> "SecInfo":
        return cls.build(PageType.REG, r, w, x)

    @classmethod
    def tcs(cls) -> "SecInfo":
        return cls.build(PageType.TCS)

    @classmethod
    def mars(cls) -> "SecInfo":
        """The constant SECINFO every MARS page carries: REG, read-only."""
        return cls.reg(r=True, w=False, x=False)

    @property
    def readable(self) -> bool:
        return bool(self.flags & 0x1)

    @property
    def writable(self) -> bool:
        return bool(self.flags & 0x2)

    @property
    def executable(self) -> bool:
        return bool(self.flags & 0x4)

    @property
    def page_type(self) -> int:
        return (self.flags >> 8) & 0xFF

    def to_bytes(self) -> bytes:
        return self.flags.to_bytes(8, "little") + bytes(SECINFO_SIZE - 8)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "SecInfo":
        if len(raw) != SECINFO_SIZE:
            raise ValueError(f"SECINFO must be {SECINFO_SIZE} bytes")
        if any(raw[8:]):
            raise ValueError("SECINFO reserved bytes must be zero")
        return cls(flags=int.from_bytes(raw[:8], "little"))

    def describe(self) -> str:
        kind = {PageType.SECS: "SECS", PageType.TCS: "TCS", PageType.REG: "REG"}.get(
            self.page_type, f"T{self.page_type}"
        )
        prot = ("R" if self.readable else "-") + ("W" if self.writable else "-") + ("X" if self.executable else "-")
        return f"{kind}:{prot}"


class EnclaveParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    ssa_frame_pages: int = 1
    enclave_size: int

    @field_validator("ssa_frame_pages")
    def ssa_is_u32(cls, v):
        if v < 0 or v > 0xFFFFFFFF:
            raise ValueError("ssa_frame_pages must be a 32-bit unsigned integer")
        return v

    @field_validator("enclave_size")
    def size_is_pow2(cls, v):
        if v < PAGE_SIZE or v >= 1 << 64 or v & (v - 1):
            raise ValueError("enclave_size must be a power of two and at least one page")
        return v


class MeasuredPage(BaseModel):
    model_config = ConfigDict(frozen=True)

    offset: int
    secinfo: SecInfo
    content: bytes

    @field_validator("offset")
    def offset_aligned(cls, v):
        if v < 0 or v % PAGE_SIZE:
            raise ValueError(f"page offset {v:#x} is not {PAGE_SIZE}-aligned")
        return v

    @field_validator("content")
    def content_is_page(cls, v):
        if len(v) != PAGE_SIZE:
            raise ValueError(f"page content must be {PAGE_SIZE} bytes, got {len(v)}")
        return v


class EnclaveImage(BaseModel):
    """A paged enclave, optionally carrying a contiguous MARS range."""

    model_config = ConfigDict(frozen=True)

    params: EnclaveParams
    pages: Tuple[MeasuredPage, ...] = ()
    mars_range: Optional[Tuple[int, int]] = None  # (first page index, page count)
    variant: Variant = Variant.BASIC

    @model_validator(mode="after")
    def check_mars(self):
        if self.mars_range is not None:
            first, count = self.mars_range
            if count < 1 or first < 0 or first + count > len(self.pages):
                raise ValueError(
                    f"MARS range {self.mars_range} outside {len(self.pages)} pages"
                )
            base = self.pages[first].offset
            for k, page in enumerate(self.pages[first:first + count]):
                if page.secinfo != SecInfo.mars():
                    raise ValueError("MARS pages must be REG read-only")
                if page.offset != base + k * PAGE_SIZE:
                    raise ValueError("MARS pages must be contiguous in the enclave")
        return self

    @property
    def has_mars(self) -> bool:
        return self.mars_range is not None

    @property
    def mars_indices(self) -> range:
        if self.mars_range is None:
            return range(0)
        first, count = self.mars_range
        return range(first, first + count)

    @property
    def mars_pages(self) -> List[MeasuredPage]:
        return [self.pages[i] for i in self.mars_indices]

    @property
    def mars_offset(self) -> Optional[int]:
        if self.mars_range is None:
            return None
        return self.pages[self.mars_range[0]].offset

    @property
    def mars_bytes(self) -> bytes:
        return b"".join(p.content for p in self.mars_pages)

    def with_mars_content(self, content: bytes) -> "EnclaveImage":
        """Copy of the image with the MARS pages' contents replaced."""
        indices = self.mars_indices
        if len(content) != len(indices) * PAGE_SIZE:
            raise ValueError(
                f"MARS content must be {len(indices) * PAGE_SIZE} bytes, got {len(content)}"
            )
        pages = list(self.pages)
        for n, i in enumerate(indices):
            pages[i] = pages[i].model_copy(
                update={"content": content[n * PAGE_SIZE:(n + 1) * PAGE_SIZE]}
            )
        return self.model_copy(update={"pages": tuple(pages)})

    def with_variant(self, variant: Variant) -> "EnclaveImage":
        return self.model_copy(update={"variant": variant})
