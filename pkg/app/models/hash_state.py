# File: app/models/hash_state.py

from pydantic import BaseModel, ConfigDict, field_validator
from typing import Tuple

# FIPS 180-4 initial hash value
SHA256_IV: Tuple[int, ...] = (
    0x6A09E667, 0xBB67AE85, 0x3C6EF372, 0xA54FF53A,
    0x510E527F, 0x9B05688C, 0x1F83D9AB, 0x5BE0CD19,
)

STATE_SIZE = 40


class HashState(BaseModel):
    """Intermediate SHA-256 state: the 8 chaining words plus bytes absorbed."""

    model_config = ConfigDict(frozen=True)

    words: Tuple[int, int, int, int, int, int, int, int] = SHA256_IV
    byte_count: int = 0

    @field_validator("words")
    def words_are_u32(cls, v):
        if any(w < 0 or w > 0xFFFFFFFF for w in v):
            raise ValueError("hash words must be 32-bit unsigned")
        return v

    @field_validator("byte_count")
    def count_is_u64(cls, v):
        if v < 0 or v >= 1 << 64:
            raise ValueError("byte_count must be a 64-bit unsigned integer")
        if v % 64:
            raise ValueError("byte_count must be a whole number of 64-byte blocks")
        return v

    @property
    def premr(self) -> bytes:
        """The words serialized big-endian, i.e. what a digest would look like."""
        return b"".join(w.to_bytes(4, "big") for w in self.words)
