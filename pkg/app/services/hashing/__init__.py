from .sha256 import (
    BLOCK_SIZE,
    absorb,
    hs_digest_hex,
    hs_export,
    hs_finalize,
    hs_import,
    hs_init,
    hs_update_block,
)

__all__ = [
    "BLOCK_SIZE",
    "absorb",
    "hs_digest_hex",
    "hs_export",
    "hs_finalize",
    "hs_import",
    "hs_init",
    "hs_update_block",
]
