from .sgx import (
    BLOCKS_PER_PAGE,
    absorb_page,
    eadd_block,
    ecreate_block,
    eextend_blocks,
    measure_enclave,
    page_blocks,
    premeasure_enclave,
    validate_layout,
)

__all__ = [
    "BLOCKS_PER_PAGE",
    "absorb_page",
    "eadd_block",
    "ecreate_block",
    "eextend_blocks",
    "measure_enclave",
    "page_blocks",
    "premeasure_enclave",
    "validate_layout",
]
