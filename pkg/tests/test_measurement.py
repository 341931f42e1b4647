import hashlib
import random
import struct

import pytest

from app.core.errors import FormatError, MisalignedError, OutOfRangeError, OverlappingPagesError
from app.models.enclave import PAGE_SIZE, EnclaveParams, MeasuredPage, SecInfo
from app.services.hashing import hs_finalize
from app.services.image.generator import generate_image
from app.services.measurement import (
    BLOCKS_PER_PAGE,
    absorb_page,
    eadd_block,
    ecreate_block,
    eextend_blocks,
    measure_enclave,
    page_blocks,
    premeasure_enclave,
)


def oracle_measure(params, pages):
    """Measurement built straight from struct layouts and hashlib."""
    data = struct.pack("<8sLQ44s", b"ECREATE", params.ssa_frame_pages, params.enclave_size, b"")
    for page in pages:
        secinfo48 = page.secinfo.flags.to_bytes(8, "little") + bytes(40)
        data += struct.pack("<8sQ48s", b"EADD", page.offset, secinfo48)
        for k in range(0, PAGE_SIZE, 256):
            data += struct.pack("<8sQ48s", b"EEXTEND", page.offset + k, b"")
            data += page.content[k:k + 256]
    return hashlib.sha256(data).digest()


def test_ecreate_block_layout():
    block = ecreate_block(EnclaveParams(ssa_frame_pages=2, enclave_size=0x10000))
    assert len(block) == 64
    assert block[:8] == b"ECREATE\x00"
    assert block[8:12] == (2).to_bytes(4, "little")
    assert block[12:20] == (0x10000).to_bytes(8, "little")
    assert block[20:] == bytes(44)


def test_eadd_block_keeps_48_secinfo_bytes():
    secinfo = SecInfo.reg(r=True, w=True, x=True)
    block = eadd_block(0x3000, secinfo)
    assert block[:8] == b"EADD\x00\x00\x00\x00"
    assert block[8:16] == (0x3000).to_bytes(8, "little")
    assert block[16:] == secinfo.to_bytes()[:48]


def test_eadd_rejects_unaligned_offset():
    with pytest.raises(MisalignedError):
        eadd_block(0x3001, SecInfo.reg())


def test_eextend_yields_header_and_four_chunks():
    chunk = bytes(range(256))
    blocks = eextend_blocks(0x1100, chunk)
    assert len(blocks) == 5
    assert blocks[0][:8] == b"EEXTEND\x00"
    assert blocks[0][8:16] == (0x1100).to_bytes(8, "little")
    assert b"".join(blocks[1:]) == chunk


def test_eextend_rejects_bad_chunk():
    with pytest.raises(FormatError):
        eextend_blocks(0, bytes(255))
    with pytest.raises(MisalignedError):
        eextend_blocks(0x80, bytes(256))


def test_page_contributes_81_blocks():
    blocks = list(page_blocks(0, SecInfo.reg(), bytes(PAGE_SIZE)))
    assert len(blocks) == BLOCKS_PER_PAGE == 81
    assert all(len(b) == 64 for b in blocks)


def test_empty_enclave_is_ecreate_only():
    params = EnclaveParams(enclave_size=PAGE_SIZE)
    expected = hashlib.sha256(struct.pack("<8sLQ44s", b"ECREATE", 1, PAGE_SIZE, b"")).digest()
    assert measure_enclave(params, []) == expected


def test_one_page_matches_oracle(one_page_image):
    img = one_page_image
    assert measure_enclave(img.params, img.pages) == oracle_measure(img.params, img.pages)


def test_random_images_match_oracle(make_image):
    for pages in (1, 3, 6):
        img = make_image(pages, mars_pages=1)
        assert measure_enclave(img.params, img.pages) == oracle_measure(img.params, img.pages)


def test_premeasure_byte_count(make_image):
    img = make_image(4, mars_pages=0)
    state = premeasure_enclave(img.params, img.pages)
    assert state.byte_count == 64 * (1 + 81 * 4)


def test_resume_at_every_page_boundary(make_image):
    img = make_image(5, mars_pages=0)
    full = measure_enclave(img.params, img.pages)
    for split in range(len(img.pages) + 1):
        state = premeasure_enclave(img.params, img.pages[:split])
        for page in img.pages[split:]:
            state = absorb_page(state, page)
        assert hs_finalize(state) == full


def test_load_order_changes_measurement(make_image):
    img = make_image(3, mars_pages=0)
    reordered = (img.pages[1], img.pages[0], img.pages[2])
    assert measure_enclave(img.params, reordered) != measure_enclave(img.params, img.pages)


def test_secinfo_changes_measurement(one_page_image):
    img = one_page_image
    page = img.pages[0].model_copy(update={"secinfo": SecInfo.reg(r=True)})
    assert measure_enclave(img.params, [page]) != measure_enclave(img.params, img.pages)


def test_rejects_page_outside_enclave():
    params = EnclaveParams(enclave_size=PAGE_SIZE)
    page = MeasuredPage(offset=PAGE_SIZE, secinfo=SecInfo.reg(), content=bytes(PAGE_SIZE))
    with pytest.raises(OutOfRangeError):
        measure_enclave(params, [page])


def test_rejects_overlapping_pages():
    params = EnclaveParams(enclave_size=2 * PAGE_SIZE)
    page = MeasuredPage(offset=0, secinfo=SecInfo.reg(), content=bytes(PAGE_SIZE))
    with pytest.raises(OverlappingPagesError):
        measure_enclave(params, [page, page])


def test_enclave_size_must_be_power_of_two():
    with pytest.raises(ValueError):
        EnclaveParams(enclave_size=3 * PAGE_SIZE)
    with pytest.raises(ValueError):
        EnclaveParams(enclave_size=2048)


def test_secinfo_round_trip_and_describe():
    secinfo = SecInfo.reg(r=True, w=False, x=True)
    assert SecInfo.from_bytes(secinfo.to_bytes()) == secinfo
    assert secinfo.describe() == "REG:R-X"
    assert SecInfo.mars().describe() == "REG:R--"
    assert SecInfo.tcs().describe() == "TCS:---"


def test_oracle_suite_of_small_enclaves():
    r = random.Random(8)
    for _ in range(200):
        pages = r.randint(1, 8)
        img = generate_image(
            r,
            pages,
            mars_pages=r.randint(0, 2),
            mars_position=r.randint(0, pages),
            ssa_frame_pages=r.randint(1, 4),
            with_tcs=r.random() < 0.3,
        )
        assert measure_enclave(img.params, img.pages) == oracle_measure(img.params, img.pages)


def test_single_byte_change_changes_measurement():
    r = random.Random(21)
    for _ in range(50):
        img = generate_image(r, r.randint(1, 8), mars_pages=0)
        before = measure_enclave(img.params, img.pages)
        i = r.randrange(len(img.pages))
        pos = r.randrange(PAGE_SIZE)
        content = bytearray(img.pages[i].content)
        content[pos] ^= 1 << r.randrange(8)
        pages = list(img.pages)
        pages[i] = pages[i].model_copy(update={"content": bytes(content)})
        assert measure_enclave(img.params, pages) != before


def test_tcs_page_is_measured_with_its_type(rng):
    img = generate_image(rng, 2, mars_pages=0, with_tcs=True)
    assert img.pages[-1].secinfo == SecInfo.tcs()
    assert measure_enclave(img.params, img.pages) == oracle_measure(img.params, img.pages)
    as_reg = list(img.pages)
    as_reg[-1] = as_reg[-1].model_copy(update={"secinfo": SecInfo.reg()})
    assert measure_enclave(img.params, as_reg) != measure_enclave(img.params, img.pages)
