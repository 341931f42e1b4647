import random

import pytest

from app.core.errors import CapacityError, GroupMismatchError, MissingMarsError
from app.models.enclave import PAGE_SIZE, EnclaveImage, EnclaveParams, LoaderKind, MeasuredPage, SecInfo, Variant
from app.models.mage import MageView
from app.services.image.generator import generate_group, generate_image
from app.services.mage.builder import (
    derive_mainfo,
    derive_split_mainfo,
    final_measurement,
    instrument,
    instrument_group,
    loader_for,
)
from app.services.mage.derive import derive_measurement, mage_size
from app.services.mage.section import decode_section


def test_mainfo_count_for_one_page_plus_mars(rng):
    img = generate_image(rng, 1, mars_pages=1)
    mainfo = derive_mainfo(img)
    assert mainfo.count == 5248
    assert mainfo.offset == img.mars_offset


def test_mainfo_needs_mars(rng):
    with pytest.raises(MissingMarsError):
        derive_mainfo(generate_image(rng, 2, mars_pages=0))


def test_mainfo_ignores_mars_contents(rng):
    img = generate_image(rng, 2, mars_pages=1)
    filled = img.with_mars_content(b"\x00" * 8 + b"\x01" * 4088)
    assert derive_mainfo(filled) == derive_mainfo(img)


def test_every_member_carries_the_same_mars(basic_group):
    _, result = basic_group
    assert len({img.mars_bytes for img in result.images}) == 1
    section = decode_section(result.mars_bytes)
    assert section.entry_count == 3


def test_instrumenting_twice_is_idempotent(basic_group):
    images, result = basic_group
    again = instrument(list(result.images), Variant.BASIC)
    assert again.mars_bytes == result.mars_bytes
    assert again.measurements == result.measurements
    assert instrument(images).mars_bytes == result.mars_bytes


def test_group_of_two_derives_both_ways(rng):
    a, b = instrument_group([generate_image(rng, 2), generate_image(rng, 5)])
    assert derive_measurement(MageView.from_image(a), 1) == final_measurement(b)
    assert derive_measurement(MageView.from_image(b), 0) == final_measurement(a)


def test_self_derivation(basic_group):
    _, result = basic_group
    for i, img in enumerate(result.images):
        assert derive_measurement(MageView.from_image(img), i) == final_measurement(img)


@pytest.mark.parametrize("size", [1, 2, 3, 10])
def test_mutual_derivation_pairwise(size):
    images = generate_group(random.Random(size), size, min_pages=1, max_pages=8)
    instrumented = instrument_group(images)
    expected = [final_measurement(img) for img in instrumented]
    for img in instrumented:
        view = MageView.from_image(img)
        assert [derive_measurement(view, j) for j in range(size)] == expected


def test_mutual_derivation_full_page_group():
    images = generate_group(random.Random(85), 85, min_pages=1, max_pages=8)
    instrumented = instrument_group(images)
    # every member holds the same MARS, so one view stands for all of them
    assert len({img.mars_bytes for img in instrumented}) == 1
    view = MageView.from_image(instrumented[0])
    assert mage_size(view) == 85
    for j, img in enumerate(instrumented):
        assert derive_measurement(view, j) == final_measurement(img)


def test_group_over_capacity(rng):
    images = [generate_image(rng, 0) for _ in range(86)]
    with pytest.raises(CapacityError):
        instrument_group(images)


def test_members_must_share_mars_size(rng):
    with pytest.raises(GroupMismatchError):
        instrument_group([generate_image(rng, 1, mars_pages=1), generate_image(rng, 1, mars_pages=2)])


def test_empty_group_rejected():
    with pytest.raises(GroupMismatchError):
        instrument_group([])


def test_loader_order_matters_only_with_misplaced_mars(rng):
    placed_first = generate_image(rng, 3, mars_position="start")
    assert final_measurement(placed_first, LoaderKind.MODIFIED) != final_measurement(
        placed_first, LoaderKind.UNMODIFIED
    )
    placed_last = generate_image(rng, 3, mars_position="end")
    assert final_measurement(placed_last, LoaderKind.MODIFIED) == final_measurement(
        placed_last, LoaderKind.UNMODIFIED
    )
    no_mars = generate_image(rng, 3, mars_pages=0)
    assert final_measurement(no_mars, LoaderKind.MODIFIED) == final_measurement(
        no_mars, LoaderKind.UNMODIFIED
    )


def test_split_groups_use_the_stock_loader():
    assert loader_for(Variant.SPLIT) == LoaderKind.UNMODIFIED
    assert loader_for(Variant.BASIC) == LoaderKind.MODIFIED
    assert loader_for(Variant.MERKLE) == LoaderKind.MODIFIED


def _image_with_mars_at(offsets):
    reg = MeasuredPage(offset=0, secinfo=SecInfo.reg(r=True, w=True), content=b"\x11" * PAGE_SIZE)
    mars = [MeasuredPage(offset=o, secinfo=SecInfo.mars(), content=bytes(PAGE_SIZE)) for o in offsets]
    return EnclaveImage(
        params=EnclaveParams(enclave_size=4 * PAGE_SIZE),
        pages=(reg, *mars),
        mars_range=(1, len(mars)),
    )


def test_mars_with_a_gap_is_rejected():
    with pytest.raises(ValueError, match="contiguous"):
        _image_with_mars_at([0x1000, 0x3000])


def test_in_memory_two_page_mars_derives_exactly():
    img = _image_with_mars_at([0x1000, 0x2000])
    (out,) = instrument_group([img])
    assert derive_measurement(MageView.from_image(out), 0) == final_measurement(out)


def test_peer_mainfos_stand_in_for_images(basic_group):
    images, result = basic_group
    (own,) = instrument_group(images[:1], peers=[derive_mainfo(img) for img in images[1:]])
    assert own == result.images[0]


def test_peer_record_kind_must_match_variant(basic_group):
    images, _ = basic_group
    with pytest.raises(GroupMismatchError):
        instrument(images[:1], Variant.SPLIT, peers=[derive_mainfo(images[1])])
    with pytest.raises(GroupMismatchError):
        instrument(images[:1], Variant.BASIC, peers=[derive_split_mainfo(images[1])])
