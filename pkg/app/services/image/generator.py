# File: app/services/image/generator.py

import random
from typing import List, Optional, Union

from ...models.enclave import PAGE_SIZE, EnclaveImage, EnclaveParams, MeasuredPage, SecInfo, Variant

ZERO_PAGE = bytes(PAGE_SIZE)


def _enclave_size_for(total_pages: int) -> int:
    size = PAGE_SIZE
    while size < total_pages * PAGE_SIZE:
        size <<= 1
    return size


def generate_image(
    rng: random.Random,
    pages: int,
    mars_pages: int = 1,
    mars_position: Union[str, int] = "end",
    variant: Variant = Variant.BASIC,
    ssa_frame_pages: int = 1,
    with_tcs: bool = False,
    enclave_size: Optional[int] = None,
) -> EnclaveImage:
    """A reproducible enclave of random content pages plus a zeroed MARS.

    ``mars_position`` is "start", "middle", "end" or the number of content
    pages that precede the MARS. ``mars_pages=0`` yields an image without MARS.
    """
    if pages < 0 or mars_pages < 0:
        raise ValueError("page counts must be non-negative")

    kinds: List[SecInfo] = []
    for i in range(pages):
        if with_tcs and i == pages - 1:
            kinds.append(SecInfo.tcs())
        else:
            kinds.append(SecInfo.reg(r=True, w=rng.random() < 0.5, x=rng.random() < 0.3))
    contents = [rng.randbytes(PAGE_SIZE) for _ in range(pages)]

    if mars_position == "start":
        before = 0
    elif mars_position == "middle":
        before = pages // 2
    elif mars_position == "end":
        before = pages
    else:
        before = int(mars_position)
        if not 0 <= before <= pages:
            raise ValueError(f"MARS position {before} outside 0..{pages}")

    layout = [(kinds[i], contents[i]) for i in range(before)]
    layout += [(SecInfo.mars(), ZERO_PAGE)] * mars_pages
    layout += [(kinds[i], contents[i]) for i in range(before, pages)]

    total = len(layout)
    size = enclave_size or _enclave_size_for(total)
    measured = tuple(
        MeasuredPage(offset=i * PAGE_SIZE, secinfo=secinfo, content=content)
        for i, (secinfo, content) in enumerate(layout)
    )
    return EnclaveImage(
        params=EnclaveParams(ssa_frame_pages=ssa_frame_pages, enclave_size=size),
        pages=measured,
        mars_range=(before, mars_pages) if mars_pages else None,
        variant=variant,
    )


def generate_group(
    rng: random.Random,
    size: int,
    min_pages: int = 1,
    max_pages: int = 8,
    mars_pages: int = 1,
    variant: Variant = Variant.BASIC,
    mars_position: Union[str, int] = "end",
) -> List[EnclaveImage]:
    return [
        generate_image(
            rng,
            rng.randint(min_pages, max_pages),
            mars_pages=mars_pages,
            mars_position=mars_position,
            variant=variant,
        )
        for _ in range(size)
    ]
