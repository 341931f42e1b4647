import random

import pytest

from app.core.config.settings import settings
from app.models.enclave import PAGE_SIZE, EnclaveImage, EnclaveParams, MeasuredPage, SecInfo, Variant
from app.services.attestation import platform_from_seed
from app.services.image.generator import generate_image
from app.services.mage.builder import instrument


@pytest.fixture
def rng():
    return random.Random(settings.FIXTURE_SEED)


@pytest.fixture
def make_image(rng):
    """Factory for seeded random images: make_image(pages, mars_pages=1, ...)."""

    def _make(pages: int = 3, **kwargs) -> EnclaveImage:
        return generate_image(rng, pages, **kwargs)

    return _make


@pytest.fixture
def one_page_image():
    """A single REG page, no MARS, in a one-page enclave."""
    return EnclaveImage(
        params=EnclaveParams(ssa_frame_pages=1, enclave_size=PAGE_SIZE),
        pages=(MeasuredPage(offset=0, secinfo=SecInfo.reg(r=True, w=True), content=bytes(range(256)) * 16),),
    )


def _group(variant: Variant, sizes, seed: int):
    r = random.Random(seed)
    images = [generate_image(r, n, mars_pages=1, mars_position="middle") for n in sizes]
    return images, instrument(images, variant)


@pytest.fixture(scope="session")
def basic_group():
    """(raw images, InstrumentResult) for three members of 2, 3 and 4 content pages."""
    return _group(Variant.BASIC, (2, 3, 4), seed=11)


@pytest.fixture(scope="session")
def split_group():
    return _group(Variant.SPLIT, (2, 3, 4), seed=12)


@pytest.fixture(scope="session")
def merkle_group():
    return _group(Variant.MERKLE, (1, 2, 1, 3, 2), seed=13)


@pytest.fixture(scope="session")
def platform():
    return platform_from_seed(b"test-platform")
