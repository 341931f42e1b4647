# File: app/services/mage/builder.py
"""
Signing-tool side: derive each member's MAINFO, assemble the one MARS every
member carries, write it into every image and recompute measurements.
"""

import hashlib
from typing import List, Optional, Sequence, Tuple

from loguru import logger
from pydantic import BaseModel, ConfigDict

from ...core.errors import GroupMismatchError, MissingMarsError
from ...models.enclave import EnclaveImage, LoaderKind, MeasuredPage, Variant
from ...models.mage import Mainfo, MerkleRoot, MerkleSidecar, SplitMainfo
from ..image.codec import load_order, pre_mars_pages
from ..measurement import measure_enclave, premeasure_enclave
from .merkle import MerkleTree
from .section import build_mars, encode_merkle_root, encode_section


class InstrumentResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    images: Tuple[EnclaveImage, ...]
    mars_bytes: bytes
    sidecar: Optional[MerkleSidecar] = None

    @property
    def measurements(self) -> List[bytes]:
        return [final_measurement(img) for img in self.images]


def _require_mars(img: EnclaveImage) -> None:
    if not img.has_mars:
        raise MissingMarsError("image has no MARS range; reserve one before deriving MAINFO")


def loader_for(variant: Variant) -> LoaderKind:
    """Split groups run on stock loaders; the others need the two-stage loader."""
    return LoaderKind.UNMODIFIED if variant == Variant.SPLIT else LoaderKind.MODIFIED


def derive_mainfo(img: EnclaveImage) -> Mainfo:
    """Replay the first loader stage (everything but the MARS) and export the state."""
    _require_mars(img)
    state = premeasure_enclave(img.params, pre_mars_pages(img))
    return Mainfo.from_state(state, img.mars_offset)


def split_pages(img: EnclaveImage) -> Tuple[List[MeasuredPage], List[MeasuredPage]]:
    """(C_pre, C_post): pages before and after the MARS in file order."""
    _require_mars(img)
    first, count = img.mars_range
    return list(img.pages[:first]), list(img.pages[first + count:])


def post_content_for(img: EnclaveImage) -> bytes:
    """Serialized C_post records as an untrusted host would hand them over.

    Each record is [offset 8 LE][secinfo 64][content 4096], so the digest
    binds where and how each page is added, not just its bytes.
    """
    _, post = split_pages(img)
    return b"".join(
        p.offset.to_bytes(8, "little") + p.secinfo.to_bytes() + p.content for p in post
    )


def derive_split_mainfo(img: EnclaveImage) -> SplitMainfo:
    pre, post = split_pages(img)
    state = premeasure_enclave(img.params, pre)
    return SplitMainfo(
        premr=state.premr,
        count=state.byte_count,
        offset=img.mars_offset,
        post_digest=hashlib.sha256(post_content_for(img)).digest(),
        post_pages=len(post),
    )


def _check_group(images: Sequence[EnclaveImage]) -> int:
    if not images:
        raise GroupMismatchError("cannot instrument an empty group")
    for img in images:
        _require_mars(img)
    sizes = {img.mars_range[1] for img in images}
    if len(sizes) != 1:
        raise GroupMismatchError(
            f"all members must reserve the same MARS size, got {sorted(sizes)} pages"
        )
    return sizes.pop()


def _check_peers(peers: Sequence[Mainfo], variant: Variant) -> List[Mainfo]:
    for peer in peers:
        if isinstance(peer, SplitMainfo) != (variant == Variant.SPLIT):
            raise GroupMismatchError(
                f"peer MAINFO of type {type(peer).__name__} cannot join a {variant.label} group"
            )
    return list(peers)


def _fill(images: Sequence[EnclaveImage], mars_bytes: bytes, variant: Variant) -> Tuple[EnclaveImage, ...]:
    return tuple(img.with_mars_content(mars_bytes).with_variant(variant) for img in images)


def instrument_group(images: Sequence[EnclaveImage], peers: Sequence[Mainfo] = ()) -> List[EnclaveImage]:
    """Write one identical MARS into every member.

    The MAINFOs follow input order; ``peers`` are records of members whose
    images are held by other developers and take the indices after ``images``.
    """
    mars_pages = _check_group(images)
    mainfos = [derive_mainfo(img) for img in images] + _check_peers(peers, Variant.BASIC)
    mars_bytes = encode_section(build_mars(mainfos, mars_pages, Variant.BASIC))
    logger.info(f"✅ instrumented {len(images)} enclaves with a {mars_pages}-page MARS of {len(mainfos)} MAINFOs")
    return list(_fill(images, mars_bytes, Variant.BASIC))


def instrument_group_split(images: Sequence[EnclaveImage], peers: Sequence[Mainfo] = ()) -> List[EnclaveImage]:
    mars_pages = _check_group(images)
    mainfos = [derive_split_mainfo(img) for img in images] + _check_peers(peers, Variant.SPLIT)
    mars_bytes = encode_section(build_mars(mainfos, mars_pages, Variant.SPLIT))
    logger.info(f"✅ instrumented {len(images)} enclaves (split records) with a {mars_pages}-page MARS")
    return list(_fill(images, mars_bytes, Variant.SPLIT))


def instrument_group_merkle(
    images: Sequence[EnclaveImage], peers: Sequence[Mainfo] = ()
) -> Tuple[List[EnclaveImage], MerkleSidecar]:
    """Only the Merkle root lives in the MARS; entries and proofs go to a sidecar."""
    mars_pages = _check_group(images)
    tree = MerkleTree.build([derive_mainfo(img) for img in images] + _check_peers(peers, Variant.MERKLE))
    mars_bytes = encode_merkle_root(
        MerkleRoot(leaf_count=tree.leaf_count, root=tree.root, section_pages=mars_pages)
    )
    logger.info(f"✅ instrumented {len(images)} enclaves with Merkle root {tree.root.hex()[:16]}…")
    return list(_fill(images, mars_bytes, Variant.MERKLE)), tree.sidecar()


def instrument(
    images: Sequence[EnclaveImage], variant: Variant = Variant.BASIC, peers: Sequence[Mainfo] = ()
) -> InstrumentResult:
    sidecar = None
    if variant == Variant.SPLIT:
        out = instrument_group_split(images, peers)
    elif variant == Variant.MERKLE:
        out, sidecar = instrument_group_merkle(images, peers)
    else:
        out = instrument_group(images, peers)
    return InstrumentResult(images=tuple(out), mars_bytes=out[0].mars_bytes, sidecar=sidecar)


def final_measurement(img: EnclaveImage, loader: Optional[LoaderKind] = None) -> bytes:
    """The measurement a loader produces for the image (what gets signed)."""
    return measure_enclave(img.params, load_order(img, loader or loader_for(img.variant)))
