# File: app/api/v1/images.py

from typing import List, Optional

from fastapi import APIRouter, File, HTTPException, Query, UploadFile
from loguru import logger

from ...core.errors import CapacityError, FormatError, GroupMismatchError, MageError, VerificationError
from ...models.enclave import LoaderKind, Variant
from ...models.mage import MageView, MemoryOverhead
from ...services.image import parse_image
from ...services.mage.builder import derive_mainfo, derive_split_mainfo, final_measurement
from ...services.mage.derive import derive_measurement
from ...services.mage.section import memory_overhead
from ...utils.records import to_hex

router = APIRouter()


def _http_error(e: MageError) -> HTTPException:
    if isinstance(e, (CapacityError, GroupMismatchError)):
        status = 409
    elif isinstance(e, VerificationError):
        status = 422
    else:
        status = 400
    return HTTPException(status_code=status, detail=str(e))


async def _read_upload(file: UploadFile):
    data = await file.read()
    if not data:
        raise HTTPException(status_code=400, detail="empty upload")
    logger.info(f"📄 received {file.filename} ({len(data)} bytes)")
    return parse_image(data)


@router.post("/images/measure")
async def measure_image(
    file: UploadFile = File(...),
    loader: LoaderKind = Query(LoaderKind.MODIFIED),
):
    """Final measurement of an uploaded image under the chosen loader."""
    try:
        img = await _read_upload(file)
        digest = final_measurement(img, loader)
    except MageError as e:
        logger.error(f"❌ measure failed for {file.filename}: {e}")
        raise _http_error(e)
    return {
        "filename": file.filename,
        "loader": loader.value,
        "page_count": len(img.pages),
        "measurement": to_hex(digest),
    }


@router.post("/images/mainfo")
async def image_mainfo(file: UploadFile = File(...)):
    try:
        img = await _read_upload(file)
        mainfo = derive_split_mainfo(img) if img.variant == Variant.SPLIT else derive_mainfo(img)
    except MageError as e:
        logger.error(f"❌ MAINFO failed for {file.filename}: {e}")
        raise _http_error(e)
    body = {
        "filename": file.filename,
        "variant": img.variant.label,
        "premr": to_hex(mainfo.premr),
        "count": mainfo.count,
        "offset": mainfo.offset,
        "record": to_hex(mainfo.to_bytes()),
    }
    if img.variant == Variant.SPLIT:
        body["post_digest"] = to_hex(mainfo.post_digest)
        body["post_pages"] = mainfo.post_pages
    return body


@router.post("/images/derive")
async def derive_from_image(
    file: UploadFile = File(...),
    index: int = Query(..., ge=0),
):
    """Measurement of group member ``index`` derived from the uploaded image's MARS.

    Only basic groups: split and Merkle derivations need host data the
    request does not carry.
    """
    try:
        img = await _read_upload(file)
        view = MageView.from_image(img)
        if view.variant != Variant.BASIC:
            raise FormatError(f"{view.variant.label} groups need host data; use the CLI")
        digest = derive_measurement(view, index)
    except MageError as e:
        raise _http_error(e)
    return {"filename": file.filename, "index": index, "measurement": to_hex(digest)}


@router.get("/capacity", response_model=List[MemoryOverhead])
def capacity_table(pages: Optional[List[int]] = Query(None)):
    counts = pages or [1, 10, 100, 1000, 10000]
    if any(p < 1 for p in counts):
        raise HTTPException(status_code=400, detail="page counts must be positive")
    return [memory_overhead(p) for p in counts]
