# File: app/utils/records.py

from pathlib import Path
from typing import List, Sequence, Tuple

from ..core.errors import RecordFormatError
from ..models.enclave import Variant
from ..models.mage import AnyMainfo, GroupManifestEntry, mainfo_class_for

MAINFO_HEADER = "MAINFO v1"


def to_hex(data: bytes) -> str:
    """Lowercase, no 0x prefix"""
    return data.hex()


def from_hex(text: str) -> bytes:
    try:
        return bytes.fromhex(text.strip())
    except ValueError as e:
        raise RecordFormatError(f"not a hex string: {e}") from e


def dump_mainfo(mainfo: AnyMainfo, variant: Variant = Variant.BASIC) -> str:
    """The exchange file developers pass around: header line, then the record in hex."""
    return f"{MAINFO_HEADER} {variant.label}\n{to_hex(mainfo.to_bytes())}\n"


def load_mainfo(text: str) -> AnyMainfo:
    return load_mainfo_record(text)[1]


def load_mainfo_record(text: str) -> Tuple[Variant, AnyMainfo]:
    """Parse an exchange file into the group variant it was written for and its record."""
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) != 2 or not lines[0].startswith(MAINFO_HEADER):
        raise RecordFormatError(f"expected '{MAINFO_HEADER} <variant>' and one hex line")
    try:
        variant = Variant.from_name(lines[0][len(MAINFO_HEADER):].strip() or "basic")
        return variant, mainfo_class_for(variant).from_bytes(from_hex(lines[1]))
    except ValueError as e:
        raise RecordFormatError(f"bad MAINFO record: {e}") from e


def dump_manifest(entries: Sequence[GroupManifestEntry]) -> str:
    """One line per image: filename, hex measurement, MARS entry index."""
    return "".join(f"{e.filename} {to_hex(e.measurement)} {e.index}\n" for e in entries)


def load_manifest(text: str) -> List[GroupManifestEntry]:
    entries = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise RecordFormatError(f"manifest line {n}: expected 'filename measurement index'")
        try:
            entries.append(GroupManifestEntry(filename=parts[0], measurement=from_hex(parts[1]), index=int(parts[2])))
        except ValueError as e:
            raise RecordFormatError(f"manifest line {n}: {e}") from e
    return entries


def read_manifest(path) -> List[GroupManifestEntry]:
    return load_manifest(Path(path).read_text())


def read_mainfo(path) -> Tuple[Variant, AnyMainfo]:
    return load_mainfo_record(Path(path).read_text())
