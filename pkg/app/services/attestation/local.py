# File: app/services/attestation/local.py
"""
Software stand-in for SGX local attestation.

EGETKEY -> report_key, EREPORT -> ereport. Report keys never leave this
module except inside a MAC computation.
"""

import hashlib
import hmac
import secrets
from typing import Optional

from loguru import logger

from ...core.errors import FormatError
from ...models.attestation import REPORT_DATA_SIZE, Platform, Report

_REPORT_KEY_LABEL = b"REPORTKEY"


def create_platform(platform_id: Optional[bytes] = None) -> Platform:
    return Platform(
        platform_id=platform_id or secrets.token_bytes(16),
        root_secret=secrets.token_bytes(32),
    )


def platform_from_seed(seed: bytes) -> Platform:
    """Reproducible platform for fixtures; never for anything real."""
    material = hashlib.sha256(b"platform-seed" + seed).digest()
    return Platform(platform_id=material[:16], root_secret=hashlib.sha256(material).digest())


def report_key(platform: Platform, enclave_measurement: bytes) -> bytes:
    return hmac.new(
        platform.root_secret.get_secret_value(),
        _REPORT_KEY_LABEL + enclave_measurement,
        hashlib.sha256,
    ).digest()


def _mac(platform: Platform, target_measurement: bytes, body: bytes) -> bytes:
    return hmac.new(report_key(platform, target_measurement), body, hashlib.sha256).digest()


def ereport(platform: Platform, attester_measurement: bytes, target_measurement: bytes, report_data: bytes) -> Report:
    """Report from the attester, MACed with the target enclave's report key."""
    if len(report_data) != REPORT_DATA_SIZE:
        raise FormatError(f"report_data must be {REPORT_DATA_SIZE} bytes, got {len(report_data)}")
    return Report(
        attester_measurement=attester_measurement,
        report_data=report_data,
        mac=_mac(platform, target_measurement, attester_measurement + report_data),
    )


def verify_report(platform: Platform, own_measurement: bytes, report: Report) -> bool:
    expected = _mac(platform, own_measurement, report.attester_measurement + report.report_data)
    ok = hmac.compare_digest(expected, report.mac)
    if not ok:
        logger.debug("⚠️ report MAC rejected under the verifier's report key")
    return ok
