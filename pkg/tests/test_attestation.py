import random

import pytest

from app.core.errors import FormatError
from app.models.attestation import REPORT_SIZE, Report
from app.services.attestation import create_platform, ereport, platform_from_seed, report_key, verify_report

A = b"\xaa" * 32
B = b"\xbb" * 32
DATA = b"\x01" * 64


def test_report_verifies_at_its_target(platform):
    report = ereport(platform, A, B, DATA)
    assert verify_report(platform, B, report)


def test_report_rejected_by_other_enclave(platform):
    report = ereport(platform, A, B, DATA)
    assert not verify_report(platform, A, report)


def test_report_rejected_on_other_platform(platform):
    report = ereport(platform, A, B, DATA)
    assert not verify_report(create_platform(), B, report)


def test_tampered_fields_fail(platform):
    report = ereport(platform, A, B, DATA)
    tampered_data = report.model_copy(update={"report_data": b"\x02" + DATA[1:]})
    tampered_attester = report.model_copy(update={"attester_measurement": B})
    assert not verify_report(platform, B, tampered_data)
    assert not verify_report(platform, B, tampered_attester)


def test_report_keys_differ_per_enclave(platform):
    assert report_key(platform, A) != report_key(platform, B)
    assert report_key(platform, A) == report_key(platform, A)


def test_one_bit_apart_measurements_get_unrelated_keys(platform):
    r = random.Random(5)
    keys = set()
    for _ in range(100):
        m = r.randbytes(32)
        bit = r.randrange(256)
        flipped = (int.from_bytes(m, "big") ^ (1 << bit)).to_bytes(32, "big")
        k1, k2 = report_key(platform, m), report_key(platform, flipped)
        assert k1 != k2
        keys.update((k1, k2))
    assert len(keys) == 200


def test_seeded_platforms_are_reproducible():
    assert platform_from_seed(b"x") == platform_from_seed(b"x")
    assert platform_from_seed(b"x") != platform_from_seed(b"y")


def test_root_secret_is_masked(platform):
    assert platform.root_secret.get_secret_value() not in repr(platform).encode()
    assert "**" in str(platform.root_secret)


def test_report_data_size_checked(platform):
    with pytest.raises(FormatError):
        ereport(platform, A, B, b"\x00" * 63)


def test_report_wire_form(platform):
    report = ereport(platform, A, B, DATA)
    raw = report.to_bytes()
    assert len(raw) == REPORT_SIZE == 128
    assert raw[:32] == A
    assert Report.from_bytes(raw) == report
    with pytest.raises(ValueError):
        Report.from_bytes(raw[:-1])
