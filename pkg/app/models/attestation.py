# File: app/models/attestation.py

from pydantic import BaseModel, ConfigDict, SecretBytes, field_validator

MEASUREMENT_SIZE = 32
REPORT_DATA_SIZE = 64
MAC_SIZE = 32
REPORT_SIZE = MEASUREMENT_SIZE + REPORT_DATA_SIZE + MAC_SIZE
MAC_NAME = "HMAC-SHA256"


class Platform(BaseModel):
    """A simulated SGX platform. The root secret stands in for the fused key."""

    model_config = ConfigDict(frozen=True)

    platform_id: bytes
    root_secret: SecretBytes

    @field_validator("platform_id")
    def id_size(cls, v):
        if len(v) != 16:
            raise ValueError("platform_id must be 16 bytes")
        return v

    @field_validator("root_secret")
    def secret_size(cls, v):
        if len(v.get_secret_value()) != 32:
            raise ValueError("root_secret must be 32 bytes")
        return v


class Report(BaseModel):
    model_config = ConfigDict(frozen=True)

    attester_measurement: bytes
    report_data: bytes
    mac: bytes

    @field_validator("attester_measurement")
    def measurement_size(cls, v):
        if len(v) != MEASUREMENT_SIZE:
            raise ValueError(f"measurement must be {MEASUREMENT_SIZE} bytes")
        return v

    @field_validator("report_data")
    def data_size(cls, v):
        if len(v) != REPORT_DATA_SIZE:
            raise ValueError(f"report_data must be {REPORT_DATA_SIZE} bytes")
        return v

    @field_validator("mac")
    def mac_size(cls, v):
        if len(v) != MAC_SIZE:
            raise ValueError(f"mac must be {MAC_SIZE} bytes")
        return v

    def to_bytes(self) -> bytes:
        return self.attester_measurement + self.report_data + self.mac

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Report":
        if len(raw) != REPORT_SIZE:
            raise ValueError(f"report must be {REPORT_SIZE} bytes, got {len(raw)}")
        return cls(
            attester_measurement=bytes(raw[:32]),
            report_data=bytes(raw[32:96]),
            mac=bytes(raw[96:]),
        )
