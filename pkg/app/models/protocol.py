# File: app/models/protocol.py

from pydantic import BaseModel, ConfigDict, field_validator
from typing import Optional
from enum import Enum

from .attestation import REPORT_SIZE, Report

NONCE_SIZE = 16


class ProtocolState(str, Enum):
    IDLE = "idle"
    AWAIT_B = "await_b"
    AWAIT_SECRET = "await_secret"
    DONE = "done"
    ABORTED = "aborted"


class AbortReason(str, Enum):
    IDENTITY = "identity"    # peer measurement differs from the derived one
    AUTH = "auth"            # report MAC rejected
    INTEGRITY = "integrity"  # hash binding or AEAD failure
    REPLAY = "replay"        # message from another session
    TIMEOUT = "timeout"      # step budget exhausted


class AdversaryKind(str, Enum):
    HONEST = "honest"
    DROP = "drop"
    REPLAY = "replay"
    TAMPER = "tamper"


class Adversary(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: AdversaryKind = AdversaryKind.HONEST
    step: Optional[int] = None
    byte_index: int = 0

    @field_validator("step")
    def step_in_protocol(cls, v):
        if v is not None and not 1 <= v <= 4:
            raise ValueError("adversary step must be 1..4")
        return v

    @classmethod
    def parse(cls, spec: Optional[str]) -> "Adversary":
        """'honest', 'drop:N', 'replay:N' or 'tamper:N[:BYTE]'."""
        if not spec or spec == "honest":
            return cls()
        parts = spec.split(":")
        try:
            kind = AdversaryKind(parts[0])
            step = int(parts[1])
            byte_index = int(parts[2]) if len(parts) > 2 else 0
        except (ValueError, IndexError):
            raise ValueError(f"bad adversary spec {spec!r}; expected drop:N, replay:N or tamper:N[:BYTE]")
        if kind != AdversaryKind.TAMPER and len(parts) > 2:
            raise ValueError(f"only tamper takes a byte index: {spec!r}")
        return cls(kind=kind, step=step, byte_index=byte_index)

    def targets(self, step: int) -> bool:
        return self.kind != AdversaryKind.HONEST and self.step == step

    def __str__(self) -> str:
        if self.kind == AdversaryKind.HONEST:
            return "honest"
        if self.kind == AdversaryKind.TAMPER:
            return f"tamper:{self.step}:{self.byte_index}"
        return f"{self.kind.value}:{self.step}"


class Step1Message(BaseModel):
    """g^a, nonce, the sender's claimed group index and its report."""

    public: bytes
    nonce: bytes
    sender_index: int
    report: Report

    def to_wire(self) -> bytes:
        return self.public + self.nonce + self.sender_index.to_bytes(4, "little") + self.report.to_bytes()

    @classmethod
    def from_wire(cls, wire: bytes, public_size: int) -> "Step1Message":
        if len(wire) != public_size + NONCE_SIZE + 4 + REPORT_SIZE:
            raise ValueError("step-1 message has the wrong length")
        p = public_size
        return cls(
            public=wire[:p],
            nonce=wire[p:p + NONCE_SIZE],
            sender_index=int.from_bytes(wire[p + NONCE_SIZE:p + NONCE_SIZE + 4], "little"),
            report=Report.from_bytes(wire[p + NONCE_SIZE + 4:]),
        )


class Step2Message(BaseModel):
    public: bytes
    nonce_echo: bytes
    report: Report

    def to_wire(self) -> bytes:
        return self.public + self.nonce_echo + self.report.to_bytes()

    @classmethod
    def from_wire(cls, wire: bytes, public_size: int) -> "Step2Message":
        if len(wire) != public_size + NONCE_SIZE + REPORT_SIZE:
            raise ValueError("step-2 message has the wrong length")
        p = public_size
        return cls(
            public=wire[:p],
            nonce_echo=wire[p:p + NONCE_SIZE],
            report=Report.from_bytes(wire[p + NONCE_SIZE:]),
        )


class SealedMessage(BaseModel):
    """Steps 3 and 4: AEAD blob followed by the session nonce echo."""

    sealed: bytes
    nonce_echo: bytes

    def to_wire(self) -> bytes:
        return self.sealed + self.nonce_echo

    @classmethod
    def from_wire(cls, wire: bytes) -> "SealedMessage":
        if len(wire) <= NONCE_SIZE:
            raise ValueError("sealed message too short")
        return cls(sealed=wire[:-NONCE_SIZE], nonce_echo=wire[-NONCE_SIZE:])


class TranscriptEntry(BaseModel):
    step: int
    direction: str
    payload: bytes
    annotation: str = "delivered"

    def to_line(self) -> str:
        return f"{self.step} {self.direction} {self.payload.hex()} {self.annotation}"


class PartyOutcome(BaseModel):
    name: str
    state: ProtocolState
    reason: Optional[AbortReason] = None
    secret: Optional[bytes] = None
    acknowledged: bool = False

    def __str__(self) -> str:
        if self.state == ProtocolState.ABORTED:
            return f"Aborted({self.reason.value})"
        return self.state.name.title().replace("_", "")
