# File: app/services/protocol/runtime.py
"""
A launched enclave taking part in the four-step secret migration.

    1. A -> B  g^a, nonce, REPORT(A -> B, H(g^a || nonce))
    2. B -> A  g^b, REPORT(B -> A, H(g^a || g^b || nonce))
    3. A -> B  AEAD_k(secret)
    4. B -> A  AEAD_k(ack)

Each side learns the peer's expected measurement by deriving it from its own
MARS, never from the peer.
"""

import hashlib
import hmac
import os
import secrets
from typing import Dict, Optional, Tuple

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from loguru import logger

from ...core.errors import DerivationIndexError, FormatError, ProtocolStateError, VerificationError
from ...models.attestation import Platform, Report
from ...models.enclave import EnclaveImage, Variant
from ...models.mage import MageView, MerkleSidecar
from ...models.protocol import (
    NONCE_SIZE,
    AbortReason,
    PartyOutcome,
    ProtocolState,
    SealedMessage,
    Step1Message,
    Step2Message,
)
from ..attestation import ereport, verify_report
from ..mage.builder import final_measurement
from ..mage.derive import derive_measurement, derive_measurement_split, merkle_derive
from .key_exchange import KeyExchange

AEAD_NAME = "AES-256-GCM"
_SESSION_INFO = b"mage-migration"
_ACK_LABEL = b"MIGRATED"

S = ProtocolState
ALLOWED_TRANSITIONS = {
    (S.IDLE, S.AWAIT_B),
    (S.IDLE, S.AWAIT_SECRET),
    (S.AWAIT_B, S.DONE),
    (S.AWAIT_SECRET, S.DONE),
    (S.IDLE, S.ABORTED),
    (S.AWAIT_B, S.ABORTED),
    (S.AWAIT_SECRET, S.ABORTED),
    (S.DONE, S.ABORTED),  # initiator only: bad acknowledgement
}


def bind(*parts: bytes) -> bytes:
    """report_data: SHA-256 of the parts followed by 32 zero bytes."""
    return hashlib.sha256(b"".join(parts)).digest() + bytes(32)


def session_key(shared: bytes, nonce: bytes) -> bytes:
    return HKDF(algorithm=hashes.SHA256(), length=32, salt=nonce, info=_SESSION_INFO).derive(shared)


def seal(key: bytes, plaintext: bytes, aad: bytes) -> bytes:
    iv = os.urandom(12)
    return iv + AESGCM(key).encrypt(iv, plaintext, aad)


def unseal(key: bytes, blob: bytes, aad: bytes) -> bytes:
    if len(blob) < 12 + 16:
        raise InvalidTag()
    return AESGCM(key).decrypt(blob[:12], blob[12:], aad)


class UntrustedHost:
    """Storage outside the enclave: C_post contents and the Merkle sidecar."""

    def __init__(self, post_contents: Optional[Dict[int, bytes]] = None, sidecar: Optional[MerkleSidecar] = None):
        self.post_contents = post_contents or {}
        self.sidecar = sidecar

    def post_content(self, index: int) -> bytes:
        try:
            return self.post_contents[index]
        except KeyError:
            raise DerivationIndexError(f"host has no C_post for member {index}")

    def merkle_entry(self, index: int):
        if self.sidecar is None or not 0 <= index < self.sidecar.leaf_count:
            raise DerivationIndexError(f"host has no MAINFO for member {index}")
        return self.sidecar.entries[index], self.sidecar.proofs[index]


class EnclaveRuntime:
    """One launched enclave and its protocol state."""

    def __init__(
        self,
        name: str,
        image: EnclaveImage,
        platform: Platform,
        kex: KeyExchange,
        group_index: int = 0,
        host: Optional[UntrustedHost] = None,
        measurement: Optional[bytes] = None,
    ):
        self.name = name
        self.image = image
        self.platform = platform
        self.kex = kex
        self.group_index = group_index
        self.host = host or UntrustedHost()
        # what the loader produced at launch
        self.measurement = measurement or final_measurement(image)
        self.view = MageView.from_image(image)
        self.state = ProtocolState.IDLE
        self.reason: Optional[AbortReason] = None
        self.secret: Optional[bytes] = None
        self.received_secret: Optional[bytes] = None
        self.acknowledged = False
        self.history = [ProtocolState.IDLE]
        self.role: Optional[str] = None

        self._private = None
        self._public: Optional[bytes] = None
        self._nonce: Optional[bytes] = None
        self._peer_measurement: Optional[bytes] = None
        self._key: Optional[bytes] = None

    def fresh(self) -> "EnclaveRuntime":
        """Relaunch the same enclave for a new session."""
        return EnclaveRuntime(
            self.name, self.image, self.platform, self.kex, self.group_index, self.host, self.measurement
        )

    # -- state machine ----------------------------------------------------

    def _move(self, new: ProtocolState) -> None:
        if (self.state, new) not in ALLOWED_TRANSITIONS:
            raise ProtocolStateError(f"{self.name}: illegal transition {self.state.value} -> {new.value}")
        self.state = new
        self.history.append(new)

    def abort(self, reason: AbortReason) -> None:
        logger.warning(f"❌ {self.name}: aborted ({reason.value}) in state {self.state.value}")
        self._move(ProtocolState.ABORTED)
        self.reason = reason
        self._key = None

    def timeout(self) -> None:
        if self.state in (ProtocolState.AWAIT_B, ProtocolState.AWAIT_SECRET):
            self.abort(AbortReason.TIMEOUT)

    def outcome(self) -> PartyOutcome:
        return PartyOutcome(
            name=self.name,
            state=self.state,
            reason=self.reason,
            secret=self.received_secret if self.received_secret is not None else self.secret,
            acknowledged=self.acknowledged,
        )

    # -- measurement derivation -------------------------------------------

    def derive_peer(self, index: int) -> bytes:
        """Peer measurement from this enclave's own MARS (host data verified first)."""
        variant = self.view.variant
        if variant == Variant.SPLIT:
            return derive_measurement_split(self.view, index, self.host.post_content(index))
        if variant == Variant.MERKLE:
            entry, proof = self.host.merkle_entry(index)
            return merkle_derive(self.view, index, entry, proof)
        return derive_measurement(self.view, index)

    def _check_report(self, report: Report, expected_data: bytes) -> Optional[AbortReason]:
        if not hmac.compare_digest(report.attester_measurement, self._peer_measurement):
            return AbortReason.IDENTITY
        if not verify_report(self.platform, self.measurement, report):
            return AbortReason.AUTH
        if not hmac.compare_digest(report.report_data, expected_data):
            return AbortReason.INTEGRITY
        return None

    # -- protocol steps ---------------------------------------------------

    def step1_initiate(self, target_index: int) -> Step1Message:
        if self.state != ProtocolState.IDLE:
            raise ProtocolStateError(f"{self.name}: step 1 needs Idle, state is {self.state.value}")
        self._peer_measurement = self.derive_peer(target_index)
        self._private, self._public = self.kex.generate()
        self._nonce = secrets.token_bytes(NONCE_SIZE)
        report = ereport(
            self.platform, self.measurement, self._peer_measurement, bind(self._public, self._nonce)
        )
        self.role = "initiator"
        self._move(ProtocolState.AWAIT_B)
        logger.info(f"🔄 {self.name}: step 1 sent to member {target_index}")
        return Step1Message(public=self._public, nonce=self._nonce, sender_index=self.group_index, report=report)

    def step2_respond(self, msg: Step1Message) -> Optional[Step2Message]:
        if self.state != ProtocolState.IDLE:
            raise ProtocolStateError(f"{self.name}: step 2 needs Idle, state is {self.state.value}")
        try:
            self._peer_measurement = self.derive_peer(msg.sender_index)
        except (DerivationIndexError, FormatError, VerificationError) as e:
            logger.warning(f"⚠️ {self.name}: cannot derive claimed sender {msg.sender_index}: {e}")
            self.abort(AbortReason.IDENTITY)
            return None

        reason = self._check_report(msg.report, bind(msg.public, msg.nonce))
        if reason:
            self.abort(reason)
            return None

        self._private, self._public = self.kex.generate()
        try:
            shared = self.kex.combine(self._private, msg.public)
        except ValueError:
            self.abort(AbortReason.INTEGRITY)
            return None
        self.role = "responder"
        self._nonce = msg.nonce
        self._key = session_key(shared, self._nonce)
        report = ereport(
            self.platform,
            self.measurement,
            self._peer_measurement,
            bind(msg.public, self._public, msg.nonce),
        )
        self._move(ProtocolState.AWAIT_SECRET)
        logger.info(f"🔄 {self.name}: step 2 sent, sender identity verified")
        return Step2Message(public=self._public, nonce_echo=msg.nonce, report=report)

    def step3_provision(self, msg: Step2Message) -> Optional[SealedMessage]:
        if self.state != ProtocolState.AWAIT_B:
            raise ProtocolStateError(f"{self.name}: step 3 needs AwaitB, state is {self.state.value}")
        if not hmac.compare_digest(msg.nonce_echo, self._nonce):
            self.abort(AbortReason.REPLAY)
            return None
        reason = self._check_report(msg.report, bind(self._public, msg.public, self._nonce))
        if reason:
            self.abort(reason)
            return None
        try:
            shared = self.kex.combine(self._private, msg.public)
        except ValueError:
            self.abort(AbortReason.INTEGRITY)
            return None
        self._key = session_key(shared, self._nonce)
        sealed = seal(self._key, self.secret or b"", self._nonce + b"\x03")
        self._move(ProtocolState.DONE)
        logger.info(f"✅ {self.name}: step 3 sent, {len(self.secret or b'')} secret bytes sealed")
        return SealedMessage(sealed=sealed, nonce_echo=self._nonce)

    def step4_ack(self, msg: SealedMessage) -> Optional[SealedMessage]:
        if self.state != ProtocolState.AWAIT_SECRET:
            raise ProtocolStateError(f"{self.name}: step 4 needs AwaitSecret, state is {self.state.value}")
        if not hmac.compare_digest(msg.nonce_echo, self._nonce):
            self.abort(AbortReason.REPLAY)
            return None
        try:
            secret = unseal(self._key, msg.sealed, self._nonce + b"\x03")
        except InvalidTag:
            self.abort(AbortReason.INTEGRITY)
            return None
        self.received_secret = secret
        ack = seal(self._key, _ACK_LABEL + hashlib.sha256(secret).digest(), self._nonce + b"\x04")
        self._move(ProtocolState.DONE)
        logger.info(f"✅ {self.name}: secret received ({len(secret)} bytes), ack sent")
        return SealedMessage(sealed=ack, nonce_echo=self._nonce)

    def receive_ack(self, msg: SealedMessage) -> bool:
        if self.role != "initiator" or self.state != ProtocolState.DONE or self._key is None:
            raise ProtocolStateError(f"{self.name}: no acknowledgement expected in state {self.state.value}")
        if self.acknowledged:
            return True
        if not hmac.compare_digest(msg.nonce_echo, self._nonce):
            self.abort(AbortReason.REPLAY)
            return False
        expected = _ACK_LABEL + hashlib.sha256(self.secret or b"").digest()
        try:
            ok = hmac.compare_digest(unseal(self._key, msg.sealed, self._nonce + b"\x04"), expected)
        except InvalidTag:
            ok = False
        if not ok:
            self.abort(AbortReason.INTEGRITY)
            return False
        self.acknowledged = True
        logger.info(f"✅ {self.name}: acknowledgement verified")
        return True

    # -- wire dispatch ----------------------------------------------------

    def expects(self, step: int) -> bool:
        if step == 1:
            return self.state == ProtocolState.IDLE
        if step == 2:
            return self.state == ProtocolState.AWAIT_B
        if step == 3:
            return self.state == ProtocolState.AWAIT_SECRET
        if step == 4:
            return self.role == "initiator" and self.state == ProtocolState.DONE and not self.acknowledged
        return False

    def handle(self, step: int, wire: bytes) -> Optional[Tuple[int, bytes]]:
        """Process the step-`step` message; returns the (step, wire) reply if any.

        Messages the current state does not expect are ignored.
        """
        if not self.expects(step):
            logger.debug(f"🔍 {self.name}: ignoring step-{step} message in state {self.state.value}")
            return None
        try:
            if step == 1:
                reply = self.step2_respond(Step1Message.from_wire(wire, self.kex.public_size))
                return (2, reply.to_wire()) if reply else None
            if step == 2:
                reply = self.step3_provision(Step2Message.from_wire(wire, self.kex.public_size))
                return (3, reply.to_wire()) if reply else None
            if step == 3:
                reply = self.step4_ack(SealedMessage.from_wire(wire))
                return (4, reply.to_wire()) if reply else None
            self.receive_ack(SealedMessage.from_wire(wire))
            return None
        except ValueError:
            # undecodable: a report or field failed validation
            self.abort(AbortReason.INTEGRITY)
            return None
