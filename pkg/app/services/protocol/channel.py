# File: app/services/protocol/channel.py

from collections import deque
from typing import Dict, List, Optional

from loguru import logger
from pydantic import BaseModel

from ...core.config.settings import settings
from ...models.attestation import MAC_NAME
from ...models.protocol import (
    Adversary,
    AdversaryKind,
    PartyOutcome,
    ProtocolState,
    TranscriptEntry,
)
from .runtime import AEAD_NAME, EnclaveRuntime

DIRECTIONS = {1: "A->B", 2: "B->A", 3: "A->B", 4: "B->A"}


class Channel:
    """In-process message path with one pluggable adversary.

    Every message, delivered or not, lands in the transcript. Messages of
    finished sessions are kept per step so a replay adversary can resend
    them later.
    """

    def __init__(self, adversary: Optional[Adversary] = None):
        self.adversary = adversary or Adversary()
        self.transcript: List[TranscriptEntry] = []
        self.recorded: Dict[int, bytes] = {}
        self._session: Dict[int, bytes] = {}

    def transmit(self, step: int, wire: bytes) -> Optional[bytes]:
        direction = DIRECTIONS[step]
        adv = self.adversary
        self._session[step] = wire

        if not adv.targets(step):
            self.transcript.append(TranscriptEntry(step=step, direction=direction, payload=wire))
            return wire

        if adv.kind == AdversaryKind.DROP:
            self.transcript.append(
                TranscriptEntry(step=step, direction=direction, payload=wire, annotation="dropped")
            )
            logger.debug(f"🔍 adversary dropped step {step}")
            return None

        if adv.kind == AdversaryKind.REPLAY and step in self.recorded:
            stale = self.recorded[step]
            self.transcript.append(
                TranscriptEntry(step=step, direction=direction, payload=wire, annotation="suppressed")
            )
            self.transcript.append(
                TranscriptEntry(step=step, direction=direction, payload=stale, annotation="replayed")
            )
            logger.debug(f"🔍 adversary replayed an earlier step-{step} message")
            return stale

        if adv.kind == AdversaryKind.TAMPER:
            tampered = bytearray(wire)
            i = adv.byte_index % len(tampered)
            tampered[i] ^= 0xFF
            tampered = bytes(tampered)
            self.transcript.append(
                TranscriptEntry(step=step, direction=direction, payload=tampered, annotation=f"tampered@{i}")
            )
            logger.debug(f"🔍 adversary flipped byte {i} of step {step}")
            return tampered

        self.transcript.append(TranscriptEntry(step=step, direction=direction, payload=wire))
        return wire

    def end_session(self) -> None:
        self.recorded.update(self._session)
        self._session = {}

    def export(self, kex_name: str) -> str:
        lines = [f"# transcript kex={kex_name} mac={MAC_NAME} aead={AEAD_NAME} adversary={self.adversary}"]
        lines += [entry.to_line() for entry in self.transcript]
        return "\n".join(lines) + "\n"


class SessionResult(BaseModel):
    initiator: PartyOutcome
    responder: PartyOutcome
    transcript: List[TranscriptEntry]
    ticks: int

    @property
    def migrated(self) -> bool:
        return (
            self.initiator.state == ProtocolState.DONE
            and self.responder.state == ProtocolState.DONE
            and self.responder.secret is not None
            and self.responder.secret == self.initiator.secret
        )


def _prime_replay(a: EnclaveRuntime, b: EnclaveRuntime, channel: Channel, secret: bytes, target_index: int) -> None:
    """Run one honest session on the channel so a replay has something stale to send."""
    adversary = channel.adversary
    channel.adversary = Adversary()
    mark = len(channel.transcript)
    try:
        run_session(a.fresh(), b.fresh(), channel, secret, target_index)
    finally:
        channel.adversary = adversary
        del channel.transcript[mark:]


def run_session(
    a: EnclaveRuntime,
    b: EnclaveRuntime,
    channel: Channel,
    secret: bytes,
    target_index: Optional[int] = None,
    step_budget: Optional[int] = None,
) -> SessionResult:
    """Drive the four steps between initiator a and responder b.

    Time is logical: each delivery costs one tick, and whoever is still
    waiting when the queue empties or the budget runs out times out.
    """
    budget = step_budget or settings.PROTOCOL_STEP_BUDGET
    target = b.group_index if target_index is None else target_index

    adv = channel.adversary
    if adv.kind == AdversaryKind.REPLAY and adv.step not in channel.recorded:
        _prime_replay(a, b, channel, secret, target)

    mark = len(channel.transcript)
    a.secret = secret
    parties = {"A->B": b, "B->A": a}
    queue = deque()

    def send(step: int, wire: bytes) -> None:
        delivered = channel.transmit(step, wire)
        if delivered is not None:
            queue.append((parties[DIRECTIONS[step]], step, delivered))

    send(1, a.step1_initiate(target).to_wire())

    ticks = 0
    while queue and ticks < budget:
        ticks += 1
        receiver, step, wire = queue.popleft()
        reply = receiver.handle(step, wire)
        if reply:
            send(*reply)

    for party in (a, b):
        party.timeout()
    channel.end_session()

    result = SessionResult(
        initiator=a.outcome(),
        responder=b.outcome(),
        transcript=channel.transcript[mark:],
        ticks=ticks,
    )
    logger.info(f"📊 session finished: A={result.initiator} B={result.responder} ({ticks} ticks)")
    return result
