# File: app/services/protocol/key_exchange.py

import random
from abc import ABC, abstractmethod
from typing import Any, Optional, Tuple

from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat


class KeyExchange(ABC):
    """Diffie-Hellman as two operations: make a keypair, combine with a peer."""

    name: str
    public_size: int

    @abstractmethod
    def generate(self) -> Tuple[Any, bytes]:
        """Return (private key, encoded public key)."""

    @abstractmethod
    def combine(self, private: Any, peer_public: bytes) -> bytes:
        """Shared secret g^ab. Raises ValueError for an invalid peer key."""


class EcdhP256KeyExchange(KeyExchange):
    name = "ECDH-P256"
    public_size = 65  # uncompressed X9.62 point

    def generate(self):
        private = ec.generate_private_key(ec.SECP256R1())
        public = private.public_key().public_bytes(
            encoding=Encoding.X962, format=PublicFormat.UncompressedPoint
        )
        return private, public

    def combine(self, private, peer_public: bytes) -> bytes:
        peer = ec.EllipticCurvePublicKey.from_encoded_point(ec.SECP256R1(), peer_public)
        return private.exchange(ec.ECDH(), peer)


class SmallModpKeyExchange(KeyExchange):
    """Seeded DH over the Mersenne prime 2^127 - 1. Reproducible, not secure."""

    name = "MODP-2^127-1"
    public_size = 16
    P = (1 << 127) - 1
    G = 3

    def __init__(self, seed: Optional[int] = None):
        self._rng = random.Random(seed)

    def generate(self):
        private = self._rng.randrange(2, self.P - 1)
        return private, pow(self.G, private, self.P).to_bytes(self.public_size, "big")

    def combine(self, private, peer_public: bytes) -> bytes:
        if len(peer_public) != self.public_size:
            raise ValueError("peer public value has the wrong size")
        y = int.from_bytes(peer_public, "big")
        if not 1 < y < self.P - 1:
            raise ValueError("peer public value outside the group")
        return pow(y, private, self.P).to_bytes(self.public_size, "big")


def get_key_exchange(name: str, seed: Optional[int] = None) -> KeyExchange:
    if name == "ecdh":
        return EcdhP256KeyExchange()
    if name == "modp-small":
        return SmallModpKeyExchange(seed)
    raise ValueError(f"unknown key exchange {name!r}; expected ecdh or modp-small")


