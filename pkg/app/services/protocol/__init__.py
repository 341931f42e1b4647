from .channel import Channel, SessionResult, run_session
from .key_exchange import EcdhP256KeyExchange, KeyExchange, SmallModpKeyExchange, get_key_exchange
from .runtime import ALLOWED_TRANSITIONS, EnclaveRuntime, UntrustedHost

__all__ = [
    "ALLOWED_TRANSITIONS",
    "Channel",
    "EcdhP256KeyExchange",
    "EnclaveRuntime",
    "KeyExchange",
    "SessionResult",
    "SmallModpKeyExchange",
    "UntrustedHost",
    "get_key_exchange",
    "run_session",
]
