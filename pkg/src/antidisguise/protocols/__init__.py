"""Avatar and ciphertext authentication protocols."""

from .avatar import AvatarProver, AvatarVerifier, Phase, SessionKey, fi_create
from .ciphertext import CiphertextWriter, ContractSession
from .meet import AuthResult, MeetResult, authenticate, meet, write_first_impression
from .messages import Channel, Reason, Rejected, Transcript
from .parties import AlreadyRegistered, Contract, Metaverse, User, fetch_mit

__all__ = [
    "AlreadyRegistered",
    "AuthResult",
    "AvatarProver",
    "AvatarVerifier",
    "Channel",
    "CiphertextWriter",
    "Contract",
    "ContractSession",
    "MeetResult",
    "Metaverse",
    "Phase",
    "Reason",
    "Rejected",
    "SessionKey",
    "Transcript",
    "User",
    "authenticate",
    "fetch_mit",
    "fi_create",
    "meet",
    "write_first_impression",
]
