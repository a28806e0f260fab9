"""Exact tooling for multiplayer games under parallel repetition."""

from .errors import (
    CapExceeded,
    ConvergenceError,
    InvalidInput,
    NoCertificate,
    ParrepError,
    PreconditionError,
    ZeroMassEvent,
)
from .game import Game, ProductEvent, ProductStrategy, repeat_game, validate_game, value, win_probability
from .gallery import gallery_game
from .structure import SupportSet, classify, support_of

__all__ = [
    "CapExceeded",
    "ConvergenceError",
    "Game",
    "InvalidInput",
    "NoCertificate",
    "ParrepError",
    "PreconditionError",
    "ProductEvent",
    "ProductStrategy",
    "SupportSet",
    "ZeroMassEvent",
    "classify",
    "gallery_game",
    "repeat_game",
    "support_of",
    "validate_game",
    "value",
    "win_probability",
]
