"""Binary pair encodings of the interruptibility (4-class) and role (3-class) labels."""

from __future__ import annotations

from typing import NamedTuple


class BinaryInterruptPair(NamedTuple):
    interrupt_private: bool
    interrupt_work: bool


class BinaryRolePair(NamedTuple):
    role_private: bool
    role_work: bool


_INTR = {
    "private_only": BinaryInterruptPair(True, False),
    "work_only": BinaryInterruptPair(False, True),
    "both": BinaryInterruptPair(True, True),
    "none": BinaryInterruptPair(False, False),
}
_INTR_BACK = {v: k for k, v in _INTR.items()}

_ROLE = {
    "private": BinaryRolePair(True, False),
    "work": BinaryRolePair(False, True),
    "both": BinaryRolePair(True, True),
}
_ROLE_BACK = {v: k for k, v in _ROLE.items()}


def encode_interruptibility(label: str) -> BinaryInterruptPair:
    return _INTR[label]


def decode_interrupt_pair(pair) -> str:
    return _INTR_BACK[BinaryInterruptPair(bool(pair[0]), bool(pair[1]))]


def encode_role(label: str) -> BinaryRolePair:
    return _ROLE[label]


def decode_role_pair(pair, fallback: str) -> str:
    """Decode a predicted role pair; (False, False) means "no role" and maps to ``fallback``."""
    key = BinaryRolePair(bool(pair[0]), bool(pair[1]))
    return _ROLE_BACK.get(key, fallback)
