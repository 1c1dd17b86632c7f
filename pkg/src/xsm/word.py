"""Machine words.

Every storage cell of the machine holds a Python ``str``.  A word takes part
in arithmetic only when it is a signed decimal literal whose value fits in a
64-bit signed integer.
"""

import re

WORD_MIN = -(2**63)
WORD_MAX = 2**63 - 1

_NUMERIC = re.compile(r"-?[0-9]+\Z")


class NotNumeric(ValueError):
    """Raised when a word is used as a number but is not one."""


def is_numeric(w: str) -> bool:
    return _NUMERIC.match(w) is not None and WORD_MIN <= int(w) <= WORD_MAX


def word_as_integer(w: str) -> int:
    if _NUMERIC.match(w) is None:
        raise NotNumeric(f"not a number: {w!r}")
    value = int(w)
    if not WORD_MIN <= value <= WORD_MAX:
        raise NotNumeric(f"number out of range: {w!r}")
    return value


def integer_word(value: int) -> str:
    """Render an arithmetic result, rejecting values outside the word range."""
    if not WORD_MIN <= value <= WORD_MAX:
        raise OverflowError(value)
    return str(value)


def encrypt(w: str) -> str:
    checksum = str(sum(ord(c) for c in w))
    return ("*" + checksum) * 2
