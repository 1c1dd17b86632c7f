"""The simulated disk and its host text representation."""

from __future__ import annotations

import os

BLOCK_SIZE = 512
NUM_BLOCKS = 512
DISK_WORDS = BLOCK_SIZE * NUM_BLOCKS


class DiskImageError(Exception):
    pass


class DiskImage:
    """512 blocks of 512 words, stored flat.

    On the host the image is a text file with exactly one word per line.
    """

    def __init__(self, words: list[str] | None = None):
        if words is None:
            words = [""] * DISK_WORDS
        if len(words) != DISK_WORDS:
            raise DiskImageError(f"disk image must hold {DISK_WORDS} words, got {len(words)}")
        self.words = words

    def __eq__(self, other):
        return isinstance(other, DiskImage) and self.words == other.words

    def copy(self) -> DiskImage:
        return DiskImage(list(self.words))

    def block(self, n: int) -> list[str]:
        _check_block(n)
        return self.words[n * BLOCK_SIZE:(n + 1) * BLOCK_SIZE]

    def write_block(self, n: int, words: list[str]) -> None:
        _check_block(n)
        if len(words) != BLOCK_SIZE:
            raise DiskImageError(f"a block holds {BLOCK_SIZE} words")
        self.words[n * BLOCK_SIZE:(n + 1) * BLOCK_SIZE] = words

    @classmethod
    def load(cls, path: str | os.PathLike) -> DiskImage:
        try:
            with open(path, encoding="utf-8", newline="") as f:
                text = f.read()
        except OSError as exc:
            raise DiskImageError(f"cannot read disk image {os.fspath(path)!r}: {exc.strerror}") from None
        if not text.endswith("\n"):
            raise DiskImageError(f"malformed disk image {os.fspath(path)!r}: missing final newline")
        words = text[:-1].split("\n")
        if len(words) != DISK_WORDS:
            raise DiskImageError(
                f"malformed disk image {os.fspath(path)!r}: {len(words)} lines, expected {DISK_WORDS}"
            )
        return cls(words)

    def save(self, path: str | os.PathLike) -> None:
        if any("\n" in w for w in self.words):
            raise DiskImageError("a word cannot contain a newline")
        tmp = f"{os.fspath(path)}.tmp"
        with open(tmp, "w", encoding="utf-8", newline="") as f:
            f.write("\n".join(self.words))
            f.write("\n")
        os.replace(tmp, path)


def _check_block(n: int) -> None:
    if not 0 <= n < NUM_BLOCKS:
        raise DiskImageError(f"block {n} out of range")
