"""XFS: host-side tool for the simulated disk.

Disk layout (block numbers)::

    0        boot block
    1        free list, one word per block: "1" used, "0" free
    2-3      inode table, 64 inodes of 16 words
    4        root listing, 64 entries of 8 words
    5-68     OS components (exception, timer, disk, console and INT handlers)
    69-255   user files
    256-511  swap area, never touched by this tool
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field

from .disk import BLOCK_SIZE, NUM_BLOCKS, DiskImage, DiskImageError
from .machine import DEVICE_VECTORS, EXCEPTION_VECTOR, MAX_SOFTWARE_INT, MIN_SOFTWARE_INT, software_int_vector
from .devices import PAGE_SIZE
from .word import word_as_integer, NotNumeric

BOOT_BLOCK = 0
FREE_LIST_BLOCK = 1
INODE_BLOCKS = (2, 3)
ROOT_BLOCK = 4
RESERVED_BLOCKS = 69
USER_BLOCKS = range(69, 256)

INODE_WORDS = 16
NUM_INODES = 64
ROOT_ENTRY_WORDS = 8
MAX_FILE_BLOCKS = 4
MAX_FILE_WORDS = MAX_FILE_BLOCKS * BLOCK_SIZE
MAX_NAME_LENGTH = 12

DATA = "data"
EXEC = "exec"
ROOT = "root"
FILE_TYPES = (DATA, EXEC, ROOT)
OPEN = "open"
RESTRICTED = "restricted"

XEXE_MAGIC = "XEXE"
XEXE_HEADER_WORDS = 8
# logical layout of an executable: pages 0-1 library, 2-3 heap, 4-7 code, 8-9 stack
CODE_START = 4 * PAGE_SIZE
CODE_END = 8 * PAGE_SIZE
DEFAULT_ENTRY = CODE_START

BOOT_CAPACITY = BLOCK_SIZE // 2
HANDLER_CAPACITY = 2 * BLOCK_SIZE // 2


class XfsError(Exception):
    pass


def handler_blocks(name: str) -> tuple[int, int]:
    """First block and block count reserved for an OS component."""
    fixed = {"os": (0, 1), "exception": (5, 2), "timer": (7, 2), "disk": (9, 2), "console": (11, 2)}
    if name in fixed:
        return fixed[name]
    if name.startswith("int") and name[3:].isdigit():
        n = int(name[3:])
        if MIN_SOFTWARE_INT <= n <= MAX_SOFTWARE_INT:
            return 13 + 2 * (n - MIN_SOFTWARE_INT), 2
    raise XfsError(f"unknown handler {name!r}")


def handler_pages(name: str) -> tuple[int, int]:
    """Memory pages the OS is expected to load a component to."""
    if name == "os":
        return 1, 1
    if name == "exception":
        vector = EXCEPTION_VECTOR
    elif name in DEVICE_VECTORS:
        vector = DEVICE_VECTORS[name]
    else:
        handler_blocks(name)
        vector = software_int_vector(int(name[3:]))
    page = vector // PAGE_SIZE
    return page, page + 1


HANDLER_NAMES = ("os", "exception", "timer", "disk", "console") + tuple(
    f"int{n}" for n in range(MIN_SOFTWARE_INT, MAX_SOFTWARE_INT + 1)
)


@dataclass
class Inode:
    name: str
    type: str
    size: int
    user: str = "root"
    perm: str = OPEN
    blocks: list[int] = field(default_factory=list)

    def to_words(self) -> list[str]:
        blocks = [str(b) for b in self.blocks] + [""] * (MAX_FILE_BLOCKS - len(self.blocks))
        words = [self.name, self.type, str(self.size), self.user, self.perm] + blocks
        return words + [""] * (INODE_WORDS - len(words))

    def root_entry(self, index: int) -> list[str]:
        words = [self.name, str(self.size), self.type, self.user, self.perm, str(index)]
        return words + [""] * (ROOT_ENTRY_WORDS - len(words))


def read_words(path) -> list[str]:
    """Host file as words: one word per line."""
    try:
        with open(path, encoding="utf-8", newline="") as f:
            text = f.read()
    except OSError as exc:
        raise XfsError(f"cannot read {os.fspath(path)!r}: {exc.strerror}") from None
    if not text:
        return []
    if text.endswith("\n"):
        text = text[:-1]
    return text.split("\n")


def read_instructions(path) -> list[str]:
    return [line.strip() for line in read_words(path) if line.strip()]


def write_words(path, words: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("".join(w + "\n" for w in words))


def spread(instructions: list[str]) -> list[str]:
    """Two words per instruction: the text, then an empty word."""
    words = []
    for text in instructions:
        words += [text, ""]
    return words


class FileSystem:
    def __init__(self, disk: DiskImage):
        self.disk = disk

    @classmethod
    def formatted(cls) -> FileSystem:
        fs = cls(DiskImage())
        fs.format()
        return fs

    # -- raw access ----------------------------------------------------

    def _words(self, block: int, offset: int, count: int) -> list[str]:
        start = block * BLOCK_SIZE + offset
        return self.disk.words[start:start + count]

    def _put(self, block: int, offset: int, words: list[str]) -> None:
        start = block * BLOCK_SIZE + offset
        self.disk.words[start:start + len(words)] = words

    def free_list(self) -> list[str]:
        return self.disk.block(FREE_LIST_BLOCK)

    def free_blocks(self) -> int:
        return self.free_list().count("0")

    def _inode_location(self, index: int) -> tuple[int, int]:
        block, slot = divmod(index * INODE_WORDS, BLOCK_SIZE)
        return INODE_BLOCKS[0] + block, slot

    def read_inode(self, index: int) -> Inode | None:
        words = self._words(*self._inode_location(index), INODE_WORDS)
        if words[0] == "":
            return None
        try:
            size = word_as_integer(words[2])
            blocks = [word_as_integer(w) for w in words[5:5 + MAX_FILE_BLOCKS] if w != ""]
        except NotNumeric as exc:
            raise XfsError(f"corrupt inode {index}: {exc}") from None
        return Inode(words[0], words[1], size, words[3], words[4], blocks)

    def _write_inode(self, index: int, inode: Inode | None) -> None:
        block, slot = self._inode_location(index)
        self._put(block, slot, inode.to_words() if inode else [""] * INODE_WORDS)
        entry = inode.root_entry(index) if inode else [""] * ROOT_ENTRY_WORDS
        self._put(ROOT_BLOCK, index * ROOT_ENTRY_WORDS, entry)

    def inodes(self) -> list[tuple[int, Inode]]:
        found = []
        for i in range(NUM_INODES):
            inode = self.read_inode(i)
            if inode is not None:
                found.append((i, inode))
        return found

    def find(self, name: str) -> tuple[int, Inode]:
        for index, inode in self.inodes():
            if inode.name == name:
                return index, inode
        raise XfsError(f"no such file {name!r}")

    # -- commands ------------------------------------------------------

    def format(self) -> None:
        self.disk.words[:] = [""] * len(self.disk.words)
        self.disk.write_block(FREE_LIST_BLOCK, ["1"] * RESERVED_BLOCKS + ["0"] * (NUM_BLOCKS - RESERVED_BLOCKS))

    def load_boot(self, instructions: list[str]) -> str:
        return self.load_handler("os", instructions)

    def load_handler(self, name: str, instructions: list[str]) -> str:
        first, count = handler_blocks(name)
        capacity = count * BLOCK_SIZE // 2
        if len(instructions) > capacity:
            raise XfsError(f"{name}: {len(instructions)} instructions exceed the {capacity}-instruction capacity")
        words = spread(instructions)
        words += [""] * (count * BLOCK_SIZE - len(words))
        for i in range(count):
            self.disk.write_block(first + i, words[i * BLOCK_SIZE:(i + 1) * BLOCK_SIZE])
        blocks = f"block {first}" if count == 1 else f"blocks {first}-{first + count - 1}"
        lo, hi = handler_pages(name)
        pages = f"page {lo}" if lo == hi else f"pages {lo}-{hi}"
        return f"{name}: {len(instructions)} instructions written to {blocks}; load to {pages}"

    def load_file(self, words: list[str], kind: str, name: str, user: str = "root", perm: str = OPEN) -> str:
        if kind not in (DATA, EXEC):
            raise XfsError(f"unknown file type {kind!r}")
        if not name or len(name) > MAX_NAME_LENGTH or "\n" in name:
            raise XfsError(f"file name must be 1 to {MAX_NAME_LENGTH} characters: {name!r}")
        if any(inode.name == name for _, inode in self.inodes()):
            raise XfsError(f"file {name!r} already exists")
        if kind == EXEC:
            words = executable_words(words)
        if len(words) > MAX_FILE_WORDS:
            raise XfsError(f"{name}: {len(words)} words exceed the maximum file size of {MAX_FILE_WORDS}")
        free_slots = [i for i in range(NUM_INODES) if self.read_inode(i) is None]
        if not free_slots:
            raise XfsError("no free inode")
        needed = math.ceil(len(words) / BLOCK_SIZE)
        free_list = self.free_list()
        available = [b for b in USER_BLOCKS if free_list[b] == "0"]
        if len(available) < needed:
            raise XfsError(f"{name}: needs {needed} blocks, {len(available)} free")
        blocks = available[:needed]
        for i, block in enumerate(blocks):
            chunk = words[i * BLOCK_SIZE:(i + 1) * BLOCK_SIZE]
            self.disk.write_block(block, chunk + [""] * (BLOCK_SIZE - len(chunk)))
            free_list[block] = "1"
        self.disk.write_block(FREE_LIST_BLOCK, free_list)
        self._write_inode(free_slots[0], Inode(name, kind, len(words), user, perm, blocks))
        return f"{name}: {len(words)} words in {needed} block(s)"

    def remove(self, name: str) -> str:
        index, inode = self.find(name)
        if inode.type == ROOT:
            raise XfsError("the root file cannot be removed")
        free_list = self.free_list()
        for block in inode.blocks:
            free_list[block] = "0"
            self.disk.write_block(block, [""] * BLOCK_SIZE)
        self.disk.write_block(FREE_LIST_BLOCK, free_list)
        self._write_inode(index, None)
        return f"{name}: removed, {len(inode.blocks)} block(s) freed"

    def read_file(self, name: str) -> list[str]:
        _, inode = self.find(name)
        words: list[str] = []
        for block in inode.blocks:
            words += self.disk.block(block)
        return words[:inode.size]

    def list_files(self) -> list[str]:
        lines = [f"{'NAME':<12} {'SIZE':>5} {'TYPE':<5} {'USER':<8} PERM"]
        for _, inode in self.inodes():
            lines.append(f"{inode.name:<12} {inode.size:>5} {inode.type:<5} {inode.user:<8} {inode.perm}")
        return lines

    def fsck(self) -> list[str]:
        """Consistency problems of the file system; empty when the disk is sound."""
        problems = []
        free_list = self.free_list()
        for block, flag in enumerate(free_list):
            if flag not in ("0", "1"):
                problems.append(f"free list entry {block} is {flag!r}")
            elif block < RESERVED_BLOCKS and flag != "1":
                problems.append(f"reserved block {block} marked free")
        owner: dict[int, str] = {}
        total = 0
        for i in range(NUM_INODES):
            try:
                inode = self.read_inode(i)
            except XfsError as exc:
                problems.append(str(exc))
                continue
            block, slot = self._inode_location(i)
            root = self._words(ROOT_BLOCK, i * ROOT_ENTRY_WORDS, ROOT_ENTRY_WORDS)
            if inode is None:
                if any(self._words(block, slot, INODE_WORDS)):
                    problems.append(f"inode {i}: unused slot holds data")
                if any(root):
                    problems.append(f"root entry {i}: set for an unused inode")
                continue
            if root != inode.root_entry(i):
                problems.append(f"root entry {i}: does not match inode {inode.name!r}")
            if len(inode.name) > MAX_NAME_LENGTH:
                problems.append(f"inode {i}: name {inode.name!r} too long")
            if inode.type not in FILE_TYPES:
                problems.append(f"inode {i}: unknown type {inode.type!r}")
            if not 0 <= inode.size <= MAX_FILE_WORDS:
                problems.append(f"inode {i}: size {inode.size} out of range")
            if len(inode.blocks) != math.ceil(inode.size / BLOCK_SIZE):
                problems.append(f"inode {i}: {len(inode.blocks)} blocks for {inode.size} words")
            for b in inode.blocks:
                if b not in USER_BLOCKS:
                    problems.append(f"inode {i}: block {b} outside the user area")
                elif free_list[b] != "1":
                    problems.append(f"inode {i}: block {b} is marked free")
                if b in owner:
                    problems.append(f"inode {i}: block {b} shared with {owner[b]!r}")
                owner[b] = inode.name
            total += len(inode.blocks)
        used = free_list.count("1")
        if used != RESERVED_BLOCKS + total:
            problems.append(f"free list marks {used} blocks used, expected {RESERVED_BLOCKS + total}")
        return problems


def executable_words(lines: list[str]) -> list[str]:
    """Validate an executable (header + one instruction per line) and lay it out on disk."""
    if len(lines) < XEXE_HEADER_WORDS:
        raise XfsError("executable is shorter than its header")
    header, body = lines[:XEXE_HEADER_WORDS], [l.strip() for l in lines[XEXE_HEADER_WORDS:] if l.strip()]
    if header[0] != XEXE_MAGIC:
        raise XfsError(f"bad executable magic {header[0]!r}")
    if any(w != "0" for w in header[3:]):
        raise XfsError("executable header words 3-7 must be 0")
    try:
        entry = word_as_integer(header[1])
        text_size = word_as_integer(header[2])
    except NotNumeric as exc:
        raise XfsError(f"bad executable header: {exc}") from None
    if text_size != 2 * len(body):
        raise XfsError(f"header text size {text_size} does not match {len(body)} instructions")
    if text_size > CODE_END - CODE_START:
        raise XfsError("code does not fit in the code pages")
    if not CODE_START <= entry < min(CODE_END, CODE_START + max(text_size, 1)) or entry % 2:
        raise XfsError(f"entry point {entry} outside the code")
    return header + spread(body)


def xexe_header(instructions: int, entry: int = DEFAULT_ENTRY) -> list[str]:
    return [XEXE_MAGIC, str(entry), str(2 * instructions), "0", "0", "0", "0", "0"]


# -- command line ----------------------------------------------------------


def init_image(path) -> DiskImage:
    fs = FileSystem.formatted()
    try:
        fs.disk.save(path)
    except OSError as exc:
        raise XfsError(f"cannot write {os.fspath(path)!r}: {exc.strerror}") from None
    return fs.disk


def _open(path) -> FileSystem:
    try:
        return FileSystem(DiskImage.load(path))
    except DiskImageError as exc:
        raise XfsError(str(exc)) from None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="xfs", description="Manage XSM disk images.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("init", help="create a formatted disk image")
    p.add_argument("image")
    p = sub.add_parser("load", help="copy boot code, a handler, or a file onto the disk")
    what = p.add_mutually_exclusive_group(required=True)
    what.add_argument("--boot", action="store_true")
    what.add_argument("--handler", choices=HANDLER_NAMES, metavar="NAME")
    what.add_argument("--exec", action="store_true")
    what.add_argument("--data", action="store_true")
    p.add_argument("image")
    p.add_argument("file")
    p.add_argument("--name")
    p = sub.add_parser("rm", help="remove a file")
    p.add_argument("image")
    p.add_argument("name")
    p = sub.add_parser("ls", help="list files")
    p.add_argument("image")
    p = sub.add_parser("cat", help="print a file")
    p.add_argument("image")
    p.add_argument("name")
    p = sub.add_parser("export", help="copy a file to the host")
    p.add_argument("image")
    p.add_argument("name")
    p.add_argument("out")
    p = sub.add_parser("fsck", help="check file-system consistency")
    p.add_argument("image")
    args = parser.parse_args(argv)

    try:
        if args.command == "init":
            init_image(args.image)
            return 0
        fs = _open(args.image)
        if args.command == "load":
            if args.boot:
                message = fs.load_boot(read_instructions(args.file))
            elif args.handler:
                message = fs.load_handler(args.handler, read_instructions(args.file))
            else:
                name = args.name or os.path.basename(args.file)
                message = fs.load_file(read_words(args.file), EXEC if args.exec else DATA, name)
            fs.disk.save(args.image)
            print(message)
        elif args.command == "rm":
            print(fs.remove(args.name))
            fs.disk.save(args.image)
        elif args.command == "ls":
            print("\n".join(fs.list_files()))
        elif args.command == "cat":
            for word in fs.read_file(args.name):
                print(word)
        elif args.command == "export":
            write_words(args.out, fs.read_file(args.name))
        elif args.command == "fsck":
            problems = fs.fsck()
            for problem in problems:
                print(problem)
            if problems:
                return 1
            print("clean")
    except XfsError as exc:
        print(f"xfs: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
