"""The TAB document file shared by the visual and text pipelines.

One UTF-8 line per item: ``item_id<TAB>token token token\\n``.  Visual
documents carry unique sorted tokens; text documents repeat tokens as many
times as they occur.  An item with no tokens is a line ending right after
the TAB.
"""

from __future__ import annotations

from typing import IO, Iterable, Iterator, List, Sequence, Tuple

from .errors import ParseError


def format_document(item_id: str, tokens: Sequence[str]) -> str:
    if "\t" in item_id or "\n" in item_id:
        raise ParseError(f"item_id {item_id!r} contains a tab or newline")
    return item_id + "\t" + " ".join(tokens) + "\n"


def write_documents(docs: Iterable[Tuple[str, Sequence[str]]], out: IO[str]) -> int:
    """Write (item_id, tokens) pairs to ``out``; returns the line count."""
    n = 0
    for item_id, tokens in docs:
        out.write(format_document(item_id, tokens))
        n += 1
    return n


def write_document_file(docs: Iterable[Tuple[str, Sequence[str]]], path) -> int:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        return write_documents(docs, f)


def parse_documents(lines: Iterable[str]) -> Iterator[Tuple[str, List[str]]]:
    """Parse TAB-format lines into (item_id, tokens) pairs.

    Trailing newlines are stripped; fully blank lines are rejected, as is
    any line without a TAB separator.
    """
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if "\t" not in line:
            raise ParseError(
                f"expected 'item_id<TAB>tokens', got {line!r}", line=lineno
            )
        item_id, _, token_part = line.partition("\t")
        if not item_id:
            raise ParseError("empty item_id", line=lineno)
        tokens = token_part.split() if token_part else []
        yield item_id, tokens


def read_document_file(path) -> List[Tuple[str, List[str]]]:
    with open(path, "r", encoding="utf-8") as f:
        return list(parse_documents(f))
