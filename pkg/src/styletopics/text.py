"""Text documents from item titles and attribute strings.

Tokenization is deliberately plain: lowercase, split on anything outside
[a-z0-9], drop single-character fragments and stopwords, keep duplicates.
Word counts carry signal for text, so the result is a multiset rather than
the set semantics used for visual tokens.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from typing import IO, Iterable, List, Sequence, Set, Tuple

from .errors import ParseError

_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class TextDocument:
    """Per-item multiset of word tokens, in extraction order."""

    item_id: str
    tokens: tuple


def tokenize_item(
    item_id: str,
    title: str,
    attributes: Sequence[str],
    stopwords: Set[str],
) -> TextDocument:
    """Tokenize a title plus its attribute strings into one document.

    An empty result is a valid empty document.
    """
    text = " ".join([title, *attributes]).lower()
    tokens = [
        tok
        for tok in _TOKEN.findall(text)
        if len(tok) > 1 and tok not in stopwords
    ]
    return TextDocument(item_id=item_id, tokens=tuple(tokens))


def load_stopwords(lines: Iterable[str]) -> Set[str]:
    """One stopword per line; blank lines ignored, words lowercased."""
    words = set()
    for line in lines:
        word = line.strip().lower()
        if word:
            words.add(word)
    return words


def load_stopword_file(path) -> Set[str]:
    with open(path, "r", encoding="utf-8") as f:
        return load_stopwords(f)


def read_item_rows(
    stream: IO[str], delimiter: str = ","
) -> List[Tuple[str, str, List[str]]]:
    """Read (item_id, title, attributes) rows from a CSV/TSV stream.

    Columns: item_id, title, attributes; attributes are pipe-separated
    within their field.  A header row whose first cell is ``item_id`` is
    skipped.
    """
    rows: List[Tuple[str, str, List[str]]] = []
    reader = csv.reader(stream, delimiter=delimiter)
    for lineno, row in enumerate(reader, start=1):
        if not row:
            continue
        if lineno == 1 and row[0].strip().lower() == "item_id":
            continue
        if len(row) < 2:
            raise ParseError(
                f"expected columns item_id,title[,attributes], got {row!r}",
                line=lineno,
            )
        item_id = row[0].strip()
        if not item_id:
            raise ParseError("empty item_id", line=lineno)
        title = row[1]
        attributes = [a for a in row[2].split("|") if a] if len(row) > 2 else []
        rows.append((item_id, title, attributes))
    return rows


def tokenize_items(
    rows: Iterable[Tuple[str, str, Sequence[str]]], stopwords: Set[str]
) -> List[TextDocument]:
    return [
        tokenize_item(item_id, title, attributes, stopwords)
        for item_id, title, attributes in rows
    ]
