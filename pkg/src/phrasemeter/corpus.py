"""Corpus loading: bracketed treebank files, phrase lists, sentence context.

The treebank format is one labeled-bracketing tree per line.  Lines starting
with ``#doc <id>`` open a new document; other ``#`` lines are comments.
Leaves are either ``surface|lemma|POS`` or a bare surface form (in which case
the lemma defaults to the lowercased surface and the POS to the preterminal
label above the leaf).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

PHRASE_TYPES = ("VO", "AN", "NN", "B")


class CorpusError(Exception):
    """Malformed corpus or phrase-list input."""


class TreeParseError(CorpusError):
    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


@dataclass(frozen=True)
class Token:
    index: int
    surface: str
    lemma: str
    pos: str


@dataclass
class ParseTree:
    """A constituency tree node.

    Internal nodes have ``children``; leaves have a ``leaf_token`` index into
    the sentence's token list, never both.
    """

    label: str
    children: list["ParseTree"] = field(default_factory=list)
    leaf_token: Optional[int] = None

    def is_leaf(self) -> bool:
        return self.leaf_token is not None

    def iter_nodes(self) -> Iterator["ParseTree"]:
        yield self
        for child in self.children:
            yield from child.iter_nodes()

    def leaves(self) -> list["ParseTree"]:
        if self.is_leaf():
            return [self]
        out = []
        for child in self.children:
            out.extend(child.leaves())
        return out

    def leaf_indices(self) -> list[int]:
        return [leaf.leaf_token for leaf in self.leaves()]

    def span(self) -> tuple[int, int]:
        """Inclusive (first, last) leaf token index under this node."""
        idx = self.leaf_indices()
        return min(idx), max(idx)


@dataclass
class SentenceRecord:
    doc_id: str
    sent_index: int
    tokens: list[Token]
    tree: ParseTree
    prev_id: Optional[tuple[str, int]] = None
    next_id: Optional[tuple[str, int]] = None

    @property
    def key(self) -> tuple[str, int]:
        return (self.doc_id, self.sent_index)

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]


@dataclass(frozen=True)
class PhraseSpec:
    phrase_id: str
    phrase_type: str
    head_lemma: str
    dep_lemma: str
    query: str

    def __post_init__(self):
        if self.phrase_type not in PHRASE_TYPES:
            raise CorpusError(
                f"phrase {self.phrase_id!r}: unknown phrase_type {self.phrase_type!r}")
        if self.head_lemma == self.dep_lemma:
            raise CorpusError(
                f"phrase {self.phrase_id!r}: head and dependent lemma are identical")


@dataclass(frozen=True)
class PhraseInstance:
    phrase_id: str
    sentence_key: tuple[str, int]
    span: tuple[int, int]
    head_index: int
    dep_index: int
    match_class: str  # target | head_matched | dep_matched

    def __post_init__(self):
        lo, hi = self.span
        if not (lo <= self.head_index <= hi and lo <= self.dep_index <= hi):
            raise CorpusError(
                f"instance of {self.phrase_id!r}: head/dep index outside span")


class Corpus:
    """An immutable collection of sentence records, indexed by (doc, sent)."""

    def __init__(self, records: list[SentenceRecord]):
        self.records = records
        self._by_key = {r.key: r for r in records}
        if len(self._by_key) != len(records):
            raise CorpusError("duplicate (doc_id, sent_index) in corpus")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[SentenceRecord]:
        return iter(self.records)

    def get(self, key: tuple[str, int]) -> SentenceRecord:
        return self._by_key[key]

    def lemma_occurrences(self, lemma: str) -> list[tuple[tuple[str, int], int]]:
        """All (sentence key, token index) pairs whose token has this lemma."""
        out = []
        for record in self.records:
            for token in record.tokens:
                if token.lemma == lemma:
                    out.append((record.key, token.index))
        return out


_TOKEN_RE = re.compile(r"[^\s()]+")


def parse_tree(text: str, line_number: Optional[int] = None) -> tuple[ParseTree, list[Token]]:
    """Parse one bracketed tree, returning the tree and its token list."""
    pos = 0
    n = len(text)
    tokens: list[Token] = []

    def skip_ws():
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def parse_node() -> ParseTree:
        nonlocal pos
        skip_ws()
        if pos >= n or text[pos] != "(":
            raise TreeParseError(f"expected '(' at offset {pos}", line_number)
        pos += 1
        skip_ws()
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise TreeParseError(f"missing node label at offset {pos}", line_number)
        label = m.group(0)
        pos = m.end()
        node = ParseTree(label=label)
        while True:
            skip_ws()
            if pos >= n:
                raise TreeParseError("unbalanced brackets: unexpected end of line",
                                     line_number)
            if text[pos] == ")":
                pos += 1
                break
            if text[pos] == "(":
                node.children.append(parse_node())
            else:
                m = _TOKEN_RE.match(text, pos)
                word = m.group(0)
                pos = m.end()
                if node.children or node.leaf_token is not None:
                    raise TreeParseError(
                        f"node {label!r} mixes children and leaf text", line_number)
                node.leaf_token = len(tokens)
                tokens.append(_make_token(word, label, len(tokens)))
        if not node.children and node.leaf_token is None:
            raise TreeParseError(f"empty node {label!r}", line_number)
        return node

    root = parse_node()
    skip_ws()
    if pos != n:
        raise TreeParseError(f"trailing text after tree at offset {pos}", line_number)
    return root, tokens


def _make_token(word: str, preterminal: str, index: int) -> Token:
    parts = word.split("|")
    if len(parts) == 3:
        surface, lemma, pos_tag = parts
    elif len(parts) == 1:
        surface, lemma, pos_tag = word, word.lower(), preterminal
    else:
        raise CorpusError(f"bad leaf annotation {word!r} (want surface or surface|lemma|POS)")
    if not surface:
        raise CorpusError(f"empty surface form in leaf {word!r}")
    return Token(index=index, surface=surface, lemma=lemma or surface.lower(),
                 pos=pos_tag or preterminal)


def format_tree(tree: ParseTree, tokens: list[Token], annotated: bool = True) -> str:
    """Serialize a tree back to bracketed text (inverse of parse_tree)."""
    if tree.is_leaf():
        tok = tokens[tree.leaf_token]
        leaf = f"{tok.surface}|{tok.lemma}|{tok.pos}" if annotated else tok.surface
        return f"({tree.label} {leaf})"
    inner = " ".join(format_tree(c, tokens, annotated) for c in tree.children)
    return f"({tree.label} {inner})"


def read_treebank(path) -> Corpus:
    """Read a treebank file into a Corpus with prev/next links per document."""
    records: list[SentenceRecord] = []
    doc_id = None
    sent_index = 0
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#doc"):
                parts = line.split(None, 1)
                if len(parts) != 2 or not parts[1].strip():
                    raise TreeParseError("#doc directive missing a document id", lineno)
                doc_id = parts[1].strip()
                sent_index = 0
                continue
            if line.startswith("#"):
                continue
            if doc_id is None:
                raise TreeParseError("tree before any #doc directive", lineno)
            tree, tokens = parse_tree(line, line_number=lineno)
            record = SentenceRecord(doc_id=doc_id, sent_index=sent_index,
                                    tokens=tokens, tree=tree)
            leaf_idx = tree.leaf_indices()
            if leaf_idx != [t.index for t in tokens]:
                raise TreeParseError("leaf order does not match token order", lineno)
            records.append(record)
            sent_index += 1
    for prev, cur in zip(records, records[1:]):
        if prev.doc_id == cur.doc_id:
            prev.next_id = cur.key
            cur.prev_id = prev.key
    return Corpus(records)


PHRASE_LIST_COLUMNS = ("phrase_id", "phrase_type", "head_lemma", "dep_lemma", "query")


def read_phrase_list(path) -> list[PhraseSpec]:
    """Read the phrase-list TSV; synthesizes default queries for empty cells."""
    from . import treequery  # local import: avoid a cycle at module load

    specs: list[PhraseSpec] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n").split("\t")
        if tuple(header[:4]) != PHRASE_LIST_COLUMNS[:4]:
            raise CorpusError(
                f"bad phrase-list header {header!r}; want {list(PHRASE_LIST_COLUMNS)}")
        for lineno, raw in enumerate(handle, start=2):
            if not raw.strip() or raw.lstrip().startswith("#"):
                continue
            cells = raw.rstrip("\n").split("\t")
            if len(cells) < 4:
                raise CorpusError(f"row {lineno}: want at least 4 tab-separated columns")
            phrase_id, phrase_type, head_lemma, dep_lemma = (c.strip() for c in cells[:4])
            query = cells[4].strip() if len(cells) > 4 else ""
            if phrase_type not in PHRASE_TYPES:
                raise CorpusError(
                    f"row {lineno} ({phrase_id}): unknown phrase_type {phrase_type!r}")
            if phrase_id in seen:
                raise CorpusError(f"row {lineno}: duplicate phrase_id {phrase_id!r}")
            seen.add(phrase_id)
            if not query:
                query = treequery.default_query(phrase_type)
            specs.append(PhraseSpec(phrase_id=phrase_id, phrase_type=phrase_type,
                                    head_lemma=head_lemma, dep_lemma=dep_lemma,
                                    query=query))
    return specs


SENTENCE_BOUNDARY = "<s>"


def context_block(record: SentenceRecord, corpus: Corpus) -> list[str]:
    """Surface tokens of prev + record + next, with boundary markers between
    sentences. Missing neighbors are simply omitted."""
    parts: list[list[str]] = []
    if record.prev_id is not None:
        parts.append(corpus.get(record.prev_id).surfaces())
    parts.append(record.surfaces())
    if record.next_id is not None:
        parts.append(corpus.get(record.next_id).surfaces())
    out: list[str] = []
    for i, part in enumerate(parts):
        if i:
            out.append(SENTENCE_BOUNDARY)
        out.extend(part)
    return out


def context_block_offset(record: SentenceRecord, corpus: Corpus) -> int:
    """Index within context_block() where this record's own tokens start."""
    if record.prev_id is None:
        return 0
    return len(corpus.get(record.prev_id).tokens) + 1  # +1 for the boundary marker


def data_path(name: str) -> Path:
    """Path to a bundled data file."""
    return Path(__file__).parent / "data" / name
