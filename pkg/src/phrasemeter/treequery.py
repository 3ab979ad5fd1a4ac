"""A small Tregex-like tree pattern language and matcher.

Supported relations between a node and its clause operands:

    A < B      B is a child of A
    A << B     B is a proper descendant of A
    A $. B     B is the sibling immediately following A
    A $.. B    B is a sibling somewhere after A

Node predicates are a literal label, a ``/regex/`` label pattern, or either
of those with a ``[lemma=a,b,...]`` restriction (which only matches
preterminals whose token lemma is in the set).  ``=name`` captures a node;
every query must capture both ``head`` and ``dep``.

Grammar (EBNF)::

    query    = node ;
    node     = pred [ "=" NAME ] { rel operand } ;
    operand  = "(" node ")" | pred [ "=" NAME ] ;
    rel      = "<<" | "<" | "$.." | "$." ;
    pred     = ( LABEL | "/" REGEX "/" ) [ "[" "lemma" "=" WORD { "," WORD } "]" ] ;
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .corpus import Corpus, ParseTree, PhraseInstance, PhraseSpec, SentenceRecord

RELATIONS = ("<<", "<", "$..", "$.")


class QueryError(Exception):
    """Query syntax or validation failure."""

    def __init__(self, message: str, position: Optional[int] = None):
        if position is not None:
            message = f"at offset {position}: {message}"
        super().__init__(message)
        self.position = position


@dataclass
class NodePredicate:
    label: Optional[str] = None          # literal label match
    label_regex: Optional[str] = None    # regex label match (search semantics)
    lemmas: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        self._compiled = re.compile(self.label_regex) if self.label_regex else None

    def matches(self, node: ParseTree, record: SentenceRecord) -> bool:
        if self.label is not None and node.label != self.label:
            return False
        if self._compiled is not None and not self._compiled.search(node.label):
            return False
        if self.lemmas is not None:
            token = preterminal_token(node, record)
            if token is None or token.lemma not in self.lemmas:
                return False
        return True

    def to_source(self) -> str:
        base = self.label if self.label is not None else f"/{self.label_regex}/"
        if self.lemmas is not None:
            base += "[lemma=" + ",".join(self.lemmas) + "]"
        return base


@dataclass
class QueryNode:
    predicate: NodePredicate
    capture: Optional[str] = None
    clauses: list[tuple[str, "QueryNode"]] = field(default_factory=list)

    def iter_nodes(self):
        yield self
        for _, child in self.clauses:
            yield from child.iter_nodes()

    def to_source(self) -> str:
        text = self.predicate.to_source()
        if self.capture:
            text += f"={self.capture}"
        for rel, child in self.clauses:
            if child.clauses:
                text += f" {rel} ({child.to_source()})"
            else:
                text += f" {rel} {child.to_source()}"
        return text


@dataclass
class TreeQuery:
    root: QueryNode
    source: str

    def capture_names(self) -> set[str]:
        return {n.capture for n in self.root.iter_nodes() if n.capture}

    def to_source(self) -> str:
        return self.root.to_source()


@dataclass(frozen=True)
class MatchBinding:
    captures: dict[str, ParseTree]
    span: tuple[int, int]

    def node(self, name: str) -> ParseTree:
        return self.captures[name]


def preterminal_token(node: ParseTree, record: SentenceRecord):
    """The token of a node dominating exactly one leaf, else None."""
    if node.is_leaf():
        return record.tokens[node.leaf_token]
    leaves = node.leaves()
    if len(leaves) == 1:
        return record.tokens[leaves[0].leaf_token]
    return None


# --- parsing ---------------------------------------------------------------

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_LABEL_RE = re.compile(r"[^\s()\[\]=/]+")


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.pos = 0

    def error(self, message: str):
        raise QueryError(message, self.pos)

    def skip_ws(self):
        while self.pos < len(self.source) and self.source[self.pos].isspace():
            self.pos += 1

    def peek(self, text: str) -> bool:
        return self.source.startswith(text, self.pos)

    def take(self, text: str):
        if not self.peek(text):
            self.error(f"expected {text!r}")
        self.pos += len(text)

    def parse_query(self) -> QueryNode:
        node = self.parse_node()
        self.skip_ws()
        if self.pos != len(self.source):
            self.error("trailing text after query")
        return node

    def parse_node(self) -> QueryNode:
        node = self.parse_atom()
        while True:
            self.skip_ws()
            rel = self.parse_relation()
            if rel is None:
                return node
            self.skip_ws()
            if self.peek("("):
                self.take("(")
                child = self.parse_node()
                self.skip_ws()
                self.take(")")
            else:
                child = self.parse_atom()
            node.clauses.append((rel, child))

    def parse_relation(self) -> Optional[str]:
        for rel in RELATIONS:  # ordered longest-first where prefixes collide
            if self.peek(rel):
                self.pos += len(rel)
                return rel
        return None

    def parse_atom(self) -> QueryNode:
        self.skip_ws()
        if self.peek("/"):
            end = self.source.find("/", self.pos + 1)
            if end < 0:
                self.error("unterminated /regex/")
            regex = self.source[self.pos + 1:end]
            try:
                re.compile(regex)
            except re.error as exc:
                self.error(f"bad regex: {exc}")
            self.pos = end + 1
            pred = NodePredicate(label_regex=regex)
        else:
            m = _LABEL_RE.match(self.source, self.pos)
            if not m:
                self.error("expected a node label or /regex/")
            self.pos = m.end()
            pred = NodePredicate(label=m.group(0))
        if self.peek("["):
            self.take("[")
            self.skip_ws()
            self.take("lemma")
            self.skip_ws()
            self.take("=")
            words = []
            while True:
                self.skip_ws()
                m = re.match(r"[^\s,\]]+", self.source[self.pos:])
                if not m:
                    self.error("expected a lemma")
                words.append(m.group(0))
                self.pos += m.end()
                self.skip_ws()
                if self.peek(","):
                    self.take(",")
                else:
                    break
            self.take("]")
            pred = NodePredicate(label=pred.label, label_regex=pred.label_regex,
                                 lemmas=tuple(words))
        capture = None
        if self.peek("="):
            self.take("=")
            m = _NAME_RE.match(self.source, self.pos)
            if not m:
                self.error("expected a capture name after '='")
            capture = m.group(0)
            self.pos = m.end()
        return QueryNode(predicate=pred, capture=capture)


def compile_query(source: str, require_slots: bool = True) -> TreeQuery:
    """Compile query text; validates that head and dep are both captured."""
    root = _Parser(source).parse_query()
    query = TreeQuery(root=root, source=source)
    if require_slots:
        names = query.capture_names()
        missing = {"head", "dep"} - names
        if missing:
            raise QueryError(f"query must capture {sorted(missing)}: {source!r}")
    return query


def default_query(phrase_type: str) -> str:
    """The built-in pattern for a phrase type, used when a spec omits one."""
    if phrase_type == "VO":
        return "VP < (/^VB/=head $.. (NP << /^NN/=dep))"
    if phrase_type == "AN":
        return "NP < (/^JJ/=dep $.. /^NN/=head)"
    if phrase_type == "NN":
        return "NP < (/^NN/=dep $. /^NN/=head)"
    if phrase_type == "B":
        return ("/^(NN|NNS|JJ|RB|VB[DGNPZ]?|IN)$/=head"
                " $. (CC[lemma=and,or] $. /^(NN|NNS|JJ|RB|VB[DGNPZ]?|IN)$/=dep)")
    raise QueryError(f"no default query for phrase type {phrase_type!r}")


# --- matching --------------------------------------------------------------

def _parent_map(tree: ParseTree) -> dict[int, ParseTree]:
    parents: dict[int, ParseTree] = {}
    for node in tree.iter_nodes():
        for child in node.children:
            parents[id(child)] = node
    return parents


def relation_holds(rel: str, a: ParseTree, b: ParseTree,
                   parents: dict[int, ParseTree]) -> bool:
    """Whether tree node ``b`` stands in relation ``rel`` to node ``a``."""
    if rel == "<":
        return any(c is b for c in a.children)
    if rel == "<<":
        return a is not b and any(n is b for n in a.iter_nodes())
    parent = parents.get(id(a))
    if parent is None or parents.get(id(b)) is not parent:
        return False
    ia = next(i for i, c in enumerate(parent.children) if c is a)
    ib = next(i for i, c in enumerate(parent.children) if c is b)
    if rel == "$.":
        return ib == ia + 1
    if rel == "$..":
        return ib > ia
    raise QueryError(f"unknown relation {rel!r}")


def match_all(query: TreeQuery, record: SentenceRecord) -> list[MatchBinding]:
    """All distinct capture bindings of the query against one sentence.

    Exhaustive backtracking search over node assignments; results are
    deduplicated on the named captures and ordered by document position of
    the head node, then the dep node, then the remaining captures.
    """
    tree = record.tree
    parents = _parent_map(tree)
    nodes = list(tree.iter_nodes())
    order = {id(n): i for i, n in enumerate(nodes)}

    def solutions(qnode: QueryNode, tnode: ParseTree, bound: dict):
        if not qnode.predicate.matches(tnode, record):
            return
        if qnode.capture:
            bound = {**bound, qnode.capture: tnode}
        yield from satisfy(qnode.clauses, 0, tnode, bound)

    def satisfy(clauses, i, anchor, bound):
        if i == len(clauses):
            yield bound
            return
        rel, child = clauses[i]
        for cand in nodes:
            if relation_holds(rel, anchor, cand, parents):
                for partial in solutions(child, cand, bound):
                    yield from satisfy(clauses, i + 1, anchor, partial)

    results: dict[tuple, MatchBinding] = {}
    for tnode in nodes:
        for bound in solutions(query.root, tnode, {}):
            key = tuple(sorted((name, id(n)) for name, n in bound.items()))
            if key in results:
                continue
            where = bound.values() if bound else [tnode]
            leaf_idx = [i for n in where for i in n.leaf_indices()]
            results[key] = MatchBinding(captures=dict(bound),
                                        span=(min(leaf_idx), max(leaf_idx)))

    out = list(results.values())
    out.sort(key=lambda b: (
        order[id(b.captures["head"])] if "head" in b.captures else -1,
        order[id(b.captures["dep"])] if "dep" in b.captures else -1,
        tuple(sorted((name, order[id(node)]) for name, node in b.captures.items())),
    ))
    return out


# --- phrase extraction -----------------------------------------------------

def _refine_bindings(bindings: list[MatchBinding], phrase_type: str,
                     record: SentenceRecord) -> list[MatchBinding]:
    """Collapse ambiguous noun choices inside an NP to the rightmost noun.

    For VO the object noun (dep) may be any noun under the object NP; for AN
    the head noun may be any noun following the adjective.  Both are resolved
    to the rightmost candidate, the usual head-percolation simplification.
    For B, conjuncts must share a preterminal label.
    """
    if phrase_type == "B":
        return [b for b in bindings
                if b.node("head").label == b.node("dep").label]
    if phrase_type not in ("VO", "AN"):
        return bindings
    group_slot, pick_slot = ("head", "dep") if phrase_type == "VO" else ("dep", "head")
    best: dict[int, MatchBinding] = {}
    for binding in bindings:
        key = id(binding.node(group_slot))
        rival = best.get(key)
        if rival is None or (binding.node(pick_slot).span()
                             > rival.node(pick_slot).span()):
            best[key] = binding
    kept = set(map(id, best.values()))
    return [b for b in bindings if id(b) in kept]


def _binding_instance(binding: MatchBinding, record: SentenceRecord,
                      spec: PhraseSpec, match_class: str) -> Optional[PhraseInstance]:
    head_tok = preterminal_token(binding.node("head"), record)
    dep_tok = preterminal_token(binding.node("dep"), record)
    if head_tok is None or dep_tok is None:
        return None
    lo = min(head_tok.index, dep_tok.index)
    hi = max(head_tok.index, dep_tok.index)
    return PhraseInstance(phrase_id=spec.phrase_id, sentence_key=record.key,
                          span=(lo, hi), head_index=head_tok.index,
                          dep_index=dep_tok.index, match_class=match_class)


def _candidate_bindings(corpus: Corpus, spec: PhraseSpec):
    query = compile_query(spec.query)
    for record in corpus:
        for binding in _refine_bindings(match_all(query, record),
                                        spec.phrase_type, record):
            head_tok = preterminal_token(binding.node("head"), record)
            dep_tok = preterminal_token(binding.node("dep"), record)
            if head_tok is None or dep_tok is None:
                continue
            yield record, binding, head_tok, dep_tok


def extract_instances(corpus: Corpus, spec: PhraseSpec) -> list[PhraseInstance]:
    """Occurrences of the target phrase itself (both lemma slots match)."""
    out = []
    for record, binding, head_tok, dep_tok in _candidate_bindings(corpus, spec):
        if head_tok.lemma == spec.head_lemma and dep_tok.lemma == spec.dep_lemma:
            inst = _binding_instance(binding, record, spec, "target")
            if inst is not None:
                out.append(inst)
    return out


def extract_matched(corpus: Corpus, spec: PhraseSpec,
                    fixed_slot: str) -> list[PhraseInstance]:
    """Control occurrences: the fixed slot keeps the spec's lemma, the other
    slot holds any different lemma.  Target combinations are excluded."""
    if fixed_slot not in ("head", "dep"):
        raise ValueError(f"fixed_slot must be head or dep, got {fixed_slot!r}")
    match_class = "head_matched" if fixed_slot == "head" else "dep_matched"
    out = []
    for record, binding, head_tok, dep_tok in _candidate_bindings(corpus, spec):
        lemmas = {"head": head_tok.lemma, "dep": dep_tok.lemma}
        fixed_want = spec.head_lemma if fixed_slot == "head" else spec.dep_lemma
        other_slot = "dep" if fixed_slot == "head" else "head"
        other_avoid = spec.dep_lemma if fixed_slot == "head" else spec.head_lemma
        if lemmas[fixed_slot] == fixed_want and lemmas[other_slot] != other_avoid:
            inst = _binding_instance(binding, record, spec, match_class)
            if inst is not None:
                out.append(inst)
    return out
