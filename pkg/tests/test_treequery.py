import itertools
import random
import re

import pytest

from phrasemeter.corpus import parse_tree, read_treebank
from phrasemeter.treequery import (MatchBinding, QueryError, compile_query,
                                   default_query, extract_instances,
                                   extract_matched, match_all)


def make_record(text, tmp_path_factory=None):
    """Wrap a single bracketed tree in a one-sentence record."""
    from phrasemeter.corpus import SentenceRecord
    tree, tokens = parse_tree(text)
    return SentenceRecord(doc_id="d", sent_index=0, tree=tree, tokens=tokens)


# --- an independent brute-force matcher ------------------------------------

def _tree_nodes(tree):
    out = [tree]
    for child in tree.children:
        out.extend(_tree_nodes(child))
    return out


def _bf_parents(tree):
    parents = {}
    for node in _tree_nodes(tree):
        for child in node.children:
            parents[id(child)] = node
    return parents


def _bf_predicate(pred, node, record):
    if pred.label is not None and node.label != pred.label:
        return False
    if pred.label_regex is not None and not re.search(pred.label_regex, node.label):
        return False
    if pred.lemmas is not None:
        leaves = node.leaves()
        if len(leaves) != 1:
            return False
        if record.tokens[leaves[0].leaf_token].lemma not in pred.lemmas:
            return False
    return True


def _bf_relation(rel, a, b, parents):
    if rel == "<":
        return any(c is b for c in a.children)
    if rel == "<<":
        return a is not b and any(n is b for n in _tree_nodes(a))
    pa, pb = parents.get(id(a)), parents.get(id(b))
    if pa is None or pa is not pb:
        return False
    ia = next(i for i, c in enumerate(pa.children) if c is a)
    ib = next(i for i, c in enumerate(pa.children) if c is b)
    return ib == ia + 1 if rel == "$." else ib > ia


def brute_force_match(query, record):
    """Every named-capture binding, by exhaustive assignment enumeration."""
    qnodes, edges = [], []

    def walk(qnode):
        me = len(qnodes)
        qnodes.append(qnode)
        for rel, child in qnode.clauses:
            edges.append((me, rel, len(qnodes)))
            walk(child)

    walk(query.root)
    nodes = _tree_nodes(record.tree)
    parents = _bf_parents(record.tree)
    candidates = [[n for n in nodes if _bf_predicate(q.predicate, n, record)]
                  for q in qnodes]
    found = {}
    for assignment in itertools.product(*candidates):
        if not all(_bf_relation(rel, assignment[i], assignment[j], parents)
                   for i, rel, j in edges):
            continue
        captures = {q.capture: assignment[i] for i, q in enumerate(qnodes)
                    if q.capture}
        key = tuple(sorted((name, id(node)) for name, node in captures.items()))
        if key not in found:
            leaf_idx = [k for n in captures.values() for k in n.leaf_indices()]
            found[key] = (min(leaf_idx), max(leaf_idx))
    return {(key, span) for key, span in found.items()}


def as_set(bindings):
    return {(tuple(sorted((n, id(node)) for n, node in b.captures.items())),
             b.span) for b in bindings}


# --- parser ----------------------------------------------------------------

class TestParser:
    @pytest.mark.parametrize("ptype", ["VO", "AN", "NN", "B"])
    def test_default_queries_compile(self, ptype):
        q = compile_query(default_query(ptype))
        assert {"head", "dep"} <= q.capture_names()

    @pytest.mark.parametrize("ptype", ["VO", "AN", "NN", "B"])
    def test_pretty_print_round_trips(self, ptype):
        q = compile_query(default_query(ptype))
        again = compile_query(q.to_source())
        assert again.to_source() == q.to_source()

    def test_missing_slots_rejected(self):
        with pytest.raises(QueryError):
            compile_query("VP < /^VB/=head")
        with pytest.raises(QueryError):
            compile_query("VP < NN")
        # slot validation can be turned off
        assert compile_query("VP < NN=x", require_slots=False)

    @pytest.mark.parametrize("bad", [
        "", "NP <", "NP < (NN=head", "NP ? NN=head", "NP < NN=",
        "/unterminated=head", "NP < NN=head $$ JJ=dep",
    ])
    def test_syntax_errors(self, bad):
        with pytest.raises(QueryError):
            compile_query(bad, require_slots=False)

    def test_error_carries_offset(self):
        with pytest.raises(QueryError) as info:
            compile_query("NP <", require_slots=False)
        assert info.value.position is not None


# --- relation and predicate semantics --------------------------------------

TREE = ("(S (NP (DT the|the|DT) (NN cat|cat|NN)) "
        "(VP (VBD sat|sit|VBD) (PP (IN on|on|IN) (NP (DT a|a|DT) (NN mat|mat|NN)))))")


class TestSemantics:
    def rec(self):
        return make_record(TREE)

    def names(self, query, rec):
        return [" ".join(rec.surfaces()[b.span[0]:b.span[1] + 1])
                for b in match_all(compile_query(query, require_slots=False), rec)]

    def test_child_vs_descendant(self):
        rec = self.rec()
        assert self.names("S < NP=x", rec) == ["the cat"]
        assert self.names("S << NP=x", rec) == ["the cat", "a mat"]

    def test_immediate_vs_any_following_sibling(self):
        rec = self.rec()
        assert self.names("DT=x $. NN=y", rec) == ["the cat", "a mat"]
        # cat has no following sibling inside its NP beyond position +1
        assert self.names("NN=x $.. DT=y", rec) == []

    def test_regex_uses_search_semantics(self):
        rec = self.rec()
        # /N/ hits NP, NN, and IN labels alike
        spans = self.names("/N/=x", rec)
        assert "on" in spans and "the cat" in spans

    def test_lemma_predicate_only_on_preterminals(self):
        rec = self.rec()
        assert self.names("VBD[lemma=sit]=x", rec) == ["sat"]
        assert self.names("VBD[lemma=sat]=x", rec) == []
        # a phrasal node never satisfies a lemma predicate
        assert self.names("NP[lemma=cat]=x", rec) == []

    def test_match_ordering_is_by_head_position(self):
        rec = self.rec()
        q = compile_query("NP < (DT=dep $. NN=head)")
        heads = [b.node("head").leaves()[0].leaf_token for b in match_all(q, rec)]
        assert heads == sorted(heads)

    def test_dedup_on_named_captures(self):
        # two distinct derivations reach the same (head, dep) pair
        rec = make_record("(S (X (NN a) (NN b)) (X (NN a) (NN b)))")
        q = compile_query("S << (NN=head $.. NN=dep)")
        assert len(match_all(q, rec)) == 2


# --- randomized equivalence ------------------------------------------------

LABELS = ["S", "NP", "VP", "PP", "X"]
PRETERMS = ["NN", "NNS", "VB", "VBD", "JJ", "DT", "IN"]
WORDS = ["cat", "dog", "sat", "ran", "big", "the", "on"]


def random_tree_text(rng, depth=0):
    if depth >= 3 or (depth > 0 and rng.random() < 0.4):
        return f"({rng.choice(PRETERMS)} {rng.choice(WORDS)})"
    n = rng.randint(1, 3)
    kids = " ".join(random_tree_text(rng, depth + 1) for _ in range(n))
    return f"({rng.choice(LABELS)} {kids})"


def random_predicate(rng):
    roll = rng.random()
    if roll < 0.45:
        return rng.choice(LABELS + PRETERMS)
    if roll < 0.85:
        return "/" + rng.choice(["^N", "^V", "P$", "N", "^(NP|VP)$", "."]) + "/"
    return rng.choice(PRETERMS) + "[lemma=" + rng.choice(WORDS) + "]"


def random_query_text(rng):
    rels = ["<", "<<", "$.", "$.."]
    names = iter(["head", "dep", "extra"])
    parts = random_predicate(rng) + "=" + next(names)
    for _ in range(rng.randint(1, 2)):
        sub = random_predicate(rng) + "=" + next(names)
        if rng.random() < 0.5:
            sub = f"({sub} {rng.choice(rels)} {random_predicate(rng)})"
        parts += f" {rng.choice(rels)} {sub}"
    return parts


class TestBruteForceEquivalence:
    def test_matcher_equals_brute_force(self):
        rng = random.Random(1234)
        checked = 0
        for _ in range(150):
            rec = make_record(random_tree_text(rng))
            for _ in range(6):
                q = compile_query(random_query_text(rng), require_slots=False)
                got = as_set(match_all(q, rec))
                want = brute_force_match(q, rec)
                assert got == want, (q.source, rec.surfaces())
                checked += 1
        assert checked == 900

    def test_default_queries_against_brute_force(self, tiny_corpus):
        for ptype in ("VO", "AN", "NN", "B"):
            q = compile_query(default_query(ptype))
            for rec in tiny_corpus:
                assert as_set(match_all(q, rec)) == brute_force_match(q, rec)


# --- extraction ------------------------------------------------------------

class TestExtraction:
    def surf(self, corpus, inst):
        rec = corpus.get(inst.sentence_key)
        return " ".join(rec.surfaces()[inst.span[0]:inst.span[1] + 1])

    def test_vo_targets_include_intervening_material(self, tiny_corpus, tiny_specs):
        spec = tiny_specs[0]
        got = [self.surf(tiny_corpus, i) for i in extract_instances(tiny_corpus, spec)]
        assert got == ["spilled the beans", "spilled the exciting beans",
                       "spilled the beans"]

    def test_matched_variants_share_exactly_one_slot(self, tiny_corpus, tiny_specs):
        spec = tiny_specs[0]
        hm = extract_matched(tiny_corpus, spec, "head")
        dm = extract_matched(tiny_corpus, spec, "dep")
        assert [self.surf(tiny_corpus, i) for i in hm] == ["spilled the soup"]
        assert [self.surf(tiny_corpus, i) for i in dm] == ["stirred the beans"]
        assert hm[0].match_class == "head_matched"
        assert dm[0].match_class == "dep_matched"

    def test_an_nn_b_targets(self, tiny_corpus, tiny_specs):
        by_id = {s.phrase_id: s for s in tiny_specs}
        for pid, expect in [("sour_grape", ["sour grape"]),
                            ("cottage_industry", ["cottage industry"]),
                            ("fast_loose", ["fast and loose"])]:
            got = [self.surf(tiny_corpus, i)
                   for i in extract_instances(tiny_corpus, by_id[pid])]
            assert got == expect

    def test_vo_rightmost_noun_wins(self, tmp_path):
        p = tmp_path / "c.trees"
        p.write_text(
            "#doc d\n"
            "(S (NP (NN chef|chef|NN)) (VP (VBD spilled|spill|VBD) "
            "(NP (NP (DT the|the|DT) (NNS beans|bean|NNS)) "
            "(PP (IN of|of|IN) (NP (NN truth|truth|NN))))))\n")
        corpus = read_treebank(p)
        from phrasemeter.corpus import PhraseSpec
        spec = PhraseSpec(phrase_id="spill_truth", phrase_type="VO",
                          head_lemma="spill", dep_lemma="truth",
                          query=default_query("VO"))
        got = extract_instances(corpus, spec)
        assert len(got) == 1
        assert got[0].span == (1, 5)
        # and the shorter-span reading (dep = beans) is gone for spill_bean
        bean = PhraseSpec(phrase_id="spill_bean", phrase_type="VO",
                          head_lemma="spill", dep_lemma="bean",
                          query=default_query("VO"))
        assert extract_instances(corpus, bean) == []

    def test_b_conjuncts_must_share_label(self, tmp_path):
        p = tmp_path / "c.trees"
        p.write_text(
            "#doc d\n"
            "(S (NP (NN salt|salt|NN) (CC and|and|CC) (JJ sweet|sweet|JJ)))\n"
            "(S (NP (NN salt|salt|NN) (CC and|and|CC) (NN pepper|pepper|NN)))\n")
        corpus = read_treebank(p)
        from phrasemeter.corpus import PhraseSpec
        mixed = PhraseSpec(phrase_id="salt_sweet", phrase_type="B",
                           head_lemma="salt", dep_lemma="sweet",
                           query=default_query("B"))
        same = PhraseSpec(phrase_id="salt_pepper", phrase_type="B",
                          head_lemma="salt", dep_lemma="pepper",
                          query=default_query("B"))
        assert extract_instances(corpus, mixed) == []
        assert len(extract_instances(corpus, same)) == 1

    def test_synthetic_counts(self, synthetic_corpus, synthetic_specs):
        by_id = {s.phrase_id: s for s in synthetic_specs}
        spill = by_id["spill_bean"]
        assert len(extract_instances(synthetic_corpus, spill)) == 60
        assert len(extract_matched(synthetic_corpus, spill, "head")) == 40
        assert len(extract_matched(synthetic_corpus, spill, "dep")) == 40
        eat = by_id["eat_pea"]
        assert len(extract_instances(synthetic_corpus, eat)) == 30
        assert len(extract_matched(synthetic_corpus, eat, "head")) == 90
