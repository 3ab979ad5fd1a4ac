"""Stage orchestration shared by the CLI subcommands.

Stages communicate through TSV files so any stage can be rerun or replaced
by hand-edited data.  Every emitted file starts with a ``# manifest:``
comment naming the manifest that produced it; readers skip ``#`` lines.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from ._kernels import KERNEL_BACKEND
from .analysis import PhraseSummary
from .contingency import ContingencyError, instance_contingency
from .conventionality import DEFAULT_MIN_OCCURRENCES, score_phrase_slot
from .corpus import Corpus, PhraseInstance, PhraseSpec
from .providers import Provider
from .treequery import extract_instances, extract_matched

EXTRACT_COLUMNS = ("phrase_id", "match_class", "doc_id", "sent_index",
                   "span_start", "span_end", "head_index", "dep_index")
CONV_COLUMNS = ("phrase_id", "slot", "n", "m", "conv_value", "flagged",
                "provider_fingerprint", "group")
CONT_COLUMNS = ("phrase_id", "match_class", "doc_id", "sent_index", "value",
                "joint_logprob", "n_span_words", "provider_fingerprint")


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_artifact(path: Path, text: str, manifest_name: str):
    """Write with the manifest pointer and a .partial-then-rename commit."""
    tmp = path.with_suffix(path.suffix + ".partial")
    if path.suffix == ".json":
        body = text
    elif path.suffix == ".svg":
        body = f"<!-- manifest: {manifest_name} -->\n" + text
    else:
        body = f"# manifest: {manifest_name}\n" + text
    tmp.write_text(body, encoding="utf-8")
    tmp.rename(path)


def read_tsv(path, columns) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as handle:
        header = None
        for raw in handle:
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split("\t")
                if tuple(header) != tuple(columns):
                    raise ValueError(f"{path}: header {header} != {list(columns)}")
                continue
            rows.append(dict(zip(header, line.split("\t"))))
    return rows


def tsv_text(columns, rows) -> str:
    def fmt(v):
        if v is None:
            return "NA"
        if isinstance(v, bool):
            return "1" if v else "0"
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = ["\t".join(columns)]
    for row in rows:
        lines.append("\t".join(fmt(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


# --- extract ---------------------------------------------------------------

def run_extract(corpus: Corpus, specs: list[PhraseSpec]) -> list[PhraseInstance]:
    instances: list[PhraseInstance] = []
    for spec in specs:
        instances.extend(extract_instances(corpus, spec))
        instances.extend(extract_matched(corpus, spec, "head"))
        instances.extend(extract_matched(corpus, spec, "dep"))
    instances.sort(key=lambda i: (i.phrase_id, i.match_class, i.sentence_key,
                                  i.span))
    return instances


def instances_rows(instances: list[PhraseInstance]) -> list[dict]:
    return [{"phrase_id": i.phrase_id, "match_class": i.match_class,
             "doc_id": i.sentence_key[0], "sent_index": i.sentence_key[1],
             "span_start": i.span[0], "span_end": i.span[1],
             "head_index": i.head_index, "dep_index": i.dep_index}
            for i in instances]


def instances_from_rows(rows: list[dict]) -> list[PhraseInstance]:
    return [PhraseInstance(phrase_id=r["phrase_id"],
                           sentence_key=(r["doc_id"], int(r["sent_index"])),
                           span=(int(r["span_start"]), int(r["span_end"])),
                           head_index=int(r["head_index"]),
                           dep_index=int(r["dep_index"]),
                           match_class=r["match_class"]) for r in rows]


# --- score-conv ------------------------------------------------------------

def run_conventionality(corpus: Corpus, specs: list[PhraseSpec],
                        instances: list[PhraseInstance], provider: Provider,
                        min_occurrences: int = DEFAULT_MIN_OCCURRENCES,
                        workers: int = 1) -> list[dict]:
    fingerprint = provider.handshake().config_fingerprint
    by_phrase: dict[str, dict[str, list[PhraseInstance]]] = {}
    for inst in instances:
        by_phrase.setdefault(inst.phrase_id, {}).setdefault(
            inst.match_class, []).append(inst)

    def score_one(spec: PhraseSpec) -> list[dict]:
        groups = by_phrase.get(spec.phrase_id, {})
        targets = groups.get("target", [])
        rows = []
        for group in ("target", "matched"):
            for slot in ("head", "dep"):
                if group == "target":
                    uses = None
                else:
                    klass = "head_matched" if slot == "head" else "dep_matched"
                    uses = [(i.sentence_key,
                             i.head_index if slot == "head" else i.dep_index)
                            for i in groups.get(klass, [])]
                score = score_phrase_slot(corpus, spec, slot, provider, targets,
                                          in_phrase_uses=uses,
                                          min_occurrences=min_occurrences)
                rows.append({"phrase_id": spec.phrase_id, "slot": slot,
                             "n": score.n, "m": score.m,
                             "conv_value": score.value, "flagged": score.flagged,
                             "provider_fingerprint": fingerprint,
                             "group": group})
        return rows

    ordered = sorted(specs, key=lambda s: s.phrase_id)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(score_one, ordered))
    else:
        chunks = [score_one(s) for s in ordered]
    return [row for chunk in chunks for row in chunk]


# --- score-cont ------------------------------------------------------------

def run_contingency(corpus: Corpus, instances: list[PhraseInstance],
                    provider: Provider, padding: str,
                    workers: int = 1) -> list[dict]:
    fingerprint = provider.handshake().config_fingerprint

    def score_one(inst: PhraseInstance) -> Optional[dict]:
        try:
            score = instance_contingency(provider, corpus, inst, padding)
        except ContingencyError:
            return None  # single-word span; nothing to score
        return {"phrase_id": inst.phrase_id, "match_class": inst.match_class,
                "doc_id": inst.sentence_key[0],
                "sent_index": inst.sentence_key[1], "value": score.value,
                "joint_logprob": score.joint_logprob,
                "n_span_words": len(score.marginal_logprobs),
                "provider_fingerprint": fingerprint}

    ordered = sorted(instances, key=lambda i: (i.phrase_id, i.match_class,
                                               i.sentence_key, i.span))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(score_one, ordered))
    else:
        rows = [score_one(i) for i in ordered]
    return [r for r in rows if r is not None]


# --- analyze ---------------------------------------------------------------

def build_summaries(specs: list[PhraseSpec], instance_rows: list[dict],
                    conv_rows: list[dict], cont_rows: list[dict],
                    min_instances: int) -> list[PhraseSummary]:
    counts: dict[str, dict[str, int]] = {}
    for r in instance_rows:
        counts.setdefault(r["phrase_id"], {}).setdefault(r["match_class"], 0)
        counts[r["phrase_id"]][r["match_class"]] += 1

    conv: dict[tuple[str, str, str], Optional[float]] = {}
    for r in conv_rows:
        flagged = str(r["flagged"]) in ("1", "True", "true")
        value = None if flagged or r["conv_value"] in ("NA", None) \
            else float(r["conv_value"])
        conv[(r["phrase_id"], r["group"], r["slot"])] = value

    cont: dict[tuple[str, str], list[float]] = {}
    for r in cont_rows:
        group = "target" if r["match_class"] == "target" else "matched"
        cont.setdefault((r["phrase_id"], group), []).append(float(r["value"]))

    summaries = []
    for spec in sorted(specs, key=lambda s: s.phrase_id):
        pid = spec.phrase_id
        c = counts.get(pid, {})
        target_count = c.get("target", 0)
        matched_count = c.get("head_matched", 0) + c.get("dep_matched", 0)
        for group in ("target", "matched"):
            head = conv.get((pid, group, "head"))
            dep = conv.get((pid, group, "dep"))
            phrase = (head + dep) / 2.0 if head is not None and dep is not None \
                else None
            values = cont.get((pid, group))
            mean_cont = sum(values) / len(values) if values else None
            summaries.append(PhraseSummary(
                phrase_id=pid, phrase_type=spec.phrase_type, group=group,
                target_count=target_count, matched_count=matched_count,
                mean_contingency=mean_cont, head_conv=head, dep_conv=dep,
                phrase_conv=phrase, min_instances=min_instances))
    return summaries


def make_manifest(config: dict, provider: Provider, inputs: dict[str, str]) -> dict:
    hs = provider.handshake()
    return {"tool": "phrasemeter", "version": __version__,
            "kernel_backend": KERNEL_BACKEND,
            "provider": {"name": hs.provider_name,
                         "dimension": hs.dimension,
                         "config_fingerprint": hs.config_fingerprint},
            "config": config,
            "input_digests": inputs}


def manifest_text(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"
