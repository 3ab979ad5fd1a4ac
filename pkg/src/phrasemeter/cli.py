"""Command-line entry point.

Subcommands mirror the pipeline stages (``extract``, ``score-conv``,
``score-cont``, ``analyze``), plus ``run`` for the whole chain,
``provider-check`` for a handshake and smoke probe, and ``serve-toy`` to
expose the bundled offline provider over stdin/stdout.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 provider error,
5 analysis error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, pipeline, providers
from .corpus import Corpus, CorpusError, data_path, read_phrase_list, read_treebank
from .oracle_lm import ToyProvider, load_model
from .providers import Provider, ProviderError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PROVIDER = 4
EXIT_ANALYSIS = 5


class ConfigError(Exception):
    pass


def _existing(path_str: str, what: str) -> Path:
    path = Path(path_str)
    if not path.exists():
        raise ConfigError(f"{what} not found: {path}")
    return path


def open_provider(descriptor: str, corpus: Corpus | None,
                  window: int) -> Provider:
    """``toy:<model-path>`` | ``subprocess:<command>`` | ``socket:<addr>``."""
    kind, _, rest = descriptor.partition(":")
    if kind == "toy":
        if not rest:
            raise ConfigError("toy provider needs a model path (toy:<path>)")
        if corpus is None:
            raise ConfigError("toy provider needs --corpus for its embeddings")
        return ToyProvider.from_paths(_existing(rest, "toy model"), corpus,
                                      window=window)
    if kind == "subprocess":
        if not rest:
            raise ConfigError("subprocess provider needs a command")
        return providers.SubprocessProvider(rest)
    if kind == "socket":
        if not rest:
            raise ConfigError("socket provider needs host:port")
        return providers.SocketProvider(rest)
    raise ConfigError(f"unknown provider descriptor {descriptor!r}")


def default_padding(descriptor: str) -> str:
    name = "toy_padding.txt" if descriptor.startswith("toy:") else "padding.txt"
    path = data_path(name)
    return path.read_text(encoding="utf-8").strip() if path.exists() else ""


def load_padding(args) -> str:
    if args.padding == "none":
        return ""
    if args.padding:
        return _existing(args.padding, "padding file").read_text(
            encoding="utf-8").strip()
    return default_padding(args.provider)


def parse_thresholds(text: str):
    if text == "mean":
        return None
    if text.startswith("value:"):
        try:
            c, v = text[len("value:"):].split(",")
            return (float(c), float(v))
        except ValueError as exc:
            raise ConfigError(f"bad --thresholds {text!r}: {exc}") from exc
    raise ConfigError(f"--thresholds must be 'mean' or 'value:<conv>,<cont>'")


# --- subcommand bodies -----------------------------------------------------

def cmd_extract(args) -> int:
    corpus = read_treebank(_existing(args.corpus, "corpus"))
    specs = read_phrase_list(_existing(args.phrases, "phrase list"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    instances = pipeline.run_extract(corpus, specs)
    manifest = pipeline.make_manifest(
        {"command": "extract", "corpus": str(args.corpus),
         "phrases": str(args.phrases)},
        _NullProvider(), _digests(corpus=args.corpus, phrases=args.phrases))
    _write_manifest(out, manifest)
    pipeline.write_artifact(out / "instances.tsv",
                            pipeline.tsv_text(pipeline.EXTRACT_COLUMNS,
                                              pipeline.instances_rows(instances)),
                            "manifest.json")
    print(f"extracted {len(instances)} instances "
          f"({len(specs)} phrases, {len(corpus)} sentences)")
    return EXIT_OK


class _NullProvider(Provider):
    def handshake(self):
        return providers.Handshake(dimension=None, provider_name="none",
                                   config_fingerprint="none")


def _digests(**paths) -> dict:
    return {name: pipeline.file_digest(p) for name, p in paths.items()
            if p and Path(p).exists()}


def _write_manifest(out: Path, manifest: dict):
    (out / "manifest.json").write_text(pipeline.manifest_text(manifest),
                                       encoding="utf-8")


def cmd_score_conv(args) -> int:
    corpus = read_treebank(_existing(args.corpus, "corpus"))
    specs = read_phrase_list(_existing(args.phrases, "phrase list"))
    instances = pipeline.instances_from_rows(
        pipeline.read_tsv(_existing(args.instances, "instances file"),
                          pipeline.EXTRACT_COLUMNS))
    provider = open_provider(args.provider, corpus, args.window)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rows = pipeline.run_conventionality(corpus, specs, instances, provider,
                                            min_occurrences=args.min_occurrences,
                                            workers=args.workers)
    finally:
        provider.close()
    manifest = pipeline.make_manifest(
        {"command": "score-conv", "window": args.window,
         "min_occurrences": args.min_occurrences},
        provider, _digests(corpus=args.corpus, phrases=args.phrases,
                           instances=args.instances))
    _write_manifest(out, manifest)
    pipeline.write_artifact(out / "conv.tsv",
                            pipeline.tsv_text(pipeline.CONV_COLUMNS, rows),
                            "manifest.json")
    print(f"scored conventionality for {len(specs)} phrases")
    return EXIT_OK


def cmd_score_cont(args) -> int:
    corpus = read_treebank(_existing(args.corpus, "corpus"))
    instances = pipeline.instances_from_rows(
        pipeline.read_tsv(_existing(args.instances, "instances file"),
                          pipeline.EXTRACT_COLUMNS))
    provider = open_provider(args.provider, corpus, args.window)
    padding = load_padding(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rows = pipeline.run_contingency(corpus, instances, provider, padding,
                                        workers=args.workers)
    finally:
        provider.close()
    manifest = pipeline.make_manifest(
        {"command": "score-cont", "padding_words": len(padding.split())},
        provider, _digests(corpus=args.corpus, instances=args.instances))
    _write_manifest(out, manifest)
    pipeline.write_artifact(out / "cont.tsv",
                            pipeline.tsv_text(pipeline.CONT_COLUMNS, rows),
                            "manifest.json")
    print(f"scored contingency for {len(rows)} instances")
    return EXIT_OK


def _analyze_core(specs, instance_rows, conv_rows, cont_rows, args,
                  out: Path, manifest_written: bool):
    ratings = None
    if args.ratings:
        ratings = analysis.read_ratings(_existing(args.ratings, "ratings file"))
    thresholds = parse_thresholds(args.thresholds)
    if args.bits:
        scale = 1.0 / math.log(2.0)
        for row in cont_rows:
            row["value"] = float(row["value"]) * scale
            row["joint_logprob"] = float(row["joint_logprob"]) * scale

    sweep = [args.min_instances]
    if args.min_instances_sweep:
        sweep = [int(x) for x in args.min_instances_sweep.split(",")]
    first_report = None
    for threshold in sweep:
        summaries = pipeline.build_summaries(specs, instance_rows, conv_rows,
                                             cont_rows, threshold)
        report = analysis.build_report(summaries, ratings=ratings,
                                       ratings_element=args.ratings_element,
                                       thresholds=thresholds,
                                       min_instances=threshold)
        report.notes.append(f"manifest: manifest.json")
        report.notes.append(
            "contingency log base: " + ("2 (bits)" if args.bits else "e (nats)"))
        if args.group_by == "phrase_type":
            by_type: dict[str, dict] = {}
            for p in report.points:
                slot = by_type.setdefault(
                    (p["group"], p["phrase_type"]),
                    {"n": 0, "contingency": 0.0, "conventionality": 0.0})
                slot["n"] += 1
                slot["contingency"] += p["contingency"]
                slot["conventionality"] += p["conventionality"]
            report.group_means["by_phrase_type"] = {
                f"{g}:{t}": {"n": s["n"],
                             "contingency": s["contingency"] / s["n"],
                             "conventionality": s["conventionality"] / s["n"]}
                for (g, t), s in sorted(by_type.items())}
        suffix = "" if len(sweep) == 1 else f"_min{threshold}"
        pipeline.write_artifact(out / f"report{suffix}.json", report.to_json(),
                                "manifest.json")
        pipeline.write_artifact(out / f"summaries{suffix}.tsv",
                                analysis.summaries_tsv(summaries),
                                "manifest.json")
        pipeline.write_artifact(out / f"scatter{suffix}.svg",
                                analysis.scatter_svg(report), "manifest.json")
        if first_report is None:
            first_report = report
    return first_report


def cmd_analyze(args) -> int:
    specs = read_phrase_list(_existing(args.phrases, "phrase list"))
    instance_rows = pipeline.read_tsv(_existing(args.instances, "instances"),
                                      pipeline.EXTRACT_COLUMNS)
    conv_rows = pipeline.read_tsv(_existing(args.conv, "conv scores"),
                                  pipeline.CONV_COLUMNS)
    cont_rows = pipeline.read_tsv(_existing(args.cont, "cont scores"),
                                  pipeline.CONT_COLUMNS)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = pipeline.make_manifest(
        {"command": "analyze", "min_instances": args.min_instances,
         "thresholds": args.thresholds},
        _NullProvider(),
        _digests(phrases=args.phrases, instances=args.instances,
                 conv=args.conv, cont=args.cont))
    _write_manifest(out, manifest)
    report = _analyze_core(specs, instance_rows, conv_rows, cont_rows, args,
                           out, True)
    print(f"report written ({report.n_included_phrases} phrases included)")
    return EXIT_OK


def cmd_run(args) -> int:
    corpus = read_treebank(_existing(args.corpus, "corpus"))
    specs = read_phrase_list(_existing(args.phrases, "phrase list"))
    provider = open_provider(args.provider, corpus, args.window)
    padding = load_padding(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = pipeline.make_manifest(
        {"command": "run", "provider": args.provider, "window": args.window,
         "min_occurrences": args.min_occurrences,
         "min_instances": args.min_instances, "thresholds": args.thresholds,
         "bits": args.bits, "workers": args.workers, "seed": args.seed,
         "padding_words": len(padding.split())},
        provider,
        _digests(corpus=args.corpus, phrases=args.phrases,
                 padding=args.padding or None))
    _write_manifest(out, manifest)
    try:
        instances = pipeline.run_extract(corpus, specs)
        instance_rows = pipeline.instances_rows(instances)
        pipeline.write_artifact(out / "instances.tsv",
                                pipeline.tsv_text(pipeline.EXTRACT_COLUMNS,
                                                  instance_rows),
                                "manifest.json")
        conv_rows = pipeline.run_conventionality(
            corpus, specs, instances, provider,
            min_occurrences=args.min_occurrences, workers=args.workers)
        pipeline.write_artifact(out / "conv.tsv",
                                pipeline.tsv_text(pipeline.CONV_COLUMNS,
                                                  conv_rows),
                                "manifest.json")
        cont_rows = pipeline.run_contingency(corpus, instances, provider,
                                             padding, workers=args.workers)
        pipeline.write_artifact(out / "cont.tsv",
                                pipeline.tsv_text(pipeline.CONT_COLUMNS,
                                                  cont_rows),
                                "manifest.json")
    finally:
        provider.close()
    report = _analyze_core(specs, instance_rows, conv_rows, cont_rows, args,
                           out, True)
    print(f"pipeline complete: {report.n_included_phrases} phrases included, "
          f"artifacts in {out}")
    return EXIT_OK


def cmd_provider_check(args) -> int:
    corpus = read_treebank(_existing(args.corpus, "corpus")) \
        if args.corpus else None
    provider = open_provider(args.provider, corpus, args.window)
    try:
        hs = provider.handshake()
        print(f"provider_name={hs.provider_name}")
        print(f"dimension={hs.dimension}")
        print(f"config_fingerprint={hs.config_fingerprint}")
        if not hs.provider_name or not hs.config_fingerprint:
            raise ProviderError("handshake missing provider_name or fingerprint")
        tokens = args.probe_tokens.split() if args.probe_tokens else None
        if tokens is None:
            if corpus is not None and len(corpus) > 0:
                tokens = corpus.records[0].surfaces()[:6]
            else:
                tokens = ["the", "cat", "sat", "on", "the", "mat"]
        if len(tokens) < 2:
            raise ConfigError("need at least 2 probe tokens")
        target = len(tokens) - 1
        lp1 = providers.request_condprob(provider, tokens,
                                         [False] * len(tokens), target)
        lp2 = providers.request_condprob(provider, tokens,
                                         [False] * len(tokens), target)
        if lp1 != lp2:
            raise ProviderError("condprob not deterministic across repeats")
        print(f"condprob_probe={lp1}")
        if hs.dimension is not None:
            v1 = providers.request_embedding(provider, tokens, 0)
            v2 = providers.request_embedding(provider, tokens, 0)
            if not np.array_equal(v1, v2):
                raise ProviderError("embedding not deterministic across repeats")
            print(f"embed_probe_dimension={v1.shape[0]}")
        print("provider-check: ok")
        return EXIT_OK
    finally:
        provider.close()


def cmd_serve_toy(args) -> int:
    corpus = read_treebank(_existing(args.corpus, "corpus"))
    provider = ToyProvider(load_model(_existing(args.model, "toy model")),
                           vocabulary=sorted({s.lower() for r in corpus
                                              for s in r.surfaces()}),
                           window=args.window)
    providers.serve(provider, sys.stdin, sys.stdout)
    return EXIT_OK


# --- argument wiring -------------------------------------------------------

def _add_common(sub, provider=True, corpus=True, phrases=True):
    if corpus:
        sub.add_argument("--corpus", required=True, help="treebank file")
    if phrases:
        sub.add_argument("--phrases", required=True, help="phrase-list TSV")
    if provider:
        sub.add_argument("--provider", required=True,
                         help="toy:<model> | subprocess:<cmd> | socket:<addr>")
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument("--window", type=int, default=10,
                     help="toy embedding context window")
    sub.add_argument("--workers", type=int, default=1)


def _add_analyze_opts(sub):
    sub.add_argument("--min-instances", type=int,
                     default=analysis.DEFAULT_MIN_INSTANCES)
    sub.add_argument("--min-instances-sweep", default="",
                     help="comma list of thresholds; one report per value")
    sub.add_argument("--thresholds", default="mean",
                     help="'mean' or 'value:<conv>,<cont>'")
    sub.add_argument("--group-by", choices=["phrase_type"], default=None)
    sub.add_argument("--ratings", default="", help="ratings TSV")
    sub.add_argument("--ratings-element",
                     choices=["head", "dep", "phrase"], default=None)
    sub.add_argument("--bits", action="store_true",
                     help="report contingency in bits instead of nats")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phrasemeter",
        description="Score multiword phrases on conventionality and contingency")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("extract", help="find target and matched instances")
    _add_common(p, provider=False)
    p.set_defaults(func=cmd_extract)

    p = subs.add_parser("score-conv", help="conventionality scores")
    _add_common(p)
    p.add_argument("--instances", required=True)
    p.add_argument("--min-occurrences", type=int, default=10)
    p.set_defaults(func=cmd_score_conv)

    p = subs.add_parser("score-cont", help="contingency scores")
    _add_common(p, phrases=False)
    p.add_argument("--instances", required=True)
    p.add_argument("--padding", default="",
                   help="padding paragraph file, or 'none'")
    p.set_defaults(func=cmd_score_cont)

    p = subs.add_parser("analyze", help="statistics, quadrants, report files")
    p.add_argument("--phrases", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--conv", required=True)
    p.add_argument("--cont", required=True)
    p.add_argument("--out", default="out")
    _add_analyze_opts(p)
    p.set_defaults(func=cmd_analyze)

    p = subs.add_parser("run", help="extract, score, and analyze in one go")
    _add_common(p)
    p.add_argument("--min-occurrences", type=int, default=10)
    p.add_argument("--padding", default="")
    p.add_argument("--seed", type=int, default=0)
    _add_analyze_opts(p)
    p.set_defaults(func=cmd_run)

    p = subs.add_parser("provider-check", help="handshake and smoke probe")
    p.add_argument("--provider", required=True)
    p.add_argument("--corpus", default="")
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--probe-tokens", default="")
    p.set_defaults(func=cmd_provider_check)

    p = subs.add_parser("serve-toy", help="serve the toy provider over stdio")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--window", type=int, default=10)
    p.set_defaults(func=cmd_serve_toy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; pass through
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CorpusError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except analysis.AnalysisError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
