"""Serve a masked-LM checkpoint over the probe wire protocol (stdio).

Wire contract (line-delimited JSON): a handshake line first
(``{"dimension", "provider_name", "config_fingerprint"}``), then one
response per request line, correlated by ``id``:

    request:  {"id", "kind": "embed"|"condprob", "tokens", "mask",
               "target_index", "params"}
    response: {"id", "ok": true, "vector": [...]}      (embed)
              {"id", "ok": true, "logprob": -1.23}     (condprob)
              {"id", "ok": false, "error": "..."}

Malformed or failing requests produce an error response; the loop never
dies on bad input, only on EOF.
"""

from __future__ import annotations

import argparse
import json
import sys

from .provider import NeuralProvider, NeuralProviderError


def serve(provider: NeuralProvider, reader, writer) -> None:
    writer.write(json.dumps({"dimension": provider.dimension,
                             "provider_name": provider.name,
                             "config_fingerprint": provider.fingerprint},
                            sort_keys=True) + "\n")
    writer.flush()
    for line in reader:
        line = line.strip()
        if not line:
            continue
        rid = "?"
        try:
            obj = json.loads(line)
            rid = obj.get("id", "?") if isinstance(obj, dict) else "?"
            kind = obj["kind"]
            tokens = [str(t) for t in obj["tokens"]]
            target = int(obj["target_index"])
            if kind == "condprob":
                value = provider.condprob(tokens,
                                          [bool(m) for m in obj["mask"]],
                                          target)
                reply = {"id": rid, "ok": True, "logprob": value}
            elif kind == "embed":
                vector = provider.embed(tokens, target)
                reply = {"id": rid, "ok": True,
                         "vector": [float(x) for x in vector]}
            else:
                raise NeuralProviderError(f"unknown kind {kind!r}")
        except (NeuralProviderError, KeyError, TypeError, ValueError,
                json.JSONDecodeError) as exc:
            reply = {"id": rid, "ok": False, "error": str(exc)}
        writer.write(json.dumps(reply, sort_keys=True) + "\n")
        writer.flush()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="neural-provider",
        description="Serve a transformer masked LM over the probe protocol")
    subs = parser.add_subparsers(dest="command", required=True)
    p = subs.add_parser("serve", help="serve a checkpoint over stdio")
    p.add_argument("--model", required=True,
                   help="checkpoint directory or hub model id")
    p.add_argument("--layer", type=int, default=-1,
                   help="hidden-state layer for embeddings (default: last)")
    p.add_argument("--no-lowercase", action="store_true")
    args = parser.parse_args(argv)

    try:
        provider = NeuralProvider(args.model, layer=args.layer,
                                  lowercase=not args.no_lowercase)
    except Exception as exc:
        print(f"failed to load model: {exc}", file=sys.stderr)
        return 2
    serve(provider, sys.stdin, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
