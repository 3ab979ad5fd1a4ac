"""Probe providers: the wire protocol, codec, and clients.

A provider answers two kinds of probes: ``embed`` (contextual embedding of
one token) and ``condprob`` (natural-log probability of one token given the
unmasked context).  Remote providers speak line-delimited JSON over a child
process's standard streams or a local TCP socket; the first line from the
provider is a handshake declaring its embedding dimension and configuration
fingerprint.
"""

from __future__ import annotations

import json
import math
import shlex
import socket
import subprocess
import threading
import uuid
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

KINDS = ("embed", "condprob")

# float round-off from exact providers may leave log-probs epsilon-positive
_LOGPROB_SLACK = 1e-9


class ProviderError(Exception):
    """The provider reported a failure for a request."""


class TransportError(ProviderError):
    """The provider process/socket is gone or unreadable."""


class ProtocolError(ProviderError):
    """The provider violated the wire contract (bad kind, drifting dimension,
    positive log-probability, malformed record)."""


@dataclass(frozen=True)
class Handshake:
    dimension: Optional[int]
    provider_name: str
    config_fingerprint: str


@dataclass(frozen=True)
class ProbeRequest:
    request_id: str
    kind: str
    tokens: tuple[str, ...]
    mask: tuple[bool, ...]
    target_index: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ProtocolError(f"unknown request kind {self.kind!r}")
        if len(self.mask) != len(self.tokens):
            raise ProtocolError("mask length must equal token length")
        if not 0 <= self.target_index < len(self.tokens):
            raise ProtocolError("target_index out of range")


@dataclass(frozen=True)
class ProbeResponse:
    request_id: str
    ok: bool
    vector: Optional[tuple[float, ...]] = None
    logprob: Optional[float] = None
    error: Optional[str] = None


def encode_handshake(hs: Handshake) -> str:
    return json.dumps({"dimension": hs.dimension, "provider_name": hs.provider_name,
                       "config_fingerprint": hs.config_fingerprint},
                      sort_keys=True)


def decode_handshake(line: str) -> Handshake:
    try:
        obj = json.loads(line)
        return Handshake(dimension=obj["dimension"],
                         provider_name=obj["provider_name"],
                         config_fingerprint=obj["config_fingerprint"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ProtocolError(f"bad handshake line: {exc}") from exc


def encode_request(req: ProbeRequest) -> str:
    return json.dumps({"id": req.request_id, "kind": req.kind,
                       "tokens": list(req.tokens), "mask": list(req.mask),
                       "target_index": req.target_index, "params": req.params},
                      sort_keys=True)


def decode_request(line: str) -> ProbeRequest:
    try:
        obj = json.loads(line)
        return ProbeRequest(request_id=obj["id"], kind=obj["kind"],
                            tokens=tuple(obj["tokens"]),
                            mask=tuple(bool(x) for x in obj["mask"]),
                            target_index=obj["target_index"],
                            params=obj.get("params", {}))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ProtocolError(f"bad request line: {exc}") from exc


def encode_response(resp: ProbeResponse) -> str:
    if not resp.ok:
        return json.dumps({"id": resp.request_id, "ok": False, "error": resp.error},
                          sort_keys=True)
    if resp.vector is not None:
        return json.dumps({"id": resp.request_id, "ok": True,
                           "vector": list(resp.vector)}, sort_keys=True)
    return json.dumps({"id": resp.request_id, "ok": True, "logprob": resp.logprob},
                      sort_keys=True)


def decode_response(line: str) -> ProbeResponse:
    try:
        obj = json.loads(line)
        if not obj["ok"]:
            return ProbeResponse(request_id=obj["id"], ok=False,
                                 error=obj.get("error", "unspecified"))
        if "vector" in obj:
            return ProbeResponse(request_id=obj["id"], ok=True,
                                 vector=tuple(float(x) for x in obj["vector"]))
        return ProbeResponse(request_id=obj["id"], ok=True,
                             logprob=float(obj["logprob"]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"bad response line: {exc}") from exc


# --- provider interface ----------------------------------------------------

class Provider:
    """An in-process probe provider.  Subclasses implement the three probes."""

    def handshake(self) -> Handshake:
        raise NotImplementedError

    def embed(self, tokens, target_index: int) -> np.ndarray:
        raise ProviderError("this provider does not answer embed probes")

    def condprob(self, tokens, mask, target_index: int) -> float:
        raise ProviderError("this provider does not answer condprob probes")

    def close(self):
        pass


def _check_logprob(value: float) -> float:
    if value > _LOGPROB_SLACK:
        raise ProtocolError(f"provider returned log-probability {value} > 0")
    return min(value, 0.0)


def request_embedding(provider: Provider, sentence_tokens, target_index: int) -> np.ndarray:
    """Embedding of one token; validates dimension against the handshake."""
    if not sentence_tokens:
        raise ValueError("sentence_tokens must be non-empty")
    vector = np.asarray(provider.embed(list(sentence_tokens), target_index),
                        dtype=np.float64)
    if not np.all(np.isfinite(vector)):
        raise ProtocolError("embedding contains non-finite components")
    expected = provider.handshake().dimension
    if expected is not None and vector.shape != (expected,):
        raise ProtocolError(
            f"dimension drift: got {vector.shape}, handshake said {expected}")
    return vector


def request_condprob(provider: Provider, tokens, mask, target_index: int) -> float:
    """Natural-log probability of tokens[target_index] given unmasked context."""
    if len(mask) != len(tokens):
        raise ValueError("mask length must equal token length")
    value = provider.condprob(list(tokens), list(mask), target_index)
    if not math.isfinite(value) and value != -math.inf:
        raise ProtocolError(f"non-finite log-probability {value}")
    return _check_logprob(float(value))


def dispatch(provider: Provider, req: ProbeRequest) -> ProbeResponse:
    """Answer one decoded request; failures become error responses."""
    try:
        if req.kind == "embed":
            vec = request_embedding(provider, req.tokens, req.target_index)
            return ProbeResponse(req.request_id, True, vector=tuple(float(x) for x in vec))
        if req.kind == "condprob":
            lp = request_condprob(provider, req.tokens, req.mask, req.target_index)
            return ProbeResponse(req.request_id, True, logprob=lp)
        return ProbeResponse(req.request_id, False, error=f"unknown kind {req.kind!r}")
    except Exception as exc:
        return ProbeResponse(req.request_id, False, error=str(exc))


def serve(provider: Provider, instream, outstream):
    """Serve a provider over text streams until EOF (one JSON record a line)."""
    outstream.write(encode_handshake(provider.handshake()) + "\n")
    outstream.flush()
    for line in instream:
        line = line.strip()
        if not line:
            continue
        try:
            req = decode_request(line)
        except ProtocolError as exc:
            obj = {}
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                pass
            rid = obj.get("id", "?") if isinstance(obj, dict) else "?"
            resp = ProbeResponse(rid, False, error=str(exc))
        else:
            resp = dispatch(provider, req)
        outstream.write(encode_response(resp) + "\n")
        outstream.flush()


# --- remote clients --------------------------------------------------------

class LineClient(Provider):
    """Client for a line-protocol provider; correlates pipelined responses by
    request id, so out-of-order replies are fine.  Thread-safe."""

    def __init__(self, reader, writer, name: str = "remote"):
        self._reader = reader
        self._writer = writer
        self._lock = threading.Lock()
        self._pending: dict[str, ProbeResponse] = {}
        line = self._reader.readline()
        if not line:
            raise TransportError(f"{name}: no handshake from provider")
        self._handshake = decode_handshake(line)

    def handshake(self) -> Handshake:
        return self._handshake

    def _send(self, req: ProbeRequest):
        try:
            self._writer.write(encode_request(req) + "\n")
            self._writer.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"provider unreachable: {exc}") from exc

    def _recv(self, request_id: str) -> ProbeResponse:
        while True:
            if request_id in self._pending:
                return self._pending.pop(request_id)
            line = self._reader.readline()
            if not line:
                raise TransportError("provider closed the stream mid-request")
            resp = decode_response(line)
            if resp.request_id == request_id:
                return resp
            self._pending[resp.request_id] = resp

    def _roundtrip(self, kind: str, tokens, mask, target_index: int) -> ProbeResponse:
        req = ProbeRequest(request_id=uuid.uuid4().hex, kind=kind,
                           tokens=tuple(tokens), mask=tuple(mask),
                           target_index=target_index)
        with self._lock:
            self._send(req)
            resp = self._recv(req.request_id)
        if not resp.ok:
            raise ProviderError(resp.error or "provider error")
        return resp

    def embed(self, tokens, target_index: int) -> np.ndarray:
        resp = self._roundtrip("embed", tokens, [False] * len(tokens), target_index)
        if resp.vector is None:
            raise ProtocolError("embed response carried no vector")
        return np.asarray(resp.vector, dtype=np.float64)

    def condprob(self, tokens, mask, target_index: int) -> float:
        resp = self._roundtrip("condprob", tokens, mask, target_index)
        if resp.logprob is None:
            raise ProtocolError("condprob response carried no logprob")
        return resp.logprob


class SubprocessProvider(LineClient):
    """Provider spoken to over a child process's stdin/stdout."""

    def __init__(self, command: str):
        try:
            self._proc = subprocess.Popen(
                shlex.split(command), stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, text=True, bufsize=1)
        except OSError as exc:
            raise TransportError(f"cannot launch provider {command!r}: {exc}") from exc
        super().__init__(self._proc.stdout, self._proc.stdin, name=command)

    def close(self):
        if self._proc.stdin:
            self._proc.stdin.close()
        self._proc.wait(timeout=30)


class SocketProvider(LineClient):
    """Provider spoken to over a local TCP socket (``host:port``)."""

    def __init__(self, address: str):
        host, _, port = address.rpartition(":")
        try:
            self._sock = socket.create_connection((host or "127.0.0.1", int(port)))
        except (OSError, ValueError) as exc:
            raise TransportError(f"cannot connect to {address!r}: {exc}") from exc
        reader = self._sock.makefile("r", encoding="utf-8")
        writer = self._sock.makefile("w", encoding="utf-8")
        super().__init__(reader, writer, name=address)

    def close(self):
        self._sock.close()
