"""The model-wrapper boundary.

A victim model is reachable only through a :class:`ModelWrapper`: one call
taking a list of text inputs and returning a list of predictions. The engine
never tokenizes, batches, or inspects anything on the model side; inputs are
transmitted verbatim.

Three wrapper families ship here: an in-process lexicon classifier for tests
and demos, a stdio wrapper speaking a line-delimited JSON protocol to a child
process, and an HTTP wrapper POSTing to a ``/predict`` endpoint. The wire
protocols are documented in the README so servers can be written in any
language.
"""

from __future__ import annotations

import json
import math
import os
import select
import shlex
import subprocess
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

from .attacked_text import tokenize

CLASSIFICATION = "classification"
GENERATION = "generation"


class BridgeError(Exception):
    """Transport failure or malformed response from a model server."""


@dataclass(frozen=True)
class Classification:
    """A class-probability vector, normalized on ingestion."""

    probs: tuple[float, ...]

    @property
    def argmax(self) -> int:
        # Ties break toward the lowest class index.
        best = max(self.probs)
        return self.probs.index(best)


@dataclass(frozen=True)
class Generation:
    """A generated output string."""

    text: str


ModelOutput = Classification | Generation


def normalize_probs(values: Sequence[float]) -> Classification:
    """Coerce a raw prediction vector into a probability distribution.

    Wrappers may return logits or unnormalized scores. Anything with a
    negative entry or a sum outside [0.99, 1.01] goes through softmax;
    otherwise the vector is rescaled to sum to exactly 1.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise BridgeError(f"prediction vector must be 1-d and non-empty, got {values!r}")
    if not np.all(np.isfinite(arr)):
        raise BridgeError(f"prediction vector contains non-finite values: {values!r}")
    total = float(arr.sum())
    if np.any(arr < 0.0) or not 0.99 <= total <= 1.01:
        shifted = np.exp(arr - arr.max())
        arr = shifted / shifted.sum()
    else:
        arr = arr / total
    return Classification(tuple(float(p) for p in arr))


class ModelWrapper(ABC):
    """A single function from a list of strings to a list of predictions."""

    output_kind: str

    @abstractmethod
    def __call__(self, inputs: Sequence[str]) -> list[ModelOutput]:
        """Return one output per input, order preserved."""


def predict(wrapper: ModelWrapper, inputs: Sequence[str]) -> list[ModelOutput]:
    """Call ``wrapper`` on ``inputs`` and enforce the length contract."""
    if not inputs:
        raise ValueError("predict requires at least one input")
    outputs = wrapper(list(inputs))
    if len(outputs) != len(inputs):
        raise BridgeError(f"model returned {len(outputs)} outputs for {len(inputs)} inputs")
    return outputs


class BuiltinLexiconClassifier(ModelWrapper):
    """Deterministic bag-of-words classifier used as a desk-scale victim.

    The prediction for a text is ``softmax(bias + sum of per-class token
    scores)``, summed over every word occurrence (case-folded lookup).
    """

    output_kind = CLASSIFICATION

    def __init__(
        self,
        weights: dict[str, Sequence[float]],
        bias: Sequence[float] | None = None,
        classes: int | None = None,
    ) -> None:
        if classes is None:
            if not weights:
                raise ValueError("classes must be given when weights are empty")
            classes = len(next(iter(weights.values())))
        if classes < 2:
            raise ValueError(f"need >= 2 classes, got {classes}")
        self.classes = classes
        self.weights = {}
        for token, scores in weights.items():
            if len(scores) != classes:
                raise ValueError(f"token {token!r} has {len(scores)} scores, expected {classes}")
            self.weights[token.casefold()] = tuple(float(s) for s in scores)
        self.bias = tuple(float(b) for b in (bias if bias is not None else [0.0] * classes))
        if len(self.bias) != classes:
            raise ValueError(f"bias has {len(self.bias)} entries, expected {classes}")

    @classmethod
    def from_file(cls, path: str | Path) -> "BuiltinLexiconClassifier":
        """Load weights from a TSV file.

        Each line is ``token<TAB>score...``: one score means a signed 2-class
        sentiment weight ``s`` (expanded to ``(-s, +s)``), several scores mean
        explicit per-class weights. A line starting with ``#bias`` sets the
        bias vector; ``#`` comments and blank lines are ignored.
        """
        path = Path(path)
        weights: dict[str, list[float]] = {}
        bias: list[float] | None = None
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise BridgeError(f"cannot read model file {path}: {exc}") from exc
        for number, line in enumerate(lines, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("#bias"):
                    bias = [float(part) for part in line.split("\t")[1:]]
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise BridgeError(f"{path}:{number}: expected token<TAB>score, got {line!r}")
            token = parts[0]
            try:
                scores = [float(part) for part in parts[1:]]
            except ValueError as exc:
                raise BridgeError(f"{path}:{number}: non-numeric score in {line!r}") from exc
            if len(scores) == 1:
                scores = [-scores[0], scores[0]]
            weights[token] = scores
        if not weights:
            raise BridgeError(f"{path}: no weight lines found")
        return cls(weights, bias=bias)

    def __call__(self, inputs: Sequence[str]) -> list[ModelOutput]:
        outputs: list[ModelOutput] = []
        for text in inputs:
            logits = list(self.bias)
            for word in tokenize(text):
                scores = self.weights.get(word.casefold())
                if scores is not None:
                    logits = [a + b for a, b in zip(logits, scores)]
            outputs.append(normalize_probs(_softmax(logits)))
        return outputs


def _softmax(logits: Sequence[float]) -> list[float]:
    peak = max(logits)
    exps = [math.exp(x - peak) for x in logits]
    total = sum(exps)
    return [e / total for e in exps]


def _parse_predictions(payload: dict, n_inputs: int, output_kind: str) -> list[ModelOutput]:
    """Decode a predict-response body shared by the stdio and HTTP protocols."""
    if "predictions" in payload:
        if output_kind != CLASSIFICATION:
            raise BridgeError(f"generation model sent class predictions: {payload!r:.200}")
        rows = payload["predictions"]
        if not isinstance(rows, list):
            raise BridgeError(f"'predictions' must be a list: {payload!r:.200}")
        outputs: list[ModelOutput] = [normalize_probs(row) for row in rows]
    elif "outputs" in payload:
        if output_kind != GENERATION:
            raise BridgeError(f"classification model sent strings: {payload!r:.200}")
        rows = payload["outputs"]
        if not isinstance(rows, list) or not all(isinstance(r, str) for r in rows):
            raise BridgeError(f"'outputs' must be a list of strings: {payload!r:.200}")
        outputs = [Generation(text) for text in rows]
    else:
        raise BridgeError(f"response has neither 'predictions' nor 'outputs': {payload!r:.200}")
    if len(outputs) != n_inputs:
        raise BridgeError(f"model returned {len(outputs)} predictions for {n_inputs} inputs")
    return outputs


def _parse_info(payload: dict) -> str:
    kind = payload.get("type")
    if kind not in (CLASSIFICATION, GENERATION):
        raise BridgeError(f"info response has unknown type: {payload!r:.200}")
    return kind


class StdioModelWrapper(ModelWrapper):
    """Wrapper around a child process speaking line-delimited JSON.

    One request line per call, one response line per request, UTF-8. An
    ``info`` handshake on connect learns the model's output kind.
    """

    def __init__(self, command: str, handshake_timeout: float = 10.0, timeout: float = 30.0) -> None:
        self.command = command
        self.timeout = timeout
        self._next_id = 0
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        except OSError as exc:
            raise BridgeError(f"cannot spawn model server {command!r}: {exc}") from exc
        self._buffer = b""
        info = self._roundtrip({"op": "info"}, timeout=handshake_timeout)
        self.output_kind = _parse_info(info)

    def _read_line(self, timeout: float) -> bytes:
        deadline = time.monotonic() + timeout
        fd = self._proc.stdout.fileno()
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BridgeError(f"model server {self.command!r} timed out after {timeout:.1f}s")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                raise BridgeError(f"model server {self.command!r} exited mid-call")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def _roundtrip(self, request: dict, timeout: float | None = None) -> dict:
        if self._proc.poll() is not None:
            raise BridgeError(f"model server {self.command!r} has exited with code {self._proc.returncode}")
        request = {"id": self._next_id, **request}
        self._next_id += 1
        try:
            self._proc.stdin.write((json.dumps(request) + "\n").encode("utf-8"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BridgeError(f"model server {self.command!r} closed its pipe: {exc}") from exc
        line = self._read_line(timeout if timeout is not None else self.timeout)
        try:
            payload = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BridgeError(f"non-protocol line from model server: {line[:200]!r}") from exc
        if not isinstance(payload, dict):
            raise BridgeError(f"non-protocol line from model server: {line[:200]!r}")
        if "error" in payload:
            raise BridgeError(f"model server error: {payload['error']}")
        if payload.get("id") != request["id"]:
            raise BridgeError(f"response id {payload.get('id')} does not match request {request['id']}")
        return payload

    def __call__(self, inputs: Sequence[str]) -> list[ModelOutput]:
        payload = self._roundtrip({"op": "predict", "inputs": list(inputs)})
        return _parse_predictions(payload, len(inputs), self.output_kind)

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:  # pragma: no cover
                self._proc.kill()

    def __del__(self) -> None:  # pragma: no cover
        try:
            self.close()
        except Exception:
            pass


class HttpModelWrapper(ModelWrapper):
    """Wrapper issuing ``POST {base_url}/predict`` per call."""

    def __init__(self, base_url: str, timeout: float = 30.0) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = requests.Session()
        info = self._request("GET", "/info")
        self.output_kind = _parse_info(info)

    def _request(self, method: str, path: str, body: dict | None = None) -> dict:
        url = self.base_url + path
        try:
            response = self._session.request(method, url, json=body, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BridgeError(f"cannot reach model server at {url}: {exc}") from exc
        if response.status_code != 200:
            raise BridgeError(f"model server {url} returned {response.status_code}: {response.text[:200]}")
        try:
            payload = response.json()
        except ValueError as exc:
            raise BridgeError(f"non-JSON response from {url}: {response.text[:200]!r}") from exc
        if not isinstance(payload, dict):
            raise BridgeError(f"malformed response from {url}: {response.text[:200]!r}")
        if "error" in payload:
            raise BridgeError(f"model server error: {payload['error']}")
        return payload

    def __call__(self, inputs: Sequence[str]) -> list[ModelOutput]:
        payload = self._request("POST", "/predict", {"inputs": list(inputs)})
        return _parse_predictions(payload, len(inputs), self.output_kind)


def connect_stdio(command: str, handshake_timeout: float = 10.0) -> StdioModelWrapper:
    """Spawn ``command`` and handshake over its standard streams."""
    return StdioModelWrapper(command, handshake_timeout=handshake_timeout)


def connect_http(base_url: str, timeout: float = 30.0) -> HttpModelWrapper:
    """Connect to an HTTP model server and learn its output kind."""
    return HttpModelWrapper(base_url, timeout=timeout)


def build_wrapper(spec: str) -> ModelWrapper:
    """Build a wrapper from a CLI model spec string.

    Accepted forms: ``builtin:lexicon:<path>``, ``stdio:<command>``,
    ``http:<url>``.
    """
    if spec.startswith("builtin:lexicon:"):
        return BuiltinLexiconClassifier.from_file(spec[len("builtin:lexicon:") :])
    if spec.startswith("stdio:"):
        return connect_stdio(spec[len("stdio:") :])
    if spec.startswith("http:"):
        url = spec[len("http:") :]
        if not url.startswith(("http://", "https://")):
            url = "http:" + url if url.startswith("//") else "http://" + url
        return connect_http(url)
    raise BridgeError(
        f"unknown model spec {spec!r}; expected builtin:lexicon:<path>, stdio:<command>, or http:<url>"
    )
