"""Minimal stdio model server for tests and latency experiments.

Speaks the engine's line-delimited JSON protocol. Three deterministic models:
``lexicon`` (2-class sentiment over a signed word list), ``echo`` (returns
the input), and ``reverse`` (returns the input's words reversed).
``--latency-ms`` injects an artificial sleep per predict call for throughput
tests. Run as ``python -m perturbkit.stub_server``.

Deliberately stdlib-only so worker pools can spawn one per process without
paying heavyweight import costs.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time

WORD_RE = re.compile(r"[^\W_]+(?:['’][^\W_]+)*", re.UNICODE)


def load_signed_weights(path: str) -> dict[str, float]:
    weights: dict[str, float] = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            token, score = line.split("\t")[:2]
            weights[token.casefold()] = float(score)
    return weights


def sentiment_probs(text: str, weights: dict[str, float]) -> list[float]:
    net = sum(weights.get(word.casefold(), 0.0) for word in WORD_RE.findall(text))
    exps = [math.exp(-net - max(-net, net)), math.exp(net - max(-net, net))]
    total = exps[0] + exps[1]
    return [exps[0] / total, exps[1] / total]


def _respond(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload) + "\n")
    sys.stdout.flush()


def serve(model: str, weights_path: str | None, latency_ms: int) -> None:
    weights: dict[str, float] = {}
    if model == "lexicon":
        if not weights_path:
            raise SystemExit("--weights is required for the lexicon model")
        weights = load_signed_weights(weights_path)

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            request_id = request.get("id")
            op = request["op"]
        except (json.JSONDecodeError, TypeError, KeyError, AttributeError):
            _respond({"id": None, "error": f"malformed request: {line[:200]}"})
            continue
        if op == "info":
            if model == "lexicon":
                _respond({"id": request_id, "type": "classification", "num_classes": 2})
            else:
                _respond({"id": request_id, "type": "generation"})
        elif op == "predict":
            inputs = request.get("inputs")
            if not isinstance(inputs, list) or not all(isinstance(x, str) for x in inputs):
                _respond({"id": request_id, "error": "predict needs a list of string inputs"})
                continue
            if latency_ms > 0:
                time.sleep(latency_ms / 1000.0)
            if model == "lexicon":
                _respond({"id": request_id, "predictions": [sentiment_probs(x, weights) for x in inputs]})
            elif model == "echo":
                _respond({"id": request_id, "outputs": list(inputs)})
            else:  # reverse
                _respond({"id": request_id, "outputs": [" ".join(reversed(x.split())) for x in inputs]})
        else:
            _respond({"id": request_id, "error": f"unknown op {op!r}"})


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="perturbkit.stub_server", description=__doc__)
    parser.add_argument("--model", choices=("lexicon", "echo", "reverse"), default="lexicon")
    parser.add_argument("--weights", help="TSV signed word list for the lexicon model")
    parser.add_argument("--latency-ms", type=int, default=0)
    args = parser.parse_args(argv)
    serve(args.model, args.weights, args.latency_ms)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
