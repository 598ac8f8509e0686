/**
 * Signed-word-list sentiment scoring.
 *
 * A lexicon file is TSV: `token<TAB>score` per line, `#` comments allowed.
 * The prediction for a text is softmax(-net, +net) where net is the sum of
 * scores over every word occurrence. Word boundaries follow the engine's
 * canonical tokenizer: maximal runs of letters/digits plus internal
 * apostrophes, case-folded for lookup.
 */

import { readFileSync } from "node:fs";

const WORD_RE = /[\p{L}\p{N}]+(?:['’][\p{L}\p{N}]+)*/gu;

export type SignedWeights = Map<string, number>;

export function loadSignedWeights(path: string): SignedWeights {
  const weights: SignedWeights = new Map();
  const text = readFileSync(path, "utf-8");
  for (const rawLine of text.split("\n")) {
    const line = rawLine.trim();
    if (!line || line.startsWith("#")) continue;
    const [token, score] = line.split("\t");
    if (token === undefined || score === undefined) {
      throw new Error(`lexicon line has no tab-separated score: ${JSON.stringify(rawLine)}`);
    }
    const value = Number(score);
    if (!Number.isFinite(value)) {
      throw new Error(`non-numeric score for ${token}: ${score}`);
    }
    weights.set(token.toLowerCase(), value);
  }
  if (weights.size === 0) throw new Error("empty lexicon file");
  return weights;
}

export function tokenize(text: string): string[] {
  return text.match(WORD_RE) ?? [];
}

export function sentimentProbs(text: string, weights: SignedWeights): [number, number] {
  let net = 0;
  for (const word of tokenize(text)) {
    net += weights.get(word.toLowerCase()) ?? 0;
  }
  const peak = Math.max(-net, net);
  const negative = Math.exp(-net - peak);
  const positive = Math.exp(net - peak);
  const total = negative + positive;
  return [negative / total, positive / total];
}
