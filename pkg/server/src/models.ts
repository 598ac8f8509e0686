/**
 * The three bundled models and the protocol-level request handling shared by
 * the stdio and HTTP front ends.
 */

import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { loadSignedWeights, sentimentProbs, type SignedWeights } from "./lexicon.js";

export type ModelName = "lexicon-sentiment" | "echo-generation" | "reverse-generation";

export const MODEL_NAMES: ModelName[] = [
  "lexicon-sentiment",
  "echo-generation",
  "reverse-generation",
];

export interface InfoResponse {
  type: "classification" | "generation";
  num_classes?: number;
}

export type PredictResponse =
  | { predictions: number[][] }
  | { outputs: string[] };

export interface Model {
  info(): InfoResponse;
  predict(inputs: string[]): PredictResponse;
}

export function bundledLexiconPath(): string {
  const here = dirname(fileURLToPath(import.meta.url));
  // dist/src -> ../../data when built, src -> ../data in-tree
  return join(here, "..", "..", "data", "sentiment_lexicon.tsv");
}

export function createModel(name: ModelName, lexiconPath?: string): Model {
  switch (name) {
    case "lexicon-sentiment": {
      const weights: SignedWeights = loadSignedWeights(lexiconPath ?? bundledLexiconPath());
      return {
        info: () => ({ type: "classification", num_classes: 2 }),
        predict: (inputs) => ({
          predictions: inputs.map((text) => sentimentProbs(text, weights)),
        }),
      };
    }
    case "echo-generation":
      return {
        info: () => ({ type: "generation" }),
        predict: (inputs) => ({ outputs: [...inputs] }),
      };
    case "reverse-generation":
      return {
        info: () => ({ type: "generation" }),
        predict: (inputs) => ({
          outputs: inputs.map((text) =>
            text.split(/\s+/).filter(Boolean).reverse().join(" ")
          ),
        }),
      };
  }
}

export class ProtocolError extends Error {}

export function validateInputs(value: unknown): string[] {
  if (!Array.isArray(value) || !value.every((item) => typeof item === "string")) {
    throw new ProtocolError("predict needs a list of string inputs");
  }
  return value;
}

export const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));
