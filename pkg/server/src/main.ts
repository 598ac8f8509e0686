/**
 * Entry point. Flags:
 *   --mode stdio|http     (default stdio)
 *   --port <n>            (http mode, default 8571)
 *   --model lexicon-sentiment|echo-generation|reverse-generation
 *   --latency-ms <n>      artificial delay per predict call
 *   --lexicon <path>      override the bundled sentiment word list
 */

import { MODEL_NAMES, createModel, type ModelName } from "./models.js";
import { serveStdio } from "./stdio.js";
import { startHttpServer } from "./http.js";

interface Options {
  mode: "stdio" | "http";
  port: number;
  model: ModelName;
  latencyMs: number;
  lexicon?: string;
}

function parseArgs(argv: string[]): Options {
  const options: Options = {
    mode: "stdio",
    port: 8571,
    model: "lexicon-sentiment",
    latencyMs: 0,
  };
  for (let i = 0; i < argv.length; i += 1) {
    const flag = argv[i];
    const value = argv[i + 1];
    switch (flag) {
      case "--mode":
        if (value !== "stdio" && value !== "http") {
          throw new Error(`--mode must be stdio or http, got ${value}`);
        }
        options.mode = value;
        i += 1;
        break;
      case "--port":
        options.port = Number(value);
        if (!Number.isInteger(options.port) || options.port < 0) {
          throw new Error(`--port must be a non-negative integer, got ${value}`);
        }
        i += 1;
        break;
      case "--model":
        if (!MODEL_NAMES.includes(value as ModelName)) {
          throw new Error(`--model must be one of ${MODEL_NAMES.join(", ")}, got ${value}`);
        }
        options.model = value as ModelName;
        i += 1;
        break;
      case "--latency-ms":
        options.latencyMs = Number(value);
        if (!Number.isFinite(options.latencyMs) || options.latencyMs < 0) {
          throw new Error(`--latency-ms must be >= 0, got ${value}`);
        }
        i += 1;
        break;
      case "--lexicon":
        options.lexicon = value;
        i += 1;
        break;
      default:
        throw new Error(`unknown flag: ${flag}`);
    }
  }
  return options;
}

async function main(): Promise<void> {
  const options = parseArgs(process.argv.slice(2));
  const model = createModel(options.model, options.lexicon);
  if (options.mode === "stdio") {
    await serveStdio(model, options.latencyMs);
  } else {
    const server = await startHttpServer(model, options.port, options.latencyMs);
    const address = server.address();
    const port = typeof address === "object" && address ? address.port : options.port;
    console.error(`example-model-server listening on http://127.0.0.1:${port}`);
  }
}

main().catch((error) => {
  console.error(error instanceof Error ? error.message : String(error));
  process.exit(1);
});
