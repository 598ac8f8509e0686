/**
 * Stdio front end: one JSON request per line on stdin, one JSON response per
 * line on stdout. Malformed input produces an error response (with the
 * request id when one could be parsed); the server never crashes on bad input.
 */

import { createInterface } from "node:readline";
import { Model, ProtocolError, sleep, validateInputs } from "./models.js";

function respond(payload: unknown): void {
  process.stdout.write(JSON.stringify(payload) + "\n");
}

export async function serveStdio(model: Model, latencyMs: number): Promise<void> {
  const lines = createInterface({ input: process.stdin, crlfDelay: Infinity });
  for await (const rawLine of lines) {
    const line = rawLine.trim();
    if (!line) continue;

    let id: unknown = null;
    try {
      let request: unknown;
      try {
        request = JSON.parse(line);
      } catch {
        throw new ProtocolError(`malformed request: ${line.slice(0, 200)}`);
      }
      if (typeof request !== "object" || request === null) {
        throw new ProtocolError(`malformed request: ${line.slice(0, 200)}`);
      }
      const body = request as Record<string, unknown>;
      id = body.id ?? null;

      if (body.op === "info") {
        respond({ id, ...model.info() });
      } else if (body.op === "predict") {
        const inputs = validateInputs(body.inputs);
        if (latencyMs > 0) await sleep(latencyMs);
        respond({ id, ...model.predict(inputs) });
      } else {
        throw new ProtocolError(`unknown op: ${JSON.stringify(body.op)}`);
      }
    } catch (error) {
      const message = error instanceof Error ? error.message : String(error);
      respond({ id, error: message });
    }
  }
}
