/**
 * HTTP front end: GET /info and POST /predict, JSON bodies matching the
 * stdio protocol minus the id field. Malformed requests get a 400 with an
 * error body; unknown paths a 404. Requests are handled one at a time per
 * connection, which is all the engine ever sends.
 */

import { createServer, type IncomingMessage, type Server, type ServerResponse } from "node:http";
import { Model, ProtocolError, sleep, validateInputs } from "./models.js";

function sendJson(response: ServerResponse, status: number, payload: unknown): void {
  const body = JSON.stringify(payload);
  response.writeHead(status, {
    "Content-Type": "application/json",
    "Content-Length": Buffer.byteLength(body),
  });
  response.end(body);
}

function readBody(request: IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    request.on("data", (chunk) => chunks.push(chunk));
    request.on("end", () => resolve(Buffer.concat(chunks).toString("utf-8")));
    request.on("error", reject);
  });
}

export function createHttpServer(model: Model, latencyMs: number): Server {
  return createServer(async (request, response) => {
    try {
      if (request.method === "GET" && request.url === "/info") {
        sendJson(response, 200, model.info());
        return;
      }
      if (request.method === "POST" && request.url === "/predict") {
        const raw = await readBody(request);
        let body: unknown;
        try {
          body = JSON.parse(raw);
        } catch {
          throw new ProtocolError(`request body is not JSON: ${raw.slice(0, 200)}`);
        }
        if (typeof body !== "object" || body === null) {
          throw new ProtocolError("request body must be a JSON object");
        }
        const inputs = validateInputs((body as Record<string, unknown>).inputs);
        if (latencyMs > 0) await sleep(latencyMs);
        sendJson(response, 200, model.predict(inputs));
        return;
      }
      sendJson(response, 404, { error: `no route for ${request.method} ${request.url}` });
    } catch (error) {
      const status = error instanceof ProtocolError ? 400 : 500;
      const message = error instanceof Error ? error.message : String(error);
      sendJson(response, status, { error: message });
    }
  });
}

export function startHttpServer(model: Model, port: number, latencyMs: number): Promise<Server> {
  const server = createHttpServer(model, latencyMs);
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, "127.0.0.1", () => resolve(server));
  });
}
