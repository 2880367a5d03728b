import { createServer, type IncomingMessage, type Server, type ServerResponse } from "node:http";
import { afterEach, describe, expect, it } from "vitest";

import { ReviewApiError, ReviewClient } from "../src/api.js";

type Route = (req: IncomingMessage, body: string, res: ServerResponse) => void;

let server: Server | null = null;

function startStub(route: Route): Promise<string> {
  return new Promise((resolve) => {
    server = createServer((req, res) => {
      let body = "";
      req.on("data", (chunk) => (body += chunk));
      req.on("end", () => route(req, body, res));
    });
    server.listen(0, "127.0.0.1", () => {
      const address = server!.address();
      if (address && typeof address === "object") {
        resolve(`http://127.0.0.1:${address.port}`);
      }
    });
  });
}

function json(res: ServerResponse, status: number, payload: unknown): void {
  const body = JSON.stringify(payload);
  res.writeHead(status, { "Content-Type": "application/json" });
  res.end(body);
}

afterEach(() => {
  server?.close();
  server = null;
});

describe("ReviewClient", () => {
  it("fetches the current round", async () => {
    const url = await startStub((req, _body, res) => {
      expect(req.url).toBe("/rounds/current");
      json(res, 200, { task: "NER-gen", budget: 3, status: "awaiting-selection", final_prompt: null, round: null });
    });
    const round = await new ReviewClient(url).currentRound();
    expect(round.budget).toBe(3);
  });

  it("posts selections with candidate id and rationale", async () => {
    let seen: unknown = null;
    const url = await startStub((req, body, res) => {
      expect(req.method).toBe("POST");
      expect(req.url).toBe("/rounds/current/selection");
      seen = JSON.parse(body);
      json(res, 200, { status: "awaiting-selection" });
    });
    await new ReviewClient(url).submitSelection("r1c4", "cleanest phrasing");
    expect(seen).toEqual({ candidate_id: "r1c4", rationale: "cleanest phrasing" });
  });

  it("surfaces server error classes verbatim", async () => {
    const url = await startStub((_req, _body, res) => {
      json(res, 409, { error: "RoundNotReady", message: "round already closed" });
    });
    const failure = await new ReviewClient(url)
      .submitSelection("r1c1", "")
      .catch((e: unknown) => e);
    expect(failure).toBeInstanceOf(ReviewApiError);
    const apiError = failure as ReviewApiError;
    expect(apiError.status).toBe(409);
    expect(apiError.errorClass).toBe("RoundNotReady");
    expect(apiError.message).toContain("round already closed");
  });

  it("url-encodes sample ids in decision posts", async () => {
    let path = "";
    const url = await startStub((req, _body, res) => {
      path = req.url ?? "";
      json(res, 200, { sample_id: "a b", decision: "reject", reason: "x" });
    });
    await new ReviewClient(url).decide("a b", "reject", "x");
    expect(path).toBe("/samples/a%20b/decision");
  });

  it("returns scatter TSV as text", async () => {
    const url = await startStub((_req, _body, res) => {
      res.writeHead(200, { "Content-Type": "text/tab-separated-values" });
      res.end("x\ty\tsource\tid\n1\t2\toriginal\ts0\n");
    });
    const tsv = await new ReviewClient(url).scatterTsv();
    expect(tsv.startsWith("x\ty\tsource\tid")).toBe(true);
  });
});
