/**
 * Scripted end-to-end session against a live review server: view one
 * full refinement round (5 candidates x 10 samples), submit the
 * selection through the same client the browser uses, and check that
 * the pipeline's refinement log on disk records the closed round.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, readdirSync, writeFileSync, mkdirSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";

import { ReviewClient } from "../src/api.js";

const PYTHON = process.env.PYTHON ?? "python3";

function pipelineAvailable(): boolean {
  const probe = spawnSync(PYTHON, ["-c", "import synthmine"], { encoding: "utf-8" });
  return probe.status === 0;
}

const DISEASES = [
  "ovarian cancer",
  "anemia",
  "asthma",
  "rheumatoid arthritis",
  "sepsis",
];

function writeWorkspace(): string {
  const root = mkdtempSync(join(tmpdir(), "review-loop-"));
  const dataDir = join(root, "data");
  mkdirSync(dataDir);
  const blocks = DISEASES.map((name) => {
    const words = name.split(" ");
    const rows = ["Patients\tO", "with\tO", `${words[0]}\tB-Disease`];
    for (const word of words.slice(1)) rows.push(`${word}\tI-Disease`);
    rows.push("were\tO", "treated\tO", ".\tO");
    return rows.join("\n");
  });
  writeFileSync(join(dataDir, "train.conll"), blocks.join("\n\n") + "\n");
  writeFileSync(
    join(dataDir, "ner.manifest"),
    "name: loop-test\ntask: NER\ntrain: train.conll\nentity-types: Disease\n",
  );
  writeFileSync(
    join(root, "run.cfg"),
    [
      "[run]",
      "manifest: data/ner.manifest",
      "out_dir: out",
      "rng_seed: 3",
      "",
      "[provider]",
      "kind: mock",
      "mock_seed: 17",
      "",
    ].join("\n"),
  );
  return root;
}

function runPipeline(args: string[], cwd: string): string {
  const result = spawnSync(PYTHON, ["-m", "synthmine", ...args], {
    cwd,
    encoding: "utf-8",
  });
  if (result.status !== 0) {
    throw new Error(`pipeline ${args.join(" ")} failed:\n${result.stderr}\n${result.stdout}`);
  }
  return result.stdout;
}

function startServer(runDir: string, cwd: string): Promise<{ child: ChildProcess; url: string }> {
  return new Promise((resolve, reject) => {
    const child = spawn(
      PYTHON,
      ["-m", "synthmine", "review", "serve", "--run", runDir, "--config", "run.cfg"],
      { cwd },
    );
    let buffer = "";
    const onData = (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/listening on (http:\/\/127\.0\.0\.1:\d+)/);
      if (match && match[1]) {
        child.stdout?.off("data", onData);
        resolve({ child, url: match[1] });
      }
    };
    child.stdout?.on("data", onData);
    child.on("error", reject);
    child.on("exit", (code) => reject(new Error(`server exited early with ${code}\n${buffer}`)));
    setTimeout(() => reject(new Error(`server did not announce a port:\n${buffer}`)), 20000);
  });
}

const children: ChildProcess[] = [];
afterAll(() => {
  for (const child of children) child.kill("SIGKILL");
});

describe.skipIf(!pipelineAvailable())("full refinement round against the live server", () => {
  it("views 5 candidates x 10 samples, selects, and the log records the closed round", async () => {
    const root = writeWorkspace();
    const forgeOut = runPipeline(["forge", "--config", "run.cfg"], root);
    expect(forgeOut).toContain("status: awaiting-selection");
    const runsDir = join(root, "out", "runs");
    const forgeDir = readdirSync(runsDir).find((name) => name.startsWith("forge-"));
    expect(forgeDir).toBeDefined();
    const runDir = join(runsDir, forgeDir as string);

    const { child, url } = await startServer(runDir, root);
    child.removeAllListeners("exit");
    children.push(child);
    const client = new ReviewClient(url);

    const before = await client.currentRound();
    expect(before.status).toBe("awaiting-selection");
    expect(before.round).not.toBeNull();
    expect(before.round!.round_index).toBe(1);
    expect(before.round!.candidates).toHaveLength(5);
    for (const candidate of before.round!.candidates) {
      expect(candidate.samples).toHaveLength(10);
      expect(candidate.body.length).toBeGreaterThan(0);
    }

    const result = await client.submitSelection("r1c3", "clearest instructions");
    expect(result.status).toBe("awaiting-selection");

    const after = await client.currentRound();
    expect(after.round!.round_index).toBe(2);

    // a second submission for round 1 raced away: the server now holds round 2
    const log = readFileSync(join(runDir, "refinement_log.jsonl"), "utf-8")
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as Record<string, unknown>);
    const selection = log.find((event) => event.event === "selection");
    expect(selection).toBeDefined();
    expect(selection!.candidate_id).toBe("r1c3");
    expect(selection!.rationale).toBe("clearest instructions");
    expect(selection!.round_index).toBe(1);
    const openedRounds = log.filter((event) => event.event === "round_opened");
    expect(openedRounds).toHaveLength(2);

    child.kill("SIGINT");
  }, 120000);

  it("reviews pending samples against a generation run", async () => {
    const root = writeWorkspace();
    runPipeline(["gen", "--config", "run.cfg"], root);
    const runsDir = join(root, "out", "runs");
    const genDir = readdirSync(runsDir).find((name) => name.startsWith("gen-"));
    expect(genDir).toBeDefined();
    const runDir = join(runsDir, genDir as string);

    const { child, url } = await startServer(runDir, root);
    child.removeAllListeners("exit");
    children.push(child);
    const client = new ReviewClient(url);

    const pending = await client.pendingSamples();
    expect(pending.length).toBeGreaterThan(0);
    const first = pending[0]!;
    expect(first.task).toBe("NER");
    expect(first.spans?.length).toBeGreaterThan(0);

    const accepted = await client.decide(first.sample_id, "accept", "");
    expect(accepted.decision).toBe("accept");
    const second = pending[1]!;
    await client.decide(second.sample_id, "reject", "entity mis-tagged");

    const remaining = await client.pendingSamples();
    expect(remaining.length).toBe(pending.length - 2);

    const duplicate = await client
      .decide(first.sample_id, "accept", "")
      .catch((e: unknown) => e);
    expect(duplicate).toBeInstanceOf(Error);

    const quarantine = readFileSync(join(runDir, "quarantine.jsonl"), "utf-8");
    expect(quarantine).toContain("entity mis-tagged");
    expect(quarantine).toContain(second.sample_id);

    child.kill("SIGINT");
  }, 120000);
});
