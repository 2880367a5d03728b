/**
 * DOM wiring over the tested api/model layers. Optimistic where safe,
 * but every state transition re-fetches from the server afterwards:
 * reloading the page always reconstructs exactly the server's view.
 */

import { ReviewApiError, ReviewClient, type PendingSample } from "./api.js";
import {
  highlightSegments,
  parseScatterTsv,
  queueViewModel,
  roundViewModel,
  validateSelection,
  type SelectionDraft,
} from "./model.js";

const client = new ReviewClient("");

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function showError(target: HTMLElement, error: unknown, retry: () => void): void {
  const box = el("div", "error-box");
  const label =
    error instanceof ReviewApiError ? `${error.errorClass}: ${error.message}` : String(error);
  box.append(el("p", "error-text", label));
  const button = el("button", "retry", "Retry");
  button.addEventListener("click", retry);
  box.append(button);
  target.replaceChildren(box);
}

// -- round view ---------------------------------------------------------------

const draft: SelectionDraft = { candidateId: null, rationale: "" };

async function renderRound(): Promise<void> {
  const target = document.getElementById("round-view");
  if (!target) return;
  let current;
  try {
    current = await client.currentRound();
  } catch (error) {
    if (error instanceof ReviewApiError && error.status === 404) {
      target.replaceChildren(el("p", "muted", "No refinement round in this run"));
      return;
    }
    showError(target, error, () => void renderRound());
    return;
  }
  const vm = roundViewModel(current);
  const container = el("section", "round");
  container.append(el("h2", "", vm.headline));
  container.append(el("p", "muted", vm.statusLine));

  if (vm.finalPromptBody) {
    container.append(el("pre", "final-prompt", vm.finalPromptBody));
    target.replaceChildren(container);
    return;
  }

  const cards = el("div", "cards");
  for (const card of vm.cards) {
    const cardNode = el("article", "card");
    const pick = el("input") as HTMLInputElement;
    pick.type = "radio";
    pick.name = "candidate";
    pick.value = card.id;
    pick.disabled = !card.selectable;
    pick.addEventListener("change", () => {
      draft.candidateId = card.id;
    });
    const header = el("label", "card-header", card.id + " ");
    header.prepend(pick);
    cardNode.append(header);
    cardNode.append(el("pre", "prompt-body", card.body));
    const samples = el("ul", "samples");
    for (const sample of card.samples) {
      samples.append(el("li", "", sample));
    }
    cardNode.append(samples);
    cards.append(cardNode);
  }
  container.append(cards);

  const form = el("div", "selection");
  const rationale = el("textarea") as HTMLTextAreaElement;
  rationale.placeholder = "Why this candidate? (recorded in the refinement log)";
  rationale.addEventListener("input", () => {
    draft.rationale = rationale.value;
  });
  const submit = el("button", "submit", "Select candidate");
  submit.disabled = !vm.selectionEnabled;
  const problem = el("p", "validation");
  submit.addEventListener("click", async () => {
    const message = validateSelection(draft);
    if (message) {
      problem.textContent = message;
      return;
    }
    problem.textContent = "";
    try {
      await client.submitSelection(draft.candidateId as string, draft.rationale);
    } catch (error) {
      if (error instanceof ReviewApiError && error.status === 409) {
        // raced by the CLI: the server already closed this round
        await renderRound();
        return;
      }
      showError(form, error, () => void renderRound());
      return;
    }
    draft.candidateId = null;
    draft.rationale = "";
    await renderRound();
  });
  form.append(rationale, submit, problem);
  container.append(form);
  target.replaceChildren(container);
}

// -- sample queue ----------------------------------------------------------------

async function renderQueue(): Promise<void> {
  const target = document.getElementById("queue-view");
  if (!target) return;
  let pending: PendingSample[];
  try {
    pending = await client.pendingSamples();
  } catch (error) {
    showError(target, error, () => void renderQueue());
    return;
  }
  const vm = queueViewModel(pending);
  const container = el("section", "queue");
  container.append(el("h2", "", `Sample review (${vm.pendingCount} pending)`));
  if (!vm.current) {
    container.append(el("p", "muted", vm.emptyMessage ?? ""));
    target.replaceChildren(container);
    return;
  }
  const sample = vm.current;
  const preview = el("p", "sample-text");
  for (const segment of highlightSegments(sample)) {
    if (segment.highlighted) {
      const mark = el("mark", "entity", segment.text);
      if (segment.entityType) mark.title = segment.entityType;
      preview.append(mark, " ");
    } else {
      preview.append(segment.text + " ");
    }
  }
  container.append(preview);
  if (sample.label) {
    container.append(el("p", "label", `label: ${sample.label}`));
  }
  const reason = el("input") as HTMLInputElement;
  reason.placeholder = "reject reason (stored in quarantine)";
  const decide = async (decision: "accept" | "reject") => {
    try {
      await client.decide(sample.sample_id, decision, reason.value);
    } catch (error) {
      if (!(error instanceof ReviewApiError && error.status === 409)) {
        showError(container, error, () => void renderQueue());
        return;
      }
      // already decided elsewhere; fall through to refresh
    }
    await renderQueue();
  };
  const accept = el("button", "accept", "Accept (a)");
  accept.addEventListener("click", () => void decide("accept"));
  const reject = el("button", "reject", "Reject (r)");
  reject.addEventListener("click", () => void decide("reject"));
  container.append(accept, reject, reason);
  document.onkeydown = (event) => {
    if (event.target instanceof HTMLInputElement || event.target instanceof HTMLTextAreaElement) {
      return;
    }
    if (event.key === "a") void decide("accept");
    if (event.key === "r") void decide("reject");
  };
  target.replaceChildren(container);
}

// -- scatter -----------------------------------------------------------------------

const SCATTER_SIZE = 420;

async function renderScatter(): Promise<void> {
  const target = document.getElementById("scatter-view");
  if (!target) return;
  let tsv: string;
  try {
    tsv = await client.scatterTsv();
  } catch (error) {
    if (error instanceof ReviewApiError && error.status === 404) {
      target.replaceChildren(el("p", "muted", "No projection scatter in this run"));
      return;
    }
    showError(target, error, () => void renderScatter());
    return;
  }
  const points = parseScatterTsv(tsv);
  const container = el("section", "scatter");
  container.append(el("h2", "", `Distribution scatter (${points.length} points)`));
  const canvas = el("canvas") as HTMLCanvasElement;
  canvas.width = SCATTER_SIZE;
  canvas.height = SCATTER_SIZE;
  const ctx = canvas.getContext("2d");
  if (ctx && points.length > 0) {
    const xs = points.map((p) => p.x);
    const ys = points.map((p) => p.y);
    const minX = Math.min(...xs);
    const maxX = Math.max(...xs);
    const minY = Math.min(...ys);
    const maxY = Math.max(...ys);
    const scale = (v: number, lo: number, hi: number) =>
      hi > lo ? ((v - lo) / (hi - lo)) * (SCATTER_SIZE - 20) + 10 : SCATTER_SIZE / 2;
    for (const point of points) {
      ctx.fillStyle = point.source === "original" ? "#2266aa" : "#cc5522";
      ctx.beginPath();
      ctx.arc(
        scale(point.x, minX, maxX),
        SCATTER_SIZE - scale(point.y, minY, maxY),
        3,
        0,
        Math.PI * 2,
      );
      ctx.fill();
    }
  }
  container.append(canvas);
  target.replaceChildren(container);
}

export function boot(): void {
  void renderRound();
  void renderQueue();
  void renderScatter();
}

if (typeof document !== "undefined" && document.getElementById("round-view")) {
  boot();
}
