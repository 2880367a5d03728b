/**
 * Pure view-model layer: everything the DOM shows is computed here so it
 * can be tested without a browser.
 */

import type { CurrentRound, PendingSample, SpanView } from "./api.js";

export interface CandidateCard {
  id: string;
  body: string;
  samples: string[];
  selectable: boolean;
}

export interface RoundViewModel {
  headline: string;
  statusLine: string;
  cards: CandidateCard[];
  selectionEnabled: boolean;
  finalPromptBody: string | null;
}

export function roundViewModel(current: CurrentRound): RoundViewModel {
  if (current.final_prompt) {
    return {
      headline: "Refinement complete",
      statusLine: `Final prompt selected after ${current.budget} rounds`,
      cards: [],
      selectionEnabled: false,
      finalPromptBody: current.final_prompt.body,
    };
  }
  const round = current.round;
  if (!round) {
    return {
      headline: "No refinement round",
      statusLine: "Start a forge run to populate this view",
      cards: [],
      selectionEnabled: false,
      finalPromptBody: null,
    };
  }
  const open = round.status === "awaiting-selection";
  return {
    headline: `Round ${round.round_index} of ${current.budget}`,
    statusLine: open
      ? `Compare ${round.candidates.length} candidates (${round.samples_per_candidate} samples each) and pick one`
      : `Round status: ${round.status}`,
    cards: round.candidates.map((candidate) => ({
      id: candidate.id,
      body: candidate.body,
      samples: candidate.samples,
      selectable: open,
    })),
    selectionEnabled: open,
    finalPromptBody: null,
  };
}

export interface SelectionDraft {
  candidateId: string | null;
  rationale: string;
}

/** Client-side guard: a POST without a chosen candidate never leaves the UI. */
export function validateSelection(draft: SelectionDraft): string | null {
  if (!draft.candidateId) {
    return "Choose a candidate before submitting";
  }
  return null;
}

export interface HighlightSegment {
  text: string;
  highlighted: boolean;
  entityType?: string;
}

/**
 * Split a sample's text into plain and highlighted segments. NER samples
 * highlight token spans (the same span model the scorer uses); RE samples
 * highlight the @...$ placeholders.
 */
export function highlightSegments(sample: PendingSample): HighlightSegment[] {
  if (sample.task === "NER" && sample.spans && sample.spans.length > 0) {
    return tokenSegments(sample.text.split(" "), sample.spans);
  }
  return placeholderSegments(sample.text);
}

function tokenSegments(tokens: string[], spans: SpanView[]): HighlightSegment[] {
  const sorted = [...spans].sort((a, b) => a.start - b.start);
  const segments: HighlightSegment[] = [];
  let cursor = 0;
  for (const span of sorted) {
    if (span.start > cursor) {
      segments.push({ text: tokens.slice(cursor, span.start).join(" "), highlighted: false });
    }
    segments.push({
      text: tokens.slice(span.start, span.end + 1).join(" "),
      highlighted: true,
      entityType: span.entity_type,
    });
    cursor = span.end + 1;
  }
  if (cursor < tokens.length) {
    segments.push({ text: tokens.slice(cursor).join(" "), highlighted: false });
  }
  return segments;
}

const PLACEHOLDER_RE = /@[A-Z]+\$/g;

function placeholderSegments(text: string): HighlightSegment[] {
  const segments: HighlightSegment[] = [];
  let cursor = 0;
  for (const match of text.matchAll(PLACEHOLDER_RE)) {
    const start = match.index ?? 0;
    if (start > cursor) {
      segments.push({ text: text.slice(cursor, start), highlighted: false });
    }
    segments.push({ text: match[0], highlighted: true, entityType: match[0] });
    cursor = start + match[0].length;
  }
  if (cursor < text.length) {
    segments.push({ text: text.slice(cursor), highlighted: false });
  }
  return segments;
}

export interface QueueViewModel {
  pendingCount: number;
  current: PendingSample | null;
  emptyMessage: string | null;
}

export function queueViewModel(pending: PendingSample[]): QueueViewModel {
  if (pending.length === 0) {
    return { pendingCount: 0, current: null, emptyMessage: "No samples awaiting review" };
  }
  return { pendingCount: pending.length, current: pending[0] ?? null, emptyMessage: null };
}

export interface ScatterPoint {
  x: number;
  y: number;
  source: string;
  id: string;
}

export function parseScatterTsv(tsv: string): ScatterPoint[] {
  const lines = tsv.split("\n").filter((line) => line.trim().length > 0);
  const points: ScatterPoint[] = [];
  for (const line of lines.slice(1)) {
    const [x, y, source, id] = line.split("\t");
    if (x === undefined || y === undefined || source === undefined || id === undefined) {
      continue;
    }
    points.push({ x: Number(x), y: Number(y), source, id });
  }
  return points;
}
