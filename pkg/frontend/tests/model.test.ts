import { describe, expect, it } from "vitest";

import type { CurrentRound, PendingSample } from "../src/api.js";
import {
  highlightSegments,
  parseScatterTsv,
  queueViewModel,
  roundViewModel,
  validateSelection,
} from "../src/model.js";

function openRound(): CurrentRound {
  return {
    task: "NER-gen",
    budget: 3,
    status: "awaiting-selection",
    final_prompt: null,
    round: {
      round_index: 1,
      status: "awaiting-selection",
      samples_per_candidate: 10,
      selection: null,
      candidates: [1, 2, 3, 4, 5].map((i) => ({
        id: `r1c${i}`,
        body: `candidate ${i}`,
        samples: Array.from({ length: 10 }, (_, k) => `sample ${i}.${k}`),
      })),
    },
  };
}

describe("roundViewModel", () => {
  it("renders five selectable cards with their samples", () => {
    const vm = roundViewModel(openRound());
    expect(vm.cards).toHaveLength(5);
    expect(vm.cards.every((c) => c.selectable)).toBe(true);
    expect(vm.cards[0]!.samples).toHaveLength(10);
    expect(vm.selectionEnabled).toBe(true);
    expect(vm.headline).toBe("Round 1 of 3");
  });

  it("disables selection once the round is closed", () => {
    const state = openRound();
    state.round!.status = "closed";
    const vm = roundViewModel(state);
    expect(vm.selectionEnabled).toBe(false);
    expect(vm.cards.every((c) => !c.selectable)).toBe(true);
  });

  it("shows the final prompt when refinement finished", () => {
    const state = openRound();
    state.final_prompt = { id: "r3c2", body: "the winning prompt" };
    const vm = roundViewModel(state);
    expect(vm.finalPromptBody).toBe("the winning prompt");
    expect(vm.cards).toHaveLength(0);
  });
});

describe("validateSelection", () => {
  it("blocks submission without a candidate", () => {
    expect(validateSelection({ candidateId: null, rationale: "" })).toMatch(/choose/i);
  });

  it("passes with a candidate chosen", () => {
    expect(validateSelection({ candidateId: "r1c2", rationale: "fluent" })).toBeNull();
  });
});

describe("highlightSegments", () => {
  it("highlights NER spans over tokens", () => {
    const sample: PendingSample = {
      sample_id: "s0",
      task: "NER",
      text: "Patients with ovarian cancer were treated .",
      spans: [{ start: 2, end: 3, entity_type: "Disease" }],
    };
    const segments = highlightSegments(sample);
    expect(segments).toEqual([
      { text: "Patients with", highlighted: false },
      { text: "ovarian cancer", highlighted: true, entityType: "Disease" },
      { text: "were treated .", highlighted: false },
    ]);
  });

  it("highlights RE placeholders", () => {
    const sample: PendingSample = {
      sample_id: "s1",
      task: "RE",
      text: "Links @GENE$ to @DISEASE$ strongly.",
      label: "Yes",
    };
    const segments = highlightSegments(sample);
    const highlighted = segments.filter((s) => s.highlighted).map((s) => s.text);
    expect(highlighted).toEqual(["@GENE$", "@DISEASE$"]);
  });
});

describe("queueViewModel", () => {
  it("reports the empty state without any sample", () => {
    const vm = queueViewModel([]);
    expect(vm.pendingCount).toBe(0);
    expect(vm.current).toBeNull();
    expect(vm.emptyMessage).toMatch(/no samples/i);
  });

  it("surfaces the first pending sample", () => {
    const pending: PendingSample[] = [
      { sample_id: "a", task: "NER", text: "one" },
      { sample_id: "b", task: "NER", text: "two" },
    ];
    const vm = queueViewModel(pending);
    expect(vm.pendingCount).toBe(2);
    expect(vm.current?.sample_id).toBe("a");
  });
});

describe("parseScatterTsv", () => {
  it("parses header and rows", () => {
    const tsv = "x\ty\tsource\tid\n1.5\t-2\toriginal\ts0\n0\t3\tsynthetic\ts1\n";
    expect(parseScatterTsv(tsv)).toEqual([
      { x: 1.5, y: -2, source: "original", id: "s0" },
      { x: 0, y: 3, source: "synthetic", id: "s1" },
    ]);
  });

  it("returns no points for a header-only file", () => {
    expect(parseScatterTsv("x\ty\tsource\tid\n")).toEqual([]);
  });
});
