// Round entry form behavior: reading construction, disable-after-submit,
// draft persistence across reloads, and 409 highlighting on finalize.

import { beforeEach, describe, expect, it, vi } from "vitest";
import { ApiClient } from "../src/api.js";
import { renderRoundEntry } from "../src/views.js";
import type { ContestDefinition, Report, RoundPayload } from "../src/types.js";

import round1 from "./fixtures/round1.json";
import toy from "./fixtures/toy_election.json";
import reportClean from "./fixtures/report_clean.json";

const round = round1 as unknown as RoundPayload;
const definitions = new Map<string, ContestDefinition>(
  (reportClean as unknown as Report).contest_definitions.map((d) => [d.id, d]),
);

function flatCards() {
  return Object.values(round.groups)
    .flatMap((trays) => Object.values(trays))
    .flat();
}

function renderEntry(api: ApiClient, onRoundUpdate = async () => {}) {
  const container = document.createElement("div");
  document.body.replaceChildren(container);
  renderRoundEntry(container, {
    api,
    sessionId: "test-session",
    round,
    definitions,
    onRoundUpdate,
  });
  return container;
}

function form(container: HTMLElement, cardId: string): HTMLFormElement {
  return container.querySelector(`[data-testid="form-${cardId}"]`) as HTMLFormElement;
}

async function flush() {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

describe("round entry", () => {
  beforeEach(() => {
    localStorage.clear();
    vi.unstubAllGlobals();
  });

  it("renders one enabled form per retrieved card, grouped by tray", () => {
    const container = renderEntry(new ApiClient(""));
    const cards = flatCards();
    expect(container.querySelectorAll("form").length).toBe(cards.length);
    expect(container.querySelectorAll(".tray-group").length).toBeGreaterThan(0);
  });

  it("submits the chosen candidate and disables the form on success", async () => {
    const card = flatCards()[0];
    const contest = card.contests[0];
    const candidate = definitions.get(contest)!.candidates[0];
    const fetchMock = vi.fn(async () =>
      new Response(JSON.stringify({ recorded: card.card_id, cards_recorded: 1,
                                    cards_total: round.cards_total }), { status: 200 }));
    vi.stubGlobal("fetch", fetchMock);

    const container = renderEntry(new ApiClient(""));
    const f = form(container, card.card_id);
    (f.querySelector(`input[value="${candidate}"]`) as HTMLInputElement).click();
    f.dispatchEvent(new Event("submit", { cancelable: true }));
    await flush();

    const sent = JSON.parse((fetchMock.mock.calls[0] as unknown[])[1].body);
    expect(sent.card_id).toBe(card.card_id);
    expect(sent.readings[contest]).toEqual({ selected: [candidate] });
    expect((f.querySelector("button") as HTMLButtonElement).disabled).toBe(true);
    expect(container.querySelector(`[data-card="${card.card_id}"]`)!.className)
      .toContain("recorded");
  });

  it("sends not_found with empty readings when the card is missing", async () => {
    const card = flatCards()[1];
    const fetchMock = vi.fn(async () =>
      new Response(JSON.stringify({ recorded: card.card_id, cards_recorded: 1,
                                    cards_total: round.cards_total }), { status: 200 }));
    vi.stubGlobal("fetch", fetchMock);
    const container = renderEntry(new ApiClient(""));
    const f = form(container, card.card_id);
    (f.querySelector('input[name="not_found"]') as HTMLInputElement).click();
    f.dispatchEvent(new Event("submit", { cancelable: true }));
    await flush();
    const sent = JSON.parse((fetchMock.mock.calls[0] as unknown[])[1].body);
    expect(sent).toEqual({ card_id: card.card_id, not_found: true, readings: {} });
  });

  it("keeps unsubmitted readings in a local draft across re-renders", async () => {
    const card = flatCards()[0];
    const contest = card.contests[0];
    const candidate = definitions.get(contest)!.candidates[1];
    const container = renderEntry(new ApiClient(""));
    const input = form(container, card.card_id)
      .querySelector(`input[value="${candidate}"]`) as HTMLInputElement;
    input.click();
    form(container, card.card_id).dispatchEvent(new Event("change"));

    const reloaded = renderEntry(new ApiClient(""));
    const restored = form(reloaded, card.card_id)
      .querySelector(`input[value="${candidate}"]`) as HTMLInputElement;
    expect(restored.checked).toBe(true);
  });

  it("surfaces a conflict verbatim and marks the offending card", async () => {
    const card = flatCards()[0];
    vi.stubGlobal("fetch", vi.fn(async () =>
      new Response(JSON.stringify({ error: "UNEXPECTED_CARD",
                                    message: `card ${card.card_id} already recorded this round`,
                                    details: {} }), { status: 409 })));
    const container = renderEntry(new ApiClient(""));
    const f = form(container, card.card_id);
    f.dispatchEvent(new Event("submit", { cancelable: true }));
    await flush();
    const status = container.querySelector(`[data-testid="status-${card.card_id}"]`)!;
    expect(status.textContent).toContain("already recorded this round");
    expect(container.querySelector(`[data-card="${card.card_id}"]`)!.className)
      .toContain("entry-error");
  });

  it("finalize failure lists missing cards and highlights them", async () => {
    const missing = flatCards().slice(0, 2).map((c) => c.card_id);
    vi.stubGlobal("fetch", vi.fn(async () =>
      new Response(JSON.stringify({ error: "ROUND_INCOMPLETE",
                                    message: "2 cards lack interpretations",
                                    details: { missing } }), { status: 409 })));
    const updates: string[] = [];
    const container = renderEntry(new ApiClient(""), async () => { updates.push("x"); });
    (container.querySelector('[data-testid="finalize"]') as HTMLButtonElement).click();
    await flush();
    expect(updates).toEqual([]);  // no optimistic refresh on failure
    const note = container.querySelector('[data-testid="finalize-status"]')!;
    expect(note.textContent).toContain(missing[0]);
    for (const cardId of missing) {
      expect(container.querySelector(`[data-card="${cardId}"]`)!.className)
        .toContain("entry-error");
    }
  });

  it("phantom cards start pre-marked as not found", () => {
    expect((toy as { csd_csv: string }).csd_csv.length).toBeGreaterThan(0);
    const container = renderEntry(new ApiClient(""));
    for (const card of flatCards()) {
      if (card.is_phantom) {
        const box = form(container, card.card_id)
          .querySelector('input[name="not_found"]') as HTMLInputElement;
        expect(box.checked).toBe(true);
      }
    }
  });
});
