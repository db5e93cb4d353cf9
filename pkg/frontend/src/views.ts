// View rendering.  Every number shown comes verbatim from an API payload;
// the client never derives risk or sample sizes itself.

import { ApiClient, ApiError } from "./api.js";
import { clearDraft, loadDraft, saveDraft } from "./state.js";
import type {
  ContestDefinition,
  Interpretation,
  Reading,
  Report,
  RoundCard,
  RoundPayload,
  StatusPayload,
} from "./types.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (k === "class") node.className = v;
    else node.setAttribute(k, v);
  }
  node.append(...children);
  return node;
}

// -- risk dashboard ----------------------------------------------------------

export function renderDashboard(container: HTMLElement, status: StatusPayload): void {
  container.replaceChildren();
  const summary = el(
    "p",
    { class: "summary", "data-testid": "summary" },
    `${status.rounds} round(s) finalized, ${status.cards_inspected} cards inspected, ` +
      `${status.cards_drawn} drawn. ${status.complete ? "Audit complete." : "Audit in progress."}`,
  );
  const head = el(
    "tr",
    {},
    ...["Contest", "Status", "Measured risk", "Risk limit", "Draws", "o1", "o2", "u1", "u2", "Next sample"].map(
      (h) => el("th", {}, h),
    ),
  );
  const table = el("table", { class: "dashboard", "data-testid": "dashboard" }, head);
  for (const [contestId, entry] of Object.entries(status.contests)) {
    const badge = el("span", { class: `badge badge-${entry.status.toLowerCase()}` }, entry.status);
    table.append(
      el(
        "tr",
        { "data-contest": contestId },
        el("td", {}, contestId),
        el("td", { "data-field": "status" }, badge),
        el("td", { "data-field": "measured_risk" }, entry.measured_risk),
        el("td", { "data-field": "risk_limit" }, entry.risk_limit),
        el("td", { "data-field": "draws" }, String(entry.draws)),
        el("td", { "data-field": "n1" }, String(entry.discrepancies.n1)),
        el("td", { "data-field": "n2" }, String(entry.discrepancies.n2)),
        el("td", { "data-field": "u1" }, String(entry.discrepancies.u1)),
        el("td", { "data-field": "u2" }, String(entry.discrepancies.u2)),
        el(
          "td",
          { "data-field": "next_sample_size" },
          entry.next_sample_size === undefined ? "-" : String(entry.next_sample_size),
        ),
      ),
    );
  }
  container.append(el("h2", {}, "Contests"), table, summary);
}

// -- card entry --------------------------------------------------------------

interface EntryContext {
  api: ApiClient;
  sessionId: string;
  round: RoundPayload;
  definitions: Map<string, ContestDefinition>;
  onRoundUpdate: () => Promise<void>;
}

function readingFromForm(form: HTMLFormElement, contests: string[]): Record<string, Reading> {
  const readings: Record<string, Reading> = {};
  for (const contest of contests) {
    const mode = (form.querySelector(
      `input[name="mode:${contest}"]:checked`,
    ) as HTMLInputElement | null)?.value;
    if (mode === "NO_SELECTION") readings[contest] = "NO_SELECTION";
    else if (mode === "CONTEST_NOT_ON_CARD") readings[contest] = "CONTEST_NOT_ON_CARD";
    else {
      const selected = Array.from(
        form.querySelectorAll(`input[name="cand:${contest}"]:checked`),
      ).map((n) => (n as HTMLInputElement).value);
      readings[contest] = { selected };
    }
  }
  return readings;
}

function applyDraft(form: HTMLFormElement, draft: { not_found: boolean; readings: Record<string, Reading> }): void {
  const notFound = form.querySelector('input[name="not_found"]') as HTMLInputElement | null;
  if (notFound) notFound.checked = draft.not_found;
  for (const [contest, reading] of Object.entries(draft.readings)) {
    if (reading === "NO_SELECTION" || reading === "CONTEST_NOT_ON_CARD") {
      const radio = form.querySelector(
        `input[name="mode:${contest}"][value="${reading}"]`,
      ) as HTMLInputElement | null;
      if (radio) radio.checked = true;
    } else {
      const vote = form.querySelector(
        `input[name="mode:${contest}"][value="VOTE"]`,
      ) as HTMLInputElement | null;
      if (vote) vote.checked = true;
      for (const candidate of reading.selected) {
        const box = form.querySelector(
          `input[name="cand:${contest}"][value="${candidate}"]`,
        ) as HTMLInputElement | null;
        if (box) box.checked = true;
      }
    }
  }
}

function contestFieldset(contest: ContestDefinition, cardId: string): HTMLFieldSetElement {
  const fs = el("fieldset", { "data-contest": contest.id }) as HTMLFieldSetElement;
  fs.append(el("legend", {}, `${contest.name} (${contest.id})`));
  const multi = contest.num_winners > 1;
  const voteMode = el("input", {
    type: "radio",
    name: `mode:${contest.id}`,
    value: "VOTE",
    checked: "checked",
    "data-testid": `mode-vote-${cardId}-${contest.id}`,
  });
  const voteLabel = el("label", { class: "mode" }, voteMode, " votes:");
  const candidates = el("span", { class: "candidates" });
  for (const candidate of contest.candidates) {
    const input = el("input", {
      type: multi ? "checkbox" : "radio",
      name: `cand:${contest.id}`,
      value: candidate,
      "data-testid": `cand-${cardId}-${contest.id}-${candidate}`,
    });
    input.addEventListener("change", () => {
      voteMode.checked = true;
    });
    candidates.append(el("label", {}, input, candidate));
  }
  fs.append(
    voteLabel,
    candidates,
    el(
      "label",
      { class: "mode" },
      el("input", {
        type: "radio",
        name: `mode:${contest.id}`,
        value: "NO_SELECTION",
        "data-testid": `mode-blank-${cardId}-${contest.id}`,
      }),
      " no selection",
    ),
    el(
      "label",
      { class: "mode" },
      el("input", {
        type: "radio",
        name: `mode:${contest.id}`,
        value: "CONTEST_NOT_ON_CARD",
        "data-testid": `mode-absent-${cardId}-${contest.id}`,
      }),
      " contest not on card",
    ),
  );
  return fs;
}

function cardForm(ctx: EntryContext, card: RoundCard): HTMLElement {
  const wrapper = el("div", { class: "card-entry", "data-card": card.card_id });
  const title = el("h4", {}, card.card_id + (card.is_phantom ? " (phantom)" : ""));
  const form = el("form", { "data-testid": `form-${card.card_id}` }) as HTMLFormElement;
  const status = el("span", { class: "entry-status", "data-testid": `status-${card.card_id}` });
  const contests = [...card.contests].sort();

  const notFound = el("input", {
    type: "checkbox",
    name: "not_found",
    "data-testid": `notfound-${card.card_id}`,
  });
  if (card.is_phantom) notFound.checked = true;
  form.append(el("label", { class: "notfound" }, notFound, " card not found"));

  for (const contestId of contests) {
    const definition = ctx.definitions.get(contestId);
    if (definition) form.append(contestFieldset(definition, card.card_id));
  }
  const submit = el("button", { type: "submit", "data-testid": `submit-${card.card_id}` }, "Record");
  form.append(submit, status);

  const disableAll = () => {
    for (const input of form.querySelectorAll("input, button")) {
      (input as HTMLInputElement).disabled = true;
    }
    wrapper.classList.add("recorded");
  };
  if (card.recorded) {
    status.textContent = "recorded";
    disableAll();
  } else {
    const draft = loadDraft(ctx.sessionId, ctx.round.round, card.card_id);
    if (draft) applyDraft(form, draft);
  }

  const snapshot = (): Interpretation => ({
    card_id: card.card_id,
    not_found: notFound.checked,
    readings: notFound.checked ? {} : readingFromForm(form, contests),
  });

  form.addEventListener("change", () => {
    const current = snapshot();
    saveDraft(ctx.sessionId, ctx.round.round, card.card_id, {
      not_found: current.not_found,
      readings: current.readings,
    });
  });

  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    wrapper.classList.remove("entry-error");
    status.textContent = "sending...";
    try {
      const res = await ctx.api.postInterpretation(ctx.sessionId, ctx.round.round, snapshot());
      clearDraft(ctx.sessionId, ctx.round.round, card.card_id);
      status.textContent = "recorded";
      disableAll();
      const progress = document.querySelector('[data-testid="entry-progress"]');
      if (progress) progress.textContent = `${res.cards_recorded} of ${res.cards_total} cards recorded`;
      const next = wrapper.parentElement?.querySelector(
        ".card-entry:not(.recorded) input",
      ) as HTMLInputElement | null;
      next?.focus();
    } catch (error) {
      // surface the server's words; a 409 marks this card as the offender
      wrapper.classList.add("entry-error");
      status.textContent = error instanceof ApiError ? error.message : String(error);
    }
  });
  wrapper.append(title, form);
  return wrapper;
}

export function renderRoundEntry(container: HTMLElement, ctx: EntryContext): void {
  container.replaceChildren();
  const round = ctx.round;
  container.append(
    el("h2", {}, `Round ${round.round}: card entry`),
    el(
      "p",
      { "data-testid": "entry-progress" },
      `${round.cards_recorded} of ${round.cards_total} cards recorded`,
    ),
    el(
      "p",
      { class: "sizes" },
      "Cumulative sample sizes: " +
        Object.entries(round.sizes)
          .map(([k, v]) => `${k}=${v}`)
          .join(", "),
    ),
  );
  if (round.full_count.length) {
    container.append(
      el("p", { class: "full-count-note" },
         `Converted to full hand count: ${round.full_count.join(", ")}`),
    );
  }
  for (const [cart, trays] of Object.entries(round.groups)) {
    for (const [tray, cards] of Object.entries(trays)) {
      const group = el("section", { class: "tray-group" });
      group.append(el("h3", {}, cart === "phantom" ? "Phantom cards" : `Cart ${cart}, tray ${tray}`));
      for (const card of cards) group.append(cardForm(ctx, card));
      container.append(group);
    }
  }
  const finalize = el(
    "button",
    { class: "finalize", "data-testid": "finalize" },
    `Finalize round ${round.round}`,
  );
  const finalizeStatus = el("p", { class: "finalize-status", "data-testid": "finalize-status" });
  finalize.addEventListener("click", async () => {
    finalize.setAttribute("disabled", "disabled");
    finalizeStatus.textContent = "finalizing...";
    try {
      await ctx.api.finalizeRound(ctx.sessionId, round.round);
      // never optimistic: re-render everything from the server's state
      await ctx.onRoundUpdate();
    } catch (error) {
      finalize.removeAttribute("disabled");
      if (error instanceof ApiError && error.code === "ROUND_INCOMPLETE") {
        const missing = ((error.body as { details?: { missing?: string[] } }).details?.missing) ?? [];
        finalizeStatus.textContent = `Round incomplete; missing cards: ${missing.join(", ")}`;
        for (const cardId of missing) {
          container
            .querySelector(`[data-card="${cardId}"]`)
            ?.classList.add("entry-error");
        }
      } else {
        finalizeStatus.textContent = error instanceof ApiError ? error.message : String(error);
      }
    }
  });
  container.append(finalize, finalizeStatus);
}

// -- per-round results table ---------------------------------------------------

export function renderResults(container: HTMLElement, report: Report): void {
  const finished = report.results
    .map((result, i) => ({ result, number: i + 1 }))
    .filter((r) => r.result !== null);
  if (!finished.length) return;
  const table = el("table", { class: "results", "data-testid": "results" });
  table.append(
    el("tr", {}, ...["Round", "Contest", "Risk after round", "Status"].map((h) => el("th", {}, h))),
  );
  for (const { result, number } of finished) {
    for (const [contestId, entry] of Object.entries(result!)) {
      table.append(
        el(
          "tr",
          {},
          el("td", {}, String(number)),
          el("td", {}, contestId),
          el("td", { "data-field": "round_risk" }, entry.risk),
          el("td", {}, entry.status),
        ),
      );
    }
  }
  container.append(el("h2", {}, "Round results"), table);
}
