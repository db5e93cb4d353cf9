// Entry point: a small hash router over three screens (home, session,
// read-only report).  All state transitions go through the HTTP API.

import { ApiClient, ApiError } from "./api.js";
import { clearRoundDrafts } from "./state.js";
import { el, renderDashboard, renderResults, renderRoundEntry } from "./views.js";
import type { ContestDefinition } from "./types.js";

const api = new ApiClient("");

function errorBanner(target: HTMLElement, error: unknown): void {
  const banner = el("div", { class: "error-banner", "data-testid": "error-banner" });
  banner.textContent = error instanceof ApiError ? error.message : String(error);
  const retry = el("button", {}, "Retry");
  retry.addEventListener("click", () => route());
  banner.append(" ", retry);
  target.prepend(banner);
}

function renderHome(app: HTMLElement): void {
  app.replaceChildren();
  app.append(el("h1", {}, "Risk-limiting audit board"));

  const open = el("form", { class: "open-session" }) as HTMLFormElement;
  const idInput = el("input", { name: "session_id", placeholder: "session id" });
  open.append(el("h2", {}, "Open a session"), idInput, el("button", { type: "submit" }, "Open"));
  open.addEventListener("submit", (event) => {
    event.preventDefault();
    location.hash = `#/session/${(idInput as HTMLInputElement).value.trim()}`;
  });

  const create = el("form", { class: "create-session" }) as HTMLFormElement;
  const fields: Record<string, HTMLTextAreaElement> = {};
  for (const [name, label] of [
    ["manifest_csv", "Ballot manifest CSV"],
    ["csd_csv", "Card-style data CSV"],
    ["cvrs_jsonl", "Cast-vote records (JSON lines; empty for polling)"],
    ["contests", "Contest definitions (JSON array)"],
    ["config", 'Audit config JSON, e.g. {"method": "BALLOT_COMPARISON", "seed": "93548..."}'],
  ] as const) {
    const area = el("textarea", { name, rows: "4", "data-testid": `create-${name}` });
    fields[name] = area as HTMLTextAreaElement;
    create.append(el("label", { class: "file-label" }, label, area));
  }
  const createStatus = el("p", { "data-testid": "create-status" });
  create.append(el("button", { type: "submit", "data-testid": "create-submit" }, "Create session"), createStatus);
  create.addEventListener("submit", async (event) => {
    event.preventDefault();
    createStatus.textContent = "creating...";
    try {
      const envelope = await api.createSession({
        config: JSON.parse(fields.config.value),
        manifest_csv: fields.manifest_csv.value,
        csd_csv: fields.csd_csv.value,
        cvrs_jsonl: fields.cvrs_jsonl.value,
        contests: JSON.parse(fields.contests.value),
      });
      location.hash = `#/session/${envelope.session_id}`;
    } catch (error) {
      createStatus.textContent = error instanceof ApiError ? error.message : String(error);
    }
  });

  app.append(open, el("h2", {}, "Start a new audit"), create);
}

async function renderSession(app: HTMLElement, sessionId: string): Promise<void> {
  app.replaceChildren(el("p", {}, "loading..."));
  try {
    const report = await api.getReport(sessionId);
    const definitions = new Map<string, ContestDefinition>(
      report.contest_definitions.map((d) => [d.id, d]),
    );
    app.replaceChildren();
    app.append(
      el("h1", {}, `Audit session ${sessionId}`),
      el("p", { class: "digest" }, `config digest ${report.envelope.config_digest}`),
    );

    const dashboard = el("div", { class: "dashboard-panel" });
    renderDashboard(dashboard, report.status);
    app.append(dashboard);
    renderResults(app, report);

    const entry = el("div", { class: "entry-panel" });
    app.append(entry);

    const openRound = report.rounds.find((r) => !r.finalized);
    if (openRound) {
      renderRoundEntry(entry, {
        api,
        sessionId,
        round: openRound,
        definitions,
        onRoundUpdate: async () => {
          clearRoundDrafts(sessionId, openRound.round);
          await renderSession(app, sessionId);
        },
      });
    } else if (!report.envelope.complete) {
      const plan = el(
        "button",
        { class: "plan", "data-testid": "plan-round" },
        `Plan round ${report.envelope.current_round + 1}`,
      );
      plan.addEventListener("click", async () => {
        plan.setAttribute("disabled", "disabled");
        try {
          await api.planRound(sessionId);
          await renderSession(app, sessionId);
        } catch (error) {
          plan.removeAttribute("disabled");
          errorBanner(app, error);
        }
      });
      entry.append(plan);
    } else {
      entry.append(
        el("p", { class: "done", "data-testid": "complete-note" },
           "Audit complete; this session is read-only."),
      );
    }
  } catch (error) {
    app.replaceChildren();
    renderHome(app);
    errorBanner(app, error);
  }
}

export function route(): void {
  const app = document.getElementById("app");
  if (!app) return;
  const match = location.hash.match(/^#\/session\/(.+)$/);
  if (match) void renderSession(app, match[1]);
  else renderHome(app);
}

export function start(): void {
  window.addEventListener("hashchange", route);
  route();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  start();
}
