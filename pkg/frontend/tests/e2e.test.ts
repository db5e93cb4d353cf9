// End-to-end: spawn the real session service and audit the 12-card toy
// election entirely through the UI, exactly as an audit board would.

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, beforeEach, describe, expect, it } from "vitest";

import { route } from "../src/main.js";
import toy from "./fixtures/toy_election.json";

const PORT = 8719; // must match the happy-dom URL in vitest.config.ts
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let dataDir: string;

async function waitFor<T>(probe: () => T | null | undefined | false,
                          what: string, timeoutMs = 15_000): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const value = probe();
    if (value) return value;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

async function serverReady(): Promise<void> {
  const deadline = Date.now() + 30_000;
  for (;;) {
    try {
      const res = await fetch(`${BASE}/sessions/probe`);
      if (res.status === 404) return;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "rla-e2e-"));
  server = spawn("rla", ["serve", "--port", String(PORT), "--data-dir", dataDir],
                 { stdio: "ignore" });
  await serverReady();
});

afterAll(() => {
  server?.kill();
  rmSync(dataDir, { recursive: true, force: true });
});

interface Truth {
  [cardId: string]: { [contest: string]: string };
}

function cvrTruth(): Truth {
  const truth: Truth = {};
  for (const line of (toy as { cvrs_jsonl: string }).cvrs_jsonl.trim().split("\n")) {
    const cvr = JSON.parse(line) as {
      card_id: string;
      interpretations: Record<string, { selected: string[] } | string>;
    };
    truth[cvr.card_id] = {};
    for (const [contest, rec] of Object.entries(cvr.interpretations)) {
      if (typeof rec === "object") truth[cvr.card_id][contest] = rec.selected[0];
    }
  }
  return truth;
}

function setField(testid: string, value: string): void {
  const area = document.querySelector(`[data-testid="${testid}"]`) as HTMLTextAreaElement;
  area.value = value;
}

async function createSessionThroughForm(seed: string): Promise<string> {
  location.hash = "";
  route();
  await waitFor(() => document.querySelector('[data-testid="create-config"]'),
                "create form");
  setField("create-manifest_csv", (toy as { manifest_csv: string }).manifest_csv);
  setField("create-csd_csv", (toy as { csd_csv: string }).csd_csv);
  setField("create-cvrs_jsonl", (toy as { cvrs_jsonl: string }).cvrs_jsonl);
  setField("create-contests", JSON.stringify((toy as { contests: unknown[] }).contests));
  setField("create-config", JSON.stringify({ method: "BALLOT_COMPARISON", seed }));
  (document.querySelector(".create-session") as HTMLFormElement)
    .dispatchEvent(new Event("submit", { cancelable: true }));
  await waitFor(() => location.hash.startsWith("#/session/"), "session hash");
  return location.hash.replace("#/session/", "");
}

async function enterRoundOne(options: { markNotFound?: boolean } = {}): Promise<void> {
  route(); // render the session view for the current hash
  const plan = await waitFor(
    () => document.querySelector('[data-testid="plan-round"]') as HTMLButtonElement,
    "plan button");
  plan.click();
  await waitFor(() => document.querySelector("form[data-testid^='form-']"),
                "entry forms");

  const truth = cvrTruth();
  const forms = Array.from(
    document.querySelectorAll("form[data-testid^='form-']"),
  ) as HTMLFormElement[];
  let first = true;
  for (const form of forms) {
    const cardId = form.getAttribute("data-testid")!.replace("form-", "");
    if (options.markNotFound && first) {
      (form.querySelector('input[name="not_found"]') as HTMLInputElement).click();
      first = false;
    } else {
      for (const [contest, candidate] of Object.entries(truth[cardId] ?? {})) {
        const input = form.querySelector(
          `input[data-testid="cand-${cardId}-${contest}-${candidate}"]`,
        ) as HTMLInputElement | null;
        input?.click();
      }
    }
    form.dispatchEvent(new Event("submit", { cancelable: true }));
    await waitFor(
      () => document.querySelector(`[data-testid="status-${cardId}"]`)
        ?.textContent === "recorded",
      `card ${cardId} recorded`);
  }
  (document.querySelector('[data-testid="finalize"]') as HTMLButtonElement).click();
}

function dashboardCell(contest: string, field: string): string {
  const node = document.querySelector(
    `tr[data-contest="${contest}"] td[data-field="${field}"]`,
  );
  return node?.textContent ?? "";
}

describe("audit board end to end", () => {
  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    localStorage.clear();
  });

  let cleanRisks: Record<string, string> = {};

  it("audits the toy election through the browser to confirmation", async () => {
    const sessionId = await createSessionThroughForm("12345678901234567890");
    await enterRoundOne();
    await waitFor(() => document.querySelector('[data-testid="complete-note"]'),
                  "completion note");

    // both contests confirmed on the dashboard
    expect(dashboardCell("B", "status")).toBe("CONFIRMED");
    expect(dashboardCell("S", "status")).toBe("CONFIRMED");

    // every displayed number equals the API's report payload
    const report = await (await fetch(`${BASE}/sessions/${sessionId}/report`)).json();
    for (const [contest, entry] of Object.entries(report.status.contests) as
         [string, { measured_risk: string; risk_limit: string; draws: number }][]) {
      expect(dashboardCell(contest, "measured_risk")).toBe(entry.measured_risk);
      expect(dashboardCell(contest, "risk_limit")).toBe(entry.risk_limit);
      expect(dashboardCell(contest, "draws")).toBe(String(entry.draws));
      cleanRisks[contest] = entry.measured_risk;
    }
    expect(report.status.complete).toBe(true);
  });

  it("a NOT_FOUND entry raises the displayed risk after finalize", async () => {
    await createSessionThroughForm("99999999999999999999");
    await enterRoundOne({ markNotFound: true });
    await waitFor(() => document.querySelector('[data-testid="results"]'),
                  "round results");

    const statuses = ["B", "S"].map((k) => dashboardCell(k, "status"));
    expect(statuses).toContain("ACTIVE"); // at least the lost card's contests
    for (const contest of ["B", "S"]) {
      if (dashboardCell(contest, "status") === "ACTIVE") {
        const risk = parseFloat(dashboardCell(contest, "measured_risk"));
        expect(risk).toBeGreaterThan(parseFloat(cleanRisks[contest]));
        expect(risk).toBeGreaterThan(0.15); // above the risk limit, not confirmed
      }
    }
  });

  it("reopening a finished session is read-only", async () => {
    const sessionId = await createSessionThroughForm("12345678901234567890");
    route();
    await waitFor(() => document.querySelector('[data-testid="complete-note"]'),
                  "read-only note");
    expect(document.querySelector('[data-testid="plan-round"]')).toBeNull();
    expect(document.querySelector("form[data-testid^='form-']")).toBeNull();
    expect(sessionId).toBeTruthy();
  });
});
