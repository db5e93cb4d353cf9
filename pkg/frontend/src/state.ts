// Local draft persistence: unsaved form readings survive a page reload for
// the still-open round.  The server stays the source of truth; drafts are
// dropped once a card is submitted or the round is finalized.

import type { Reading } from "./types.js";

export interface CardDraft {
  not_found: boolean;
  readings: Record<string, Reading>;
}

const key = (sessionId: string, round: number) => `rla-draft:${sessionId}:${round}`;

function loadAll(sessionId: string, round: number): Record<string, CardDraft> {
  try {
    const raw = localStorage.getItem(key(sessionId, round));
    return raw ? (JSON.parse(raw) as Record<string, CardDraft>) : {};
  } catch {
    return {};
  }
}

export function loadDraft(sessionId: string, round: number, cardId: string): CardDraft | null {
  return loadAll(sessionId, round)[cardId] ?? null;
}

export function saveDraft(sessionId: string, round: number, cardId: string, draft: CardDraft): void {
  const all = loadAll(sessionId, round);
  all[cardId] = draft;
  localStorage.setItem(key(sessionId, round), JSON.stringify(all));
}

export function clearDraft(sessionId: string, round: number, cardId: string): void {
  const all = loadAll(sessionId, round);
  delete all[cardId];
  localStorage.setItem(key(sessionId, round), JSON.stringify(all));
}

export function clearRoundDrafts(sessionId: string, round: number): void {
  localStorage.removeItem(key(sessionId, round));
}
