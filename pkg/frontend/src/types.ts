// Payload types mirroring the session API (see ../schemas/*.schema.json).

export type ContestStatus = "ACTIVE" | "CONFIRMED" | "FULL_COUNT";

export interface Envelope {
  session_id: string;
  config_digest: string;
  current_round: number;
  round_open: boolean;
  complete: boolean;
  contests: Record<string, { status: ContestStatus; measured_risk: string; risk_limit: string }>;
}

export interface RoundCard {
  card_id: string;
  position: number | null;
  is_phantom: boolean;
  contests: string[];
  recorded: boolean;
}

export interface RoundPayload {
  round: number;
  sizes: Record<string, number>;
  full_count: string[];
  finalized: boolean;
  cards_total: number;
  cards_recorded: number;
  groups: Record<string, Record<string, RoundCard[]>>;
}

export interface ContestStatusEntry {
  status: ContestStatus;
  measured_risk: string;
  risk_limit: string;
  draws: number;
  population: number;
  governing_margin?: string;
  phantom_cards?: number;
  phantom_cvrs?: number;
  csd_errors?: number;
  next_sample_size?: number;
  discrepancies: { n1: number; n2: number; u1: number; u2: number };
}

export interface StatusPayload {
  complete: boolean;
  rounds: number;
  cards_inspected: number;
  cards_drawn: number;
  contests: Record<string, ContestStatusEntry>;
}

export interface ContestDefinition {
  id: string;
  name: string;
  candidates: string[];
  num_winners: number;
  risk_limit: number;
  card_upper_bound: number;
  tally: Record<string, number>;
}

export interface Report {
  envelope: Envelope;
  status: StatusPayload;
  contest_definitions: ContestDefinition[];
  rounds: RoundPayload[];
  results: (Record<string, { risk: string; status: ContestStatus }> | null)[];
}

export interface FinalizeResponse {
  round: number;
  result: Record<string, { risk: string; status: ContestStatus }>;
  status: StatusPayload;
}

// A reading is candidate ids, an explicit blank, or "not on this card".
export type Reading =
  | { selected: string[] }
  | "NO_SELECTION"
  | "CONTEST_NOT_ON_CARD";

export interface Interpretation {
  card_id: string;
  not_found: boolean;
  readings: Record<string, Reading>;
}

export interface CreateSessionBody {
  config: Record<string, unknown>;
  manifest_csv: string;
  csd_csv: string;
  cvrs_jsonl: string;
  contests: unknown[];
}
