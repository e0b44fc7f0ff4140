// Wire types for the world server protocol.
//
// Every frame, both directions, is {seq, type, body}; seq counts up by one
// per direction per connection. The server is authoritative: the client
// only ever renders what these bodies say.

export interface Envelope {
  seq: number;
  type: string;
  body: any;
}

// -- client -> server ------------------------------------------------------

export type EngineInput =
  | { kind: "choose"; node_id: string; choice_id: string }
  | { kind: "answer"; question_id: string; option_id: string }
  | { kind: "activity_result"; node_id: string; result: Record<string, unknown> };

export type ActivityEdit =
  | { action: "place"; x: number; y: number }
  | { action: "remove"; x: number; y: number }
  | { action: "add_entry"; option_id: string; quantity: number }
  | { action: "remove_entry"; index: number }
  | { action: "reset" };

// -- server -> client ------------------------------------------------------

export interface Occupant {
  player_id: string;
  display_name: string;
  x: number;
  y: number;
}

export interface RoomSnapshot {
  room_id: string;
  version: number;
  occupants: Occupant[];
}

export interface RoomDelta {
  room_id: string;
  version: number;
  joins: Occupant[];
  leaves: string[];
  moves: Occupant[];
}

export interface RoomInfo {
  name_key: string;
  kind: "welcome" | "tutorial" | "scenario_room";
  scenario_id: string | null;
  portals: string[];
  names: Record<string, string>; // locale -> display name
}

export interface Topology {
  rooms: Record<string, RoomInfo>;
  npcs: Record<string, { names: Record<string, string>; roles: Record<string, string> }>;
  locales: string[];
  default_locale: string;
}

export interface Profile {
  player_id: string;
  display_name: string;
  locale: string;
  completed: Record<string, OutcomeSummary>;
  global_score: number;
}

export interface OutcomeSummary {
  final_score: number;
  carbon_total: number;
  quiz_accuracy: number;
  hints_used: number;
  nodes_visited: number;
  outcome_key: string;
}

export interface EngineEvent {
  tick: number;
  kind: string;
  payload: Record<string, any>;
}

export interface ChatEvent {
  room_id: string;
  player_id: string;
  display_name: string;
  text: string;
}

export interface Hud {
  score: number;
  carbon_total: number;
  carbon_tier: string | null;
  carbon_budget_kg: number | null;
  global_score: number;
}

export interface Speaker {
  npc_id: string;
  name: string;
  role: string;
}

export interface QuestionView {
  id: string;
  text: string;
  options: { id: string; text: string }[];
  attempts_used: number;
  number: number;
  total: number;
}

export interface GridCell {
  wind_speed: number;
  zone: "open" | "protected" | "residential";
}

export interface LayoutEvaluation {
  feasible: boolean;
  violations: { code: string; cell: [number, number] | null }[];
  gross_energy: number;
  wake_loss: number;
  net_energy: number;
  total_cost: number;
  budget_remaining: number;
  env_penalty: number;
  score: number | null;
}

export interface WindFarmView {
  kind: "wind_farm";
  grid: { width: number; height: number; rows: GridCell[][] };
  budget: number;
  turbine_cost: number;
  max_turbines: number;
  pass_score: number;
  placements: [number, number][];
  evaluation: LayoutEvaluation;
}

export interface CarbonOption {
  option_id: string;
  category: string;
  unit: string;
  factor_kg: number;
  label: string;
}

export interface CarbonView {
  kind: "carbon_day";
  budget_kg: number;
  options: CarbonOption[];
  entries: { option_id: string; quantity: number }[];
  total_kg: number;
  tier: string;
}

export type ActivityView = WindFarmView | CarbonView;

export interface NodeView {
  scenario_id: string;
  title: string;
  node_id: string;
  kind: "dialogue" | "info" | "quiz" | "activity" | "terminal";
  text: string;
  speaker: Speaker | null;
  finished: boolean;
  hud: Hud;
  choices?: { id: string; text: string }[];
  question?: QuestionView;
  activity?: ActivityView;
  outcome?: { outcome_key: string; text: string };
}

export interface EngineEventsBody {
  events: EngineEvent[];
  texts: Record<string, string>;
  view: NodeView | null;
}

export type WindFarmState = {
  node_id: string;
  kind: "wind_farm";
  placements: [number, number][];
  evaluation: LayoutEvaluation;
  pass_score: number;
};

export type CarbonState = {
  node_id: string;
  kind: "carbon_day";
  entries: { option_id: string; quantity: number }[];
  total_kg: number;
  budget_kg: number;
  tier: string;
};

export type ActivityState = WindFarmState | CarbonState;

export interface ErrorBody {
  code: string;
  detail: string;
}
