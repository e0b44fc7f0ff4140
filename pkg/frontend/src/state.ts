// Client state as a pure fold over server envelopes.
//
// applyServer never mutates its input, so tests can replay captured frames
// and the controller can diff before/after. Room presence mirrors the
// server's own delta fold: leaves drop, joins append (rejoin moves to the
// end), moves update in place.

import {
  ActivityState,
  ChatEvent,
  EngineEvent,
  Envelope,
  ErrorBody,
  Hud,
  NodeView,
  Profile,
  RoomDelta,
  RoomSnapshot,
  Topology,
} from "./protocol.js";

const CHAT_KEEP = 50;
const ERROR_KEEP = 20;

export interface ClientState {
  phase: "lobby" | "world";
  playerId: string | null;
  profile: Profile | null;
  topology: Topology | null;
  room: RoomSnapshot | null;
  chat: ChatEvent[];
  view: NodeView | null;
  hud: Hud | null;
  activity: ActivityState | null;
  texts: Record<string, string>;
  log: EngineEvent[];
  errors: ErrorBody[];
  lastServerSeq: number;
  seqViolations: string[];
}

export function initialState(): ClientState {
  return {
    phase: "lobby",
    playerId: null,
    profile: null,
    topology: null,
    room: null,
    chat: [],
    view: null,
    hud: null,
    activity: null,
    texts: {},
    log: [],
    errors: [],
    lastServerSeq: -1,
    seqViolations: [],
  };
}

export function foldDelta(room: RoomSnapshot, delta: RoomDelta): RoomSnapshot {
  if (delta.room_id !== room.room_id || delta.version <= room.version) {
    return room; // stale or misrouted; the server never replays versions
  }
  let occupants = room.occupants.filter((o) => !delta.leaves.includes(o.player_id));
  for (const join of delta.joins) {
    occupants = occupants.filter((o) => o.player_id !== join.player_id);
    occupants = [...occupants, join];
  }
  occupants = occupants.map((o) => {
    const moved = delta.moves.find((m) => m.player_id === o.player_id);
    return moved ?? o;
  });
  return { room_id: room.room_id, version: delta.version, occupants };
}

export function locale(state: ClientState): string {
  return state.profile?.locale ?? state.topology?.default_locale ?? "en";
}

export function applyServer(state: ClientState, env: Envelope): ClientState {
  const next = { ...state };
  if (env.seq !== state.lastServerSeq + 1) {
    next.seqViolations = [
      ...state.seqViolations,
      `got seq ${env.seq}, expected ${state.lastServerSeq + 1}`,
    ];
  }
  next.lastServerSeq = env.seq;

  switch (env.type) {
    case "welcome":
      next.playerId = env.body.player_id;
      next.topology = env.body.topology as Topology;
      next.phase = "world";
      break;

    case "profile_update":
      next.profile = env.body as Profile;
      break;

    case "room_snapshot": {
      const snap = env.body as RoomSnapshot;
      if (state.room === null || state.room.room_id !== snap.room_id) {
        // entering a room ends any scenario session on the server
        next.view = null;
        next.hud = null;
        next.activity = null;
        next.log = [];
        next.texts = {};
      }
      next.room = snap;
      break;
    }

    case "room_delta":
      if (state.room !== null) {
        next.room = foldDelta(state.room, env.body as RoomDelta);
      }
      break;

    case "chat_event":
      next.chat = [...state.chat, env.body as ChatEvent].slice(-CHAT_KEEP);
      break;

    case "engine_events": {
      const body = env.body;
      next.log = [...state.log, ...(body.events as EngineEvent[])];
      next.texts = { ...state.texts, ...body.texts };
      if (body.view !== null) {
        const view = body.view as NodeView;
        next.view = view;
        next.hud = view.hud;
        next.activity = view.activity
          ? activityStateFromView(view)
          : null;
      }
      break;
    }

    case "activity_state":
      next.activity = env.body as ActivityState;
      break;

    case "error":
      next.errors = [...state.errors, env.body as ErrorBody].slice(-ERROR_KEEP);
      break;

    default:
      next.errors = [
        ...state.errors,
        { code: "client_unknown_type", detail: env.type },
      ].slice(-ERROR_KEEP);
  }
  return next;
}

function activityStateFromView(view: NodeView): ActivityState {
  const activity = view.activity!;
  if (activity.kind === "wind_farm") {
    return {
      node_id: view.node_id,
      kind: "wind_farm",
      placements: activity.placements,
      evaluation: activity.evaluation,
      pass_score: activity.pass_score,
    };
  }
  return {
    node_id: view.node_id,
    kind: "carbon_day",
    entries: activity.entries,
    total_kg: activity.total_kg,
    budget_kg: activity.budget_kg,
    tier: activity.tier,
  };
}
