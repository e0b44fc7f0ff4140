// Pure rendering: ClientState in, HTML string out.
//
// No DOM reads, no listeners. Interactive elements carry data-action
// attributes; the controller delegates clicks/changes off those. Keeping
// this side-effect free lets the tests assert on plain strings.

import {
  CarbonState,
  CarbonView,
  NodeView,
  Occupant,
  RoomInfo,
  WindFarmState,
  WindFarmView,
} from "./protocol.js";
import { ClientState, locale } from "./state.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function roomName(state: ClientState, roomId: string): string {
  const info: RoomInfo | undefined = state.topology?.rooms[roomId];
  if (!info) return roomId;
  const loc = locale(state);
  return info.names[loc] ?? info.names[state.topology!.default_locale] ?? roomId;
}

export function renderApp(state: ClientState): string {
  if (state.phase === "lobby") {
    return renderLobby();
  }
  return [
    '<div class="app">',
    renderHeader(state),
    '<div class="columns">',
    `<section class="room-panel">${renderRoom(state)}</section>`,
    `<section class="scenario-panel">${renderScenario(state)}</section>`,
    `<section class="chat-panel">${renderChat(state)}</section>`,
    "</div>",
    renderErrors(state),
    "</div>",
  ].join("");
}

function renderLobby(): string {
  return [
    '<div class="lobby">',
    "<h1>raise world</h1>",
    '<label>Name <input id="player-name" maxlength="64"></label>',
    '<button data-action="hello">Enter</button>',
    "</div>",
  ].join("");
}

function renderHeader(state: ClientState): string {
  const name = state.profile ? escapeHtml(state.profile.display_name) : "";
  const score = state.profile ? state.profile.global_score : 0;
  const locales = state.topology?.locales ?? [];
  const current = locale(state);
  const options = locales
    .map(
      (l) =>
        `<option value="${escapeHtml(l)}"${l === current ? " selected" : ""}>${escapeHtml(l)}</option>`,
    )
    .join("");
  return [
    "<header>",
    `<span class="who">${name}</span>`,
    `<span class="global-score">score ${score}</span>`,
    `<select data-action="set-locale">${options}</select>`,
    "</header>",
  ].join("");
}

export function renderRoom(state: ClientState): string {
  if (!state.room) {
    return "<p>Not in a room yet.</p>" + renderPortals(state, null);
  }
  const occupants = state.room.occupants
    .map(
      (o: Occupant) =>
        `<li data-player="${escapeHtml(o.player_id)}">${escapeHtml(o.display_name)} (${o.x}, ${o.y})</li>`,
    )
    .join("");
  const info = state.topology?.rooms[state.room.room_id];
  const startButton =
    info && info.scenario_id && !state.view
      ? `<button data-action="start-scenario" data-scenario="${escapeHtml(info.scenario_id)}">Start ${escapeHtml(info.scenario_id)}</button>`
      : "";
  return [
    `<h2>${escapeHtml(roomName(state, state.room.room_id))}</h2>`,
    `<ul class="occupants">${occupants}</ul>`,
    startButton,
    renderPortals(state, state.room.room_id),
  ].join("");
}

function renderPortals(state: ClientState, currentRoom: string | null): string {
  if (!state.topology) return "";
  const targets = currentRoom
    ? state.topology.rooms[currentRoom]?.portals ?? []
    : Object.keys(state.topology.rooms);
  const buttons = targets
    .map(
      (id) =>
        `<button data-action="enter-room" data-room="${escapeHtml(id)}">${escapeHtml(roomName(state, id))}</button>`,
    )
    .join("");
  return `<nav class="portals">${buttons}</nav>`;
}

export function renderScenario(state: ClientState): string {
  if (!state.view) {
    return '<p class="idle">Pick a room and start a scenario.</p>';
  }
  const view = state.view;
  const parts = [`<h2>${escapeHtml(view.title)}</h2>`, renderHud(state)];
  if (view.speaker) {
    parts.push(
      `<p class="speaker">${escapeHtml(view.speaker.name)} <em>${escapeHtml(view.speaker.role)}</em></p>`,
    );
  }
  parts.push(`<p class="node-text">${escapeHtml(view.text)}</p>`);
  if (view.question) {
    parts.push(renderQuestion(view));
  }
  if (view.choices && view.choices.length > 0) {
    const buttons = view.choices
      .map(
        (c) =>
          `<button data-action="choose" data-choice="${escapeHtml(c.id)}">${escapeHtml(c.text)}</button>`,
      )
      .join("");
    parts.push(`<div class="choices">${buttons}</div>`);
  }
  if (view.activity) {
    parts.push(renderActivity(state));
  }
  if (view.outcome) {
    parts.push(
      `<div class="outcome" data-outcome="${escapeHtml(view.outcome.outcome_key)}">${escapeHtml(view.outcome.text)}</div>`,
    );
  }
  return parts.join("");
}

function renderQuestion(view: NodeView): string {
  const q = view.question!;
  const options = q.options
    .map(
      (o) =>
        `<button data-action="answer" data-option="${escapeHtml(o.id)}">${escapeHtml(o.text)}</button>`,
    )
    .join("");
  return [
    `<div class="question" data-question="${escapeHtml(q.id)}">`,
    `<p>Question ${q.number}/${q.total}</p>`,
    `<p>${escapeHtml(q.text)}</p>`,
    `<div class="options">${options}</div>`,
    `<p class="attempts">attempts used: ${q.attempts_used}</p>`,
    "</div>",
  ].join("");
}

export function renderHud(state: ClientState): string {
  if (!state.hud) return "";
  const hud = state.hud;
  const carbon =
    hud.carbon_budget_kg !== null
      ? ` | carbon ${hud.carbon_total.toFixed(2)} / ${hud.carbon_budget_kg.toFixed(1)} kg (${hud.carbon_tier})`
      : "";
  return `<p class="hud">score ${hud.score} | total ${hud.global_score}${carbon}</p>`;
}

export function renderActivity(state: ClientState): string {
  const view = state.view!;
  if (view.activity!.kind === "wind_farm") {
    return renderWindFarm(view.activity as WindFarmView, state.activity as WindFarmState | null);
  }
  return renderCarbonDay(view.activity as CarbonView, state.activity as CarbonState | null);
}

function renderWindFarm(activity: WindFarmView, staged: WindFarmState | null): string {
  const placements = staged?.placements ?? activity.placements;
  const placed = new Set(placements.map(([x, y]) => `${x},${y}`));
  const rows = activity.grid.rows
    .map((row, y) => {
      const cells = row
        .map((cell, x) => {
          const mark = placed.has(`${x},${y}`) ? "T" : "";
          return `<td class="zone-${cell.zone}${mark ? " placed" : ""}" data-action="grid-cell" data-x="${x}" data-y="${y}">${cell.wind_speed}${mark}</td>`;
        })
        .join("");
      return `<tr>${cells}</tr>`;
    })
    .join("");
  const ev = staged?.evaluation ?? activity.evaluation;
  const violations = ev.violations
    .map((v) => `<li>${escapeHtml(v.code)}${v.cell ? ` at (${v.cell[0]}, ${v.cell[1]})` : ""}</li>`)
    .join("");
  const scoreLine =
    ev.score === null
      ? "layout not feasible"
      : `score ${ev.score.toFixed(1)} (pass at ${activity.pass_score})`;
  return [
    '<div class="activity wind-farm">',
    `<table class="grid">${rows}</table>`,
    `<p>turbines ${placements.length}/${activity.max_turbines}, budget left ${ev.budget_remaining}</p>`,
    `<p class="evaluation">${scoreLine}</p>`,
    violations ? `<ul class="violations">${violations}</ul>` : "",
    '<button data-action="grid-reset">Reset</button>',
    '<button data-action="submit-layout">Submit layout</button>',
    "</div>",
  ].join("");
}

function renderCarbonDay(activity: CarbonView, staged: CarbonState | null): string {
  const entries = staged?.entries ?? activity.entries;
  const total = staged?.total_kg ?? activity.total_kg;
  const tier = staged?.tier ?? activity.tier;
  const labels = new Map(activity.options.map((o) => [o.option_id, o.label]));
  const optionRows = activity.options
    .map(
      (o) =>
        `<li>${escapeHtml(o.label)} (${o.factor_kg} kg/${escapeHtml(o.unit)}) ` +
        `<input type="number" value="1" min="0" step="any" data-quantity-for="${escapeHtml(o.option_id)}">` +
        `<button data-action="add-entry" data-option="${escapeHtml(o.option_id)}">Add</button></li>`,
    )
    .join("");
  const entryRows = entries
    .map(
      (e, i) =>
        `<li>${escapeHtml(labels.get(e.option_id) ?? e.option_id)} x ${e.quantity} ` +
        `<button data-action="remove-entry" data-index="${i}">Remove</button></li>`,
    )
    .join("");
  return [
    '<div class="activity carbon-day">',
    `<ul class="catalog">${optionRows}</ul>`,
    `<ul class="entries">${entryRows}</ul>`,
    `<p class="ledger-total">total ${total.toFixed(3)} kg of ${activity.budget_kg.toFixed(1)} kg (${escapeHtml(tier)})</p>`,
    '<button data-action="ledger-reset">Reset</button>',
    '<button data-action="submit-ledger">Submit day</button>',
    "</div>",
  ].join("");
}

export function renderChat(state: ClientState): string {
  const lines = state.chat
    .map(
      (c) =>
        `<li><strong>${escapeHtml(c.display_name)}</strong>: ${escapeHtml(c.text)}</li>`,
    )
    .join("");
  return [
    "<h2>Chat</h2>",
    `<ul class="chat-log">${lines}</ul>`,
    '<input id="chat-input" maxlength="500">',
    '<button data-action="chat">Send</button>',
  ].join("");
}

function renderErrors(state: ClientState): string {
  if (state.errors.length === 0 && state.seqViolations.length === 0) return "";
  const items = [
    ...state.seqViolations.map((v) => `<li class="seq">${escapeHtml(v)}</li>`),
    ...state.errors.map(
      (e) => `<li>${escapeHtml(e.code)}: ${escapeHtml(e.detail)}</li>`,
    ),
  ].join("");
  return `<ul class="errors">${items}</ul>`;
}
