"""Authoritative world state and the message router.

This module is transport-free: handle_message takes one decoded client
envelope and returns the complete list of outbound envelopes (per target
connection, already sequence-stamped).  The websocket layer only moves
bytes.  That split keeps the whole protocol testable in-process.

Clients never compute game state.  Engine advances, room presence, chat
fan-out, and activity editing all happen here; clients get snapshots,
deltas, resolved texts, and a per-node view block to render.
"""

from __future__ import annotations

import re
import time
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable

import random

from .. import carbon as carbon_mod
from .. import engine, windfarm
from ..activities import ActivityRegistry, parse_ledger_result
from ..content import ContentPack, resolve_text
from ..errors import (
    NoActiveSession,
    NotAdjacent,
    RaiseWorldError,
    RateLimited,
    UnknownKey,
    UnknownRoom,
    UnknownScenario,
    UnsupportedLocale,
)
from ..scenario import ScenarioDocument
from .rooms import RoomState, WorldTopology
from .store import PlayerProfile, SessionRecord, Store, record_outcome


class BadMessage(RaiseWorldError):
    """Request body malformed at the protocol level (not a domain failure)."""

    code = "bad_message"

CHAT_WINDOW_SECONDS = 1.0
CHAT_WINDOW_LIMIT = 5
MAX_CHAT_LENGTH = 500
MAX_NAME_LENGTH = 64
MAX_COORD = 10_000

CLIENT_TYPES = ("hello", "enter_room", "start_scenario", "input", "chat", "move",
                "sync_room", "activity_edit", "set_locale")


def _utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def player_id_for(display_name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "_", display_name.lower()).strip("_")
    return slug or "player"


@dataclass
class ActiveSession:
    session_id: str
    doc: ScenarioDocument
    state: engine.EngineState
    recorder: object  # SessionRecorder
    carbon_budget_kg: float | None
    layout: windfarm.FarmLayout | None = None
    entries: list[dict] = field(default_factory=list)


@dataclass
class Connection:
    conn_id: int
    player_id: str | None = None
    room_id: str | None = None
    session: ActiveSession | None = None
    last_client_seq: int = -1
    out_seq: int = 0
    chat_times: deque = field(default_factory=deque)


Outbound = tuple[int, dict]


class World:
    def __init__(self, pack: ContentPack, topology: WorldTopology, store: Store,
                 seed: int = 0, clock: Callable[[], float] = time.monotonic,
                 wall: Callable[[], str] = _utc_now_iso, audit: bool = False):
        self.pack = pack
        self.topology = topology
        self.store = store
        self.registry = ActivityRegistry(catalogs=pack.catalogs)
        self.rooms = {room_id: RoomState(info) for room_id, info in topology.rooms.items()}
        self.clock = clock
        self.wall = wall
        self.rng = random.Random(seed)
        self.connections: dict[int, Connection] = {}
        self.profiles: dict[str, PlayerProfile] = {}
        self._next_conn_id = 1
        self._next_session = 1
        self.audit = audit
        self.audit_log: dict[tuple[str, int], dict] = {}
        if audit:
            for room_id, room in self.rooms.items():
                self.audit_log[(room_id, 0)] = room.snapshot().to_json()

    # -- connection lifecycle ---------------------------------------------

    def connect(self) -> Connection:
        conn = Connection(conn_id=self._next_conn_id)
        self._next_conn_id += 1
        self.connections[conn.conn_id] = conn
        return conn

    def disconnect(self, conn: Connection) -> list[Outbound]:
        out: list[Outbound] = []
        self._abandon_session(conn)
        if conn.room_id is not None:
            out.extend(self._leave_room(conn))
        self.connections.pop(conn.conn_id, None)
        return out

    def shutdown(self) -> None:
        """Flush every open session record; safe to call more than once."""
        for conn in list(self.connections.values()):
            self._abandon_session(conn)

    # -- outbound plumbing ---------------------------------------------------

    def _send(self, conn: Connection, msg_type: str, body: dict,
              out: list[Outbound]) -> None:
        envelope = {"seq": conn.out_seq, "type": msg_type, "body": body}
        conn.out_seq += 1
        out.append((conn.conn_id, envelope))

    def _error(self, conn: Connection, code: str, detail: str,
               out: list[Outbound]) -> list[Outbound]:
        self._send(conn, "error", {"code": code, "detail": detail}, out)
        return out

    def _room_occupant_conns(self, room_id: str) -> list[Connection]:
        room = self.rooms[room_id]
        by_player = {c.player_id: c for c in self.connections.values()
                     if c.room_id == room_id}
        return [by_player[pid] for pid in room.occupants if pid in by_player]

    def _broadcast(self, room_id: str, msg_type: str, body: dict,
                   out: list[Outbound], exclude: int | None = None) -> None:
        for conn in self._room_occupant_conns(room_id):
            if conn.conn_id != exclude:
                self._send(conn, msg_type, body, out)

    def _bump_audit(self, room_id: str) -> None:
        if self.audit:
            room = self.rooms[room_id]
            self.audit_log[(room_id, room.version)] = room.snapshot().to_json()

    # -- text helpers ---------------------------------------------------------

    def _text(self, key: str, locale: str) -> str:
        try:
            return resolve_text(self.pack, key, locale)
        except UnknownKey:
            return key  # content is validated at boot; fall back to the key itself

    def _texts_for_locales(self, key: str) -> dict[str, str]:
        return {locale: self._text(key, locale) for locale in self.pack.locales}

    def topology_json(self) -> dict:
        rooms = {}
        for room_id, info in self.topology.rooms.items():
            rooms[room_id] = {
                "name_key": info.name_key,
                "kind": info.kind,
                "scenario_id": info.scenario_id,
                "portals": list(info.portals),
                "names": self._texts_for_locales(info.name_key),
            }
        npcs = {}
        for npc_id, npc in self.pack.npcs.items():
            npcs[npc_id] = {
                "names": self._texts_for_locales(npc.name_key),
                "roles": self._texts_for_locales(npc.role_key),
            }
        return {
            "rooms": rooms,
            "npcs": npcs,
            "locales": list(self.pack.locales),
            "default_locale": self.pack.default_locale,
        }

    # -- profiles ----------------------------------------------------------

    def _profile(self, conn: Connection) -> PlayerProfile:
        return self.profiles[conn.player_id]

    def _save_profile(self, profile: PlayerProfile) -> None:
        self.profiles[profile.player_id] = profile
        self.store.save_profile(profile)

    # -- message entry point ---------------------------------------------------

    def handle_message(self, conn: Connection, msg) -> list[Outbound]:
        out: list[Outbound] = []
        if (not isinstance(msg, dict) or set(msg) != {"seq", "type", "body"}
                or isinstance(msg["seq"], bool) or not isinstance(msg["seq"], int)
                or not isinstance(msg["type"], str) or not isinstance(msg["body"], dict)):
            return self._error(conn, "bad_message",
                               "envelope must be {seq, type, body}", out)
        if msg["seq"] <= conn.last_client_seq:
            return self._error(conn, "bad_seq",
                               f"seq {msg['seq']} not above {conn.last_client_seq}", out)
        conn.last_client_seq = msg["seq"]
        msg_type, body = msg["type"], msg["body"]
        if msg_type not in CLIENT_TYPES:
            return self._error(conn, "bad_message", f"unknown type {msg_type!r}", out)
        if msg_type != "hello" and conn.player_id is None:
            return self._error(conn, "not_authenticated", "hello must come first", out)
        handler = getattr(self, f"_on_{msg_type}")
        try:
            handler(conn, body, out)
        except RaiseWorldError as exc:
            return self._error(conn, exc.code, str(exc), out)
        return out

    # -- handlers -------------------------------------------------------------

    def _on_hello(self, conn: Connection, body: dict, out: list[Outbound]) -> None:
        if conn.player_id is not None:
            raise BadMessage("connection already identified")
        if set(body) != {"display_name", "locale"}:
            raise BadMessage("hello needs display_name and locale")
        name, locale = body["display_name"], body["locale"]
        if not isinstance(name, str) or not 1 <= len(name) <= MAX_NAME_LENGTH:
            raise BadMessage(f"display_name must be 1..{MAX_NAME_LENGTH} characters")
        if locale not in self.pack.locales:
            raise UnsupportedLocale(f"{locale!r} not in {self.pack.locales}")
        player_id = player_id_for(name)
        if any(c.player_id == player_id for c in self.connections.values()
               if c.conn_id != conn.conn_id):
            raise BadMessage(f"{player_id!r} is already connected")
        if self.store.has_profile(player_id):
            stored = self.store.load_profile(player_id)
            profile = PlayerProfile(player_id, name, locale, stored.completed)
        else:
            profile = PlayerProfile(player_id, name, locale)
        self._save_profile(profile)
        conn.player_id = player_id
        self._send(conn, "welcome",
                   {"player_id": player_id, "topology": self.topology_json()}, out)
        self._send(conn, "profile_update", profile.to_json(), out)

    def _on_enter_room(self, conn: Connection, body: dict, out: list[Outbound]) -> None:
        if set(body) != {"room_id"}:
            raise BadMessage("enter_room needs a room_id")
        target = self.topology.room(body["room_id"]).room_id
        if conn.room_id is None:
            if target != self.topology.welcome_room_id:
                raise NotAdjacent("players spawn in the welcome room")
        else:
            if target not in self.topology.rooms[conn.room_id].portals:
                raise NotAdjacent(f"no portal from {conn.room_id!r} to {target!r}")
        self._abandon_session(conn)
        if conn.room_id is not None:
            out.extend(self._leave_room(conn))
        profile = self._profile(conn)
        room = self.rooms[target]
        conn.room_id = target
        delta = room.join(conn.player_id, profile.display_name)
        self._bump_audit(target)
        body_json = delta.to_json()
        self._broadcast(target, "room_delta", body_json, out, exclude=conn.conn_id)
        self._send(conn, "room_snapshot", room.snapshot().to_json(), out)

    def _leave_room(self, conn: Connection) -> list[Outbound]:
        out: list[Outbound] = []
        room = self.rooms[conn.room_id]
        delta = room.leave(conn.player_id)
        self._bump_audit(conn.room_id)
        old_room = conn.room_id
        conn.room_id = None
        self._broadcast(old_room, "room_delta", delta.to_json(), out)
        return out

    def _on_move(self, conn: Connection, body: dict, out: list[Outbound]) -> None:
        if conn.room_id is None:
            raise UnknownRoom("not in a room")
        if set(body) != {"x", "y"}:
            raise BadMessage("move needs x and y")
        x, y = body["x"], body["y"]
        for v in (x, y):
            if isinstance(v, bool) or not isinstance(v, int) or abs(v) > MAX_COORD:
                raise BadMessage(f"coordinates must be integers within +-{MAX_COORD}")
        delta = self.rooms[conn.room_id].move(conn.player_id, x, y)
        self._bump_audit(conn.room_id)
        # the mover folds the same delta everyone else sees
        self._broadcast(conn.room_id, "room_delta", delta.to_json(), out)

    def _on_sync_room(self, conn: Connection, body: dict, out: list[Outbound]) -> None:
        if conn.room_id is None:
            raise UnknownRoom("not in a room")
        if body:
            raise BadMessage("sync_room takes no fields")
        self._send(conn, "room_snapshot", self.rooms[conn.room_id].snapshot().to_json(), out)

    def _on_chat(self, conn: Connection, body: dict, out: list[Outbound]) -> None:
        if conn.room_id is None:
            raise UnknownRoom("not in a room")
        if set(body) != {"text"} or not isinstance(body["text"], str):
            raise BadMessage("chat needs a text string")
        text = body["text"]
        if not 1 <= len(text) <= MAX_CHAT_LENGTH:
            raise BadMessage(f"chat text must be 1..{MAX_CHAT_LENGTH} characters")
        now = self.clock()
        while conn.chat_times and now - conn.chat_times[0] >= CHAT_WINDOW_SECONDS:
            conn.chat_times.popleft()
        if len(conn.chat_times) >= CHAT_WINDOW_LIMIT:
            raise RateLimited(f"more than {CHAT_WINDOW_LIMIT} chat messages per "
                              f"{CHAT_WINDOW_SECONDS:.0f}s")
        conn.chat_times.append(now)
        profile = self._profile(conn)
        event = {"room_id": conn.room_id, "player_id": conn.player_id,
                 "display_name": profile.display_name, "text": text}
        self._broadcast(conn.room_id, "chat_event", event, out)

    def _on_set_locale(self, conn: Connection, body: dict, out: list[Outbound]) -> None:
        if set(body) != {"locale"}:
            raise BadMessage("set_locale needs a locale")
        locale = body["locale"]
        if locale not in self.pack.locales:
            raise UnsupportedLocale(f"{locale!r} not in {self.pack.locales}")
        profile = self._profile(conn)
        self._save_profile(PlayerProfile(profile.player_id, profile.display_name,
                                         locale, profile.completed))
        self._send(conn, "profile_update", self._profile(conn).to_json(), out)
        if conn.session is not None:
            self._send_engine_events(conn, [], out)

    # -- scenario sessions ----------------------------------------------------

    def _on_start_scenario(self, conn: Connection, body: dict, out: list[Outbound]) -> None:
        if conn.room_id is None:
            raise UnknownRoom("not in a room")
        if set(body) - {"scenario_id", "seed"} or "scenario_id" not in body:
            raise BadMessage("start_scenario needs scenario_id and optional seed")
        scenario_id = body["scenario_id"]
        room_info = self.topology.rooms[conn.room_id]
        if room_info.scenario_id != scenario_id:
            raise UnknownScenario(f"room {conn.room_id!r} does not host {scenario_id!r}")
        seed = body.get("seed")
        if seed is None:
            seed = self.rng.getrandbits(64)
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise BadMessage("seed must be a 64-bit unsigned integer")
        self._abandon_session(conn)
        doc = self.pack.scenario(scenario_id)
        profile = self._profile(conn)
        state, events = engine.start_session(doc, seed, profile.locale,
                                             self.registry, skip_validation=True)
        session_id = f"s{self._next_session:06d}-{self.rng.getrandbits(32):08x}"
        self._next_session += 1
        record = SessionRecord(session_id=session_id, player_id=conn.player_id,
                               scenario_id=scenario_id, seed=seed,
                               locale=profile.locale, started_wall=self.wall())
        recorder = self.store.open_recorder(record)
        recorder.add_events(events)
        conn.session = ActiveSession(
            session_id=session_id, doc=doc, state=state, recorder=recorder,
            carbon_budget_kg=self._scenario_carbon_budget(doc))
        self._send_engine_events(conn, events, out)
        if state.status == "finished":
            self._finish_session(conn, out)

    def _scenario_carbon_budget(self, doc: ScenarioDocument) -> float | None:
        for node in doc.nodes.values():
            if node.activity_ref is not None and node.activity_ref.kind == "carbon_day":
                _, budget = self.registry.carbon_setup(node.activity_ref)
                return budget
        return None

    def _abandon_session(self, conn: Connection) -> None:
        session = conn.session
        if session is None:
            return
        conn.session = None
        if not session.recorder.closed:
            session.recorder.finish("abandoned", None, self.wall())

    def _finish_session(self, conn: Connection, out: list[Outbound]) -> None:
        session = conn.session
        conn.session = None
        summary = engine.summarize(session.state, session.recorder.record.events)
        session.recorder.finish("finished", summary.to_json(), self.wall())
        profile = record_outcome(self._profile(conn), session.doc.id, summary)
        self._save_profile(profile)
        self._send(conn, "profile_update", profile.to_json(), out)

    def _on_input(self, conn: Connection, body: dict, out: list[Outbound]) -> None:
        session = conn.session
        if session is None:
            raise NoActiveSession("no scenario session is active")
        try:
            player_input = engine.input_from_json(body)
        except ValueError as exc:
            raise BadMessage(str(exc)) from exc
        try:
            state, events = engine.advance(session.state, session.doc, player_input,
                                           self.registry)
        except RaiseWorldError as exc:
            self._error(conn, "engine_error", f"{exc.code}: {exc}", out)
            return
        session.state = state
        session.layout = None
        session.entries = []
        session.recorder.add_input(engine.input_to_json(player_input))
        session.recorder.add_events(events)
        self._send_engine_events(conn, events, out)
        if state.status == "finished":
            self._finish_session(conn, out)

    # -- activity staging -------------------------------------------------

    def _on_activity_edit(self, conn: Connection, body: dict, out: list[Outbound]) -> None:
        session = conn.session
        if session is None:
            raise NoActiveSession("no scenario session is active")
        node = session.doc.nodes[session.state.current_node]
        if node.kind != "activity":
            raise NoActiveSession("current node is not an activity")
        if node.activity_ref.kind == "wind_farm":
            self._edit_windfarm(conn, session, node, body, out)
        else:
            self._edit_carbon(conn, session, node, body, out)

    def _edit_windfarm(self, conn, session, node, body: dict, out: list[Outbound]) -> None:
        allowed = {"action", "x", "y"}
        if set(body) - allowed or body.get("action") not in ("place", "remove", "reset"):
            raise BadMessage("activity_edit needs action place|remove|reset")
        challenge = self.registry.windfarm_challenge(node.activity_ref)
        layout = session.layout or windfarm.FarmLayout(frozenset())
        if body["action"] == "reset":
            layout = windfarm.FarmLayout(frozenset())
        else:
            if not all(isinstance(body.get(k), int) and not isinstance(body.get(k), bool)
                       for k in ("x", "y")):
                raise BadMessage("place/remove need integer x and y")
            layout = windfarm.apply_action(challenge, layout, body["action"],
                                           body["x"], body["y"])
        session.layout = layout
        self._send_windfarm_state(conn, session, node, challenge, out)

    def _send_windfarm_state(self, conn, session, node, challenge, out) -> None:
        layout = session.layout or windfarm.FarmLayout(frozenset())
        evaluation = windfarm.evaluate_layout(challenge, layout)
        self._send(conn, "activity_state", {
            "node_id": node.id,
            "kind": "wind_farm",
            "placements": [[x, y] for x, y in sorted(layout.placements)],
            "evaluation": evaluation.to_dict(),
            "pass_score": node.activity_ref.params["pass_score"],
        }, out)

    def _edit_carbon(self, conn, session, node, body: dict, out: list[Outbound]) -> None:
        action = body.get("action")
        if action == "add_entry":
            if set(body) != {"action", "option_id", "quantity"}:
                raise BadMessage("add_entry needs option_id and quantity")
            option_id, quantity = body["option_id"], body["quantity"]
            if isinstance(quantity, bool) or not isinstance(quantity, (int, float)):
                raise BadMessage("quantity must be a number")
            catalog, _ = self.registry.carbon_setup(node.activity_ref)
            catalog.find(option_id)  # raises UnknownOption early
            if quantity < 0:
                raise BadMessage("quantity must be >= 0")
            session.entries.append({"option_id": option_id, "quantity": quantity})
        elif action == "remove_entry":
            if set(body) != {"action", "index"}:
                raise BadMessage("remove_entry needs an index")
            index = body["index"]
            if (isinstance(index, bool) or not isinstance(index, int)
                    or not 0 <= index < len(session.entries)):
                raise BadMessage("index out of range")
            session.entries.pop(index)
        elif action == "reset":
            if set(body) != {"action"}:
                raise BadMessage("reset takes no fields")
            session.entries = []
        else:
            raise BadMessage("activity_edit needs action add_entry|remove_entry|reset")
        self._send_carbon_state(conn, session, node, out)

    def _send_carbon_state(self, conn, session, node, out) -> None:
        catalog, budget = self.registry.carbon_setup(node.activity_ref)
        ledger = parse_ledger_result({"entries": session.entries}, catalog)
        assessment = carbon_mod.assess_footprint(ledger.total, budget)
        self._send(conn, "activity_state", {
            "node_id": node.id,
            "kind": "carbon_day",
            "entries": list(session.entries),
            "total_kg": ledger.total,
            "budget_kg": budget,
            "tier": assessment.tier,
        }, out)

    # -- engine_events rendering -----------------------------------------------

    def _send_engine_events(self, conn: Connection, events, out: list[Outbound]) -> None:
        session = conn.session
        locale = self._profile(conn).locale
        texts = {}
        for event in events:
            key = event.payload.get("text_key") or event.payload.get("outcome_key")
            if key:
                texts[key] = self._text(key, locale)
        body = {
            "events": [event.to_json() for event in events],
            "texts": texts,
            "view": self._view(conn, session, locale) if session else None,
        }
        self._send(conn, "engine_events", body, out)

    def _view(self, conn: Connection, session: ActiveSession, locale: str) -> dict:
        doc, state = session.doc, session.state
        node = doc.nodes[state.current_node]
        view: dict = {
            "scenario_id": doc.id,
            "title": self._text(doc.title_key, locale),
            "node_id": node.id,
            "kind": node.kind,
            "text": self._text(node.text_key, locale),
            "speaker": None,
            "finished": state.status == "finished",
            "hud": self._hud(conn, session),
        }
        if node.speaker is not None:
            npc = self.pack.npcs[node.speaker]
            view["speaker"] = {
                "npc_id": node.speaker,
                "name": self._text(npc.name_key, locale),
                "role": self._text(npc.role_key, locale),
            }
        if node.kind in ("dialogue", "info"):
            view["choices"] = [
                {"id": choice.id, "text": self._text(choice.text_key, locale)}
                for choice in node.choices
                if engine.eval_condition(choice.condition, state.variables)
            ]
        elif node.kind == "quiz":
            question = node.questions[state.quiz_cursor]
            view["question"] = {
                "id": question.id,
                "text": self._text(question.text_key, locale),
                "options": [{"id": o.id, "text": self._text(o.text_key, locale)}
                            for o in question.options],
                "attempts_used": state.quiz_attempts.get(question.id, 0),
                "number": state.quiz_cursor + 1,
                "total": len(node.questions),
            }
        elif node.kind == "activity":
            view["activity"] = self._activity_view(session, node, locale)
        elif node.kind == "terminal":
            view["outcome"] = {
                "outcome_key": node.outcome_key,
                "text": self._text(node.outcome_key, locale),
            }
        return view

    def _activity_view(self, session: ActiveSession, node, locale: str) -> dict:
        ref = node.activity_ref
        if ref.kind == "wind_farm":
            challenge = self.registry.windfarm_challenge(ref)
            layout = session.layout or windfarm.FarmLayout(frozenset())
            evaluation = windfarm.evaluate_layout(challenge, layout)
            return {
                "kind": "wind_farm",
                "grid": windfarm.challenge_to_grid_json(challenge),
                "budget": challenge.budget,
                "turbine_cost": challenge.turbine_cost,
                "max_turbines": challenge.max_turbines,
                "pass_score": ref.params["pass_score"],
                "placements": [[x, y] for x, y in sorted(layout.placements)],
                "evaluation": evaluation.to_dict(),
            }
        catalog, budget = self.registry.carbon_setup(ref)
        ledger = parse_ledger_result({"entries": session.entries}, catalog)
        assessment = carbon_mod.assess_footprint(ledger.total, budget)
        return {
            "kind": "carbon_day",
            "budget_kg": budget,
            "options": [
                {"option_id": o.option_id, "category": category, "unit": o.unit,
                 "factor_kg": o.factor, "label": self._text(o.label_key, locale)}
                for category, options in catalog.categories.items()
                for o in options
            ],
            "entries": list(session.entries),
            "total_kg": ledger.total,
            "tier": assessment.tier,
        }

    def _hud(self, conn: Connection, session: ActiveSession) -> dict:
        state = session.state
        hud = {
            "score": state.variables["score"],
            "carbon_total": state.carbon_ledger_total,
            "carbon_tier": None,
            "carbon_budget_kg": session.carbon_budget_kg,
            "global_score": self._profile(conn).global_score,
        }
        if session.carbon_budget_kg is not None:
            hud["carbon_tier"] = carbon_mod.assess_footprint(
                max(state.carbon_ledger_total, 0.0), session.carbon_budget_kg).tier
        return hud
