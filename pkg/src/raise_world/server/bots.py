"""Headless protocol bots for soak-testing a live server.

Each bot runs lockstep: send one request, keep reading (folding broadcasts
as they arrive) until the matching reply shows up, then pick the next
action.  Along the way it verifies the delivery contract:

- server seq per connection is 0,1,2,... with no gap (nothing lost),
- room traffic only arrives for the room the bot is currently in,
- folding room_deltas over the last snapshot reproduces every fresh
  snapshot the server hands back (sync_room checkpoints).

Violations are collected, not raised, so a soak run reports everything.
"""

from __future__ import annotations

import asyncio
import json
import random
from dataclasses import dataclass, field

from websockets.asyncio.client import connect

from .rooms import RoomSnapshot, apply_delta, delta_from_json, snapshot_from_json

REPLY_TIMEOUT = 15.0


@dataclass
class BotReport:
    name: str
    actions: int = 0
    received: int = 0
    fold_checks: int = 0
    sessions_finished: int = 0
    violations: list[str] = field(default_factory=list)

    def flag(self, text: str) -> None:
        self.violations.append(f"{self.name}: {text}")


class SoakBot:
    def __init__(self, name: str, url: str, seed: int, actions: int):
        self.name = name
        self.url = url
        self.rng = random.Random(seed)
        self.budget = actions
        self.report = BotReport(name=name)
        self.ws = None
        self.next_client_seq = 0
        self.expected_seq = 0
        self.player_id = None
        self.topology: dict = {}
        self.room: str | None = None
        self.pending_room: str | None = None
        self.snapshot: RoomSnapshot | None = None
        self.view: dict | None = None
        self.activity_state: dict | None = None
        self.profile: dict | None = None
        self.chat_times: list[float] = []

    # -- transport ------------------------------------------------------------

    async def send(self, msg_type: str, body: dict) -> None:
        envelope = {"seq": self.next_client_seq, "type": msg_type, "body": body}
        self.next_client_seq += 1
        await self.ws.send(json.dumps(envelope))

    async def recv(self) -> dict:
        raw = await asyncio.wait_for(self.ws.recv(), REPLY_TIMEOUT)
        envelope = json.loads(raw)
        self.report.received += 1
        if envelope.get("seq") != self.expected_seq:
            self.report.flag(f"seq gap: got {envelope.get('seq')}, "
                             f"expected {self.expected_seq}")
        self.expected_seq = envelope.get("seq", self.expected_seq) + 1
        self._track(envelope)
        return envelope

    async def request(self, msg_type: str, body: dict, reply_matches) -> dict | None:
        """Send and read until the reply predicate matches; folds broadcasts."""
        await self.send(msg_type, body)
        for _ in range(1000):
            envelope = await self.recv()
            if envelope["type"] == "error":
                self.report.flag(f"{msg_type} answered with error "
                                 f"{envelope['body'].get('code')}: "
                                 f"{envelope['body'].get('detail')}")
                return None
            if reply_matches(envelope):
                return envelope
        self.report.flag(f"no reply to {msg_type} within 1000 messages")
        return None

    # -- incoming bookkeeping ----------------------------------------------

    def _track(self, envelope: dict) -> None:
        msg_type, body = envelope.get("type"), envelope.get("body", {})
        if msg_type == "welcome":
            self.player_id = body["player_id"]
            self.topology = body["topology"]
        elif msg_type == "profile_update":
            self.profile = body
        elif msg_type == "room_snapshot":
            snapshot = snapshot_from_json(body)
            if snapshot.room_id == self.pending_room:
                self.room = self.pending_room
                self.pending_room = None
                self.snapshot = snapshot
            elif snapshot.room_id == self.room:
                # sync_room checkpoint: fold must already be at this state
                self.report.fold_checks += 1
                if self.snapshot != snapshot:
                    self.report.flag(
                        f"fold mismatch in {self.room} at version {snapshot.version}: "
                        f"folded {self.snapshot.to_json()}, fresh {snapshot.to_json()}")
                self.snapshot = snapshot
            else:
                self.report.flag(f"snapshot for {snapshot.room_id!r} while in "
                                 f"{self.room!r} (pending {self.pending_room!r})")
        elif msg_type == "room_delta":
            # queued old-room deltas always precede the next snapshot, so by
            # promotion time the stream holds only current-room deltas
            if self.room is None or body["room_id"] != self.room or self.snapshot is None:
                self.report.flag(f"delta for {body['room_id']!r} while in {self.room!r}")
                return
            try:
                self.snapshot = apply_delta(self.snapshot, delta_from_json(body))
            except Exception as exc:
                self.report.flag(f"delta fold failed in {self.room}: {exc}")
        elif msg_type == "chat_event":
            if body.get("room_id") != self.room:
                self.report.flag(f"chat for {body.get('room_id')!r} while in {self.room!r}")
        elif msg_type == "engine_events":
            self.view = body.get("view")
            self.activity_state = None
            if self.view and self.view.get("finished"):
                self.report.sessions_finished += 1
        elif msg_type == "activity_state":
            self.activity_state = body

    # -- actions ---------------------------------------------------------------

    async def enter_room(self, room_id: str) -> None:
        self.pending_room = room_id
        old_room, old_snapshot = self.room, self.snapshot
        self.view = None
        got = await self.request("enter_room", {"room_id": room_id},
                                 lambda e: e["type"] == "room_snapshot"
                                 and e["body"]["room_id"] == room_id)
        if got is None:
            self.pending_room = None
            self.room, self.snapshot = old_room, old_snapshot

    async def checkpoint(self) -> None:
        await self.request("sync_room", {},
                           lambda e: e["type"] == "room_snapshot"
                           and e["body"]["room_id"] == self.room)

    async def move(self) -> None:
        x, y = self.rng.randint(-20, 20), self.rng.randint(-20, 20)
        await self.request("move", {"x": x, "y": y},
                           lambda e: e["type"] == "room_delta"
                           and any(m["player_id"] == self.player_id
                                   for m in e["body"]["moves"]))

    def _chat_would_flood(self) -> bool:
        # stay a hair under the server's 5-per-second window
        now = asyncio.get_running_loop().time()
        self.chat_times = [t for t in self.chat_times if now - t < 1.2]
        return len(self.chat_times) >= 4

    async def chat(self) -> None:
        self.chat_times.append(asyncio.get_running_loop().time())
        text = f"hi from {self.name} #{self.report.actions}"
        await self.request("chat", {"text": text},
                           lambda e: e["type"] == "chat_event"
                           and e["body"].get("player_id") == self.player_id
                           and e["body"].get("text") == text)

    async def start_scenario(self) -> None:
        scenario_id = self.topology["rooms"][self.room]["scenario_id"]
        await self.request("start_scenario",
                           {"scenario_id": scenario_id,
                            "seed": self.rng.getrandbits(64)},
                           lambda e: e["type"] == "engine_events")

    async def engine_step(self) -> None:
        view = self.view
        if view is None or view.get("finished"):
            self.view = None
            return
        kind = view.get("kind")
        if kind in ("dialogue", "info"):
            choices = view.get("choices") or []
            if not choices:
                self.report.flag(f"no available choices at {view.get('node_id')}")
                self.view = None
                return
            choice = self.rng.choice(choices)
            await self.request("input", {"kind": "choose", "node_id": view["node_id"],
                                         "choice_id": choice["id"]},
                               lambda e: e["type"] == "engine_events")
        elif kind == "quiz":
            question = view["question"]
            option = self.rng.choice(question["options"])
            await self.request("input", {"kind": "answer", "question_id": question["id"],
                                         "option_id": option["id"]},
                               lambda e: e["type"] == "engine_events")
        elif kind == "activity":
            await self._play_activity(view)
        else:
            self.view = None

    async def _play_activity(self, view: dict) -> None:
        activity = view["activity"]
        node_id = view["node_id"]
        if activity["kind"] == "wind_farm":
            grid = activity["grid"]
            open_cells = [(x, y)
                          for y, row in enumerate(grid["rows"])
                          for x, cell in enumerate(row) if cell["zone"] != "protected"]
            budget_slots = int(activity["budget"] // activity["turbine_cost"])
            limit = min(activity["max_turbines"], budget_slots, len(open_cells))
            count = self.rng.randint(0, max(limit, 0))
            for x, y in self.rng.sample(open_cells, count):
                await self.request("activity_edit",
                                   {"action": "place", "x": x, "y": y},
                                   lambda e: e["type"] == "activity_state")
            placements = (self.activity_state or {}).get("placements", [])
            await self.request("input", {"kind": "activity_result", "node_id": node_id,
                                         "result": {"placements": placements}},
                               lambda e: e["type"] == "engine_events")
        else:
            options = activity["options"]
            for _ in range(self.rng.randint(0, 3)):
                option = self.rng.choice(options)
                await self.request("activity_edit",
                                   {"action": "add_entry",
                                    "option_id": option["option_id"],
                                    "quantity": self.rng.randint(0, 20)},
                                   lambda e: e["type"] == "activity_state")
            entries = (self.activity_state or {}).get("entries", [])
            await self.request("input", {"kind": "activity_result", "node_id": node_id,
                                         "result": {"entries": entries}},
                               lambda e: e["type"] == "engine_events")

    # -- main loop -----------------------------------------------------------

    async def run(self) -> BotReport:
        async with connect(self.url, ping_interval=None) as ws:
            self.ws = ws
            got = await self.request("hello", {"display_name": self.name, "locale": "en"},
                                     lambda e: e["type"] == "welcome")
            if got is None:
                return self.report
            welcome_room = next(rid for rid, r in self.topology["rooms"].items()
                                if r["kind"] == "welcome")
            await self.enter_room(welcome_room)
            while self.report.actions < self.budget:
                self.report.actions += 1
                await self._one_action()
            await self.checkpoint()
        return self.report

    async def _one_action(self) -> None:
        if self.view is not None and not self.view.get("finished"):
            # mostly play the scenario out, sometimes wander off mid-session
            if self.rng.random() < 0.9:
                await self.engine_step()
                return
        room_info = self.topology["rooms"][self.room]
        actions = ["move", "move", "chat", "checkpoint", "portal"]
        if room_info.get("scenario_id") and self.view is None:
            actions += ["start", "start", "start"]
        action = self.rng.choice(actions)
        if action == "chat" and self._chat_would_flood():
            action = "move"
        if action == "move":
            await self.move()
        elif action == "chat":
            await self.chat()
        elif action == "checkpoint":
            await self.checkpoint()
        elif action == "portal":
            target = self.rng.choice(room_info["portals"])
            self.view = None
            await self.enter_room(target)
        elif action == "start":
            await self.start_scenario()


async def run_soak(url: str, bots: int, actions_each: int, seed: int = 0) -> list[BotReport]:
    tasks = [SoakBot(f"bot{i:02d}", url, seed * 1000 + i, actions_each).run()
             for i in range(bots)]
    return list(await asyncio.gather(*tasks))
