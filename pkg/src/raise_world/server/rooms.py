"""Room topology and avatar presence.

Presence sync is snapshot + delta: a client entering a room receives a full
room_snapshot and then folds room_delta messages.  Every room mutation bumps
the room's version counter, and both snapshots and deltas carry it, so a
fold can always be checked against a fresh snapshot and stale deltas are
detectable.  The fold itself is a pure function (apply_delta).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..content import ContentPack
from ..errors import SchemaError, StaleDelta, UnknownRoom

ROOM_KINDS = ("welcome", "tutorial", "scenario_room")


@dataclass(frozen=True)
class RoomInfo:
    room_id: str
    name_key: str
    kind: str
    scenario_id: str | None
    portals: tuple[str, ...]


@dataclass(frozen=True)
class WorldTopology:
    rooms: dict[str, RoomInfo]

    def room(self, room_id: str) -> RoomInfo:
        if room_id not in self.rooms:
            raise UnknownRoom(f"no room {room_id!r}")
        return self.rooms[room_id]

    @property
    def welcome_room_id(self) -> str:
        return next(r.room_id for r in self.rooms.values() if r.kind == "welcome")


def parse_topology(raw: dict, pack: ContentPack | None = None) -> WorldTopology:
    """Strict world.json parse; with a pack, scenario references are checked."""
    if not isinstance(raw, dict) or set(raw) != {"rooms"}:
        raise SchemaError("topology needs exactly a rooms map", path="world")
    if not isinstance(raw["rooms"], dict) or not raw["rooms"]:
        raise SchemaError("rooms must be a non-empty map", path="world.rooms")
    rooms: dict[str, RoomInfo] = {}
    for room_id, info in raw["rooms"].items():
        path = f"world.rooms.{room_id}"
        if not isinstance(info, dict):
            raise SchemaError("room must be an object", path=path)
        allowed = {"name_key", "kind", "scenario_id", "portals"}
        extra = set(info) - allowed
        if extra:
            raise SchemaError(f"unknown field {sorted(extra)[0]!r}", path=path)
        kind = info.get("kind")
        if kind not in ROOM_KINDS:
            raise SchemaError(f"kind must be one of {ROOM_KINDS}", path=f"{path}.kind")
        name_key = info.get("name_key")
        if not isinstance(name_key, str) or not name_key:
            raise SchemaError("name_key must be a non-empty string", path=f"{path}.name_key")
        portals = info.get("portals", [])
        if (not isinstance(portals, list)
                or any(not isinstance(p, str) for p in portals)
                or len(set(portals)) != len(portals)):
            raise SchemaError("portals must be distinct room ids", path=f"{path}.portals")
        scenario_id = info.get("scenario_id")
        if scenario_id is not None and (not isinstance(scenario_id, str) or not scenario_id):
            raise SchemaError("scenario_id must be a non-empty string",
                              path=f"{path}.scenario_id")
        if kind == "scenario_room" and scenario_id is None:
            raise SchemaError("scenario rooms need a scenario_id", path=path)
        rooms[room_id] = RoomInfo(room_id, name_key, kind, scenario_id, tuple(portals))

    for kind in ("welcome", "tutorial"):
        count = sum(1 for r in rooms.values() if r.kind == kind)
        if count != 1:
            raise SchemaError(f"topology needs exactly one {kind} room, found {count}",
                              path="world.rooms")
    for room in rooms.values():
        for portal in room.portals:
            if portal not in rooms:
                raise SchemaError(f"portal target {portal!r} does not exist",
                                  path=f"world.rooms.{room.room_id}.portals")
        if pack is not None and room.scenario_id is not None:
            if room.scenario_id not in pack.scenarios:
                raise SchemaError(f"scenario {room.scenario_id!r} is not in the pack",
                                  path=f"world.rooms.{room.room_id}.scenario_id")
    return WorldTopology(rooms=rooms)


def load_topology(path: str | Path, pack: ContentPack | None = None) -> WorldTopology:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return parse_topology(raw, pack)


# -- presence -----------------------------------------------------------------


@dataclass(frozen=True)
class Occupant:
    player_id: str
    display_name: str
    x: int
    y: int

    def to_json(self) -> dict:
        return {"player_id": self.player_id, "display_name": self.display_name,
                "x": self.x, "y": self.y}


def occupant_from_json(raw: dict) -> Occupant:
    return Occupant(raw["player_id"], raw["display_name"], raw["x"], raw["y"])


@dataclass(frozen=True)
class RoomSnapshot:
    room_id: str
    version: int
    occupants: tuple[Occupant, ...]  # join order

    def to_json(self) -> dict:
        return {"room_id": self.room_id, "version": self.version,
                "occupants": [o.to_json() for o in self.occupants]}


@dataclass(frozen=True)
class RoomDelta:
    room_id: str
    version: int
    joins: tuple[Occupant, ...] = ()
    leaves: tuple[str, ...] = ()
    moves: tuple[Occupant, ...] = ()

    def to_json(self) -> dict:
        return {"room_id": self.room_id, "version": self.version,
                "joins": [o.to_json() for o in self.joins],
                "leaves": list(self.leaves),
                "moves": [o.to_json() for o in self.moves]}


def snapshot_from_json(raw: dict) -> RoomSnapshot:
    return RoomSnapshot(raw["room_id"], raw["version"],
                        tuple(occupant_from_json(o) for o in raw["occupants"]))


def delta_from_json(raw: dict) -> RoomDelta:
    return RoomDelta(raw["room_id"], raw["version"],
                     joins=tuple(occupant_from_json(o) for o in raw["joins"]),
                     leaves=tuple(raw["leaves"]),
                     moves=tuple(occupant_from_json(o) for o in raw["moves"]))


def apply_delta(snapshot: RoomSnapshot, delta: RoomDelta) -> RoomSnapshot:
    """Pure fold of one delta; raises StaleDelta instead of silently reordering."""
    if delta.room_id != snapshot.room_id:
        raise StaleDelta(f"delta for {delta.room_id!r} applied to {snapshot.room_id!r}")
    if delta.version <= snapshot.version:
        raise StaleDelta(f"delta version {delta.version} <= snapshot {snapshot.version}")
    occupants = list(snapshot.occupants)
    for occupant in delta.joins:
        occupants = [o for o in occupants if o.player_id != occupant.player_id]
        occupants.append(occupant)
    leaving = set(delta.leaves)
    occupants = [o for o in occupants if o.player_id not in leaving]
    moved = {o.player_id: o for o in delta.moves}
    occupants = [moved.get(o.player_id, o) for o in occupants]
    return RoomSnapshot(snapshot.room_id, delta.version, tuple(occupants))


class RoomState:
    """Mutable server-side room: occupants in join order plus a version counter.

    Every mutation returns the RoomDelta describing it, already stamped with
    the new version.
    """

    def __init__(self, info: RoomInfo):
        self.info = info
        self.version = 0
        self.occupants: dict[str, Occupant] = {}

    def snapshot(self) -> RoomSnapshot:
        return RoomSnapshot(self.info.room_id, self.version, tuple(self.occupants.values()))

    def join(self, player_id: str, display_name: str, x: int = 0, y: int = 0) -> RoomDelta:
        occupant = Occupant(player_id, display_name, x, y)
        self.occupants.pop(player_id, None)  # rejoin moves to the end, like the fold
        self.occupants[player_id] = occupant
        self.version += 1
        return RoomDelta(self.info.room_id, self.version, joins=(occupant,))

    def leave(self, player_id: str) -> RoomDelta:
        self.occupants.pop(player_id, None)
        self.version += 1
        return RoomDelta(self.info.room_id, self.version, leaves=(player_id,))

    def move(self, player_id: str, x: int, y: int) -> RoomDelta:
        old = self.occupants[player_id]
        occupant = Occupant(player_id, old.display_name, x, y)
        self.occupants[player_id] = occupant
        self.version += 1
        return RoomDelta(self.info.room_id, self.version, moves=(occupant,))
