"""Durable state: player profiles and session records on plain files.

Profiles are one JSON line plus a trailing CRC32 line; session records are
append-only JSONL whose final line is a CRC32 over every preceding byte.
A file without a valid trailing checksum (truncated write, partial crash)
loads as CorruptRecord rather than as silently wrong data.

Layout under the data directory:
    profiles/<player_id>.json
    sessions/<YYYY-MM-DD>/<session_id>.jsonl
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

from ..engine import EngineEvent, OutcomeSummary
from ..errors import CorruptRecord, StoreUnavailable, UnknownPlayer


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _crc_line(payload: bytes) -> str:
    return f"{zlib.crc32(payload) & 0xFFFFFFFF:08x}"


@dataclass(frozen=True)
class PlayerProfile:
    player_id: str
    display_name: str
    locale: str
    completed: dict[str, OutcomeSummary] = field(default_factory=dict)

    @property
    def global_score(self) -> int:
        return sum(summary.final_score for summary in self.completed.values())

    def to_json(self) -> dict:
        return {
            "player_id": self.player_id,
            "display_name": self.display_name,
            "locale": self.locale,
            "completed": {sid: s.to_json() for sid, s in sorted(self.completed.items())},
            "global_score": self.global_score,
        }


def profile_from_json(raw: dict) -> PlayerProfile:
    completed = {
        sid: OutcomeSummary(**summary) for sid, summary in raw["completed"].items()
    }
    profile = PlayerProfile(raw["player_id"], raw["display_name"], raw["locale"], completed)
    if raw.get("global_score") != profile.global_score:
        raise CorruptRecord(f"global_score {raw.get('global_score')} does not match "
                            f"completed outcomes ({profile.global_score})")
    return profile


def record_outcome(profile: PlayerProfile, scenario_id: str,
                   summary: OutcomeSummary) -> PlayerProfile:
    """Keep the best outcome per scenario: max final_score, ties keep the old."""
    best = profile.completed.get(scenario_id)
    if best is not None and summary.final_score <= best.final_score:
        return profile
    completed = dict(profile.completed)
    completed[scenario_id] = summary
    return PlayerProfile(profile.player_id, profile.display_name, profile.locale, completed)


@dataclass
class SessionRecord:
    session_id: str
    player_id: str
    scenario_id: str
    seed: int
    locale: str
    started_wall: str
    inputs: list[dict] = field(default_factory=list)
    events: list[EngineEvent] = field(default_factory=list)
    status: str = "open"  # open | finished | abandoned
    outcome: dict | None = None
    ended_wall: str | None = None


class Store:
    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        try:
            (self.root / "profiles").mkdir(parents=True, exist_ok=True)
            (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StoreUnavailable(f"cannot prepare {self.root}: {exc}") from exc

    # -- profiles --------------------------------------------------------

    def _profile_path(self, player_id: str) -> Path:
        return self.root / "profiles" / f"{player_id}.json"

    def save_profile(self, profile: PlayerProfile) -> None:
        body = (_dumps(profile.to_json()) + "\n").encode("utf-8")
        data = body + (_crc_line(body) + "\n").encode("ascii")
        path = self._profile_path(profile.player_id)
        try:
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        except OSError as exc:
            raise StoreUnavailable(f"cannot write {path}: {exc}") from exc

    def load_profile(self, player_id: str) -> PlayerProfile:
        path = self._profile_path(player_id)
        if not path.exists():
            raise UnknownPlayer(f"no profile for {player_id!r}")
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise StoreUnavailable(f"cannot read {path}: {exc}") from exc
        lines = data.split(b"\n")
        if len(lines) < 3 or lines[-1] != b"":
            raise CorruptRecord(f"{path.name}: missing checksum line")
        body = b"\n".join(lines[:-2]) + b"\n"
        if lines[-2].decode("ascii", "replace") != _crc_line(body):
            raise CorruptRecord(f"{path.name}: checksum mismatch")
        try:
            return profile_from_json(json.loads(body.decode("utf-8")))
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptRecord(f"{path.name}: {exc}") from exc

    def has_profile(self, player_id: str) -> bool:
        return self._profile_path(player_id).exists()

    # -- session records ---------------------------------------------------

    def session_path(self, session_id: str, date: str) -> Path:
        return self.root / "sessions" / date / f"{session_id}.jsonl"

    def open_recorder(self, record: SessionRecord) -> "SessionRecorder":
        date = record.started_wall[:10]
        path = self.session_path(record.session_id, date)
        return SessionRecorder(path, record)

    def session_files(self) -> list[Path]:
        return sorted((self.root / "sessions").glob("*/*.jsonl"))

    def load_session(self, path: str | Path) -> SessionRecord:
        path = Path(path)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise StoreUnavailable(f"cannot read {path}: {exc}") from exc
        lines = data.split(b"\n")
        if len(lines) < 2 or lines[-1] != b"":
            raise CorruptRecord(f"{path.name}: not a finalized record")
        body = b"\n".join(lines[:-2]) + b"\n"
        try:
            trailer = json.loads(lines[-2])
        except ValueError as exc:
            raise CorruptRecord(f"{path.name}: bad trailer: {exc}") from exc
        if (not isinstance(trailer, dict) or trailer.get("record") != "crc"
                or trailer.get("crc32") != _crc_line(body)):
            raise CorruptRecord(f"{path.name}: checksum mismatch")

        record: SessionRecord | None = None
        for raw_line in body.splitlines():
            try:
                entry = json.loads(raw_line)
            except ValueError as exc:
                raise CorruptRecord(f"{path.name}: bad line: {exc}") from exc
            kind = entry.get("record")
            if kind == "meta":
                record = SessionRecord(
                    session_id=entry["session_id"], player_id=entry["player_id"],
                    scenario_id=entry["scenario_id"], seed=entry["seed"],
                    locale=entry["locale"], started_wall=entry["started_wall"])
            elif record is None:
                raise CorruptRecord(f"{path.name}: first line must be the meta record")
            elif kind == "input":
                record.inputs.append(entry["input"])
            elif kind == "event":
                event = entry["event"]
                record.events.append(EngineEvent(event["tick"], event["kind"],
                                                 event["payload"]))
            elif kind == "end":
                record.status = entry["status"]
                record.outcome = entry.get("outcome")
                record.ended_wall = entry["ended_wall"]
            else:
                raise CorruptRecord(f"{path.name}: unknown record kind {kind!r}")
        if record is None:
            raise CorruptRecord(f"{path.name}: empty record")
        if record.status == "open":
            raise CorruptRecord(f"{path.name}: record has no end line")
        return record


class SessionRecorder:
    """Incremental writer for one session's JSONL file.

    Lines are flushed as they are written; the CRC trailer lands in finish().
    A file that never reached finish() fails the checksum on load, which is
    the intended crash signature.
    """

    def __init__(self, path: Path, record: SessionRecord):
        self.record = record
        self.path = path
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = path.open("wb")
        except OSError as exc:
            raise StoreUnavailable(f"cannot open {path}: {exc}") from exc
        self._crc = 0
        self.closed = False
        self._write({
            "record": "meta", "session_id": record.session_id,
            "player_id": record.player_id, "scenario_id": record.scenario_id,
            "seed": record.seed, "locale": record.locale,
            "started_wall": record.started_wall,
        })

    def _write(self, obj: dict) -> None:
        line = (_dumps(obj) + "\n").encode("utf-8")
        self._crc = zlib.crc32(line, self._crc)
        self._fh.write(line)
        self._fh.flush()

    def add_input(self, raw_input: dict) -> None:
        self.record.inputs.append(raw_input)
        self._write({"record": "input", "index": len(self.record.inputs) - 1,
                     "input": raw_input})

    def add_events(self, events) -> None:
        for event in events:
            self.record.events.append(event)
            self._write({"record": "event", "event": event.to_json()})

    def finish(self, status: str, outcome: dict | None, ended_wall: str) -> None:
        if self.closed:
            return
        self.record.status = status
        self.record.outcome = outcome
        self.record.ended_wall = ended_wall
        self._write({"record": "end", "status": status, "outcome": outcome,
                     "ended_wall": ended_wall})
        trailer = (_dumps({"record": "crc", "crc32": f"{self._crc & 0xFFFFFFFF:08x}"})
                   + "\n").encode("utf-8")
        self._fh.write(trailer)
        self._fh.flush()
        self._fh.close()
        self.closed = True
