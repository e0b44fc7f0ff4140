"""Three-block survey instrument with response ingestion and aggregates.

The instrument groups items into knowledge, attitudes, and behavior blocks;
items are single choice, multiple choice, or 1..5 likert.  The canonical
"raise-v1" instrument locks the block composition (22/10/24 items) so a data
file and code can never silently disagree about the survey shape.

All percentages use exact rational arithmetic and round half-up, so reported
figures like 37.7 are reproducible regardless of platform float behaviour.
Missing answers never enter a denominator; they are counted separately.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Union

from .errors import (
    BadValue,
    CanonicalShapeError,
    DuplicateRespondent,
    EmptyBucket,
    HeaderMismatch,
    NoResponses,
    NotLikert,
    SchemaError,
    UnknownItem,
    UnknownOption,
)

BLOCK_IDS = ("knowledge", "attitudes", "behavior")
ITEM_KINDS = ("single_choice", "multi_choice", "likert")
CANONICAL_ID = "raise-v1"
# block -> required number of items of each kind
CANONICAL_SHAPE = {
    "knowledge": {"single_choice": 21, "multi_choice": 1, "likert": 0},
    "attitudes": {"single_choice": 4, "multi_choice": 0, "likert": 6},
    "behavior": {"single_choice": 0, "multi_choice": 0, "likert": 24},
}
SOCIO_FIELDS = ("age", "gender", "country", "school_year")
NEVER_RARELY = frozenset({1, 2})
OFTEN_ALWAYS = frozenset({4, 5})

Answer = Union[str, frozenset, int]


@dataclass(frozen=True)
class LikertScale:
    min: int
    max: int
    anchor_low_key: str
    anchor_high_key: str


@dataclass(frozen=True)
class SurveyItem:
    item_id: str
    text_key: str
    kind: str
    options: tuple[str, ...] = ()
    scale: LikertScale | None = None


@dataclass(frozen=True)
class SurveyBlock:
    block_id: str
    items: tuple[SurveyItem, ...]


@dataclass(frozen=True)
class SurveyInstrument:
    instrument_id: str
    schema_version: int
    blocks: tuple[SurveyBlock, ...]

    def items(self) -> Iterator[tuple[str, SurveyItem]]:
        for block in self.blocks:
            for item in block.items:
                yield block.block_id, item

    def item(self, item_id: str) -> SurveyItem:
        for _, item in self.items():
            if item.item_id == item_id:
                return item
        raise UnknownItem(f"no item {item_id!r} in instrument {self.instrument_id!r}")


@dataclass(frozen=True)
class ResponseRow:
    respondent_id: str
    age: int | None
    gender: str
    country: str
    school_year: str
    answers: dict[str, Answer]


@dataclass
class ResponseSet:
    instrument: SurveyInstrument
    rows: list[ResponseRow] = field(default_factory=list)

    @property
    def instrument_id(self) -> str:
        return self.instrument.instrument_id


def round_half_up(value: Fraction, decimals: int) -> float:
    """Exact half-up rounding of a non-negative rational; result fits decimals."""
    scale = 10 ** decimals
    scaled = value * scale
    units = (2 * scaled.numerator + scaled.denominator) // (2 * scaled.denominator)
    return units / scale


def _percent(count: int, denom: int, decimals: int = 1) -> float:
    return round_half_up(Fraction(100 * count, denom), decimals)


# -- instrument loading ------------------------------------------------------


def _parse_item(raw: dict, path: str) -> SurveyItem:
    if not isinstance(raw, dict):
        raise SchemaError("item must be an object", path=path)
    base = {"item_id", "text_key", "kind"}
    for name in base:
        if not isinstance(raw.get(name), str) or not raw[name]:
            raise SchemaError(f"item needs a non-empty {name}", path=path)
    kind = raw["kind"]
    if kind not in ITEM_KINDS:
        raise SchemaError(f"unknown item kind {kind!r}", path=path)
    if kind == "likert":
        if set(raw) != base | {"scale"}:
            raise SchemaError("likert items carry exactly a scale", path=path)
        scale = raw["scale"]
        wanted = {"min", "max", "anchor_low_key", "anchor_high_key"}
        if not isinstance(scale, dict) or set(scale) != wanted:
            raise SchemaError(f"scale needs exactly {sorted(wanted)}", path=f"{path}.scale")
        if scale["min"] != 1 or scale["max"] != 5:
            raise SchemaError("scale must span 1..5", path=f"{path}.scale")
        if any(not isinstance(scale[k], str) or not scale[k]
               for k in ("anchor_low_key", "anchor_high_key")):
            raise SchemaError("scale anchors must be text keys", path=f"{path}.scale")
        return SurveyItem(raw["item_id"], raw["text_key"], kind,
                          scale=LikertScale(1, 5, scale["anchor_low_key"],
                                            scale["anchor_high_key"]))
    if set(raw) != base | {"options"}:
        raise SchemaError("choice items carry exactly an options list", path=path)
    options = raw["options"]
    if (not isinstance(options, list) or len(options) < 2
            or any(not isinstance(o, str) or not o for o in options)
            or len(set(options)) != len(options)):
        raise SchemaError("options must be >= 2 distinct non-empty ids", path=f"{path}.options")
    return SurveyItem(raw["item_id"], raw["text_key"], kind, options=tuple(options))


def _check_canonical(instrument: SurveyInstrument) -> None:
    got_blocks = tuple(block.block_id for block in instrument.blocks)
    if got_blocks != BLOCK_IDS:
        raise CanonicalShapeError(f"{CANONICAL_ID} needs blocks {BLOCK_IDS}, got {got_blocks}")
    for block in instrument.blocks:
        counts = {kind: 0 for kind in ITEM_KINDS}
        for item in block.items:
            counts[item.kind] += 1
        if counts != CANONICAL_SHAPE[block.block_id]:
            raise CanonicalShapeError(
                f"{block.block_id} block must have {CANONICAL_SHAPE[block.block_id]}, "
                f"got {counts}")


def load_instrument(data: bytes) -> SurveyInstrument:
    """Parse an instrument file; raise-v1 files get the canonical shape check."""
    try:
        raw = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"instrument is not UTF-8 JSON: {exc}") from exc
    if not isinstance(raw, dict) or set(raw) != {"id", "schema_version", "blocks"}:
        raise SchemaError("instrument needs exactly id, schema_version, blocks")
    if not isinstance(raw["id"], str) or not raw["id"]:
        raise SchemaError("id must be a non-empty string", path="id")
    if raw["schema_version"] != 1:
        raise SchemaError(f"unsupported schema_version {raw['schema_version']!r}",
                          path="schema_version")
    if not isinstance(raw["blocks"], list) or not raw["blocks"]:
        raise SchemaError("blocks must be a non-empty list", path="blocks")

    blocks = []
    seen_items: set[str] = set()
    for b, raw_block in enumerate(raw["blocks"]):
        path = f"blocks[{b}]"
        if (not isinstance(raw_block, dict) or set(raw_block) != {"block_id", "items"}
                or raw_block["block_id"] not in BLOCK_IDS):
            raise SchemaError("block needs a known block_id and items", path=path)
        if not isinstance(raw_block["items"], list) or not raw_block["items"]:
            raise SchemaError("items must be a non-empty list", path=f"{path}.items")
        items = []
        for i, raw_item in enumerate(raw_block["items"]):
            item = _parse_item(raw_item, f"{path}.items[{i}]")
            if item.item_id in seen_items:
                raise SchemaError(f"duplicate item_id {item.item_id!r}",
                                  path=f"{path}.items[{i}]")
            seen_items.add(item.item_id)
            items.append(item)
        blocks.append(SurveyBlock(raw_block["block_id"], tuple(items)))
    if len({block.block_id for block in blocks}) != len(blocks):
        raise SchemaError("block ids must be distinct", path="blocks")

    instrument = SurveyInstrument(raw["id"], 1, tuple(blocks))
    if instrument.instrument_id == CANONICAL_ID:
        _check_canonical(instrument)
    return instrument


# -- response ingestion -------------------------------------------------------


def _parse_cell(item: SurveyItem, cell: str, row_no: int) -> Answer:
    if item.kind == "likert":
        try:
            value = int(cell)
        except ValueError:
            raise BadValue(f"likert answer must be an integer, got {cell!r}",
                           row=row_no, column=item.item_id) from None
        if not item.scale.min <= value <= item.scale.max:
            raise BadValue(f"likert answer {value} outside {item.scale.min}..{item.scale.max}",
                           row=row_no, column=item.item_id)
        return value
    if item.kind == "single_choice":
        if cell not in item.options:
            raise BadValue(f"unknown option {cell!r}", row=row_no, column=item.item_id)
        return cell
    parts = cell.split(";")
    if len(set(parts)) != len(parts):
        raise BadValue(f"repeated option in {cell!r}", row=row_no, column=item.item_id)
    for part in parts:
        if part not in item.options:
            raise BadValue(f"unknown option {part!r}", row=row_no, column=item.item_id)
    return frozenset(parts)


def ingest_responses(instrument: SurveyInstrument, data: bytes) -> ResponseSet:
    """Parse a responses CSV against the instrument.

    Header contract: respondent_id, age, gender, country, school_year, then
    one column per item in instrument order.  Empty cells are missing
    answers; multi_choice cells join option ids with ';'.  Row numbers in
    errors count the header as row 1.
    """
    expected = ["respondent_id", *SOCIO_FIELDS] + [item.item_id for _, item in instrument.items()]
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise HeaderMismatch(f"responses file is not UTF-8: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise HeaderMismatch("responses file is empty") from None
    if header != expected:
        if len(header) != len(expected):
            raise HeaderMismatch(f"expected {len(expected)} columns, got {len(header)}")
        bad = next(i for i, (a, b) in enumerate(zip(header, expected)) if a != b)
        raise HeaderMismatch(f"column {bad} must be {expected[bad]!r}, got {header[bad]!r}")

    rows = []
    seen: set[str] = set()
    for row_no, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != len(expected):
            raise BadValue(f"row has {len(record)} cells, expected {len(expected)}",
                           row=row_no, column="")
        respondent_id = record[0]
        if not respondent_id:
            raise BadValue("respondent_id must not be empty", row=row_no,
                           column="respondent_id")
        if respondent_id in seen:
            raise DuplicateRespondent(f"respondent {respondent_id!r} appears twice")
        seen.add(respondent_id)
        age_cell = record[1]
        if age_cell:
            try:
                age = int(age_cell)
            except ValueError:
                raise BadValue(f"age must be an integer, got {age_cell!r}",
                               row=row_no, column="age") from None
        else:
            age = None
        answers: dict[str, Answer] = {}
        for offset, (_, item) in enumerate(instrument.items()):
            cell = record[5 + offset]
            if cell == "":
                continue
            answers[item.item_id] = _parse_cell(item, cell, row_no)
        rows.append(ResponseRow(respondent_id, age, record[2], record[3], record[4], answers))
    return ResponseSet(instrument=instrument, rows=rows)


# -- aggregates ---------------------------------------------------------------


def _answered(rs: ResponseSet, item_id: str) -> list[Answer]:
    return [row.answers[item_id] for row in rs.rows if item_id in row.answers]


def option_percentage(rs: ResponseSet, item_id: str, option_id: str) -> float:
    """Share of non-missing respondents choosing the option, one decimal."""
    item = rs.instrument.item(item_id)
    if item.kind == "likert":
        raise UnknownOption(f"{item_id!r} is a likert item and has no options")
    if option_id not in item.options:
        raise UnknownOption(f"item {item_id!r} has no option {option_id!r}")
    answers = _answered(rs, item_id)
    if not answers:
        raise NoResponses(f"no answers for {item_id!r}")
    if item.kind == "single_choice":
        count = sum(1 for a in answers if a == option_id)
    else:
        count = sum(1 for a in answers if option_id in a)
    return _percent(count, len(answers))


def bucket_percentage(rs: ResponseSet, item_id: str, bucket: Iterable[int]) -> float:
    """Share of non-missing respondents answering inside the bucket."""
    item = rs.instrument.item(item_id)
    if item.kind != "likert":
        raise NotLikert(f"{item_id!r} is {item.kind}")
    bucket = frozenset(bucket)
    if not bucket:
        raise EmptyBucket("bucket has no values")
    if not bucket <= frozenset(range(1, 6)):
        raise EmptyBucket(f"bucket values must lie in 1..5, got {sorted(bucket)}")
    answers = _answered(rs, item_id)
    if not answers:
        raise NoResponses(f"no answers for {item_id!r}")
    count = sum(1 for a in answers if a in bucket)
    return _percent(count, len(answers))


def likert_mean(rs: ResponseSet, item_id: str) -> float:
    """Mean of non-missing 1..5 answers, two decimals, half-up."""
    item = rs.instrument.item(item_id)
    if item.kind != "likert":
        raise NotLikert(f"{item_id!r} is {item.kind}")
    answers = _answered(rs, item_id)
    if not answers:
        raise NoResponses(f"no answers for {item_id!r}")
    return round_half_up(Fraction(sum(answers), len(answers)), 2)


@dataclass(frozen=True)
class ItemSummary:
    item_id: str
    block_id: str
    kind: str
    answered: int
    missing: int
    # choice items: (option_id, count, percent); likert: counts per 1..5
    options: tuple[tuple[str, int, float], ...] = ()
    likert_counts: tuple[int, ...] = ()
    mean: float | None = None
    never_rarely: float | None = None
    often_always: float | None = None


@dataclass(frozen=True)
class AggregateReport:
    instrument_id: str
    respondent_count: int
    items: tuple[ItemSummary, ...]

    def item(self, item_id: str) -> ItemSummary:
        for summary in self.items:
            if summary.item_id == item_id:
                return summary
        raise UnknownItem(f"no item {item_id!r} in report")

    def to_json(self) -> dict:
        items = []
        for s in self.items:
            entry: dict = {
                "item_id": s.item_id, "block_id": s.block_id, "kind": s.kind,
                "answered": s.answered, "missing": s.missing,
            }
            if s.kind == "likert":
                entry["counts"] = list(s.likert_counts)
                entry["mean"] = s.mean
                entry["never_rarely"] = s.never_rarely
                entry["often_always"] = s.often_always
            else:
                entry["options"] = [
                    {"option_id": o, "count": c, "percent": p} for o, c, p in s.options]
            items.append(entry)
        return {"instrument_id": self.instrument_id,
                "respondent_count": self.respondent_count, "items": items}

    def to_text(self) -> str:
        width = max((len(s.item_id) for s in self.items), default=10)
        lines = [f"instrument {self.instrument_id}  respondents {self.respondent_count}"]
        current_block = None
        for s in self.items:
            if s.block_id != current_block:
                current_block = s.block_id
                lines.append(f"[{current_block}]")
            head = f"  {s.item_id:<{width}}  answered {s.answered:>5}  missing {s.missing:>5}"
            if s.kind == "likert":
                dist = " ".join(f"{v}:{c}" for v, c in zip(range(1, 6), s.likert_counts))
                mean = "-" if s.mean is None else f"{s.mean:.2f}"
                nr = "-" if s.never_rarely is None else f"{s.never_rarely:.1f}"
                oa = "-" if s.often_always is None else f"{s.often_always:.1f}"
                lines.append(f"{head}  mean {mean}  never_rarely {nr}%  "
                             f"often_always {oa}%  [{dist}]")
            else:
                parts = " ".join(f"{o}:{p:.1f}%" for o, _, p in s.options)
                lines.append(f"{head}  {parts}")
        return "\n".join(lines) + "\n"


def summary_report(rs: ResponseSet) -> AggregateReport:
    """Per-item aggregate over the whole set; ordering is block, then item_id."""
    if not rs.rows:
        raise NoResponses("response set has no rows")
    total = len(rs.rows)
    summaries = []
    for block in rs.instrument.blocks:
        for item in sorted(block.items, key=lambda it: it.item_id):
            answers = _answered(rs, item.item_id)
            answered = len(answers)
            missing = total - answered
            if item.kind == "likert":
                counts = tuple(sum(1 for a in answers if a == v) for v in range(1, 6))
                mean = (round_half_up(Fraction(sum(answers), answered), 2)
                        if answered else None)
                nr = _percent(sum(counts[0:2]), answered) if answered else None
                oa = _percent(sum(counts[3:5]), answered) if answered else None
                summaries.append(ItemSummary(
                    item.item_id, block.block_id, item.kind, answered, missing,
                    likert_counts=counts, mean=mean, never_rarely=nr, often_always=oa))
            else:
                options = []
                for option_id in item.options:
                    if item.kind == "single_choice":
                        count = sum(1 for a in answers if a == option_id)
                    else:
                        count = sum(1 for a in answers if option_id in a)
                    percent = _percent(count, answered) if answered else 0.0
                    options.append((option_id, count, percent))
                summaries.append(ItemSummary(
                    item.item_id, block.block_id, item.kind, answered, missing,
                    options=tuple(options)))
    return AggregateReport(rs.instrument_id, total, tuple(summaries))


def report_to_json_text(report: AggregateReport) -> str:
    return json.dumps(report.to_json(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
