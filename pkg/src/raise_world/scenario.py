"""Scenario documents: branching graphs of dialogue, quiz, activity, and terminal nodes.

Documents are UTF-8 JSON with an explicit ``schema_version``.  Parsing is
strict: unknown fields are authoring errors that are rejected with the JSON
path, not silently ignored.  Graph-level soundness (dangling targets,
reachability, variable typing) is the job of :mod:`raise_world.validation`,
so a parsed document is not necessarily runnable yet.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Union

from . import conditions
from .conditions import ConditionExpr
from .errors import ScenarioSyntaxError, SchemaError, VersionError

SCHEMA_VERSION = 1

NODE_KINDS = ("dialogue", "quiz", "activity", "info", "terminal")
ACTIVITY_KINDS = ("wind_farm", "carbon_day")

# `score` is owned by the engine: readable in conditions, writable only
# through score_delta effects and quiz points.
RESERVED_VARIABLES = ("score",)


# --- effects -----------------------------------------------------------------

@dataclass(frozen=True)
class SetVar:
    var: str
    value: Union[int, bool, str]


@dataclass(frozen=True)
class AddVar:
    var: str
    delta: int


@dataclass(frozen=True)
class ScoreDelta:
    delta: int


@dataclass(frozen=True)
class CarbonDelta:
    kg: float
    reason_key: str


Effect = Union[SetVar, AddVar, ScoreDelta, CarbonDelta]


@dataclass(frozen=True)
class Choice:
    id: str
    text_key: str
    target: str
    condition: ConditionExpr = conditions.ALWAYS_TRUE
    condition_text: str | None = None
    effects: tuple[Effect, ...] = ()


@dataclass(frozen=True)
class QuizOption:
    id: str
    text_key: str


@dataclass(frozen=True)
class QuizQuestion:
    id: str
    text_key: str
    options: tuple[QuizOption, ...]
    correct_option: str
    hint_key: str
    points: int


@dataclass(frozen=True)
class ActivityRef:
    kind: str
    params: dict


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    text_key: str
    speaker: str | None = None
    on_enter_effects: tuple[Effect, ...] = ()
    choices: tuple[Choice, ...] = ()          # dialogue / info
    questions: tuple[QuizQuestion, ...] = ()  # quiz
    pass_target: str | None = None            # quiz
    fail_target: str | None = None            # quiz
    activity_ref: ActivityRef | None = None   # activity
    exits: dict[str, str] = field(default_factory=dict)  # activity
    outcome_key: str | None = None             # terminal


@dataclass(frozen=True)
class ScenarioDocument:
    id: str
    schema_version: int
    default_locale: str
    supported_locales: tuple[str, ...]
    title_key: str
    learning_objectives: tuple[str, ...]
    variables: dict[str, Union[int, bool, str]]
    nodes: dict[str, Node]
    entry_node: str

    def out_edges(self, node: Node) -> list[str]:
        """Static successor node ids, ignoring conditions."""
        if node.kind in ("dialogue", "info"):
            return [c.target for c in node.choices]
        if node.kind == "quiz":
            return [node.pass_target, node.fail_target]
        if node.kind == "activity":
            return [node.exits[k] for k in sorted(node.exits)]
        return []


# --- parsing -----------------------------------------------------------------

def _as_object(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"expected object, got {type(value).__name__}", path=path)
    return dict(value)


def _take(obj: dict, key: str, path: str, required: bool = True, default: Any = None) -> Any:
    if key not in obj:
        if required:
            raise SchemaError(f"missing field {key!r}", path=path)
        return default
    return obj.pop(key)

def _reject_unknown(obj: dict, path: str) -> None:
    if obj:
        name = sorted(obj)[0]
        raise SchemaError(f"unknown field {name!r}", path=f"{path}.{name}")


def _string(value: Any, path: str) -> str:
    if not isinstance(value, str) or value == "":
        raise SchemaError("expected non-empty string", path=path)
    return value


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError("expected integer", path=path)
    return value


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError("expected number", path=path)
    return float(value)


def _variable_value(value: Any, path: str) -> Union[int, bool, str]:
    if isinstance(value, bool) or isinstance(value, int) or isinstance(value, str):
        return value
    raise SchemaError("variable values must be integer, boolean, or string", path=path)


def _parse_effect(raw: Any, path: str) -> Effect:
    obj = _as_object(raw, path)
    op = _string(_take(obj, "op", path), f"{path}.op")
    if op == "set":
        eff: Effect = SetVar(
            var=_string(_take(obj, "var", path), f"{path}.var"),
            value=_variable_value(_take(obj, "value", path), f"{path}.value"),
        )
    elif op == "add":
        eff = AddVar(
            var=_string(_take(obj, "var", path), f"{path}.var"),
            delta=_integer(_take(obj, "delta", path), f"{path}.delta"),
        )
    elif op == "score_delta":
        eff = ScoreDelta(delta=_integer(_take(obj, "delta", path), f"{path}.delta"))
    elif op == "carbon_delta":
        eff = CarbonDelta(
            kg=_number(_take(obj, "kg", path), f"{path}.kg"),
            reason_key=_string(_take(obj, "reason", path), f"{path}.reason"),
        )
    else:
        raise SchemaError(f"unknown effect op {op!r}", path=f"{path}.op")
    _reject_unknown(obj, path)
    return eff


def _parse_effects(raw: Any, path: str) -> tuple[Effect, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise SchemaError("expected list of effects", path=path)
    return tuple(_parse_effect(e, f"{path}[{i}]") for i, e in enumerate(raw))


def _parse_choice(raw: Any, path: str) -> Choice:
    obj = _as_object(raw, path)
    cid = _string(_take(obj, "id", path), f"{path}.id")
    text_key = _string(_take(obj, "text_key", path), f"{path}.text_key")
    target = _string(_take(obj, "target", path), f"{path}.target")
    cond_text = _take(obj, "condition", path, required=False)
    if cond_text is not None and not isinstance(cond_text, str):
        raise SchemaError("condition must be a string expression", path=f"{path}.condition")
    try:
        cond = conditions.parse_expression(cond_text)
    except Exception as exc:
        raise SchemaError(f"bad condition: {exc}", path=f"{path}.condition") from exc
    effects = _parse_effects(_take(obj, "effects", path, required=False), f"{path}.effects")
    _reject_unknown(obj, path)
    return Choice(id=cid, text_key=text_key, target=target,
                  condition=cond, condition_text=cond_text, effects=effects)


def _parse_question(raw: Any, path: str) -> QuizQuestion:
    obj = _as_object(raw, path)
    qid = _string(_take(obj, "id", path), f"{path}.id")
    text_key = _string(_take(obj, "text_key", path), f"{path}.text_key")
    raw_options = _take(obj, "options", path)
    if not isinstance(raw_options, list) or len(raw_options) < 2:
        raise SchemaError("a question needs at least 2 options", path=f"{path}.options")
    options = []
    seen = set()
    for i, raw_opt in enumerate(raw_options):
        opt_path = f"{path}.options[{i}]"
        opt = _as_object(raw_opt, opt_path)
        oid = _string(_take(opt, "id", opt_path), f"{opt_path}.id")
        otext = _string(_take(opt, "text_key", opt_path), f"{opt_path}.text_key")
        _reject_unknown(opt, opt_path)
        if oid in seen:
            raise SchemaError(f"duplicate option id {oid!r}", path=opt_path)
        seen.add(oid)
        options.append(QuizOption(id=oid, text_key=otext))
    correct = _string(_take(obj, "correct_option", path), f"{path}.correct_option")
    if correct not in seen:
        raise SchemaError(f"correct_option {correct!r} is not an option", path=f"{path}.correct_option")
    hint_key = _string(_take(obj, "hint_key", path), f"{path}.hint_key")
    points = _integer(_take(obj, "points", path), f"{path}.points")
    if points < 0:
        raise SchemaError("points must be >= 0", path=f"{path}.points")
    _reject_unknown(obj, path)
    return QuizQuestion(id=qid, text_key=text_key, options=tuple(options),
                        correct_option=correct, hint_key=hint_key, points=points)


def _parse_node(node_id: str, raw: Any, path: str) -> Node:
    obj = _as_object(raw, path)
    kind = _string(_take(obj, "kind", path), f"{path}.kind")
    if kind not in NODE_KINDS:
        raise SchemaError(f"unknown node kind {kind!r}", path=f"{path}.kind")
    text_key = _string(_take(obj, "text_key", path), f"{path}.text_key")
    speaker = _take(obj, "speaker", path, required=False)
    if speaker is not None:
        speaker = _string(speaker, f"{path}.speaker")
    on_enter = _parse_effects(_take(obj, "on_enter_effects", path, required=False),
                              f"{path}.on_enter_effects")

    choices: tuple[Choice, ...] = ()
    questions: tuple[QuizQuestion, ...] = ()
    pass_target = fail_target = outcome_key = None
    activity_ref = None
    exits: dict[str, str] = {}

    if kind in ("dialogue", "info"):
        raw_choices = _take(obj, "choices", path)
        if not isinstance(raw_choices, list) or not raw_choices:
            raise SchemaError(f"{kind} node needs a non-empty choices list", path=f"{path}.choices")
        parsed = []
        seen = set()
        for i, raw_choice in enumerate(raw_choices):
            choice = _parse_choice(raw_choice, f"{path}.choices[{i}]")
            if choice.id in seen:
                raise SchemaError(f"duplicate choice id {choice.id!r}", path=f"{path}.choices[{i}]")
            seen.add(choice.id)
            parsed.append(choice)
        choices = tuple(parsed)
    elif kind == "quiz":
        raw_questions = _take(obj, "questions", path)
        if not isinstance(raw_questions, list) or not raw_questions:
            raise SchemaError("quiz node needs a non-empty questions list", path=f"{path}.questions")
        seen_q: set[str] = set()
        qs = []
        for i, raw_q in enumerate(raw_questions):
            q = _parse_question(raw_q, f"{path}.questions[{i}]")
            if q.id in seen_q:
                raise SchemaError(f"duplicate question id {q.id!r}", path=f"{path}.questions[{i}]")
            seen_q.add(q.id)
            qs.append(q)
        questions = tuple(qs)
        pass_target = _string(_take(obj, "pass_target", path), f"{path}.pass_target")
        fail_target = _string(_take(obj, "fail_target", path), f"{path}.fail_target")
    elif kind == "activity":
        raw_ref = _as_object(_take(obj, "activity_ref", path), f"{path}.activity_ref")
        akind = _string(_take(raw_ref, "kind", f"{path}.activity_ref"), f"{path}.activity_ref.kind")
        if akind not in ACTIVITY_KINDS:
            raise SchemaError(f"unknown activity kind {akind!r}", path=f"{path}.activity_ref.kind")
        params = _as_object(_take(raw_ref, "params", f"{path}.activity_ref"), f"{path}.activity_ref.params")
        _reject_unknown(raw_ref, f"{path}.activity_ref")
        activity_ref = ActivityRef(kind=akind, params=params)
        raw_exits = _as_object(_take(obj, "exits", path), f"{path}.exits")
        if not raw_exits:
            raise SchemaError("activity node needs a non-empty exits map", path=f"{path}.exits")
        exits = {k: _string(v, f"{path}.exits.{k}") for k, v in raw_exits.items()}
    elif kind == "terminal":
        outcome_key = _string(_take(obj, "outcome_key", path), f"{path}.outcome_key")

    _reject_unknown(obj, path)
    return Node(id=node_id, kind=kind, text_key=text_key, speaker=speaker,
                on_enter_effects=on_enter, choices=choices, questions=questions,
                pass_target=pass_target, fail_target=fail_target,
                activity_ref=activity_ref, exits=exits, outcome_key=outcome_key)


def parse_scenario(data: bytes | str) -> ScenarioDocument:
    """Parse a scenario document from UTF-8 JSON bytes.

    Raises :class:`ScenarioSyntaxError` for malformed JSON,
    :class:`VersionError` for an unsupported schema_version, and
    :class:`SchemaError` (with a JSON path) for structural problems.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioSyntaxError(f"not valid UTF-8: {exc}") from exc
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(f"malformed JSON: {exc}") from exc

    obj = _as_object(raw, "$")
    version = _take(obj, "schema_version", "$")
    if not isinstance(version, int) or isinstance(version, bool):
        raise SchemaError("schema_version must be an integer", path="$.schema_version")
    if version != SCHEMA_VERSION:
        raise VersionError(f"unsupported schema_version {version} (supported: {SCHEMA_VERSION})")

    doc_id = _string(_take(obj, "id", "$"), "$.id")
    default_locale = _string(_take(obj, "default_locale", "$"), "$.default_locale")
    raw_locales = _take(obj, "supported_locales", "$")
    if not isinstance(raw_locales, list) or not raw_locales:
        raise SchemaError("supported_locales must be a non-empty list", path="$.supported_locales")
    locales = tuple(_string(loc, f"$.supported_locales[{i}]") for i, loc in enumerate(raw_locales))
    if default_locale not in locales:
        raise SchemaError("default_locale must be listed in supported_locales", path="$.default_locale")
    title_key = _string(_take(obj, "title_key", "$"), "$.title_key")
    raw_objectives = _take(obj, "learning_objectives", "$", required=False, default=[])
    if not isinstance(raw_objectives, list):
        raise SchemaError("learning_objectives must be a list", path="$.learning_objectives")
    objectives = tuple(_string(k, f"$.learning_objectives[{i}]") for i, k in enumerate(raw_objectives))

    raw_vars = _as_object(_take(obj, "variables", "$", required=False, default={}), "$.variables")
    variables = {name: _variable_value(v, f"$.variables.{name}") for name, v in raw_vars.items()}

    raw_nodes = _as_object(_take(obj, "nodes", "$"), "$.nodes")
    if not raw_nodes:
        raise SchemaError("nodes must not be empty", path="$.nodes")
    nodes = {nid: _parse_node(nid, raw_node, f"$.nodes.{nid}") for nid, raw_node in raw_nodes.items()}

    entry = _string(_take(obj, "entry_node", "$"), "$.entry_node")
    _reject_unknown(obj, "$")

    return ScenarioDocument(
        id=doc_id, schema_version=version, default_locale=default_locale,
        supported_locales=locales, title_key=title_key,
        learning_objectives=objectives, variables=variables,
        nodes=nodes, entry_node=entry,
    )


# --- serialization -----------------------------------------------------------

def effect_to_json(effect: Effect) -> dict:
    if isinstance(effect, SetVar):
        return {"op": "set", "var": effect.var, "value": effect.value}
    if isinstance(effect, AddVar):
        return {"op": "add", "var": effect.var, "delta": effect.delta}
    if isinstance(effect, ScoreDelta):
        return {"op": "score_delta", "delta": effect.delta}
    if isinstance(effect, CarbonDelta):
        return {"op": "carbon_delta", "kg": effect.kg, "reason": effect.reason_key}
    raise TypeError(f"not an effect: {effect!r}")


def _choice_to_json(choice: Choice) -> dict:
    out: dict[str, Any] = {"id": choice.id, "text_key": choice.text_key, "target": choice.target}
    if choice.condition_text is not None:
        out["condition"] = choice.condition_text
    if choice.effects:
        out["effects"] = [effect_to_json(e) for e in choice.effects]
    return out


def _node_to_json(node: Node) -> dict:
    out: dict[str, Any] = {"kind": node.kind, "text_key": node.text_key}
    if node.speaker is not None:
        out["speaker"] = node.speaker
    if node.on_enter_effects:
        out["on_enter_effects"] = [effect_to_json(e) for e in node.on_enter_effects]
    if node.kind in ("dialogue", "info"):
        out["choices"] = [_choice_to_json(c) for c in node.choices]
    elif node.kind == "quiz":
        out["questions"] = [
            {
                "id": q.id,
                "text_key": q.text_key,
                "options": [{"id": o.id, "text_key": o.text_key} for o in q.options],
                "correct_option": q.correct_option,
                "hint_key": q.hint_key,
                "points": q.points,
            }
            for q in node.questions
        ]
        out["pass_target"] = node.pass_target
        out["fail_target"] = node.fail_target
    elif node.kind == "activity":
        out["activity_ref"] = {"kind": node.activity_ref.kind, "params": node.activity_ref.params}
        out["exits"] = dict(node.exits)
    elif node.kind == "terminal":
        out["outcome_key"] = node.outcome_key
    return out


def scenario_to_json(doc: ScenarioDocument) -> dict:
    return {
        "schema_version": doc.schema_version,
        "id": doc.id,
        "default_locale": doc.default_locale,
        "supported_locales": list(doc.supported_locales),
        "title_key": doc.title_key,
        "learning_objectives": list(doc.learning_objectives),
        "variables": dict(doc.variables),
        "entry_node": doc.entry_node,
        "nodes": {nid: _node_to_json(node) for nid, node in doc.nodes.items()},
    }


def serialize_scenario(doc: ScenarioDocument) -> bytes:
    """Deterministic UTF-8 JSON; parse(serialize(doc)) == doc for valid docs."""
    text = json.dumps(scenario_to_json(doc), indent=2, sort_keys=True, ensure_ascii=False)
    return (text + "\n").encode("utf-8")
