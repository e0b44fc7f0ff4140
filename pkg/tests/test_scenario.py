"""Scenario document parsing and serialization."""

import json

import pytest

from raise_world.errors import SchemaError, ScenarioSyntaxError, VersionError
from raise_world.scenario import (
    AddVar,
    CarbonDelta,
    ScoreDelta,
    SetVar,
    effect_to_json,
    parse_scenario,
    serialize_scenario,
)


def minimal_doc() -> dict:
    return {
        "schema_version": 1,
        "id": "mini",
        "default_locale": "en",
        "supported_locales": ["en"],
        "title_key": "mini.title",
        "entry_node": "start",
        "nodes": {
            "start": {
                "kind": "info",
                "text_key": "mini.start",
                "choices": [
                    {"id": "go", "text_key": "mini.go", "target": "end"}
                ],
            },
            "end": {"kind": "terminal", "text_key": "mini.end", "outcome_key": "mini.done"},
        },
    }


def dumps(doc: dict) -> bytes:
    return json.dumps(doc).encode("utf-8")


def test_minimal_roundtrip():
    doc = parse_scenario(dumps(minimal_doc()))
    assert doc.id == "mini"
    assert doc.entry_node == "start"
    assert parse_scenario(serialize_scenario(doc)) == doc


def test_full_roundtrip_with_all_node_kinds():
    raw = minimal_doc()
    raw["variables"] = {"crumbs": 0, "met": False, "mood": "calm"}
    raw["learning_objectives"] = ["mini.obj.1"]
    raw["nodes"]["start"]["choices"].append({
        "id": "sneak",
        "text_key": "mini.sneak",
        "target": "quiz",
        "condition": "crumbs < 3 and not met",
        "effects": [
            {"op": "add", "var": "crumbs", "delta": 1},
            {"op": "set", "var": "met", "value": True},
            {"op": "score_delta", "delta": 5},
            {"op": "carbon_delta", "kg": 0.25, "reason": "mini.reason"},
        ],
    })
    raw["nodes"]["quiz"] = {
        "kind": "quiz",
        "text_key": "mini.quiz",
        "speaker": "owl",
        "questions": [{
            "id": "q1",
            "text_key": "mini.q1",
            "options": [
                {"id": "a", "text_key": "mini.q1.a"},
                {"id": "b", "text_key": "mini.q1.b"},
            ],
            "correct_option": "a",
            "hint_key": "mini.q1.hint",
            "points": 10,
        }],
        "pass_target": "act",
        "fail_target": "end",
    }
    raw["nodes"]["act"] = {
        "kind": "activity",
        "text_key": "mini.act",
        "on_enter_effects": [{"op": "score_delta", "delta": 1}],
        "activity_ref": {
            "kind": "carbon_day",
            "params": {"catalog": "daily", "budget_kg": 4.0,
                       "points": {"low": 3, "medium": 2, "high": 1}},
        },
        "exits": {"low": "end", "medium": "end", "high": "end"},
    }
    doc = parse_scenario(dumps(raw))
    assert parse_scenario(serialize_scenario(doc)) == doc
    assert doc.nodes["quiz"].questions[0].points == 10
    assert doc.nodes["act"].activity_ref.kind == "carbon_day"
    assert doc.nodes["start"].choices[1].condition_text == "crumbs < 3 and not met"


def test_effect_json_roundtrip():
    effects = [SetVar("met", True), AddVar("crumbs", -2), ScoreDelta(7),
               CarbonDelta(1.5, "r")]
    for effect in effects:
        blob = effect_to_json(effect)
        assert json.loads(json.dumps(blob)) == blob


def test_out_edges_cover_every_kind():
    raw = minimal_doc()
    raw["nodes"]["quiz"] = {
        "kind": "quiz", "text_key": "k",
        "questions": [{"id": "q", "text_key": "k", "options": [
            {"id": "a", "text_key": "k"}, {"id": "b", "text_key": "k"}],
            "correct_option": "a", "hint_key": "k", "points": 0}],
        "pass_target": "end", "fail_target": "start",
    }
    raw["nodes"]["start"]["choices"][0]["target"] = "quiz"
    doc = parse_scenario(dumps(raw))
    assert doc.out_edges(doc.nodes["start"]) == ["quiz"]
    assert doc.out_edges(doc.nodes["quiz"]) == ["end", "start"]
    assert doc.out_edges(doc.nodes["end"]) == []


def test_malformed_json():
    with pytest.raises(ScenarioSyntaxError):
        parse_scenario(b"{nope")
    with pytest.raises(ScenarioSyntaxError):
        parse_scenario(b"\xff\xfe")


def test_unsupported_version():
    raw = minimal_doc()
    raw["schema_version"] = 2
    with pytest.raises(VersionError):
        parse_scenario(dumps(raw))


def path_of(excinfo) -> str:
    return excinfo.value.context.get("path", "")


def test_schema_error_paths_point_at_the_problem():
    raw = minimal_doc()
    raw["nodes"]["start"]["choices"][0]["target"] = 7
    with pytest.raises(SchemaError) as exc:
        parse_scenario(dumps(raw))
    assert path_of(exc) == "$.nodes.start.choices[0].target"


@pytest.mark.parametrize("mutate,path", [
    (lambda d: d.pop("title_key"), "$"),
    (lambda d: d.__setitem__("extra", 1), "$.extra"),
    (lambda d: d.__setitem__("supported_locales", []), "$.supported_locales"),
    (lambda d: d.__setitem__("default_locale", "fr"), "$.default_locale"),
    (lambda d: d.__setitem__("nodes", {}), "$.nodes"),
    (lambda d: d["nodes"]["start"].__setitem__("kind", "cutscene"), "$.nodes.start.kind"),
    (lambda d: d["nodes"]["start"].__setitem__("choices", []), "$.nodes.start.choices"),
    (lambda d: d["nodes"]["end"].pop("outcome_key"), "$.nodes.end"),
    (lambda d: d["nodes"]["start"]["choices"][0].__setitem__("condition", "1 +"),
     "$.nodes.start.choices[0].condition"),
    (lambda d: d["variables"].__setitem__("f", 1.5) if "variables" in d
     else d.__setitem__("variables", {"f": 1.5}), "$.variables.f"),
])
def test_structural_errors_report_paths(mutate, path):
    raw = minimal_doc()
    mutate(raw)
    with pytest.raises(SchemaError) as exc:
        parse_scenario(dumps(raw))
    assert path_of(exc) == path


def test_duplicate_choice_and_option_ids_rejected():
    raw = minimal_doc()
    raw["nodes"]["start"]["choices"].append(
        {"id": "go", "text_key": "k", "target": "end"})
    with pytest.raises(SchemaError):
        parse_scenario(dumps(raw))

    raw = minimal_doc()
    raw["nodes"]["quiz"] = {
        "kind": "quiz", "text_key": "k",
        "questions": [{"id": "q", "text_key": "k", "options": [
            {"id": "a", "text_key": "k"}, {"id": "a", "text_key": "k"}],
            "correct_option": "a", "hint_key": "k", "points": 0}],
        "pass_target": "end", "fail_target": "end",
    }
    with pytest.raises(SchemaError):
        parse_scenario(dumps(raw))


def test_correct_option_must_exist():
    raw = minimal_doc()
    raw["nodes"]["quiz"] = {
        "kind": "quiz", "text_key": "k",
        "questions": [{"id": "q", "text_key": "k", "options": [
            {"id": "a", "text_key": "k"}, {"id": "b", "text_key": "k"}],
            "correct_option": "zz", "hint_key": "k", "points": 0}],
        "pass_target": "end", "fail_target": "end",
    }
    with pytest.raises(SchemaError):
        parse_scenario(dumps(raw))


def test_activity_requires_known_kind_and_exits():
    raw = minimal_doc()
    raw["nodes"]["act"] = {
        "kind": "activity", "text_key": "k",
        "activity_ref": {"kind": "juggling", "params": {}},
        "exits": {"pass": "end"},
    }
    with pytest.raises(SchemaError) as exc:
        parse_scenario(dumps(raw))
    assert path_of(exc) == "$.nodes.act.activity_ref.kind"

    raw["nodes"]["act"]["activity_ref"]["kind"] = "wind_farm"
    raw["nodes"]["act"]["exits"] = {}
    with pytest.raises(SchemaError) as exc:
        parse_scenario(dumps(raw))
    assert path_of(exc) == "$.nodes.act.exits"


def test_shipped_documents_roundtrip():
    for name in ("tutorial", "windfarm", "carbon", "waste"):
        with open(f"content/{name}.scenario.json", "rb") as fh:
            doc = parse_scenario(fh.read())
        assert parse_scenario(serialize_scenario(doc)) == doc
