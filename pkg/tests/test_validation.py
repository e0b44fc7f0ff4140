"""Static document checks against an independent graph oracle.

The randomized part regrows reachability and terminal-reachability with a
fresh DFS written here, so the production BFS in validation.py is checked
against code that shares nothing with it.
"""

import json

from hypothesis import given, settings, strategies as st

from raise_world.content import load_pack
from raise_world.scenario import parse_scenario
from raise_world.validation import validate_graph, validate_pack


def build(nodes: dict, entry: str = "n0", variables: dict | None = None) -> "ScenarioDocument":
    raw = {
        "schema_version": 1,
        "id": "gen",
        "default_locale": "en",
        "supported_locales": ["en"],
        "title_key": "gen.title",
        "entry_node": entry,
        "variables": variables or {},
        "nodes": nodes,
    }
    return parse_scenario(json.dumps(raw))


def info(targets, condition=None, effects=None):
    choices = []
    for i, target in enumerate(targets):
        choice = {"id": f"c{i}", "text_key": "k", "target": target}
        if condition is not None and i == 0:
            choice["condition"] = condition
        if effects is not None and i == 0:
            choice["effects"] = effects
        choices.append(choice)
    return {"kind": "info", "text_key": "k", "choices": choices}


TERMINAL = {"kind": "terminal", "text_key": "k", "outcome_key": "k"}


def codes(report):
    return report.error_codes(), report.warning_codes()


# -- error codes, one by one ------------------------------------------------


def test_clean_document_is_ok():
    report = validate_graph(build({"n0": info(["n1"]), "n1": TERMINAL}))
    assert report.ok and not report.warnings


def test_dangling_choice_target():
    report = validate_graph(build({"n0": info(["ghost"]), "n1": TERMINAL}))
    assert "DanglingTarget" in report.error_codes()


def test_dangling_entry_node():
    report = validate_graph(build({"n0": info(["n1"]), "n1": TERMINAL}, entry="zz"))
    assert "DanglingTarget" in report.error_codes()


def test_no_terminal():
    report = validate_graph(build({"n0": info(["n0"])}))
    assert "NoTerminal" in report.error_codes()


def test_activity_exits_must_match_outcomes():
    act = {
        "kind": "activity", "text_key": "k",
        "activity_ref": {"kind": "carbon_day", "params": {
            "catalog_inline": {"categories": {"meal": [
                {"option_id": "m", "label_key": "k", "factor": 1.0, "unit": "meal"}]}},
            "budget_kg": 2.0, "points": {"low": 1, "medium": 1, "high": 0}}},
        "exits": {"low": "n1", "medium": "n1"},  # high missing
    }
    report = validate_graph(build({"n0": act, "n1": TERMINAL}))
    assert "ActivityExits" in report.error_codes()


def test_activity_params_problems_reported():
    act = {
        "kind": "activity", "text_key": "k",
        "activity_ref": {"kind": "wind_farm", "params": {"budget": 100}},
        "exits": {"pass": "n1", "fail": "n1"},
    }
    report = validate_graph(build({"n0": act, "n1": TERMINAL}))
    assert "ActivityParams" in report.error_codes()


def test_named_catalog_needs_pack_context():
    act = {
        "kind": "activity", "text_key": "k",
        "activity_ref": {"kind": "carbon_day", "params": {
            "catalog": "nowhere", "budget_kg": 2.0,
            "points": {"low": 1, "medium": 1, "high": 0}}},
        "exits": {"low": "n1", "medium": "n1", "high": "n1"},
    }
    doc = build({"n0": act, "n1": TERMINAL})
    # standalone: name is shape-checked only, so the dangling name passes
    assert validate_graph(doc).ok
    pack = load_pack("content")
    assert "ActivityParams" in validate_graph(doc, pack).error_codes()


def test_condition_undeclared_variable():
    report = validate_graph(build({"n0": info(["n1"], condition="ghost"), "n1": TERMINAL}))
    assert "UndeclaredVariable" in report.error_codes()


def test_condition_type_mismatch():
    report = validate_graph(build(
        {"n0": info(["n1"], condition="mood < 3"), "n1": TERMINAL},
        variables={"mood": "calm"}))
    assert "TypeMismatch" in report.error_codes()


def test_effect_writes_undeclared_variable():
    report = validate_graph(build(
        {"n0": info(["n1"], effects=[{"op": "add", "var": "ghost", "delta": 1}]),
         "n1": TERMINAL}))
    assert "UndeclaredVariable" in report.error_codes()


def test_effect_type_mismatch():
    report = validate_graph(build(
        {"n0": info(["n1"], effects=[{"op": "set", "var": "met", "value": 3}]),
         "n1": TERMINAL},
        variables={"met": False}))
    assert "TypeMismatch" in report.error_codes()

    report = validate_graph(build(
        {"n0": info(["n1"], effects=[{"op": "add", "var": "met", "delta": 1}]),
         "n1": TERMINAL},
        variables={"met": False}))
    assert "TypeMismatch" in report.error_codes()


def test_score_is_reserved():
    report = validate_graph(build(
        {"n0": info(["n1"]), "n1": TERMINAL}, variables={"score": 0}))
    assert "ReservedVariable" in report.error_codes()

    report = validate_graph(build(
        {"n0": info(["n1"], effects=[{"op": "add", "var": "score", "delta": 1}]),
         "n1": TERMINAL}))
    assert "ReservedVariable" in report.error_codes()


def test_score_is_readable_in_conditions():
    report = validate_graph(build(
        {"n0": info(["n1"], condition="score > 10"), "n1": TERMINAL}))
    assert report.ok


def test_unreachable_and_dead_end_warnings():
    report = validate_graph(build({
        "n0": info(["n1"]),
        "n1": TERMINAL,
        "island": info(["n1"]),          # unreachable, can still finish
        "n2": info(["n3"]),              # unreachable and dead-ended
        "n3": info(["n2"]),
    }))
    assert report.ok  # warnings only
    warned = {f.where for f in report.warnings if f.code == "UnreachableNode"}
    assert warned == {"island", "n2", "n3"}
    dead = {f.where for f in report.warnings if f.code == "DeadEnd"}
    assert dead == {"n2", "n3"}


# -- randomized graphs vs a fresh DFS oracle ---------------------------------


@st.composite
def graph_doc(draw):
    n = draw(st.integers(2, 12))
    names = [f"n{i}" for i in range(n)]
    terminal = {draw(st.sampled_from(names))}
    nodes = {}
    for name in names:
        if name in terminal or draw(st.booleans()) and name != "n0":
            nodes[name] = TERMINAL
            terminal.add(name)
        else:
            degree = draw(st.integers(1, 3))
            targets = draw(st.lists(st.sampled_from(names), min_size=degree,
                                    max_size=degree))
            nodes[name] = info(targets)
    return build(nodes)


def dfs_reachable(doc, start):
    stack, seen = [start], set()
    while stack:
        node_id = stack.pop()
        if node_id in seen or node_id not in doc.nodes:
            continue
        seen.add(node_id)
        stack.extend(doc.out_edges(doc.nodes[node_id]))
    return seen


def dfs_closing(doc):
    reaches = set()
    for start in doc.nodes:
        frontier = dfs_reachable(doc, start)
        if any(doc.nodes[t].kind == "terminal" for t in frontier):
            reaches.add(start)
    return reaches


@settings(max_examples=200)
@given(doc=graph_doc())
def test_warnings_match_dfs_oracle(doc):
    report = validate_graph(doc)
    assert report.ok

    reachable = dfs_reachable(doc, doc.entry_node)
    expect_unreachable = set(doc.nodes) - reachable
    got_unreachable = {f.where for f in report.warnings if f.code == "UnreachableNode"}
    assert got_unreachable == expect_unreachable

    closing = dfs_closing(doc)
    expect_dead = {n for n in doc.nodes if doc.nodes[n].kind != "terminal"} - closing
    got_dead = {f.where for f in report.warnings if f.code == "DeadEnd"}
    assert got_dead == expect_dead


# -- pack-context checks ------------------------------------------------------


def test_missing_default_text_and_unknown_npc_and_locale():
    pack = load_pack("content")
    raw = {
        "schema_version": 1,
        "id": "gen",
        "default_locale": "en",
        "supported_locales": ["en", "xx"],
        "title_key": "no.such.key",
        "entry_node": "n0",
        "nodes": {
            "n0": {"kind": "dialogue", "text_key": "tutorial.welcome.text",
                   "speaker": "stranger",
                   "choices": [{"id": "c", "text_key": "tutorial.welcome.choice.continue",
                                "target": "n1"}]},
            "n1": TERMINAL,
        },
    }
    raw["nodes"]["n1"] = dict(TERMINAL, text_key="tutorial.finish_pass.text",
                              outcome_key="outcome.tutorial.pass")
    report = validate_graph(parse_scenario(json.dumps(raw)), pack)
    errors = report.error_codes()
    assert "MissingDefaultText" in errors
    assert "UnknownNpc" in errors
    assert "UnknownLocale" in errors


def test_missing_translation_is_a_warning():
    pack = load_pack("content")
    del pack.bundles["pt"]["tutorial.welcome.text"]
    doc = pack.scenario("tutorial-basics")
    report = validate_graph(doc, pack)
    assert report.ok
    assert "MissingTranslation" in report.warning_codes()


def test_shipped_pack_is_clean():
    report = validate_pack(load_pack("content"))
    assert report.ok
    assert not report.warnings


def test_validate_pack_prefixes_scenario_ids():
    pack = load_pack("content")
    del pack.bundles["en"]["tutorial.welcome.text"]
    report = validate_pack(pack)
    assert any(f.where.startswith("tutorial-basics:") for f in report.errors)
