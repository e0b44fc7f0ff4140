"""Content pack loading and localized text resolution."""

import json
from pathlib import Path

import pytest

from raise_world.content import ContentPack, load_pack, resolve_text
from raise_world.errors import ScenarioSyntaxError, SchemaError, UnknownKey

CONTENT = Path(__file__).resolve().parents[1] / "content"

TINY_SCENARIO = {
    "schema_version": 1,
    "id": "mini",
    "default_locale": "en",
    "supported_locales": ["en"],
    "title_key": "mini.title",
    "entry_node": "start",
    "variables": {},
    "nodes": {
        "start": {"kind": "info", "text_key": "mini.start", "choices": [
            {"id": "go", "text_key": "mini.go", "target": "end"}]},
        "end": {"kind": "terminal", "text_key": "mini.end", "outcome_key": "mini.done"},
    },
}


def write_pack(root: Path, manifest=None, bundles=None, scenarios=None):
    manifest = manifest or {
        "id": "mini-pack", "default_locale": "en", "locales": ["en", "el"],
        "scenarios": ["mini.scenario.json"],
        "npcs": {"guide": {"name_key": "npc.guide.name", "role_key": "npc.guide.role"}},
        "catalogs": {},
    }
    (root / "pack.json").write_text(json.dumps(manifest))
    for name, doc in (scenarios or {"mini.scenario.json": TINY_SCENARIO}).items():
        (root / name).write_text(json.dumps(doc))
    bundles = bundles if bundles is not None else {
        "en": {"mini.title": "Mini", "mini.start": "Hi", "mini.go": "Go",
               "mini.end": "End", "mini.done": "Done",
               "npc.guide.name": "Io", "npc.guide.role": "Guide"},
        "el": {"mini.title": "Μίνι"},
    }
    for locale, strings in bundles.items():
        (root / f"strings.{locale}.json").write_text(
            json.dumps(strings, ensure_ascii=False))
    return root


def test_shipped_pack_loads(tmp_path):
    pack = load_pack(CONTENT)
    assert pack.pack_id == "raise-starter"
    assert pack.default_locale == "en"
    assert set(pack.locales) == {"en", "el", "it", "pt"}
    assert set(pack.scenarios) == {"tutorial-basics", "windfarm-challenge",
                                   "carbon-champions", "lost-in-waste"}
    assert set(pack.npcs) == {"guide", "engineer_nora", "teacher_elena", "janitor_max"}
    assert "daily" in pack.catalogs
    assert pack.catalogs["daily"].find("meal_veggie")[0] == "meal"


def test_scenario_lookup(tmp_path):
    pack = load_pack(write_pack(tmp_path))
    assert pack.scenario("mini").id == "mini"
    with pytest.raises(UnknownKey):
        pack.scenario("ghost")


def test_resolve_text_fallback_chain(tmp_path):
    pack = load_pack(write_pack(tmp_path))
    assert resolve_text(pack, "mini.title", "el") == "Μίνι"
    assert resolve_text(pack, "mini.start", "el") == "Hi"     # el misses it
    assert resolve_text(pack, "mini.start", "xx") == "Hi"     # unknown locale
    with pytest.raises(UnknownKey):
        resolve_text(pack, "mini.nowhere", "el")


@pytest.mark.parametrize("mutate,exc", [
    (lambda m: m.update(flavour="salty"), SchemaError),
    (lambda m: m.pop("id"), SchemaError),
    (lambda m: m.update(default_locale="fr"), SchemaError),
    (lambda m: m.update(locales=["en", "en"]), SchemaError),
    (lambda m: m.update(locales=[]), SchemaError),
    (lambda m: m.update(scenarios=[""]), SchemaError),
    (lambda m: m.update(npcs={"guide": {"name_key": "k"}}), SchemaError),
    (lambda m: m.update(npcs={"guide": {"name_key": "", "role_key": "k"}}), SchemaError),
    (lambda m: m.update(npcs=[]), SchemaError),
    (lambda m: m.update(catalogs={"daily": 3}), SchemaError),
])
def test_manifest_shape_errors(tmp_path, mutate, exc):
    root = write_pack(tmp_path)
    manifest = json.loads((root / "pack.json").read_text())
    mutate(manifest)
    (root / "pack.json").write_text(json.dumps(manifest))
    with pytest.raises(exc):
        load_pack(root)


def test_duplicate_scenario_id_rejected(tmp_path):
    other = dict(TINY_SCENARIO)
    root = write_pack(tmp_path, manifest={
        "id": "p", "default_locale": "en", "locales": ["en"],
        "scenarios": ["mini.scenario.json", "copy.scenario.json"],
    }, scenarios={"mini.scenario.json": TINY_SCENARIO,
                  "copy.scenario.json": other},
        bundles={"en": {}})
    with pytest.raises(SchemaError) as excinfo:
        load_pack(root)
    assert "duplicate scenario id" in str(excinfo.value)


def test_missing_bundle_file(tmp_path):
    root = write_pack(tmp_path, bundles={"en": {}})  # no strings.el.json
    with pytest.raises(ScenarioSyntaxError):
        load_pack(root)


def test_bundle_values_must_be_strings(tmp_path):
    root = write_pack(tmp_path, bundles={"en": {"mini.title": 7}, "el": {}})
    with pytest.raises(SchemaError):
        load_pack(root)


def test_malformed_manifest_json(tmp_path):
    root = write_pack(tmp_path)
    (root / "pack.json").write_text("{broken")
    with pytest.raises(ScenarioSyntaxError):
        load_pack(root)


def test_missing_manifest(tmp_path):
    with pytest.raises(ScenarioSyntaxError):
        load_pack(tmp_path)


def test_resolve_text_without_default_bundle():
    pack = ContentPack(pack_id="p", default_locale="en", locales=("en",))
    with pytest.raises(UnknownKey):
        resolve_text(pack, "any.key", "en")
