"""Content packs: scenario documents plus localized text bundles and NPCs.

A pack is a directory with a pack.json manifest naming the scenario files,
the locale bundles (strings.<locale>.json), the NPC registry, and any
emission catalogs.  Text lookup falls back to the pack's default locale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import carbon
from .carbon import EmissionCatalog
from .errors import ScenarioSyntaxError, SchemaError, UnknownKey
from .scenario import ScenarioDocument, parse_scenario

MANIFEST_NAME = "pack.json"


@dataclass(frozen=True)
class NpcInfo:
    name_key: str
    role_key: str


@dataclass
class ContentPack:
    pack_id: str
    default_locale: str
    locales: tuple[str, ...]
    scenarios: dict[str, ScenarioDocument] = field(default_factory=dict)
    bundles: dict[str, dict[str, str]] = field(default_factory=dict)
    npcs: dict[str, NpcInfo] = field(default_factory=dict)
    catalogs: dict[str, EmissionCatalog] = field(default_factory=dict)

    def scenario(self, scenario_id: str) -> ScenarioDocument:
        if scenario_id not in self.scenarios:
            raise UnknownKey(f"no scenario {scenario_id!r} in pack {self.pack_id!r}")
        return self.scenarios[scenario_id]


def resolve_text(pack: ContentPack, key: str, locale: str) -> str:
    """Locale's string for key, falling back to the pack default locale.

    Pure lookup: an unknown locale simply finds nothing and falls back.
    """
    bundle = pack.bundles.get(locale)
    if bundle is not None and key in bundle:
        return bundle[key]
    default = pack.bundles.get(pack.default_locale, {})
    if key in default:
        return default[key]
    raise UnknownKey(f"text key {key!r} missing in {locale!r} and in default "
                     f"locale {pack.default_locale!r}")


def _require(manifest: dict, field_name: str, kind: type, path: str):
    if field_name not in manifest:
        raise SchemaError(f"missing field {field_name!r}", path=path)
    value = manifest[field_name]
    if isinstance(value, bool) or not isinstance(value, kind):
        raise SchemaError(f"{field_name} must be {kind.__name__}", path=f"{path}.{field_name}")
    return value


def _parse_manifest(raw: dict) -> dict:
    allowed = {"id", "default_locale", "locales", "scenarios", "npcs", "catalogs"}
    extra = set(raw) - allowed
    if extra:
        raise SchemaError(f"unknown field {sorted(extra)[0]!r}", path="pack")
    manifest = {
        "id": _require(raw, "id", str, "pack"),
        "default_locale": _require(raw, "default_locale", str, "pack"),
        "locales": _require(raw, "locales", list, "pack"),
        "scenarios": _require(raw, "scenarios", list, "pack"),
        "npcs": raw.get("npcs", {}),
        "catalogs": raw.get("catalogs", {}),
    }
    locales = manifest["locales"]
    if (not locales or any(not isinstance(t, str) or not t for t in locales)
            or len(set(locales)) != len(locales)):
        raise SchemaError("locales must be distinct non-empty tags", path="pack.locales")
    if manifest["default_locale"] not in locales:
        raise SchemaError("default_locale must be listed in locales", path="pack.default_locale")
    files = manifest["scenarios"]
    if any(not isinstance(f, str) or not f for f in files):
        raise SchemaError("scenarios must be file names", path="pack.scenarios")
    if not isinstance(manifest["npcs"], dict):
        raise SchemaError("npcs must be a map", path="pack.npcs")
    if not isinstance(manifest["catalogs"], dict):
        raise SchemaError("catalogs must be a map", path="pack.catalogs")
    return manifest


def _parse_npcs(raw: dict) -> dict[str, NpcInfo]:
    npcs = {}
    for npc_id, info in raw.items():
        path = f"pack.npcs.{npc_id}"
        if not isinstance(info, dict) or set(info) != {"name_key", "role_key"}:
            raise SchemaError("npc entries need exactly name_key and role_key", path=path)
        if any(not isinstance(info[k], str) or not info[k] for k in ("name_key", "role_key")):
            raise SchemaError("npc keys must be non-empty strings", path=path)
        npcs[npc_id] = NpcInfo(name_key=info["name_key"], role_key=info["role_key"])
    return npcs


def _load_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioSyntaxError(f"cannot read {path.name}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(f"{path.name} is not valid JSON: {exc}") from exc


def _load_bundle(path: Path, locale: str) -> dict[str, str]:
    raw = _load_json(path)
    if not isinstance(raw, dict):
        raise SchemaError("bundle must be an object", path=path.name)
    for key, text in raw.items():
        if not isinstance(text, str):
            raise SchemaError(f"value for {key!r} must be a string", path=f"{path.name}.{key}")
    return dict(raw)


def load_pack(directory: str | Path) -> ContentPack:
    """Read pack.json and everything it names; strict about shape."""
    root = Path(directory)
    manifest = _parse_manifest(_load_json(root / MANIFEST_NAME))

    scenarios: dict[str, ScenarioDocument] = {}
    for name in manifest["scenarios"]:
        doc = parse_scenario((root / name).read_bytes())
        if doc.id in scenarios:
            raise SchemaError(f"duplicate scenario id {doc.id!r}", path=f"pack.scenarios.{name}")
        scenarios[doc.id] = doc

    bundles = {
        locale: _load_bundle(root / f"strings.{locale}.json", locale)
        for locale in manifest["locales"]
    }

    catalogs = {}
    for name, file_name in manifest["catalogs"].items():
        if not isinstance(file_name, str) or not file_name:
            raise SchemaError("catalog entries must be file names", path=f"pack.catalogs.{name}")
        catalogs[name] = carbon.load_catalog((root / file_name).read_bytes())

    return ContentPack(
        pack_id=manifest["id"],
        default_locale=manifest["default_locale"],
        locales=tuple(manifest["locales"]),
        scenarios=scenarios,
        bundles=bundles,
        npcs=_parse_npcs(manifest["npcs"]),
        catalogs=catalogs,
    )
