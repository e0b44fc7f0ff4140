"""Static checks for scenario documents and whole content packs.

Errors mark documents the engine must refuse to run; warnings mark content
that runs but is probably not what the author meant (orphan nodes, missing
translations).  Findings carry a stable code plus the node or path involved.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

from . import conditions
from .activities import ActivityRegistry
from .content import ContentPack, resolve_text
from .conditions import ALWAYS_TRUE
from .errors import TypeMismatch, UndeclaredVariable, UnknownKey
from .scenario import (
    RESERVED_VARIABLES,
    AddVar,
    CarbonDelta,
    Node,
    ScenarioDocument,
    ScoreDelta,
    SetVar,
)

# Feedback keys the engine emits on its own; content must localize them
# when the relevant node kinds appear.
QUIZ_FEEDBACK_KEY = "quiz.feedback.incorrect"
ACTIVITY_FEEDBACK_KEYS = {
    "wind_farm": ("windfarm.feedback.pass", "windfarm.feedback.fail"),
    "carbon_day": ("carbon.feedback.low", "carbon.feedback.medium", "carbon.feedback.high"),
}


@dataclass(frozen=True)
class Finding:
    code: str
    message: str
    where: str = ""

    def format(self) -> str:
        loc = f" at {self.where}" if self.where else ""
        return f"{self.code}{loc}: {self.message}"


@dataclass
class ValidationReport:
    errors: list[Finding] = field(default_factory=list)
    warnings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def error_codes(self) -> set[str]:
        return {f.code for f in self.errors}

    def warning_codes(self) -> set[str]:
        return {f.code for f in self.warnings}

    def format_lines(self) -> list[str]:
        return ([f"error {f.format()}" for f in self.errors]
                + [f"warning {f.format()}" for f in self.warnings])

    def extend(self, other: "ValidationReport") -> None:
        self.errors.extend(other.errors)
        self.warnings.extend(other.warnings)


def _variable_types(doc: ScenarioDocument) -> dict[str, str]:
    # Reserved names are engine-provided and readable by any condition.
    types = {name: conditions.value_type(value) for name, value in doc.variables.items()}
    types.setdefault("score", "int")
    return types


def referenced_text_keys(doc: ScenarioDocument) -> Iterator[tuple[str, str]]:
    """All (text_key, where) pairs a session over this document may resolve."""
    yield doc.title_key, "title_key"
    for i, key in enumerate(doc.learning_objectives):
        yield key, f"learning_objectives[{i}]"
    for node_id, node in doc.nodes.items():
        yield node.text_key, node_id
        for choice in node.choices:
            yield choice.text_key, f"{node_id}.{choice.id}"
        for question in node.questions:
            yield question.text_key, f"{node_id}.{question.id}"
            yield question.hint_key, f"{node_id}.{question.id}"
            for option in question.options:
                yield option.text_key, f"{node_id}.{question.id}.{option.id}"
        if node.questions:
            yield QUIZ_FEEDBACK_KEY, node_id
        if node.activity_ref is not None and node.activity_ref.kind in ACTIVITY_FEEDBACK_KEYS:
            for key in ACTIVITY_FEEDBACK_KEYS[node.activity_ref.kind]:
                yield key, node_id
        if node.outcome_key is not None:
            yield node.outcome_key, node_id


def _check_effects(effects, types: dict[str, str], where: str, report: ValidationReport) -> None:
    for effect in effects:
        if isinstance(effect, (ScoreDelta, CarbonDelta)):
            continue
        name = effect.var
        if name in RESERVED_VARIABLES:
            report.errors.append(Finding(
                "ReservedVariable", f"effects may not write {name!r}", where))
            continue
        if name not in types:
            report.errors.append(Finding(
                "UndeclaredVariable", f"effect writes undeclared variable {name!r}", where))
            continue
        if isinstance(effect, SetVar):
            got = conditions.value_type(effect.value)
            if got != types[name]:
                report.errors.append(Finding(
                    "TypeMismatch",
                    f"set {name} expects {types[name]}, got {got}", where))
        elif isinstance(effect, AddVar) and types[name] != "int":
            report.errors.append(Finding(
                "TypeMismatch", f"add requires integer variable, {name} is {types[name]}", where))


def _check_conditions(doc: ScenarioDocument, types: dict[str, str],
                      report: ValidationReport) -> None:
    for node_id, node in doc.nodes.items():
        for choice in node.choices:
            if choice.condition is ALWAYS_TRUE:
                continue
            where = f"{node_id}.{choice.id}"
            try:
                conditions.check_types(choice.condition, types)
            except UndeclaredVariable as exc:
                report.errors.append(Finding("UndeclaredVariable", str(exc), where))
            except TypeMismatch as exc:
                report.errors.append(Finding("TypeMismatch", str(exc), where))


def reachable_from_entry(doc: ScenarioDocument) -> set[str]:
    """Breadth-first over the raw edge set; conditions deliberately ignored."""
    seen = set()
    queue = deque()
    if doc.entry_node in doc.nodes:
        seen.add(doc.entry_node)
        queue.append(doc.entry_node)
    while queue:
        node_id = queue.popleft()
        for target in doc.out_edges(doc.nodes[node_id]):
            if target in doc.nodes and target not in seen:
                seen.add(target)
                queue.append(target)
    return seen


def _can_reach_terminal(doc: ScenarioDocument) -> set[str]:
    incoming: dict[str, set[str]] = {node_id: set() for node_id in doc.nodes}
    for node_id, node in doc.nodes.items():
        for target in doc.out_edges(node):
            if target in incoming:
                incoming[target].add(node_id)
    seen = {node_id for node_id, node in doc.nodes.items() if node.kind == "terminal"}
    queue = deque(sorted(seen))
    while queue:
        node_id = queue.popleft()
        for source in sorted(incoming[node_id]):
            if source not in seen:
                seen.add(source)
                queue.append(source)
    return seen


def _check_structure(doc: ScenarioDocument, registry: ActivityRegistry,
                     resolve_catalogs: bool, report: ValidationReport) -> None:
    if doc.entry_node not in doc.nodes:
        report.errors.append(Finding(
            "DanglingTarget", f"entry node {doc.entry_node!r} does not exist", "entry_node"))
    if not any(node.kind == "terminal" for node in doc.nodes.values()):
        report.errors.append(Finding("NoTerminal", "document has no terminal node"))
    for node_id, node in doc.nodes.items():
        for target in doc.out_edges(node):
            if target not in doc.nodes:
                report.errors.append(Finding(
                    "DanglingTarget", f"edge points at missing node {target!r}", node_id))
        if node.activity_ref is not None:
            wanted = registry.outcome_ids(node.activity_ref.kind)
            if set(node.exits) != wanted:
                report.errors.append(Finding(
                    "ActivityExits",
                    f"exits must cover exactly {sorted(wanted)}, got {sorted(node.exits)}",
                    node_id))
            for problem in registry.check_ref(node.activity_ref,
                                              resolve_catalogs=resolve_catalogs):
                report.errors.append(Finding("ActivityParams", problem, node_id))


def _check_texts(doc: ScenarioDocument, pack: ContentPack, report: ValidationReport) -> None:
    other_locales = [loc for loc in doc.supported_locales if loc != doc.default_locale]
    for locale in doc.supported_locales:
        if locale not in pack.locales:
            report.errors.append(Finding(
                "UnknownLocale", f"pack ships no bundle for {locale!r}", "supported_locales"))
    seen = set()
    for key, where in referenced_text_keys(doc):
        if key in seen:
            continue
        seen.add(key)
        try:
            resolve_text(pack, key, doc.default_locale)
        except UnknownKey:
            report.errors.append(Finding(
                "MissingDefaultText", f"{key!r} does not resolve in default locale", where))
            continue
        for locale in other_locales:
            if key not in pack.bundles.get(locale, {}):
                report.warnings.append(Finding(
                    "MissingTranslation", f"{key!r} has no {locale} translation", where))
    for node_id, node in doc.nodes.items():
        if node.speaker is not None and node.speaker not in pack.npcs:
            report.errors.append(Finding(
                "UnknownNpc", f"speaker {node.speaker!r} is not registered", node_id))


def validate_graph(doc: ScenarioDocument, pack: ContentPack | None = None) -> ValidationReport:
    """Full static report; a document is runnable iff report.ok.

    Without a pack, text and NPC resolution are skipped and named carbon
    catalogs are shape-checked only.
    """
    report = ValidationReport()
    registry = ActivityRegistry(catalogs=pack.catalogs if pack else {})
    _check_structure(doc, registry, pack is not None, report)
    types = _variable_types(doc)
    _check_conditions(doc, types, report)
    for node_id, node in doc.nodes.items():
        _check_effects(node.on_enter_effects, types, node_id, report)
        for choice in node.choices:
            _check_effects(choice.effects, types, f"{node_id}.{choice.id}", report)
    if "score" in doc.variables:
        report.errors.append(Finding(
            "ReservedVariable", "'score' is engine-owned and cannot be declared", "variables"))

    reachable = reachable_from_entry(doc)
    for node_id in doc.nodes:
        if node_id not in reachable:
            report.warnings.append(Finding(
                "UnreachableNode", "not reachable from the entry node", node_id))
    closing = _can_reach_terminal(doc)
    for node_id, node in doc.nodes.items():
        if node.kind != "terminal" and node_id not in closing:
            report.warnings.append(Finding(
                "DeadEnd", "no terminal node is reachable from here", node_id))

    if pack is not None:
        _check_texts(doc, pack, report)
    return report


def validate_pack(pack: ContentPack) -> ValidationReport:
    """Pack-wide report: every scenario plus catalog and NPC text coverage."""
    report = ValidationReport()
    for doc in pack.scenarios.values():
        sub = validate_graph(doc, pack)
        prefix = doc.id
        report.errors.extend(
            Finding(f.code, f.message, f"{prefix}:{f.where}" if f.where else prefix)
            for f in sub.errors)
        report.warnings.extend(
            Finding(f.code, f.message, f"{prefix}:{f.where}" if f.where else prefix)
            for f in sub.warnings)

    other_locales = [loc for loc in pack.locales if loc != pack.default_locale]

    def check_key(key: str, where: str) -> None:
        try:
            resolve_text(pack, key, pack.default_locale)
        except UnknownKey:
            report.errors.append(Finding(
                "MissingDefaultText", f"{key!r} does not resolve in default locale", where))
            return
        for locale in other_locales:
            if key not in pack.bundles.get(locale, {}):
                report.warnings.append(Finding(
                    "MissingTranslation", f"{key!r} has no {locale} translation", where))

    for npc_id, npc in pack.npcs.items():
        check_key(npc.name_key, f"npcs.{npc_id}")
        check_key(npc.role_key, f"npcs.{npc_id}")
    for name, catalog in pack.catalogs.items():
        for options in catalog.categories.values():
            for option in options:
                check_key(option.label_key, f"catalogs.{name}.{option.option_id}")
    return report
