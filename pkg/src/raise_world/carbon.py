"""Carbon Champions: a daily-choices carbon ledger with tiered feedback.

Emission factors are configuration data, not scientific claims; the shipped
catalog is illustrative and deployments can substitute regional tables.
Totals use Neumaier compensated summation so the ledger invariant
(total == sum of entries within 1e-9 kg) holds at thousands of entries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import (
    NegativeQuantity,
    NonPositiveBudget,
    ScenarioSyntaxError,
    SchemaError,
    UnknownOption,
)

CATEGORIES = ("meal", "transport", "energy")
UNITS = ("meal", "km", "kWh")
TIERS = ("low", "medium", "high")


@dataclass(frozen=True)
class EmissionOption:
    option_id: str
    label_key: str
    factor: float  # kg CO2e per unit
    unit: str


@dataclass(frozen=True)
class EmissionCatalog:
    categories: dict[str, tuple[EmissionOption, ...]]

    def find(self, option_id: str) -> tuple[str, EmissionOption]:
        for category, options in self.categories.items():
            for opt in options:
                if opt.option_id == option_id:
                    return category, opt
        raise UnknownOption(f"no option {option_id!r} in catalog")

    def option_ids(self) -> list[str]:
        return [o.option_id for opts in self.categories.values() for o in opts]


@dataclass(frozen=True)
class LedgerEntry:
    option_id: str
    category: str
    quantity: float
    emitted: float  # factor * quantity, kg CO2e


@dataclass(frozen=True)
class CarbonLedger:
    entries: tuple[LedgerEntry, ...] = ()
    total: float = 0.0


@dataclass(frozen=True)
class FootprintAssessment:
    tier: str
    feedback_key: str
    total: float
    budget: float


def neumaier_sum(values) -> float:
    """Compensated summation; exactness oracle-grade for ledger-sized inputs."""
    total = 0.0
    comp = 0.0
    for v in values:
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    return total + comp


def record_activity(catalog: EmissionCatalog, ledger: CarbonLedger,
                    option_id: str, quantity: float) -> CarbonLedger:
    """Append one activity; returns a new ledger with the total recomputed."""
    if quantity < 0:
        raise NegativeQuantity(f"quantity {quantity} for {option_id!r}")
    category, opt = catalog.find(option_id)
    entry = LedgerEntry(option_id=option_id, category=category,
                        quantity=float(quantity), emitted=opt.factor * float(quantity))
    entries = ledger.entries + (entry,)
    return CarbonLedger(entries=entries, total=neumaier_sum(e.emitted for e in entries))


def ledger_total(ledger: CarbonLedger) -> float:
    return ledger.total


def assess_footprint(total: float, budget: float) -> FootprintAssessment:
    """Three-way feedback tier: low <= budget < medium <= 2*budget < high."""
    if budget <= 0:
        raise NonPositiveBudget(f"budget {budget}")
    if total <= budget:
        tier = "low"
    elif total <= 2 * budget:
        tier = "medium"
    else:
        tier = "high"
    return FootprintAssessment(tier=tier, feedback_key=f"carbon.feedback.{tier}",
                               total=total, budget=budget)


# --- catalog file ------------------------------------------------------------

def catalog_from_json(raw: dict, path: str = "$") -> EmissionCatalog:
    if not isinstance(raw, dict):
        raise SchemaError("catalog must be an object", path=path)
    obj = dict(raw)
    obj.pop("notes", None)  # free-text header documenting the factors' provenance
    version = obj.pop("schema_version", 1)
    if version != 1:
        raise SchemaError(f"unsupported catalog schema_version {version}", path=f"{path}.schema_version")
    raw_categories = obj.pop("categories", None)
    if not isinstance(raw_categories, dict):
        raise SchemaError("missing categories object", path=f"{path}.categories")
    if obj:
        raise SchemaError(f"unknown field {sorted(obj)[0]!r}", path=path)

    seen: set[str] = set()
    categories: dict[str, tuple[EmissionOption, ...]] = {}
    for category, raw_options in raw_categories.items():
        cpath = f"{path}.categories.{category}"
        if category not in CATEGORIES:
            raise SchemaError(f"unknown category {category!r}", path=cpath)
        if not isinstance(raw_options, list) or not raw_options:
            raise SchemaError("category must be a non-empty list", path=cpath)
        options = []
        for i, raw_opt in enumerate(raw_options):
            opath = f"{cpath}[{i}]"
            if not isinstance(raw_opt, dict):
                raise SchemaError("option must be an object", path=opath)
            o = dict(raw_opt)
            oid = o.pop("option_id", None)
            label = o.pop("label_key", None)
            factor = o.pop("factor", None)
            unit = o.pop("unit", None)
            if o:
                raise SchemaError(f"unknown field {sorted(o)[0]!r}", path=opath)
            if not isinstance(oid, str) or not oid:
                raise SchemaError("option_id must be a non-empty string", path=f"{opath}.option_id")
            if not isinstance(label, str) or not label:
                raise SchemaError("label_key must be a non-empty string", path=f"{opath}.label_key")
            if isinstance(factor, bool) or not isinstance(factor, (int, float)) or factor < 0:
                raise SchemaError("factor must be a number >= 0", path=f"{opath}.factor")
            if unit not in UNITS:
                raise SchemaError(f"unit must be one of {UNITS}", path=f"{opath}.unit")
            # option ids are globally unique so ledger entries need no category qualifier
            if oid in seen:
                raise SchemaError(f"duplicate option_id {oid!r}", path=opath)
            seen.add(oid)
            options.append(EmissionOption(option_id=oid, label_key=label,
                                          factor=float(factor), unit=unit))
        categories[category] = tuple(options)
    return EmissionCatalog(categories=categories)


def load_catalog(data: bytes | str) -> EmissionCatalog:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(f"malformed catalog JSON: {exc}") from exc
    return catalog_from_json(raw)


def catalog_to_json(catalog: EmissionCatalog) -> dict:
    return {
        "schema_version": 1,
        "categories": {
            category: [
                {"option_id": o.option_id, "label_key": o.label_key,
                 "factor": o.factor, "unit": o.unit}
                for o in options
            ]
            for category, options in catalog.categories.items()
        },
    }
