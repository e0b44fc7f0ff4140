"""Bridges scenario activity nodes to the minigame modules.

An activity node carries an opaque params block; the registry knows how to
interpret it per activity kind, how to judge a submitted result block, and
which exit outcomes the scenario must provide.  Judging is pure, so engine
replay stays deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import carbon, windfarm
from .carbon import CarbonLedger, EmissionCatalog
from .errors import InvalidActivityResult, SchemaError
from .scenario import ActivityRef, CarbonDelta, Effect, ScoreDelta
from .windfarm import FarmLayout, WindFarmChallenge

OUTCOME_IDS = {
    "wind_farm": frozenset({"pass", "fail"}),
    "carbon_day": frozenset({"low", "medium", "high"}),
}


@dataclass(frozen=True)
class ActivityOutcome:
    outcome_id: str
    effects: tuple[Effect, ...]
    feedback_key: str
    detail: dict


def _points_map(params: dict, outcomes: frozenset[str], kind: str) -> dict[str, int]:
    raw = params.get("points")
    if not isinstance(raw, dict):
        raise SchemaError(f"{kind} params need a points map", path="params.points")
    extra = set(raw) - outcomes
    if extra:
        raise SchemaError(f"points for unknown outcome {sorted(extra)[0]!r}", path="params.points")
    points = {}
    for outcome in sorted(outcomes):
        v = raw.get(outcome, 0)
        if isinstance(v, bool) or not isinstance(v, int):
            raise SchemaError(f"points.{outcome} must be an integer", path=f"params.points.{outcome}")
        points[outcome] = v
    return points


@dataclass
class ActivityRegistry:
    """Resolves activity params and judges result blocks.

    Named carbon catalogs come from the content pack; tests may pass their
    own mapping or inline a catalog in the params block.
    """

    catalogs: dict[str, EmissionCatalog] = field(default_factory=dict)

    # -- static checks ---------------------------------------------------

    def check_ref(self, ref: ActivityRef, *, resolve_catalogs: bool = True) -> list[str]:
        """Problems that would make this activity fail at runtime; [] if none.

        With resolve_catalogs False, named-catalog references are shape-checked
        only (standalone document validation has no pack to look them up in).
        """
        problems = []
        try:
            if ref.kind == "wind_farm":
                self._windfarm_setup(ref.params)
            elif ref.kind == "carbon_day":
                self._carbon_setup(ref.params, resolve=resolve_catalogs)
            else:
                problems.append(f"unknown activity kind {ref.kind!r}")
        except SchemaError as exc:
            problems.append(str(exc))
        return problems

    def outcome_ids(self, kind: str) -> frozenset[str]:
        return OUTCOME_IDS[kind]

    # -- wind farm --------------------------------------------------------

    def _windfarm_setup(self, params: dict) -> tuple[WindFarmChallenge, float, dict[str, int]]:
        ch = windfarm.challenge_from_params(params)
        pass_score = params.get("pass_score")
        if isinstance(pass_score, bool) or not isinstance(pass_score, (int, float)):
            raise SchemaError("wind_farm params need a numeric pass_score", path="params.pass_score")
        points = _points_map(params, OUTCOME_IDS["wind_farm"], "wind_farm")
        return ch, float(pass_score), points

    def windfarm_challenge(self, ref: ActivityRef) -> WindFarmChallenge:
        ch, _, _ = self._windfarm_setup(ref.params)
        return ch

    def _judge_windfarm(self, params: dict, result: dict) -> ActivityOutcome:
        ch, pass_score, points = self._windfarm_setup(params)
        layout = parse_layout_result(result, ch)
        ev = windfarm.evaluate_layout(ch, layout)
        passed = ev.feasible and ev.score >= pass_score
        outcome = "pass" if passed else "fail"
        return ActivityOutcome(
            outcome_id=outcome,
            effects=(ScoreDelta(points[outcome]),),
            feedback_key=f"windfarm.feedback.{outcome}",
            detail={
                "kind": "wind_farm",
                "turbines": len(layout.placements),
                "net_energy": ev.net_energy,
                "env_penalty": ev.env_penalty,
                "layout_score": ev.score,
                "pass_score": pass_score,
                "feasible": ev.feasible,
            },
        )

    # -- carbon day ---------------------------------------------------------

    def _carbon_setup(self, params: dict, *,
                      resolve: bool = True) -> tuple[EmissionCatalog | None, float, dict[str, int]]:
        if "catalog_inline" in params:
            catalog = carbon.catalog_from_json(params["catalog_inline"], path="params.catalog_inline")
        else:
            name = params.get("catalog")
            if not isinstance(name, str) or not name:
                raise SchemaError("carbon_day params need a catalog name or catalog_inline",
                                  path="params.catalog")
            if not resolve:
                catalog = None
            elif name not in self.catalogs:
                raise SchemaError(f"catalog {name!r} is not loaded", path="params.catalog")
            else:
                catalog = self.catalogs[name]
        budget = params.get("budget_kg")
        if isinstance(budget, bool) or not isinstance(budget, (int, float)) or budget <= 0:
            raise SchemaError("carbon_day params need budget_kg > 0", path="params.budget_kg")
        points = _points_map(params, OUTCOME_IDS["carbon_day"], "carbon_day")
        return catalog, float(budget), points

    def carbon_setup(self, ref: ActivityRef) -> tuple[EmissionCatalog, float]:
        catalog, budget, _ = self._carbon_setup(ref.params)
        return catalog, budget

    def _judge_carbon(self, params: dict, result: dict) -> ActivityOutcome:
        catalog, budget, points = self._carbon_setup(params)
        ledger = parse_ledger_result(result, catalog)
        assessment = carbon.assess_footprint(ledger.total, budget)
        tier = assessment.tier
        return ActivityOutcome(
            outcome_id=tier,
            effects=(ScoreDelta(points[tier]), CarbonDelta(ledger.total, "carbon.reason.day")),
            feedback_key=assessment.feedback_key,
            detail={
                "kind": "carbon_day",
                "entries": len(ledger.entries),
                "total_kg": ledger.total,
                "budget_kg": budget,
                "tier": tier,
            },
        )

    # -- dispatch -----------------------------------------------------------

    def judge(self, ref: ActivityRef, result: dict) -> ActivityOutcome:
        if not isinstance(result, dict):
            raise InvalidActivityResult("result block must be an object")
        if ref.kind == "wind_farm":
            return self._judge_windfarm(ref.params, result)
        if ref.kind == "carbon_day":
            return self._judge_carbon(ref.params, result)
        raise InvalidActivityResult(f"unknown activity kind {ref.kind!r}")


def parse_layout_result(result: dict, ch: WindFarmChallenge) -> FarmLayout:
    """Result block for wind_farm: {"placements": [[x, y], ...]}."""
    extra = set(result) - {"placements"}
    if extra:
        raise InvalidActivityResult(f"unknown result field {sorted(extra)[0]!r}")
    raw = result.get("placements", [])
    if not isinstance(raw, list):
        raise InvalidActivityResult("placements must be a list of [x, y] pairs")
    placements = set()
    for item in raw:
        if (not isinstance(item, (list, tuple)) or len(item) != 2
                or any(isinstance(c, bool) or not isinstance(c, int) for c in item)):
            raise InvalidActivityResult(f"bad placement {item!r}")
        x, y = item
        if not ch.in_grid(x, y):
            raise InvalidActivityResult(f"placement ({x}, {y}) outside grid")
        if (x, y) in placements:
            raise InvalidActivityResult(f"duplicate placement ({x}, {y})")
        placements.add((x, y))
    return FarmLayout(frozenset(placements))


def parse_ledger_result(result: dict, catalog: EmissionCatalog) -> CarbonLedger:
    """Result block for carbon_day: {"entries": [{"option_id": ..., "quantity": ...}, ...]}."""
    extra = set(result) - {"entries"}
    if extra:
        raise InvalidActivityResult(f"unknown result field {sorted(extra)[0]!r}")
    raw = result.get("entries", [])
    if not isinstance(raw, list):
        raise InvalidActivityResult("entries must be a list")
    ledger = CarbonLedger()
    for i, item in enumerate(raw):
        if not isinstance(item, dict) or set(item) != {"option_id", "quantity"}:
            raise InvalidActivityResult(f"entry {i} must have option_id and quantity")
        quantity = item["quantity"]
        if isinstance(quantity, bool) or not isinstance(quantity, (int, float)):
            raise InvalidActivityResult(f"entry {i} quantity must be a number")
        try:
            ledger = carbon.record_activity(catalog, ledger, item["option_id"], float(quantity))
        except Exception as exc:
            raise InvalidActivityResult(f"entry {i}: {exc}") from exc
    return ledger
