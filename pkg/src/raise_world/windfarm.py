"""Wind Farm Challenge: site turbines on a grid under budget and siting constraints.

The turbine model is the conventional cut-in / rated / cut-out power curve
(cubic between cut-in and rated).  Wake interaction is a neighbor-count
penalty rather than a directional model: each turbine loses 10% of its
gross energy per other turbine within Chebyshev distance 2, capped at 50%.
That keeps the spacing-versus-density trade-off while staying hand-checkable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import (
    Empty,
    InstanceTooLarge,
    NegativeWindSpeed,
    Occupied,
    OutOfGrid,
    OverBudget,
    Protected,
    SchemaError,
    TooMany,
)

ZONES = ("open", "protected", "residential")

CUT_IN = 3.0
RATED_SPEED = 12.0
CUT_OUT = 25.0
RATED_POWER_MW = 2.0

WAKE_RADIUS = 2          # Chebyshev distance within which turbines interact
WAKE_PER_NEIGHBOR = 0.1
WAKE_CAP = 0.5
PENALTY_PROTECTED = 4    # points per turbine adjacent (Chebyshev <= 1) to protected
PENALTY_RESIDENTIAL = 2  # points per turbine adjacent to residential

ORACLE_MAX_CELLS = 16
ORACLE_MAX_TURBINES = 4


@dataclass(frozen=True)
class Cell:
    wind_speed: float
    zone: str


@dataclass(frozen=True)
class ScoreWeights:
    energy: float = 1.0   # per MWh of net energy
    budget: float = 0.5   # per currency unit remaining
    env: float = 500.0    # per environmental penalty point


@dataclass(frozen=True)
class WindFarmChallenge:
    width: int
    height: int
    cells: tuple[tuple[Cell, ...], ...]  # rows[y][x]
    budget: float
    turbine_cost: float
    max_turbines: int
    hours: float = 8760.0
    weights: ScoreWeights = field(default_factory=ScoreWeights)

    def in_grid(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def cell(self, x: int, y: int) -> Cell:
        if not self.in_grid(x, y):
            raise OutOfGrid(f"cell ({x}, {y}) outside {self.width}x{self.height} grid")
        return self.cells[y][x]

    def buildable_cells(self) -> list[tuple[int, int]]:
        return [
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if self.cells[y][x].zone != "protected"
        ]


@dataclass(frozen=True)
class FarmLayout:
    placements: frozenset[tuple[int, int]] = frozenset()

    def sorted_placements(self) -> list[tuple[int, int]]:
        return sorted(self.placements)


@dataclass(frozen=True)
class Violation:
    code: str
    cell: tuple[int, int] | None = None


@dataclass(frozen=True)
class LayoutEvaluation:
    feasible: bool
    violations: tuple[Violation, ...]
    gross_energy: float
    wake_loss: float
    net_energy: float
    total_cost: float
    budget_remaining: float
    env_penalty: int
    score: float | None  # reported only when feasible

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "violations": [
                {"code": v.code, "cell": list(v.cell) if v.cell else None}
                for v in self.violations
            ],
            "gross_energy": self.gross_energy,
            "wake_loss": self.wake_loss,
            "net_energy": self.net_energy,
            "total_cost": self.total_cost,
            "budget_remaining": self.budget_remaining,
            "env_penalty": self.env_penalty,
            "score": self.score,
        }


def turbine_power(v: float) -> float:
    """Power output in MW at hub-height wind speed v (m/s).

    Zero below cut-in (3 m/s) and above cut-out (25 m/s), rated 2.0 MW
    on [12, 25], cubic in between; continuous at both knees.
    """
    if v < 0:
        raise NegativeWindSpeed(f"wind speed {v} m/s")
    if v < CUT_IN or v > CUT_OUT:
        return 0.0
    if v >= RATED_SPEED:
        return RATED_POWER_MW
    return RATED_POWER_MW * (v**3 - CUT_IN**3) / (RATED_SPEED**3 - CUT_IN**3)


def _chebyshev(a: tuple[int, int], b: tuple[int, int]) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def _cell_penalty(ch: WindFarmChallenge, x: int, y: int) -> int:
    near_protected = near_residential = False
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            nx, ny = x + dx, y + dy
            if not ch.in_grid(nx, ny):
                continue
            zone = ch.cells[ny][nx].zone
            if zone == "protected":
                near_protected = True
            elif zone == "residential":
                near_residential = True
    points = 0
    if near_protected:
        points += PENALTY_PROTECTED
    if near_residential:
        points += PENALTY_RESIDENTIAL
    return points


def evaluate_layout(ch: WindFarmChallenge, layout: FarmLayout) -> LayoutEvaluation:
    """Score a layout: energy minus wake losses, budget use, and siting penalties.

    Permutation-invariant by construction (placements are a set).  The
    score is omitted for infeasible layouts.
    """
    placements = layout.sorted_placements()
    for x, y in placements:
        if not ch.in_grid(x, y):
            raise OutOfGrid(f"placement ({x}, {y}) outside grid")

    violations: list[Violation] = []
    for x, y in placements:
        if ch.cells[y][x].zone == "protected":
            violations.append(Violation("TurbineOnProtected", (x, y)))
    total_cost = len(placements) * ch.turbine_cost
    if total_cost > ch.budget:
        violations.append(Violation("OverBudget"))
    if len(placements) > ch.max_turbines:
        violations.append(Violation("TooManyTurbines"))

    gross = 0.0
    wake = 0.0
    env_penalty = 0
    for p in placements:
        g = turbine_power(ch.cells[p[1]][p[0]].wind_speed) * ch.hours
        neighbors = sum(1 for q in placements if q != p and _chebyshev(p, q) <= WAKE_RADIUS)
        gross += g
        wake += g * min(WAKE_CAP, WAKE_PER_NEIGHBOR * neighbors)
        env_penalty += _cell_penalty(ch, p[0], p[1])

    net = gross - wake
    remaining = ch.budget - total_cost
    feasible = not violations
    score = None
    if feasible:
        score = ch.weights.energy * net + ch.weights.budget * remaining - ch.weights.env * env_penalty
    return LayoutEvaluation(
        feasible=feasible, violations=tuple(violations),
        gross_energy=gross, wake_loss=wake, net_energy=net,
        total_cost=total_cost, budget_remaining=remaining,
        env_penalty=env_penalty, score=score,
    )


def apply_action(ch: WindFarmChallenge, layout: FarmLayout, action: str, x: int, y: int) -> FarmLayout:
    """Apply one interactive edit ("place" or "remove") and return the new layout."""
    if not ch.in_grid(x, y):
        raise OutOfGrid(f"cell ({x}, {y}) outside grid")
    pos = (x, y)
    if action == "place":
        if pos in layout.placements:
            raise Occupied(f"cell {pos} already has a turbine")
        if ch.cells[y][x].zone == "protected":
            raise Protected(f"cell {pos} is a protected zone")
        if len(layout.placements) + 1 > ch.max_turbines:
            raise TooMany(f"limit is {ch.max_turbines} turbines")
        if (len(layout.placements) + 1) * ch.turbine_cost > ch.budget:
            raise OverBudget(f"budget {ch.budget} cannot fund another turbine")
        return FarmLayout(layout.placements | {pos})
    if action == "remove":
        if pos not in layout.placements:
            raise Empty(f"cell {pos} has no turbine")
        return FarmLayout(layout.placements - {pos})
    raise SchemaError(f"unknown action {action!r}")


def brute_force_best(ch: WindFarmChallenge) -> tuple[FarmLayout, LayoutEvaluation]:
    """Exhaustive optimum over all feasible layouts; test oracle for small grids.

    Ties break toward fewer turbines, then the lexicographically smallest
    placement set, so the result is deterministic.
    """
    buildable = ch.buildable_cells()
    if len(buildable) > ORACLE_MAX_CELLS or ch.max_turbines > ORACLE_MAX_TURBINES:
        raise InstanceTooLarge(
            f"{len(buildable)} buildable cells / {ch.max_turbines} turbines "
            f"(limits: {ORACLE_MAX_CELLS} cells, {ORACLE_MAX_TURBINES} turbines)"
        )
    if ch.turbine_cost > 0:
        affordable = int(ch.budget // ch.turbine_cost)
    else:
        affordable = ch.max_turbines
    k_max = min(ch.max_turbines, affordable, len(buildable))

    best: tuple[FarmLayout, LayoutEvaluation] | None = None
    for k in range(k_max + 1):
        for combo in itertools.combinations(sorted(buildable), k):
            layout = FarmLayout(frozenset(combo))
            ev = evaluate_layout(ch, layout)
            if not ev.feasible:
                continue
            if best is None:
                best = (layout, ev)
                continue
            b_layout, b_ev = best
            if ev.score > b_ev.score:
                best = (layout, ev)
            elif ev.score == b_ev.score:
                a_key = (len(layout.placements), layout.sorted_placements())
                b_key = (len(b_layout.placements), b_layout.sorted_placements())
                if a_key < b_key:
                    best = (layout, ev)
    assert best is not None  # the empty layout is always feasible
    return best


# --- configuration parsing ---------------------------------------------------

def challenge_from_params(params: dict) -> WindFarmChallenge:
    """Build a challenge from an activity params block (strict, path-reported)."""
    obj = dict(params)

    def take(key, required=True, default=None):
        if key not in obj:
            if required:
                raise SchemaError(f"missing field {key!r}", path=f"params.{key}")
            return default
        return obj.pop(key)

    grid = take("grid")
    if not isinstance(grid, dict):
        raise SchemaError("grid must be an object", path="params.grid")
    grid = dict(grid)
    rows = grid.pop("rows", None)
    if not isinstance(rows, list) or not rows:
        raise SchemaError("grid.rows must be a non-empty list", path="params.grid.rows")
    if grid:
        raise SchemaError(f"unknown field {sorted(grid)[0]!r}", path="params.grid")
    height = len(rows)
    width = None
    cell_rows = []
    for y, row in enumerate(rows):
        if not isinstance(row, list) or not row:
            raise SchemaError("grid rows must be non-empty lists", path=f"params.grid.rows[{y}]")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise SchemaError("grid rows must have equal length", path=f"params.grid.rows[{y}]")
        cells = []
        for x, raw in enumerate(row):
            path = f"params.grid.rows[{y}][{x}]"
            if not isinstance(raw, dict):
                raise SchemaError("cell must be an object", path=path)
            raw = dict(raw)
            speed = raw.pop("wind_speed", None)
            zone = raw.pop("zone", None)
            if raw:
                raise SchemaError(f"unknown field {sorted(raw)[0]!r}", path=path)
            if isinstance(speed, bool) or not isinstance(speed, (int, float)) or speed < 0:
                raise SchemaError("wind_speed must be a number >= 0", path=f"{path}.wind_speed")
            if zone not in ZONES:
                raise SchemaError(f"zone must be one of {ZONES}", path=f"{path}.zone")
            cells.append(Cell(wind_speed=float(speed), zone=zone))
        cell_rows.append(tuple(cells))

    budget = take("budget")
    turbine_cost = take("turbine_cost")
    max_turbines = take("max_turbines")
    hours = take("hours", required=False, default=8760.0)
    raw_weights = take("score_weights", required=False, default=None)
    if isinstance(budget, bool) or not isinstance(budget, (int, float)) or budget < 0:
        raise SchemaError("budget must be a number >= 0", path="params.budget")
    if isinstance(turbine_cost, bool) or not isinstance(turbine_cost, (int, float)) or turbine_cost < 0:
        raise SchemaError("turbine_cost must be a number >= 0", path="params.turbine_cost")
    if isinstance(max_turbines, bool) or not isinstance(max_turbines, int) or max_turbines < 1:
        raise SchemaError("max_turbines must be an integer >= 1", path="params.max_turbines")
    if isinstance(hours, bool) or not isinstance(hours, (int, float)) or hours <= 0:
        raise SchemaError("hours must be a number > 0", path="params.hours")
    weights = ScoreWeights()
    if raw_weights is not None:
        if not isinstance(raw_weights, dict):
            raise SchemaError("score_weights must be an object", path="params.score_weights")
        raw_weights = dict(raw_weights)
        vals = {}
        for name in ("energy", "budget", "env"):
            if name in raw_weights:
                v = raw_weights.pop(name)
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise SchemaError(f"score_weights.{name} must be a number",
                                      path=f"params.score_weights.{name}")
                vals[name] = float(v)
        if raw_weights:
            raise SchemaError(f"unknown field {sorted(raw_weights)[0]!r}", path="params.score_weights")
        weights = ScoreWeights(**vals)

    # challenge-level params consumed by the activity wrapper, not the model
    obj.pop("pass_score", None)
    obj.pop("points", None)
    if obj:
        raise SchemaError(f"unknown field {sorted(obj)[0]!r}", path="params")

    return WindFarmChallenge(
        width=width, height=height, cells=tuple(cell_rows),
        budget=float(budget), turbine_cost=float(turbine_cost),
        max_turbines=max_turbines, hours=float(hours), weights=weights,
    )


def challenge_to_grid_json(ch: WindFarmChallenge) -> dict:
    """Grid block for wire views: zones and speeds, row-major."""
    return {
        "width": ch.width,
        "height": ch.height,
        "rows": [
            [{"wind_speed": c.wind_speed, "zone": c.zone} for c in row]
            for row in ch.cells
        ],
    }
