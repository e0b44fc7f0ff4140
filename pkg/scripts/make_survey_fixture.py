#!/usr/bin/env python3
"""Regenerate the committed survey fixture (instrument + synthetic responses).

The responses are synthetic but their headline aggregates are pinned: the
renewables item and four behavior items are laid out with exact counts so
the reported percentages are stable to the decimal.  Everything else is
seeded-random filler.  Output is deterministic; run from the repo root:

    python3 scripts/make_survey_fixture.py
"""

from __future__ import annotations

import csv
import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT_DIR = ROOT / "survey"
N = 1000
SEED = 20240601

LIKERT_SCALE = {
    "min": 1,
    "max": 5,
    "anchor_low_key": "survey.scale.never",
    "anchor_high_key": "survey.scale.always",
}

KNOWLEDGE_SINGLE = [f"k{i:02d}" for i in range(1, 22)]
RENEWABLES = "k22_renewables"
RENEWABLE_OPTIONS = ["solar", "wind", "hydro", "biomass", "ocean", "geothermal"]

ATTITUDE_SINGLE = [
    ("a01_concern", ["not_at_all", "a_little", "quite", "very"]),
    ("a02_responsibility", ["governments", "companies", "individuals", "everyone"]),
    ("a03_optimism", ["pessimistic", "neutral", "optimistic", "undecided"]),
    ("a04_info_source", ["school", "family", "social_media", "tv_news"]),
]
ATTITUDE_LIKERT = [f"a{i:02d}" for i in range(5, 11)]

BEHAVIOR = [
    "b01_env_group", "b02_recycle_sort", "b03_lights_off", "b04_short_shower",
    "b05_walk_school", "b06_reusable_bottle", "b07_local_food", "b08_meatless_day",
    "b09_car_share", "b10_public_transport", "b11_repair_reuse", "b12_compost",
    "b13_secondhand", "b14_plastic_avoid", "b15_save_water", "b16_plant_care",
    "b17_protest", "b18_eco_volunteer", "b19_read_climate_news", "b20_persuade_family",
    "b21_social_posts", "b22_school_project", "b23_beach_cleanup", "b24_energy_monitor",
]

# exact value counts for the pinned behavior items; each sums to N
PINNED_LIKERT = {
    "b01_env_group": {1: 585, 3: 180, 4: 150, 5: 85},
    "b09_car_share": {1: 300, 2: 200, 3: 123, 4: 200, 5: 177},
    "b17_protest": {1: 611, 3: 150, 4: 140, 5: 99},
    "b21_social_posts": {1: 500, 2: 292, 3: 100, 4: 70, 5: 38},
}

# row-index ranges (inclusive) selecting each renewable option
RENEWABLE_RANGES = {
    "solar": (0, 950),
    "wind": (78, 999),
    "hydro": (100, 899),
    "biomass": (200, 719),
    "ocean": (0, 545),
    "geothermal": (300, 599),
}

# sparse filler items get a few blank cells to exercise missing-data handling
SPARSE_ITEMS = {"k05", "a07", "b03_lights_off"}


def likert_item(item_id: str) -> dict:
    return {
        "item_id": item_id,
        "text_key": f"survey.{item_id}.text",
        "kind": "likert",
        "scale": dict(LIKERT_SCALE),
    }


def choice_item(item_id: str, kind: str, options: list[str]) -> dict:
    return {
        "item_id": item_id,
        "text_key": f"survey.{item_id}.text",
        "kind": kind,
        "options": options,
    }


def build_instrument() -> dict:
    knowledge = [choice_item(i, "single_choice", ["a", "b", "c", "d"])
                 for i in KNOWLEDGE_SINGLE]
    knowledge.append(choice_item(RENEWABLES, "multi_choice", RENEWABLE_OPTIONS))
    attitudes = [choice_item(i, "single_choice", opts) for i, opts in ATTITUDE_SINGLE]
    attitudes.extend(likert_item(i) for i in ATTITUDE_LIKERT)
    behavior = [likert_item(i) for i in BEHAVIOR]
    return {
        "id": "raise-v1",
        "schema_version": 1,
        "blocks": [
            {"block_id": "knowledge", "items": knowledge},
            {"block_id": "attitudes", "items": attitudes},
            {"block_id": "behavior", "items": behavior},
        ],
    }


def pinned_column(counts: dict[int, int], rng: random.Random) -> list[str]:
    values = [str(v) for v, n in sorted(counts.items()) for _ in range(n)]
    assert len(values) == N
    rng.shuffle(values)
    return values


def filler_likert(rng: random.Random, sparse: bool) -> list[str]:
    values = [str(rng.choices((1, 2, 3, 4, 5), weights=(22, 24, 26, 16, 12))[0])
              for _ in range(N)]
    if sparse:
        for i in rng.sample(range(N), 30):
            values[i] = ""
    return values


def filler_single(options: list[str], rng: random.Random, sparse: bool) -> list[str]:
    weights = [3] + [1] * (len(options) - 1)
    values = [rng.choices(options, weights=weights)[0] for _ in range(N)]
    if sparse:
        for i in rng.sample(range(N), 30):
            values[i] = ""
    return values


def renewables_column() -> list[str]:
    cells = []
    for row in range(N):
        picked = [opt for opt in RENEWABLE_OPTIONS
                  if RENEWABLE_RANGES[opt][0] <= row <= RENEWABLE_RANGES[opt][1]]
        assert picked, f"row {row} selected nothing"
        cells.append(";".join(picked))
    return cells


def build_columns(instrument: dict, rng: random.Random) -> dict[str, list[str]]:
    columns: dict[str, list[str]] = {}
    for block in instrument["blocks"]:
        for item in block["items"]:
            item_id = item["item_id"]
            sparse = item_id in SPARSE_ITEMS
            if item_id == RENEWABLES:
                columns[item_id] = renewables_column()
            elif item_id in PINNED_LIKERT:
                columns[item_id] = pinned_column(PINNED_LIKERT[item_id], rng)
            elif item["kind"] == "likert":
                columns[item_id] = filler_likert(rng, sparse)
            else:
                columns[item_id] = filler_single(item["options"], rng, sparse)
    return columns


def main() -> None:
    OUT_DIR.mkdir(exist_ok=True)
    instrument = build_instrument()
    instrument_path = OUT_DIR / "instrument.raise-v1.json"
    instrument_path.write_text(json.dumps(instrument, indent=2) + "\n", encoding="utf-8")

    rng = random.Random(SEED)
    columns = build_columns(instrument, rng)
    item_ids = [item["item_id"] for block in instrument["blocks"] for item in block["items"]]

    genders = ["female", "male", "other", "na"]
    countries = ["GR", "IT", "PT", "DK"]
    years = ["y8", "y9", "y10"]
    csv_path = OUT_DIR / "responses.csv"
    with csv_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["respondent_id", "age", "gender", "country", "school_year", *item_ids])
        for row in range(N):
            age = "" if rng.random() < 0.02 else str(rng.randint(13, 17))
            writer.writerow([
                f"r{row + 1:04d}",
                age,
                rng.choice(genders),
                rng.choice(countries),
                rng.choice(years),
                *(columns[item_id][row] for item_id in item_ids),
            ])
    print(f"wrote {instrument_path.relative_to(ROOT)} and {csv_path.relative_to(ROOT)} (N={N})")


if __name__ == "__main__":
    main()
