"""Command-line front end: validate, play, stats, serve.

Exit codes are part of the contract: 0 success, 1 content or domain errors,
2 usage errors (argparse's own convention), 3 I/O or environment failures.
Reports go to stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from . import engine, survey, windfarm
from .activities import ActivityRegistry
from .content import ContentPack, load_pack
from .errors import RaiseWorldError
from .scenario import ScenarioDocument, parse_scenario
from .validation import Finding, ValidationReport, validate_graph, validate_pack

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _eprint(*args) -> None:
    print(*args, file=sys.stderr)


# -- validate -------------------------------------------------------------


def _report_json(name: str, report: ValidationReport) -> dict:
    return {
        "target": name,
        "ok": report.ok,
        "errors": [{"code": f.code, "where": f.where, "message": f.message}
                   for f in report.errors],
        "warnings": [{"code": f.code, "where": f.where, "message": f.message}
                     for f in report.warnings],
    }


def cmd_validate(args: argparse.Namespace) -> int:
    reports: list[tuple[str, ValidationReport]] = []
    for raw_path in args.paths:
        path = Path(raw_path)
        try:
            if path.is_dir():
                pack = load_pack(path)
                reports.append((str(path), validate_pack(pack)))
            else:
                data = path.read_bytes()
                pack = load_pack(args.pack) if args.pack else None
                doc = parse_scenario(data)
                reports.append((str(path), validate_graph(doc, pack)))
        except OSError as exc:
            _eprint(f"cannot read {path}: {exc}")
            return EXIT_IO
        except RaiseWorldError as exc:
            # unparseable content is reported like a one-error report
            report = ValidationReport()
            report.errors.append(Finding(exc.code, str(exc)))
            reports.append((str(path), report))

    if args.json:
        print(json.dumps([_report_json(name, rep) for name, rep in reports],
                         indent=2, sort_keys=True))
    else:
        for name, report in reports:
            status = "ok" if report.ok and not report.warnings else \
                ("errors" if not report.ok else "warnings")
            print(f"{name}: {status}")
            for line in report.format_lines():
                print(f"  {line}")

    failed = any(not report.ok for _, report in reports)
    if args.strict:
        failed = failed or any(report.warnings for _, report in reports)
    return EXIT_FINDINGS if failed else EXIT_OK


# -- play ----------------------------------------------------------------


def _registry_for(doc_path: Path, pack_dir: str | None) -> ActivityRegistry:
    pack: ContentPack | None = None
    if pack_dir:
        pack = load_pack(pack_dir)
    elif (doc_path.parent / "pack.json").exists():
        pack = load_pack(doc_path.parent)
    return ActivityRegistry(catalogs=pack.catalogs if pack else {})


def _legal_random_input(doc: ScenarioDocument, state: engine.EngineState,
                        registry: ActivityRegistry, rng: random.Random):
    node = doc.nodes[state.current_node]
    if node.kind in ("dialogue", "info"):
        available = [c for c in node.choices
                     if engine.eval_condition(c.condition, state.variables)]
        if not available:
            return None
        return engine.Choose(node.id, rng.choice(available).id)
    if node.kind == "quiz":
        question = node.questions[state.quiz_cursor]
        return engine.Answer(question.id, rng.choice(question.options).id)
    if node.kind == "activity":
        if node.activity_ref.kind == "wind_farm":
            challenge = registry.windfarm_challenge(node.activity_ref)
            cells = challenge.buildable_cells()
            limit = min(challenge.max_turbines,
                        int(challenge.budget // challenge.turbine_cost), len(cells))
            count = rng.randint(0, max(limit, 0))
            placements = [[x, y] for x, y in sorted(rng.sample(cells, count))]
            return engine.ActivityResult(node.id, {"placements": placements})
        catalog, _ = registry.carbon_setup(node.activity_ref)
        ids = catalog.option_ids()
        entries = [{"option_id": rng.choice(ids), "quantity": rng.randint(0, 20)}
                   for _ in range(rng.randint(0, 3))]
        return engine.ActivityResult(node.id, {"entries": entries})
    return None


def _first_choice_input(doc: ScenarioDocument, state: engine.EngineState):
    node = doc.nodes[state.current_node]
    if node.kind in ("dialogue", "info"):
        for choice in node.choices:
            if engine.eval_condition(choice.condition, state.variables):
                return engine.Choose(node.id, choice.id)
        return None
    if node.kind == "quiz":
        question = node.questions[state.quiz_cursor]
        return engine.Answer(question.id, question.options[0].id)
    if node.kind == "activity":
        key = "placements" if node.activity_ref.kind == "wind_farm" else "entries"
        return engine.ActivityResult(node.id, {key: []})
    return None


def run_playthrough(doc: ScenarioDocument, seed: int, policy: str, locale: str,
                    registry: ActivityRegistry,
                    scripted: list | None = None) -> tuple[engine.EngineState, list]:
    """Drive one session to termination (or the input bound); deterministic."""
    state, events = engine.start_session(doc, seed, locale, registry)
    log = list(events)
    rng = random.Random(seed)
    bound = len(doc.nodes) * 10
    steps = 0
    script = list(scripted or [])
    while state.status == "active":
        if policy == "scripted":
            if not script:
                raise RaiseWorldError("script exhausted before the scenario finished")
            player_input = engine.input_from_json(script.pop(0))
        elif policy == "first_choice":
            player_input = _first_choice_input(doc, state)
        else:
            player_input = _legal_random_input(doc, state, registry, rng)
        if player_input is None:
            raise RaiseWorldError(f"no legal input at node {state.current_node!r}")
        state, events = engine.advance(state, doc, player_input, registry)
        log.extend(events)
        steps += 1
        if steps > bound and state.status == "active":
            raise RaiseWorldError(f"no terminal reached within {bound} inputs")
    return state, log


def cmd_play(args: argparse.Namespace) -> int:
    path = Path(args.scenario)
    try:
        doc = parse_scenario(path.read_bytes())
        registry = _registry_for(path, args.pack)
        scripted = None
        if args.policy == "scripted":
            if not args.script:
                _eprint("--policy scripted needs --script FILE")
                return EXIT_USAGE
            scripted = json.loads(Path(args.script).read_text(encoding="utf-8"))
    except OSError as exc:
        _eprint(f"cannot read input: {exc}")
        return EXIT_IO
    except RaiseWorldError as exc:
        _eprint(f"{exc.code}: {exc}")
        return EXIT_FINDINGS

    locale = args.locale or doc.default_locale
    try:
        state, log = run_playthrough(doc, args.seed, args.policy, locale,
                                     registry, scripted)
    except RaiseWorldError as exc:
        _eprint(f"{exc.code}: {exc}")
        return EXIT_FINDINGS

    summary = engine.summarize(state, log)
    footer = json.dumps({"record": "summary", "summary": summary.to_json()},
                        sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    output = engine.events_to_jsonl(log) + footer + "\n"
    if args.out:
        try:
            Path(args.out).write_text(output, encoding="utf-8", newline="")
        except OSError as exc:
            _eprint(f"cannot write {args.out}: {exc}")
            return EXIT_IO
    else:
        sys.stdout.write(output)
    return EXIT_OK


# -- stats ----------------------------------------------------------------


def cmd_stats(args: argparse.Namespace) -> int:
    try:
        instrument = survey.load_instrument(Path(args.instrument).read_bytes())
        responses = survey.ingest_responses(instrument, Path(args.responses).read_bytes())
    except OSError as exc:
        _eprint(f"cannot read input: {exc}")
        return EXIT_IO
    except RaiseWorldError as exc:
        _eprint(f"{exc.code}: {exc}")
        return EXIT_FINDINGS

    try:
        if args.item:
            return _stats_filtered(args, responses)
        report = survey.summary_report(responses)
    except RaiseWorldError as exc:
        _eprint(f"{exc.code}: {exc}")
        return EXIT_FINDINGS
    if args.json:
        sys.stdout.write(survey.report_to_json_text(report))
    else:
        sys.stdout.write(report.to_text())
    return EXIT_OK


def _stats_filtered(args: argparse.Namespace, responses: survey.ResponseSet) -> int:
    buckets = {"never_rarely": survey.NEVER_RARELY, "often_always": survey.OFTEN_ALWAYS}
    rows = []
    for item_id in args.item:
        item = responses.instrument.item(item_id)
        if args.bucket:
            for name in args.bucket:
                if name not in buckets:
                    _eprint(f"unknown bucket {name!r}; use never_rarely or often_always")
                    return EXIT_USAGE
                value = survey.bucket_percentage(responses, item_id, buckets[name])
                rows.append({"item_id": item_id, "bucket": name, "percent": value})
        elif item.kind == "likert":
            for name, bucket in buckets.items():
                value = survey.bucket_percentage(responses, item_id, bucket)
                rows.append({"item_id": item_id, "bucket": name, "percent": value})
        else:
            for option_id in item.options:
                value = survey.option_percentage(responses, item_id, option_id)
                rows.append({"item_id": item_id, "option_id": option_id, "percent": value})
    if args.json:
        print(json.dumps(rows, indent=2, sort_keys=True))
    else:
        for row in rows:
            label = row.get("bucket") or row.get("option_id")
            print(f"{row['item_id']} {label} {row['percent']:.1f}")
    return EXIT_OK


# -- serve -------------------------------------------------------------------


def cmd_serve(args: argparse.Namespace) -> int:
    content_dir = args.content_dir or os.environ.get("RAISE_CONTENT_DIR")
    data_dir = args.data_dir or os.environ.get("RAISE_DATA_DIR")
    port = args.port if args.port is not None else int(os.environ.get("RAISE_PORT", "8765"))
    if not content_dir or not data_dir:
        _eprint("serve needs --content-dir and --data-dir (or RAISE_CONTENT_DIR / "
                "RAISE_DATA_DIR)")
        return EXIT_USAGE

    from .server.rooms import load_topology
    from .server.store import Store
    from .server.world import World
    from .server.ws import run_server

    try:
        pack = load_pack(content_dir)
        report = validate_pack(pack)
        if not report.ok:
            for line in report.format_lines():
                _eprint(line)
            return EXIT_IO
        topology = load_topology(Path(content_dir) / "world.json", pack)
        store = Store(data_dir)
    except OSError as exc:
        _eprint(f"cannot load content: {exc}")
        return EXIT_IO
    except RaiseWorldError as exc:
        _eprint(f"{exc.code}: {exc}")
        return EXIT_IO

    world = World(pack, topology, store, seed=args.seed)
    import logging
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    try:
        run_server(world, args.host, port)
    except OSError as exc:
        _eprint(f"cannot bind {args.host}:{port}: {exc}")
        return EXIT_IO
    return EXIT_OK


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raise",
        description="Branching-scenario world: content tools, headless play, "
                    "survey analytics, and the multiplayer server.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="statically check scenario files or a pack directory")
    p.add_argument("paths", nargs="+", help="scenario JSON files or a pack directory")
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.add_argument("--strict", action="store_true", help="treat warnings as errors")
    p.add_argument("--pack", help="pack directory for text/NPC resolution of single files")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("play", help="run a scenario headlessly to its terminal")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--seed", type=int, default=0, help="session seed (default 0)")
    p.add_argument("--policy", choices=("random", "first_choice", "scripted"),
                   default="random")
    p.add_argument("--script", help="JSON list of inputs for --policy scripted")
    p.add_argument("--locale", help="session locale (default: document default)")
    p.add_argument("--pack", help="pack directory for named carbon catalogs")
    p.add_argument("--out", help="write the event log here instead of stdout")
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("stats", help="aggregate a survey responses file")
    p.add_argument("instrument", help="instrument JSON file")
    p.add_argument("responses", help="responses CSV file")
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.add_argument("--item", action="append", default=[],
                   help="limit output to this item (repeatable)")
    p.add_argument("--bucket", action="append", default=[],
                   help="never_rarely or often_always (repeatable, needs --item)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve", help="run the world server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None,
                   help="default RAISE_PORT or 8765; 0 picks a free port")
    p.add_argument("--content-dir", help="pack directory (default RAISE_CONTENT_DIR)")
    p.add_argument("--data-dir", help="profile/session store (default RAISE_DATA_DIR)")
    p.add_argument("--seed", type=int, default=0, help="server RNG seed for session seeds")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> None:
    args = build_parser().parse_args(argv)
    sys.exit(args.func(args))


if __name__ == "__main__":
    main()
