"""Deterministic scenario runtime.

A session is a pure state machine: ``start_session`` and ``advance`` map
(state, input) to (new state, events) with no wall clock or ambient
randomness, so any run can be replayed exactly from (document, seed,
inputs).  Time is a logical tick counter that increments once per event.

Quiz questions come with graded assistance: the first wrong attempt gets a
generic retry message, the second the question's own hint, and the third
moves the player to the quiz's fail branch.  Points are only awarded for
first-attempt correct answers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .activities import ActivityRegistry
from .errors import (
    AlreadyFinished,
    ConditionFailed,
    InvalidDocument,
    NotFinished,
    OutOfTurn,
    ReplayError,
    UnknownChoice,
    UnsupportedLocale,
)
from .conditions import eval_condition
from .scenario import (
    AddVar,
    CarbonDelta,
    Effect,
    Node,
    ScenarioDocument,
    ScoreDelta,
    SetVar,
    effect_to_json,
)

RETRY_FEEDBACK_KEY = "quiz.feedback.incorrect"

EVENT_KINDS = (
    "node_entered", "text_shown", "choice_made", "effect_applied",
    "quiz_answered", "hint_given", "feedback_given",
    "activity_started", "activity_completed", "scenario_finished",
)

Value = Union[int, bool, str]


@dataclass(frozen=True)
class EngineState:
    scenario_id: str
    current_node: str
    variables: dict[str, Value]
    carbon_ledger_total: float
    quiz_attempts: dict[str, int]
    quiz_cursor: int
    rng_seed: int
    locale: str
    started_at: int
    last_event_at: int
    status: str  # active | finished

    @property
    def score(self) -> int:
        return self.variables["score"]


@dataclass(frozen=True)
class EngineEvent:
    tick: int
    kind: str
    payload: dict

    def to_json(self) -> dict:
        return {"tick": self.tick, "kind": self.kind, "payload": self.payload}


@dataclass(frozen=True)
class Choose:
    node_id: str
    choice_id: str


@dataclass(frozen=True)
class Answer:
    question_id: str
    option_id: str


@dataclass(frozen=True)
class ActivityResult:
    node_id: str
    result: dict


PlayerInput = Union[Choose, Answer, ActivityResult]


@dataclass(frozen=True)
class OutcomeSummary:
    final_score: int
    carbon_total: float
    quiz_accuracy: float
    hints_used: int
    nodes_visited: int
    outcome_key: str

    def to_json(self) -> dict:
        return {
            "final_score": self.final_score,
            "carbon_total": self.carbon_total,
            "quiz_accuracy": self.quiz_accuracy,
            "hints_used": self.hints_used,
            "nodes_visited": self.nodes_visited,
            "outcome_key": self.outcome_key,
        }


def input_to_json(player_input: PlayerInput) -> dict:
    if isinstance(player_input, Choose):
        return {"kind": "choose", "node_id": player_input.node_id,
                "choice_id": player_input.choice_id}
    if isinstance(player_input, Answer):
        return {"kind": "answer", "question_id": player_input.question_id,
                "option_id": player_input.option_id}
    if isinstance(player_input, ActivityResult):
        return {"kind": "activity_result", "node_id": player_input.node_id,
                "result": player_input.result}
    raise TypeError(f"not a PlayerInput: {player_input!r}")


def input_from_json(raw: dict) -> PlayerInput:
    if not isinstance(raw, dict):
        raise ValueError("input must be an object")
    kind = raw.get("kind")
    shapes = {
        "choose": {"kind", "node_id", "choice_id"},
        "answer": {"kind", "question_id", "option_id"},
        "activity_result": {"kind", "node_id", "result"},
    }
    if kind not in shapes:
        raise ValueError(f"unknown input kind {kind!r}")
    if set(raw) != shapes[kind]:
        raise ValueError(f"{kind} input needs exactly {sorted(shapes[kind])}")
    if kind == "choose":
        if not all(isinstance(raw[k], str) for k in ("node_id", "choice_id")):
            raise ValueError("choose fields must be strings")
        return Choose(raw["node_id"], raw["choice_id"])
    if kind == "answer":
        if not all(isinstance(raw[k], str) for k in ("question_id", "option_id")):
            raise ValueError("answer fields must be strings")
        return Answer(raw["question_id"], raw["option_id"])
    if not isinstance(raw["node_id"], str) or not isinstance(raw["result"], dict):
        raise ValueError("activity_result needs a node_id string and a result object")
    return ActivityResult(raw["node_id"], raw["result"])


def apply_effects(variables: Mapping[str, Value],
                  effects: Iterable[Effect]) -> tuple[dict[str, Value], float]:
    """Apply effects left-to-right; returns (new variables, carbon delta kg)."""
    out = dict(variables)
    carbon = 0.0
    for effect in effects:
        if isinstance(effect, SetVar):
            out[effect.var] = effect.value
        elif isinstance(effect, AddVar):
            out[effect.var] = out[effect.var] + effect.delta
        elif isinstance(effect, ScoreDelta):
            out["score"] = out["score"] + effect.delta
        elif isinstance(effect, CarbonDelta):
            carbon += effect.kg
        else:
            raise TypeError(f"unknown effect {effect!r}")
    return out, carbon


class _Run:
    """Mutable working copy of one advance/start call.

    Collects events and evolves a variable map; ``freeze`` snapshots the
    result back into an immutable EngineState.
    """

    def __init__(self, state: EngineState, doc: ScenarioDocument):
        self.doc = doc
        self.scenario_id = state.scenario_id
        self.current_node = state.current_node
        self.variables = dict(state.variables)
        self.carbon_total = state.carbon_ledger_total
        self.quiz_attempts = dict(state.quiz_attempts)
        self.quiz_cursor = state.quiz_cursor
        self.rng_seed = state.rng_seed
        self.locale = state.locale
        self.started_at = state.started_at
        self.tick = state.last_event_at
        self.status = state.status
        self.events: list[EngineEvent] = []

    def emit(self, event_kind: str, **payload) -> None:
        self.tick += 1
        self.events.append(EngineEvent(tick=self.tick, kind=event_kind, payload=payload))

    def apply(self, effects: Iterable[Effect]) -> None:
        for effect in effects:
            self.variables, delta = apply_effects(self.variables, [effect])
            self.carbon_total += delta
            self.emit("effect_applied",
                      effect=effect_to_json(effect),
                      score_after=self.variables["score"],
                      carbon_after=self.carbon_total)

    def enter(self, node_id: str) -> None:
        node = self.doc.nodes[node_id]
        self.current_node = node_id
        self.quiz_cursor = 0
        self.emit("node_entered", node_id=node_id, kind=node.kind)
        self.apply(node.on_enter_effects)
        text = {"node_id": node_id, "text_key": node.text_key}
        if node.speaker is not None:
            text["speaker"] = node.speaker
        self.emit("text_shown", **text)
        if node.kind == "quiz":
            question = node.questions[0]
            self.emit("text_shown", node_id=node_id, text_key=question.text_key,
                      question_id=question.id)
        elif node.kind == "activity":
            self.emit("activity_started", node_id=node_id, kind=node.activity_ref.kind)
        elif node.kind == "terminal":
            self.status = "finished"
            self.emit("scenario_finished", node_id=node_id, outcome_key=node.outcome_key,
                      score_after=self.variables["score"], carbon_after=self.carbon_total)

    def freeze(self) -> tuple[EngineState, list[EngineEvent]]:
        state = EngineState(
            scenario_id=self.scenario_id,
            current_node=self.current_node,
            variables=self.variables,
            carbon_ledger_total=self.carbon_total,
            quiz_attempts=self.quiz_attempts,
            quiz_cursor=self.quiz_cursor,
            rng_seed=self.rng_seed,
            locale=self.locale,
            started_at=self.started_at,
            last_event_at=self.tick,
            status=self.status,
        )
        return state, self.events


def start_session(doc: ScenarioDocument, seed: int, locale: str,
                  registry: ActivityRegistry | None = None,
                  skip_validation: bool = False) -> tuple[EngineState, list[EngineEvent]]:
    """New session at the entry node; entry on_enter effects already applied."""
    if locale not in doc.supported_locales:
        raise UnsupportedLocale(f"{locale!r} not in {doc.supported_locales}")
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise InvalidDocument(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    if not skip_validation:
        from .validation import validate_graph
        report = validate_graph(doc)
        if not report.ok:
            raise InvalidDocument("; ".join(f.format() for f in report.errors[:3]))
    variables: dict[str, Value] = dict(doc.variables)
    variables["score"] = 0
    seed_state = EngineState(
        scenario_id=doc.id, current_node=doc.entry_node, variables=variables,
        carbon_ledger_total=0.0, quiz_attempts={}, quiz_cursor=0,
        rng_seed=seed, locale=locale, started_at=0, last_event_at=-1, status="active",
    )
    run = _Run(seed_state, doc)
    run.enter(doc.entry_node)
    return run.freeze()


def _advance_choice(run: _Run, node: Node, player_input: Choose) -> None:
    if player_input.node_id != run.current_node:
        raise OutOfTurn(f"input addresses {player_input.node_id!r}, "
                        f"current node is {run.current_node!r}")
    for choice in node.choices:
        if choice.id == player_input.choice_id:
            break
    else:
        raise UnknownChoice(f"node {node.id!r} has no choice {player_input.choice_id!r}")
    if not eval_condition(choice.condition, run.variables):
        raise ConditionFailed(f"choice {choice.id!r} is not available")
    run.emit("choice_made", node_id=node.id, choice_id=choice.id)
    run.apply(choice.effects)
    run.enter(choice.target)


def _advance_quiz(run: _Run, node: Node, player_input: Answer) -> None:
    question = node.questions[run.quiz_cursor]
    if player_input.question_id != question.id:
        raise OutOfTurn(f"current question is {question.id!r}, "
                        f"not {player_input.question_id!r}")
    if all(option.id != player_input.option_id for option in question.options):
        raise UnknownChoice(f"question {question.id!r} has no option "
                            f"{player_input.option_id!r}")
    attempts = run.quiz_attempts.get(question.id, 0) + 1
    run.quiz_attempts[question.id] = attempts
    correct = player_input.option_id == question.correct_option
    if correct and attempts == 1:
        run.variables, _ = apply_effects(run.variables, [ScoreDelta(question.points)])
    run.emit("quiz_answered", question_id=question.id, option_id=player_input.option_id,
             correct=correct, attempt=attempts, score_after=run.variables["score"])
    if correct:
        run.quiz_cursor += 1
        if run.quiz_cursor == len(node.questions):
            run.enter(node.pass_target)
        else:
            nxt = node.questions[run.quiz_cursor]
            run.emit("text_shown", node_id=node.id, text_key=nxt.text_key,
                     question_id=nxt.id)
        return
    if attempts == 1:
        run.emit("feedback_given", question_id=question.id, text_key=RETRY_FEEDBACK_KEY)
    elif attempts == 2:
        run.emit("hint_given", question_id=question.id, text_key=question.hint_key)
    else:
        run.enter(node.fail_target)


def _advance_activity(run: _Run, node: Node, player_input: ActivityResult,
                      registry: ActivityRegistry) -> None:
    if player_input.node_id != run.current_node:
        raise OutOfTurn(f"input addresses {player_input.node_id!r}, "
                        f"current node is {run.current_node!r}")
    outcome = registry.judge(node.activity_ref, player_input.result)
    run.emit("activity_completed", node_id=node.id, outcome_id=outcome.outcome_id,
             detail=outcome.detail)
    run.emit("feedback_given", node_id=node.id, text_key=outcome.feedback_key)
    run.apply(outcome.effects)
    run.enter(node.exits[outcome.outcome_id])


def advance(state: EngineState, doc: ScenarioDocument, player_input: PlayerInput,
            registry: ActivityRegistry | None = None) -> tuple[EngineState, list[EngineEvent]]:
    """One step; raises without side effects when the input is rejected."""
    if state.status != "active":
        raise AlreadyFinished("session is finished")
    node = doc.nodes[state.current_node]
    run = _Run(state, doc)
    if node.kind in ("dialogue", "info"):
        if not isinstance(player_input, Choose):
            raise OutOfTurn(f"{node.kind} node expects a choice")
        _advance_choice(run, node, player_input)
    elif node.kind == "quiz":
        if not isinstance(player_input, Answer):
            raise OutOfTurn("quiz node expects an answer")
        _advance_quiz(run, node, player_input)
    elif node.kind == "activity":
        if not isinstance(player_input, ActivityResult):
            raise OutOfTurn("activity node expects an activity result")
        _advance_activity(run, node, player_input, registry or ActivityRegistry())
    else:
        raise AlreadyFinished("terminal nodes accept no input")
    return run.freeze()


def replay(doc: ScenarioDocument, seed: int, inputs: Iterable[PlayerInput],
           locale: str | None = None,
           registry: ActivityRegistry | None = None) -> list[EngineEvent]:
    """Run the whole input list; identical runs produce identical logs."""
    state, events = start_session(doc, seed, locale or doc.default_locale, registry)
    log = list(events)
    for i, player_input in enumerate(inputs):
        try:
            state, events = advance(state, doc, player_input, registry)
        except Exception as exc:
            raise ReplayError(f"input {i} rejected: {exc}", input_index=i) from exc
        log.extend(events)
    return log


def summarize(state: EngineState, events: Iterable[EngineEvent]) -> OutcomeSummary:
    """Outcome digest computed from the event log of a finished session."""
    if state.status != "finished":
        raise NotFinished("session still active")
    answered: set[str] = set()
    first_try_correct: set[str] = set()
    hints = 0
    visited: set[str] = set()
    outcome_key = ""
    for event in events:
        if event.kind == "quiz_answered":
            answered.add(event.payload["question_id"])
            if event.payload["correct"] and event.payload["attempt"] == 1:
                first_try_correct.add(event.payload["question_id"])
        elif event.kind == "hint_given":
            hints += 1
        elif event.kind == "node_entered":
            visited.add(event.payload["node_id"])
        elif event.kind == "scenario_finished":
            outcome_key = event.payload["outcome_key"]
    accuracy = len(first_try_correct) / len(answered) if answered else 0.0
    return OutcomeSummary(
        final_score=state.variables["score"],
        carbon_total=state.carbon_ledger_total,
        quiz_accuracy=accuracy,
        hints_used=hints,
        nodes_visited=len(visited),
        outcome_key=outcome_key,
    )


def events_to_jsonl(events: Iterable[EngineEvent]) -> str:
    """One compact JSON object per line; byte-stable for identical runs."""
    lines = [json.dumps(event.to_json(), sort_keys=True, ensure_ascii=False,
                        separators=(",", ":"))
             for event in events]
    return "".join(line + "\n" for line in lines)


def events_from_jsonl(text: str) -> list[EngineEvent]:
    events = []
    for line in text.splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        events.append(EngineEvent(tick=raw["tick"], kind=raw["kind"], payload=raw["payload"]))
    return events
