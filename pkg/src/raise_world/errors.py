"""Domain error types.

Every error carries a stable ``code`` (snake_case) so the CLI and the wire
protocol can name failures without string-matching exception text.
"""

from __future__ import annotations


class RaiseWorldError(Exception):
    """Base class for all domain errors."""

    code = "error"

    def __init__(self, detail: str = "", **context):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def __str__(self) -> str:
        if self.context:
            ctx = ", ".join(f"{k}={v!r}" for k, v in sorted(self.context.items()))
            return f"{self.detail} [{ctx}]" if self.detail else ctx
        return self.detail


# --- scenario format ---------------------------------------------------------

class ScenarioSyntaxError(RaiseWorldError):
    code = "syntax_error"


class SchemaError(RaiseWorldError):
    code = "schema_error"

    def __init__(self, detail: str = "", path: str = "$", **context):
        super().__init__(detail, path=path, **context)
        self.path = path


class VersionError(RaiseWorldError):
    code = "version_error"


class ExprSyntaxError(RaiseWorldError):
    code = "expr_syntax_error"


class UndeclaredVariable(RaiseWorldError):
    code = "undeclared_variable"


class TypeMismatch(RaiseWorldError):
    code = "type_mismatch"


class UnknownKey(RaiseWorldError):
    code = "unknown_key"


# --- engine ------------------------------------------------------------------

class InvalidDocument(RaiseWorldError):
    code = "invalid_document"


class UnsupportedLocale(RaiseWorldError):
    code = "unsupported_locale"


class OutOfTurn(RaiseWorldError):
    code = "out_of_turn"


class UnknownChoice(RaiseWorldError):
    code = "unknown_choice"


class ConditionFailed(RaiseWorldError):
    code = "condition_failed"


class AlreadyFinished(RaiseWorldError):
    code = "already_finished"


class NotFinished(RaiseWorldError):
    code = "not_finished"


class InvalidActivityResult(RaiseWorldError):
    code = "invalid_activity_result"


class ReplayError(RaiseWorldError):
    code = "replay_error"

    def __init__(self, detail: str = "", input_index: int = -1, **context):
        super().__init__(detail, input_index=input_index, **context)
        self.input_index = input_index


# --- wind farm minigame ------------------------------------------------------

class NegativeWindSpeed(RaiseWorldError):
    code = "negative_wind_speed"


class OutOfGrid(RaiseWorldError):
    code = "out_of_grid"


class Occupied(RaiseWorldError):
    code = "occupied"


class Empty(RaiseWorldError):
    code = "empty"


class Protected(RaiseWorldError):
    code = "protected"


class OverBudget(RaiseWorldError):
    code = "over_budget"


class TooMany(RaiseWorldError):
    code = "too_many"


class InstanceTooLarge(RaiseWorldError):
    code = "instance_too_large"


# --- carbon minigame ---------------------------------------------------------

class UnknownOption(RaiseWorldError):
    code = "unknown_option"


class NegativeQuantity(RaiseWorldError):
    code = "negative_quantity"


class NonPositiveBudget(RaiseWorldError):
    code = "non_positive_budget"


# --- survey analytics --------------------------------------------------------

class CanonicalShapeError(RaiseWorldError):
    code = "canonical_shape_error"


class HeaderMismatch(RaiseWorldError):
    code = "header_mismatch"


class BadValue(RaiseWorldError):
    code = "bad_value"

    def __init__(self, detail: str = "", row: int = -1, column: str = "", **context):
        super().__init__(detail, row=row, column=column, **context)
        self.row = row
        self.column = column


class DuplicateRespondent(RaiseWorldError):
    code = "duplicate_respondent"


class UnknownItem(RaiseWorldError):
    code = "unknown_item"


class NoResponses(RaiseWorldError):
    code = "no_responses"


class NotLikert(RaiseWorldError):
    code = "not_likert"


class EmptyBucket(RaiseWorldError):
    code = "empty_bucket"


# --- world server ------------------------------------------------------------

class NotAuthenticated(RaiseWorldError):
    code = "not_authenticated"


class UnknownRoom(RaiseWorldError):
    code = "unknown_room"


class UnknownScenario(RaiseWorldError):
    code = "unknown_scenario"


class NotAdjacent(RaiseWorldError):
    code = "not_adjacent"


class NoActiveSession(RaiseWorldError):
    code = "no_active_session"


class EngineError(RaiseWorldError):
    code = "engine_error"


class RateLimited(RaiseWorldError):
    code = "rate_limited"


class StaleDelta(RaiseWorldError):
    code = "stale_delta"


class StoreUnavailable(RaiseWorldError):
    code = "store_unavailable"


class UnknownPlayer(RaiseWorldError):
    code = "unknown_player"


class CorruptRecord(RaiseWorldError):
    code = "corrupt_record"
