# core/exceptions.py
"""
Wspólna hierarchia wyjątków.

Każdy wyjątek może nieść znacznik etapu (`stage`), ustawiany przez potok
prostowania, oraz kod wyjścia, którego używa warstwa CLI.
"""
from __future__ import annotations

from typing import Any, Optional


class TorusError(Exception):
    default_message = "Błąd obliczeń."
    exit_code = 3

    def __init__(self, message: Optional[str] = None, *, stage: Optional[str] = None, **context: Any):
        super().__init__(message or self.default_message)
        self.stage = stage
        self.context = context

    def tagged(self, stage: str) -> "TorusError":
        # zewnętrzny etap nie nadpisuje już ustawionego
        if self.stage is None:
            self.stage = stage
        return self

    @property
    def message(self) -> str:
        return super().__str__()

    def __str__(self) -> str:
        if self.stage:
            return f"[{self.stage}] {self.message}"
        return self.message

    def as_dict(self) -> dict:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "stage": self.stage,
            "context": {k: _plain(v) for k, v in self.context.items()},
        }


def _plain(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return str(value)


# --- błędy danych wejściowych (exit 2) ---------------------------------------

class ValidationFailure(TorusError, ValueError):
    default_message = "Niepoprawne dane wejściowe."
    exit_code = 2


class NonMonotoneLiftError(ValidationFailure):
    default_message = "Próbki podniesienia nie są ściśle monotoniczne."


class DegeneratePairError(ValidationFailure):
    default_message = "Nachylenia δ i δ′ muszą być różne."


# --- błędy obliczeń (exit 3) -------------------------------------------------

class ComputationError(TorusError, RuntimeError):
    default_message = "Obliczenie nie powiodło się."
    exit_code = 3


class NonMinimalError(ComputationError):
    default_message = "Odwzorowanie nie jest minimalne (zdegenerowana miara empiryczna)."


class NonSectionError(ComputationError):
    default_message = "Liść nie wrócił do sekcji w zadanym budżecie długości."


class TransversalityError(ComputationError):
    default_message = "Naruszona transwersalność."


class NotInvertibleError(ComputationError):
    default_message = "Odwzorowanie siatkowe nie jest odwracalne w tej rozdzielczości."


class InconclusiveCycleError(ComputationError):
    default_message = "Estymata cyklu asymptotycznego jest nierozstrzygająca."


class CoverageError(ComputationError):
    default_message = "Prześledzony liść zbyt rzadko pokrywa torus."


class NotHandledError(ComputationError):
    default_message = "Ta postać foliacji nie jest obsługiwana."


class GridFileError(ComputationError):
    default_message = "Błąd odczytu/zapisu pliku siatki."


# --- błąd użycia (exit 64) ---------------------------------------------------

class UsageError(TorusError):
    default_message = "Nieznane polecenie."
    exit_code = 64
