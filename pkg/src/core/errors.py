"""
Exception hierarchy for the journey planner.

No-route is not an error: the search reports it as a value.
"""
from typing import Any, Dict, List, Optional


class BBTimeError(Exception):
    """Base class for all planner errors"""


class ValidationError(BBTimeError):
    """Input values violate a documented constraint"""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.context = context or {}


class ContractViolation(BBTimeError):
    """A caller broke an operation's precondition"""


class LoadError(ValidationError):
    """A feed or network file could not be read"""

    def __init__(self, message: str, path: Optional[str] = None, record: Optional[str] = None):
        context = {}
        if path:
            context['path'] = path
        if record:
            context['record'] = record
        super().__init__(message, context)
        self.path = path
        self.record = record

    def __str__(self) -> str:
        text = super().__str__()
        if self.path and self.path not in text:
            text = f"{self.path}: {text}"
        if self.record:
            text = f"{text} (record {self.record})"
        return text


class ConfigError(ValidationError):
    """Settings or generator spec is malformed"""


class AmbiguousStationError(ValidationError):
    """A station reference matched more than one station"""

    def __init__(self, reference: str, candidates: List[str]):
        super().__init__(f"Station '{reference}' is ambiguous ({len(candidates)} matches)",
                         {'candidates': candidates})
        self.reference = reference
        self.candidates = candidates
