"""Exception hierarchy shared by all modules.

Numerical failures carry an optional ``step`` so that batch drivers can
report the time index at which a trajectory became infeasible.
"""

from __future__ import annotations


class FlatCraneError(Exception):
    """Base class for every error raised by the package."""

    def __init__(self, message: str, *, step: int | None = None, **details):
        super().__init__(message)
        self.step = step
        self.details = details

    def to_dict(self) -> dict:
        out = {"error": type(self).__name__, "message": str(self)}
        if self.step is not None:
            out["step"] = self.step
        out.update(self.details)
        return out


class NumericalError(FlatCraneError):
    pass


class DomainError(NumericalError, ValueError):
    """A lifting-unit height (or other argument) left its admissible range."""


class SingularityError(NumericalError):
    """A matrix that must be regular is numerically singular."""


class WindowError(NumericalError, IndexError):
    """An index outside the window an object was built for was requested."""


class DecouplingError(NumericalError):
    """The transformed dynamics failed the affinity certificate."""


class HorizonError(NumericalError, ValueError):
    pass


class ConfigError(FlatCraneError):
    pass
