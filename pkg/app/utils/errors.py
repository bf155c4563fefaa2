"""
Exception hierarchy

Every failure raised by the numeric core or the scenario runner derives from
QRFError, so the CLI can map any of them to a nonzero exit and a JSON error line.
"""

from typing import Any, Dict, Optional


class QRFError(Exception):
    """Base class for all domain errors"""

    def __init__(self, message: str, scenario_id: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.scenario_id = scenario_id

    def with_scenario(self, scenario_id: str) -> "QRFError":
        self.scenario_id = scenario_id
        return self

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "error": self.__class__.__name__,
            "message": self.message,
        }
        if self.scenario_id is not None:
            payload["scenario_id"] = self.scenario_id
        return payload

    def __str__(self) -> str:
        if self.scenario_id:
            return f"[{self.scenario_id}] {self.message}"
        return self.message


# statekit
class DimensionMismatch(QRFError):
    pass


class ZeroVectorInput(QRFError):
    pass


class NotNormalized(QRFError):
    pass


class RoleCollision(QRFError):
    pass


class UnknownRole(QRFError):
    pass


class NotUnitary(QRFError):
    pass


class NotHermitian(QRFError):
    pass


class BadLayout(QRFError):
    pass


# ncvalue
class BasisMismatch(QRFError):
    pass


class BadBipartition(QRFError):
    pass


# scenarios
class BadParameters(QRFError):
    pass


class WrapAround(QRFError):
    pass


class OffGridLabel(QRFError):
    pass


class OffGridShift(QRFError):
    pass


# cli
class ConfigInvalid(QRFError):
    """Config failed schema validation; `field` names the offending path"""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload["field"] = self.field
        return payload


class UnknownSuite(QRFError):
    pass


class IoFailure(QRFError):
    pass
