"""Exception hierarchy.

Every domain error carries a stable ``code`` and a ``details`` dict so the CLI
can emit it as a JSON error object.
"""


class VMetricError(Exception):
    code = "Error"

    def __init__(self, message="", **details):
        super().__init__(message or self.code)
        self.details = details

    def to_json(self):
        out = {"error": self.code, "message": str(self)}
        for key, val in self.details.items():
            out[key] = _jsonable(val)
        return out


def _jsonable(val):
    from fractions import Fraction

    if isinstance(val, Fraction):
        return str(val)
    if isinstance(val, (list, tuple)):
        return [_jsonable(v) for v in val]
    if isinstance(val, dict):
        return {str(k): _jsonable(v) for k, v in val.items()}
    return val


# values
class InvalidValueSet(VMetricError):
    code = "InvalidValueSet"


class InvalidRational(VMetricError):
    code = "InvalidRational"


class InputNotInValueSet(VMetricError):
    code = "InputNotInValueSet"


class OrderViolation(VMetricError):
    code = "OrderViolation"


class TriangleFailure(VMetricError):
    code = "TriangleFailure"


# space
class SpaceError(VMetricError):
    code = "SpaceError"


class SymmetryViolation(SpaceError):
    code = "SymmetryViolation"


class SeparationViolation(SpaceError):
    code = "SeparationViolation"


class TriangleViolation(SpaceError):
    code = "TriangleViolation"


class SpectrumViolation(SpaceError):
    code = "SpectrumViolation"


class UnknownPoint(VMetricError, KeyError):
    code = "UnknownPoint"

    def __str__(self):
        return Exception.__str__(self)


class EmptyFactor(VMetricError):
    code = "EmptyFactor"


class ValueSetTooSparse(VMetricError):
    code = "ValueSetTooSparse"


# amalgam
class NoAmalgam(VMetricError):
    code = "NoAmalgam"


class AgreementViolation(VMetricError):
    code = "AgreementViolation"


class InvalidSocket(VMetricError):
    code = "InvalidSocket"


class FourValuesFailure(VMetricError):
    code = "FourValuesFailure"


class PreconditionViolated(VMetricError):
    code = "PreconditionViolated"


class HypothesisViolated(VMetricError):
    code = "HypothesisViolated"


class EmptyOrbit(VMetricError):
    code = "EmptyOrbit"


# ultra
class NotUltrametric(VMetricError):
    code = "NotUltrametric"


class InvalidTree(VMetricError):
    code = "InvalidTree"


class UnknownNode(VMetricError, KeyError):
    code = "UnknownNode"

    def __str__(self):
        return Exception.__str__(self)


class SizeLimitExceeded(VMetricError):
    code = "SizeLimitExceeded"


# divide
class BadBounds(VMetricError):
    code = "BadBounds"


class CannotSeparate(VMetricError):
    code = "CannotSeparate"


class Degenerate(VMetricError):
    code = "Degenerate"


class BadSequence(VMetricError):
    code = "BadSequence"


class InvalidPartition(VMetricError):
    code = "InvalidPartition"
