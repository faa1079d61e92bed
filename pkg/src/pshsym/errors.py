"""Exception types.

Every error carries a stable ``code`` string so that the CLI and the JSON
reports can name it without depending on class names.
"""


class PshError(Exception):
    code = "ERROR"

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness

    def to_dict(self):
        out = {"code": self.code, "message": str(self)}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


class SchemaError(PshError):
    code = "SCHEMA_ERROR"


class SymmetryViolation(PshError):
    code = "SYMMETRY_VIOLATION"


class NotPshProfile(PshError):
    code = "NOT_PSH_PROFILE"


class OutOfDomain(PshError):
    code = "OUT_OF_DOMAIN"


class ToleranceNotMet(PshError):
    code = "TOLERANCE_NOT_MET"


class GridTooCoarse(PshError):
    code = "GRID_TOO_COARSE"


class ConvexityViolation(PshError):
    code = "CONVEXITY_VIOLATION"


class NumericalGradientUnstable(PshError):
    code = "NUMERICAL_GRADIENT_UNSTABLE"


class SymmetryRequired(PshError):
    code = "SYMMETRY_REQUIRED"


class SinglePoleRequired(PshError):
    code = "SINGLE_POLE_REQUIRED"


class DegenerateVolume(PshError):
    code = "DEGENERATE_VOLUME"
