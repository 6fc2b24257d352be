"""Exception hierarchy. Every reject in the toolkit raises one of these."""


class NewtonAeroError(ValueError):
    """Base class; carries a short machine-readable ``code`` and a context dict."""

    code = "error"

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context


class DomainError(NewtonAeroError):
    code = "domain"


class CanonicalizationError(NewtonAeroError):
    code = "canonicalization"


class ClassMembershipError(NewtonAeroError):
    code = "class_membership"


class SingularityError(NewtonAeroError):
    code = "singularity"


class SlopeBoundError(NewtonAeroError):
    code = "slope_bound"


class OrientationError(NewtonAeroError):
    code = "orientation"


class CalibrationError(NewtonAeroError):
    code = "calibration"


class MeasureError(NewtonAeroError):
    code = "measure"
