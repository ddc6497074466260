"""Exception hierarchy shared by all estimation modules."""


class VcPanelError(Exception):
    """Base class for every error raised by this package."""

    category = "numerical"


# -- data validation ---------------------------------------------------------

class DataError(VcPanelError):
    category = "parse"


class ShapeMismatch(DataError):
    pass


class NonFinite(DataError):
    pass


class SupportViolation(DataError):
    pass


class TooSmall(DataError):
    pass


class UnbalancedPanel(DataError):
    pass


class DuplicateCell(DataError):
    pass


class ParseError(DataError):
    pass


# -- splines -----------------------------------------------------------------

class InvalidSpec(VcPanelError):
    category = "config"


class OutOfSupport(VcPanelError):
    pass


class LengthMismatch(VcPanelError):
    pass


# -- estimation --------------------------------------------------------------

class SingularDesign(VcPanelError):
    """Gram matrix is numerically rank deficient."""

    def __init__(self, message, rcond=None):
        super().__init__(message)
        self.rcond = rcond


class NotNormalized(VcPanelError):
    pass


class EigenFailure(VcPanelError):
    pass


class EmptyGrid(VcPanelError):
    category = "config"


class AllDegenerate(VcPanelError):
    def __init__(self, message, exact_r=None):
        super().__init__(message)
        self.exact_r = exact_r


class BadBlockLength(VcPanelError):
    category = "config"


class TooManyFailures(VcPanelError):
    pass


class ConfigError(VcPanelError):
    category = "config"
