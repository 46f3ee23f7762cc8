"""Exception types shared across the package."""


class QrdynError(Exception):
    """Base class for all qrdyn errors."""


class DimensionMismatch(QrdynError):
    """Operands live in different dimensions."""


class MissingOracle(QrdynError):
    """The map carries no exact preimage rule."""


class BranchPointSuspected(QrdynError):
    """Numeric Jacobian determinant fell below the branch-set floor."""


class AllSamplesRejected(QrdynError):
    """Every sample point was rejected as branch-set adjacent."""


class SearchBoxTooSmall(QrdynError):
    """The degree-search box does not safely contain all preimages."""


class RadiusTooLarge(QrdynError):
    """Several preimage clusters of f(x) fall inside the index ball."""


class DegreeNotAboveDilatation(QrdynError):
    """Escape-radius hypothesis fails: the Holder exponent is <= 1."""


class ValidationFailed(QrdynError):
    """No radius with the doubling property could be validated."""


class NotPolynomialType(QrdynError):
    """Operation requires |f(x)| -> infinity as |x| -> infinity."""


class BoxTooSmall(QrdynError):
    """The grid box does not contain the closed certified ball."""


class NoFixedPointFound(QrdynError):
    """No residual below tolerance; usually a search-parameter problem."""


class NotApplicable(QrdynError):
    """Check is guarded to a different map class."""


class DegreeOverflow(QrdynError):
    """Iterated degree d^k exceeds the representable integer range."""


class UsageError(QrdynError):
    """Invalid command line or configuration input."""
