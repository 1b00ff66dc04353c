"""Exception hierarchy shared by the library and the command line."""


class CrushBasisError(Exception):
    """Base class for package errors."""


class DataValidationError(CrushBasisError, ValueError):
    """Input data violates a documented precondition."""


class NoValidControlError(DataValidationError):
    """No existing plant supplies a control group for a new plant."""


class EstimationError(CrushBasisError):
    """An estimator could not produce a result."""


class SingularDesignError(EstimationError, ValueError):
    """Design matrix is rank deficient.

    ``columns`` lists the labels of the columns found to be linear
    combinations of earlier ones.
    """

    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(
            "design matrix is rank deficient; collinear columns: "
            + ", ".join(map(str, self.columns))
        )


class ConvergenceError(EstimationError):
    """Iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, gap):
        self.gap = gap
        super().__init__(f"{message} (duality gap {gap:.3e})")
