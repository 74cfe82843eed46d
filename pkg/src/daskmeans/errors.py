"""Exception hierarchy shared by every module in the package."""


class DaskmeansError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(DaskmeansError, ValueError):
    """An operation was called with arguments that break its preconditions."""


class EmptyDataset(DaskmeansError, ValueError):
    pass


class DimensionMismatch(DaskmeansError, ValueError):
    """A row has a different number of coordinates than the first row."""

    def __init__(self, line, expected=None, got=None):
        self.line = line
        self.expected = expected
        self.got = got
        msg = f"dimension mismatch at line {line}"
        if expected is not None:
            msg += f" (expected {expected} columns, got {got})"
        super().__init__(msg)


class ParseError(DaskmeansError, ValueError):
    def __init__(self, line, text):
        self.line = line
        super().__init__(f"line {line}: cannot parse {text!r} as numbers")


class InvalidCapacity(DaskmeansError, ValueError):
    pass


class InvalidK(DaskmeansError, ValueError):
    pass


class BudgetInfeasible(DaskmeansError, ValueError):
    """The memory budget cannot hold the index for any leaf capacity."""

    def __init__(self, budget, minimum_budget):
        self.budget = budget
        self.minimum_budget = minimum_budget
        super().__init__(
            f"memory budget {budget:g} units is infeasible; "
            f"minimum feasible budget is {minimum_budget} units"
        )


class ModelNotTrained(DaskmeansError, RuntimeError):
    pass


class SingularDesign(DaskmeansError, ArithmeticError):
    pass


class InvalidObservation(DaskmeansError, ValueError):
    pass


class NoTestData(DaskmeansError, ValueError):
    pass


class ModelFormatError(DaskmeansError, ValueError):
    """A serialized model has an unknown format or version."""
