class LqRecoveryError(Exception):
    """Base class of every error raised by the toolkit."""

    exit_code: int = 1


class DomainError(LqRecoveryError, ValueError):
    """An input is outside the domain of the operation."""

    exit_code = 2


class GuaranteeInapplicableError(DomainError):
    """The RIC is at or above the threshold, the error bound does not apply."""

    def __init__(self, delta: float, threshold: float) -> None:
        self.delta = delta
        self.threshold = threshold
        super().__init__(
            f"guarantee inapplicable: delta={delta!r} is not below the threshold {threshold!r}"
        )


class HypothesisError(DomainError):
    """A hypothesis of an error bound (e.g. the lower bound on eta) does not hold."""

    def __init__(self, hypothesis: str, details: str) -> None:
        self.hypothesis = hypothesis
        self.details = details
        super().__init__(f"hypothesis '{hypothesis}' violated: {details}")


class BudgetExceededError(LqRecoveryError):
    """An exhaustive enumeration would exceed its budget."""

    exit_code = 3

    def __init__(self, what: str, required: int, budget: int, hint: str = "") -> None:
        self.what = what
        self.required = required
        self.budget = budget
        message = f"{what} needs {required} candidates, budget is {budget}"
        if hint:
            message += f"; {hint}"
        super().__init__(message)


class NumericalFailure(LqRecoveryError, ArithmeticError):
    """A factorization or another numerical step broke down."""

    exit_code = 4
