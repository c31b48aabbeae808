"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument broke a documented precondition (shape, range, norm)."""


class DegenerateStateError(ArithmeticError):
    """The weight vector has no active entries left."""


class NoInformativeDirection(ArithmeticError):
    """Every active point projects to (numerically) zero on the current basis."""


class DegenerateTruthError(ArithmeticError):
    """Ground truth carries no signal, so expressed variance is undefined."""


class RankDeficiencyError(ArithmeticError):
    """Fewer strictly positive eigenvalues than requested components."""
