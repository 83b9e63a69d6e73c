"""Exception types shared across the package."""


class ConfigError(ValueError):
    """An experiment configuration is inconsistent or incomplete."""


class BudgetError(RuntimeError):
    """Predicted cost of an estimator call exceeds the configured budget."""


class EvaluationError(RuntimeError):
    """A user-supplied function produced a non-finite value."""
