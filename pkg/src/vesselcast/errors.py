"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input left the mathematical domain of an operation (e.g. near-polar latitude)."""


class SchemaError(ValueError):
    """Input file does not match the expected schema."""


class TrainingError(RuntimeError):
    """Training failed (e.g. loss became non-finite)."""
