"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates a documented precondition (shape, range, layout)."""


class NumericsError(ArithmeticError):
    """A computation produced non-finite values or a factorization failed."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""


class DataError(ValueError):
    """A data file could not be ingested (missing columns, bad cells)."""
