"""Exception types shared across the package."""


class TrendnetsError(Exception):
    """Base class for errors raised by this package."""


class EmptyCorpusError(TrendnetsError):
    """An input source yielded no usable documents."""


class ConfigurationError(TrendnetsError):
    """Parameters are inconsistent with the data they are applied to."""


class NumericalError(TrendnetsError):
    """The solver produced non-finite values."""
