"""Error types shared across the package.

The command line maps these onto exit codes: plain OSError is 1,
input/config problems are 2, invariant violations and outliers are 3.
"""


class ShillbidError(Exception):
    """Base class for every error this package raises on purpose."""


class SchemaError(ShillbidError):
    """A header or schema/config file does not match expectations."""


class ParseError(ShillbidError):
    """A field value could not be parsed into its target type."""


class DataConsistencyError(ShillbidError):
    """Rows that must agree with each other do not."""


class ConfigError(ShillbidError):
    """A configuration value is out of range or infeasible."""


class EmptyDatasetError(ShillbidError):
    """An operation that needs at least one row received none."""


class InvariantError(ShillbidError):
    """A structural invariant of the data model was violated."""


class OutlierError(InvariantError):
    """A metric value left the closed unit interval."""
