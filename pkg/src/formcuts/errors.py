"""Error types shared across the package.

Validation problems (bad input data, malformed files, incompatible
arguments) and numerical breakdowns (singular bases that survive
refactorization) are kept distinct so the CLI can map them to different
exit codes.
"""


class ValidationError(ValueError):
    """Input data or arguments violate a documented precondition."""


class ParseError(ValidationError):
    """A text payload (LP file, instance file, manifest) is malformed."""


class NumericalBreakdownError(RuntimeError):
    """Linear algebra failure that refactorization did not repair."""
