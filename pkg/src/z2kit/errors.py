"""Exception hierarchy shared by the library and the CLI."""


class Z2KitError(Exception):
    """Base class for all z2kit errors."""


class ValidationError(Z2KitError):
    """Input data failed a structural check."""


class SchemaError(ValidationError):
    def __init__(self, field, message, line=None):
        self.field = field
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"schema violation in field '{field}'{where}: {message}")


class TRSViolation(ValidationError):
    def __init__(self, residual, k):
        self.residual = residual
        self.k = k
        super().__init__(
            f"time-reversal symmetry violated: residual {residual:.3e} at k = {list(map(float, k))}"
        )


class GapClosing(ValidationError):
    def __init__(self, gap, k):
        self.gap = gap
        self.k = k
        super().__init__(
            f"metallic/gap-closing: gap {gap:.3e} at k = {list(map(float, k))}"
        )


class KramersViolation(ValidationError):
    pass


class NotTRClosed(Z2KitError):
    """Occupied space is not mapped to itself by time reversal."""


class GridTooCoarse(Z2KitError):
    pass


class AccidentalDegeneracy(Z2KitError):
    pass


class AmbiguousKernel(Z2KitError):
    pass


class FieldNotResolvable(Z2KitError):
    pass


class NotCoveredError(Z2KitError):
    """Requested (dimension, degree) combination has no worked identification."""
