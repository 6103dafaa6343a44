"""Exception types shared across the package."""


class GeoDockError(Exception):
    """Base class for all package errors."""


class ContractError(GeoDockError, ValueError):
    """An operation was called with arguments that violate its precondition."""


class InvalidRotamerError(GeoDockError, ValueError):
    """A rotamer bond does not split the bond graph in two."""


class DegenerateAxisError(GeoDockError, ValueError):
    """The two atoms defining a rotation axis coincide."""


class LigandValidationError(GeoDockError, ValueError):
    def __init__(self, name, violations):
        self.name = name
        self.violations = list(violations)
        super().__init__(f"ligand {name!r}: " + "; ".join(self.violations))


class ParseError(GeoDockError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PocketRangeError(ParseError):
    """A pocket field value falls outside [0, 1]."""


class LaneError(GeoDockError, RuntimeError):
    """An offloaded alignment batch failed on a device lane."""
