"""Exception types shared across the library."""


class ErgSearchError(Exception):
    """Base class for all library errors."""


class DomainError(ErgSearchError, ValueError):
    """A point lies outside the search domain."""


class PreconditionError(ErgSearchError, ValueError):
    """An operation was called with inputs violating its contract."""


class DegenerateMapError(ErgSearchError, ValueError):
    """A map has no mass and cannot be normalized."""


class MapFormatError(ErgSearchError, ValueError):
    """A map or region file failed to parse.

    Carries the offending path and line number when known.
    """

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}: "
        if line is not None:
            loc += f"line {line}: "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class UnknownAgentTypeError(ErgSearchError, KeyError):
    """An agent type id is missing from a start-region set."""


class InfeasibleStartError(ErgSearchError, ValueError):
    """No shared start location satisfies every agent type's regions."""

    def __init__(self, type_ids):
        super().__init__(
            "no shared start location feasible for agent types "
            + ", ".join(str(t) for t in type_ids)
        )
        self.type_ids = tuple(type_ids)


class DegenerateBandError(ErgSearchError, ValueError):
    """A spectral band reconstruction has no positive mass."""


class ConfigError(ErgSearchError, ValueError):
    """A configuration file or object is invalid."""
