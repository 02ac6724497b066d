"""Exception types shared across the library."""


class TclabError(Exception):
    """Base class for all tclab errors."""


class NonIntegrableSingularity(TclabError):
    """The reciprocal intensity fails to be locally integrable."""


class DegenerateFunctional(TclabError):
    """A clock functional is not strictly increasing and cannot be inverted."""


class HorizonExceeded(TclabError):
    """A query time lies beyond the simulated horizon (or the step cap)."""


class KindMismatch(TclabError):
    """An operation received a path of the wrong kind."""


class LengthMismatch(TclabError):
    """Arrays that must share a grid have different lengths."""


class ConfigInvalid(TclabError):
    """An experiment configuration violates its invariants."""
