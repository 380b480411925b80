"""Exception types shared across the toolkit.

Everything raised on purpose derives from RooflabError so the CLI can map
expected failures to exit code 1 and leave genuine bugs to traceback.
"""


class RooflabError(Exception):
    """Base class for all expected toolkit failures."""


class DomainError(RooflabError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ValidationError(RooflabError, ValueError):
    """A file or data structure violates its documented schema."""


class SynthesisError(RooflabError, RuntimeError):
    """A synthesized problem failed its post-fill validity checks."""
