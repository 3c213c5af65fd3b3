"""Exception types shared across the package."""


class VrrError(Exception):
    """Base class for all package errors."""


class GenerationError(VrrError):
    """Level generation failed after bounded retries."""


class InvalidActionError(VrrError):
    """Action id is not valid for the game kind."""


class TerminalStateError(VrrError):
    """An operation requires a non-terminal level."""


class IdentificationError(VrrError):
    """Agent identification failed (no usable transitions or no covering object)."""


class LocateError(VrrError):
    """Agent lookup in a grid found zero or multiple agent cells."""


class ConflictError(VrrError):
    """A rule key was re-learned with a different value: the environment
    broke the determinism assumption the rule table relies on."""


class VocabularyMismatchError(VrrError):
    """A serialized artifact was produced under a different object vocabulary."""


class FormatError(VrrError):
    """A serialized stream or file is malformed."""


class SearchBudgetExceeded(VrrError):
    """BFS hit its node budget before reaching a win/explore/exhausted verdict.

    Deliberately distinct from the 'exhausted' plan outcome: truncation is not
    proof of unwinnability.
    """
