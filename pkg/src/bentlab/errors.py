"""Exception types raised across bentlab."""


class BentlabError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(BentlabError, ValueError):
    """An argument violates an operation's precondition."""


class SizeLimit(BentlabError):
    """A requested construction exceeds the configured dimension cap."""


class SingularFilter(BentlabError):
    """The local filter would need to invert a zero Schmidt coefficient."""


class DegenerateProjection(BentlabError):
    """A local projection annihilated the state."""


class NotNpt(BentlabError):
    """The state has a positive semidefinite partial transpose."""


class BracketError(BentlabError):
    """Bisection was started on an interval without a sign change."""
