"""Exception hierarchy shared by the library and the CLI."""


class RankbenchError(Exception):
    """Base class for all library errors."""


class DomainError(RankbenchError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ValidationError(RankbenchError, ValueError):
    """A network, case file or override file is structurally invalid.

    ``issues`` holds the individual problems when more than one was found.
    """

    def __init__(self, message, issues=()):
        super().__init__(message)
        self.issues = list(issues)


class ContradictoryEvidenceError(RankbenchError):
    """The evidence has probability zero (rank infinity) under the network."""

    def __init__(self, evidence):
        self.evidence = dict(evidence)
        shown = ", ".join(f"{k}={v}" for k, v in self.evidence.items()) or "<none>"
        super().__init__(f"contradictory evidence: {{{shown}}} is impossible under this network")


class StateSpaceTooLarge(RankbenchError):
    """Brute-force enumeration refused because the joint space is too big."""
