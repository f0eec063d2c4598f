"""Exception hierarchy shared by every interleave module."""


class InterleaveError(Exception):
    """Base class for all errors raised by the framework."""


class DuplicateGateId(InterleaveError):
    pass


class UnknownGate(InterleaveError, KeyError):
    def __str__(self):
        return f"unknown gate {self.args[0]!r}"


class UnknownSite(InterleaveError, KeyError):
    def __str__(self):
        return f"unknown probe site {self.args[0]!r}"


# register_gate reports a dangling location under this name
UnknownProbeSite = UnknownSite


class DuplicateAttachment(InterleaveError):
    pass


class UnsupportedManualOpen(InterleaveError):
    pass


class NotABarrier(InterleaveError):
    pass


class ConfigurationFrozen(InterleaveError):
    """Sites, gates and attachments cannot change once a run is bound."""


class CallbackPanicked(InterleaveError):
    """A host callback condition raised; the original error is ``__cause__``."""


class DeadlockReported(InterleaveError):
    """Raised in a blocked thread when the deadlock monitor aborts the run."""

    def __init__(self, verdict=None):
        super().__init__(verdict)
        self.verdict = verdict

    def __str__(self):
        if self.verdict is None:
            return "run aborted by deadlock monitor"
        return f"run aborted by deadlock monitor: {self.verdict.describe()}"


class ValidationFailed(InterleaveError):
    def __init__(self, diagnostics):
        super().__init__(diagnostics)
        self.diagnostics = list(diagnostics)

    def __str__(self):
        return "; ".join(str(d) for d in self.diagnostics)


class ParseError(InterleaveError):
    """Syntax errors in a schedule or ordering-spec file.

    ``errors`` is a list of ``(line_number, message)`` pairs.
    """

    def __init__(self, errors, source="<string>"):
        super().__init__(errors)
        self.errors = list(errors)
        self.source = source

    def __str__(self):
        return "\n".join(f"{self.source}:{line}: {msg}" for line, msg in self.errors)


class UndeclaredEvent(InterleaveError):
    pass
