"""Exception types shared across the package."""


class EquirepError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EquirepError):
    """Invalid configuration: bad weights, threshold, mode, or missing credential."""


class InputError(EquirepError):
    """An input snippet or CLI argument is unusable (e.g. the code does not parse)."""


class ParseFailure(EquirepError):
    """Source text could not be parsed into a concrete syntax tree."""


class TemplateError(EquirepError):
    """A template placeholder was left unbound during rendering."""


class LLMError(EquirepError):
    """Base class for model-client failures."""


class RequestTimeout(LLMError):
    """The provider did not answer within the configured attempts."""


class AuthenticationError(LLMError):
    """The provider rejected the credential; never retried."""


class ReplayMiss(LLMError):
    """Replay mode found no cassette entry for a request fingerprint."""

    def __init__(self, fingerprint: str):
        super().__init__(f"no cassette entry for request fingerprint {fingerprint}")
        self.fingerprint = fingerprint


class ScoreParseError(EquirepError):
    """No decimal literal could be extracted from a judge reply."""


class JudgeParseError(EquirepError):
    """The judge reply stayed unparseable after the corrective retry."""


class LoadError(EquirepError):
    """A corpus file is malformed; carries the offending line or ids in the message."""


class SummaryError(EquirepError):
    """Summary input violated its contract (e.g. an empty transcript)."""


class ReflectionAborted(EquirepError):
    """A trial loop died mid-run; the partial transcript is attached.

    ``cause`` keeps the original client or judge error so callers can map
    it to an exit code or a per-entry failure row.
    """

    def __init__(self, message: str, transcript: list, cause: Exception | None = None):
        super().__init__(message)
        self.transcript = transcript
        self.cause = cause
