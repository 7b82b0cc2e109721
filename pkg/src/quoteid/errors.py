"""Exception hierarchy.

Every error class carries the CLI exit code it maps to, so the command
layer never has to guess.
"""


class QuoteIdError(Exception):
    exit_code = 1


class ConfigError(QuoteIdError):
    """Bad configuration: ratios, templates, flags, missing paths."""

    exit_code = 2


class TemplateError(ConfigError):
    pass


class LoadError(ConfigError):
    """A model artifact or backend resource could not be loaded."""


class DataError(QuoteIdError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message, line=None, record_id=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if record_id is not None:
            where.append(f"record {record_id!r}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.line = line
        self.record_id = record_id


class DanglingReferenceError(DataError):
    pass


class IntegrityError(DataError):
    pass


class EmptyInputError(DataError):
    pass


class InputError(DataError):
    pass


class BoundsError(DataError, IndexError):
    pass


class ResolutionError(DataError):
    def __init__(self, message, offenders=()):
        super().__init__(message)
        self.offenders = list(offenders)


class PredictionParseError(DataError):
    def __init__(self, message, raw_response):
        super().__init__(message)
        self.raw_response = raw_response


class NoCandidateError(DataError):
    pass


class TransportError(QuoteIdError):
    """Remote call failed after all retries."""

    exit_code = 4


class ApiError(TransportError):
    def __init__(self, status, payload):
        super().__init__(f"API returned status {status}: {payload}")
        self.status = status
        self.payload = payload


class IdentificationError(QuoteIdError):
    """Wraps a backend failure with the segment it happened on."""

    def __init__(self, segment_id, cause):
        super().__init__(f"segment {segment_id!r}: {cause}")
        self.segment_id = segment_id
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
