"""Exception hierarchy shared by every stage of the pipeline."""


class VoiceCommandError(Exception):
    """Base class for all errors raised by voicecmd."""


# audio boundary
class NotFoundError(VoiceCommandError, FileNotFoundError):
    pass


class UnsupportedFormatError(VoiceCommandError, ValueError):
    pass


class IoFailureError(VoiceCommandError, OSError):
    pass


class NoDeviceError(VoiceCommandError):
    pass


class CaptureFailureError(VoiceCommandError):
    pass


# signal processing
class ClipTooShortError(VoiceCommandError, ValueError):
    pass


class CalibrationNotSilentError(VoiceCommandError):
    """The leading calibration window holds signal rather than silence.

    Callers usually fall back to treating the whole clip as one segment.
    """


# models
class DimensionMismatchError(VoiceCommandError, ValueError):
    pass


class EmptyObservationError(VoiceCommandError, ValueError):
    pass


class TooFewObservationsError(VoiceCommandError, ValueError):
    pass


class EmptyRegistryError(VoiceCommandError):
    pass


# persistence
class ParseError(VoiceCommandError, ValueError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class MissingModelFileError(VoiceCommandError, FileNotFoundError):
    pass


class InvariantViolationError(VoiceCommandError, ValueError):
    pass


class ParamMismatchError(VoiceCommandError, ValueError):
    pass
