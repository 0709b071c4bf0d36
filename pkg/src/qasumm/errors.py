class QASummError(Exception):
    """Base class for errors raised by qasumm."""


class BackendUnavailable(QASummError):
    """A remote model service could not be reached after retries.

    ``completed`` counts the work units finished before the failure, when
    the caller tracks one (e.g. QA triplets already answered).
    """

    def __init__(self, message: str, backend: str = "", completed: int = 0):
        super().__init__(message)
        self.backend = backend
        self.completed = completed


class ProtocolError(QASummError):
    """A backend answered with a payload that breaks the wire contract."""


class SingularSystemError(QASummError, ValueError):
    pass


class DatasetIntegrityError(QASummError, ValueError):
    pass


class ConfigurationError(QASummError, ValueError):
    pass
