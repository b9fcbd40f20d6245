"""Exception hierarchy shared across the toolkit.

Three broad families map onto the CLI exit codes: configuration problems
(bad flags, unknown scenarios, invalid parameters), data problems (missing
or malformed files, impossible splits), and collector problems (missing OS
interface, denied access, unsupported events).
"""


class PerfprintError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PerfprintError, ValueError):
    """Invalid configuration: unknown names, out-of-range parameters."""


class DataError(PerfprintError, ValueError):
    """Invalid or inconsistent data: parse failures, broken invariants."""


class CollectorError(PerfprintError, RuntimeError):
    """Base class for event-collection failures."""


class InterfaceUnavailableError(CollectorError):
    """The OS performance-monitoring interface is absent on this system."""


class PermissionDeniedError(CollectorError):
    """Collection denied by the event-access policy.

    `required_level` names the paranoid level that would permit the request.
    """

    def __init__(self, message, required_level=None):
        super().__init__(message)
        self.required_level = required_level


class UnsupportedEventError(CollectorError):
    """A requested event is not implemented by this CPU."""


class CounterSlotsExhaustedError(CollectorError):
    """More events requested than hardware counter slots available."""


class ProcessWaitTimeoutError(CollectorError):
    """No matching process appeared in time.

    `last_scan` holds the final pid -> name snapshot for diagnostics.
    """

    def __init__(self, message, last_scan=None):
        super().__init__(message)
        self.last_scan = dict(last_scan or {})
