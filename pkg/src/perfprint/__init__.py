"""perfprint: hardware-performance-event trace collection and workload
fingerprinting.

Records per-process or per-core event traces, turns them into labeled
feature vectors, trains four classifiers (kNN, decision tree, linear SVM,
stacked-autoencoder network) to identify the workload behind a trace, and
evaluates countermeasures that degrade that inference.
"""

__version__ = "0.1.0"

from . import classifiers, collector, dataset, evaluation, events, mitigation, synth
from .errors import (
    CollectorError,
    ConfigError,
    DataError,
    InterfaceUnavailableError,
    PermissionDeniedError,
    PerfprintError,
)

__all__ = [
    "classifiers",
    "collector",
    "dataset",
    "evaluation",
    "events",
    "mitigation",
    "synth",
    "PerfprintError",
    "ConfigError",
    "DataError",
    "CollectorError",
    "InterfaceUnavailableError",
    "PermissionDeniedError",
    "__version__",
]
