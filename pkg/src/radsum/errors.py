"""Exception hierarchy shared across the workbench.

Every domain failure raised by this package derives from ``WorkbenchError``
so the CLI can map it to exit code 1 while genuine usage errors stay on
exit code 2.
"""

from __future__ import annotations


class WorkbenchError(Exception):
    """Base class for all domain errors raised by radsum."""


class DataFormatError(WorkbenchError):
    """A dataset file is unreadable, malformed, or violates record invariants."""


class StratumError(WorkbenchError):
    """A stratified split cannot satisfy its allocation for a named stratum."""


class MetricError(WorkbenchError):
    """A metric's preconditions are violated (empty input, impossible order...)."""


class ProviderError(WorkbenchError):
    """A generation/embedding/NLI provider failed permanently."""


class TransientProviderError(ProviderError):
    """A provider failure that is worth retrying (transport hiccup, 5xx...)."""


class PipelineError(WorkbenchError):
    """Coarse-to-fine generation failed; message carries the stage label."""


class HarnessError(WorkbenchError):
    """A batch evaluation run could not produce any usable rows."""


class ReviewError(WorkbenchError):
    """Blind-review session operation rejected (unknown item, duplicate...)."""
