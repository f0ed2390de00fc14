"""Exception types shared across the toolkit.

The CLI maps these onto stable exit codes (see cli.py): schema/config
problems -> 2, I/O -> 3, degenerate data -> 4, empty cohorts -> 5,
prediction coverage -> 6.
"""


class DriftbenchError(Exception):
    """Base class for toolkit errors."""


class SchemaError(DriftbenchError):
    """Malformed configuration, spec file, or data file."""


class DegenerateDataError(DriftbenchError):
    """Input data carries no usable signal (e.g. all label columns constant)."""


class EmptyCohortError(DriftbenchError):
    """A population split or class ended up empty."""


class PredictionCoverageError(DriftbenchError):
    """An imported prediction set does not cover the records under evaluation."""

    def __init__(self, missing_ids):
        self.missing_ids = sorted(missing_ids)
        shown = ", ".join(self.missing_ids[:10])
        more = "" if len(self.missing_ids) <= 10 else f" (+{len(self.missing_ids) - 10} more)"
        super().__init__(f"predictions missing for record ids: {shown}{more}")
