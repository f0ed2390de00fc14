"""driftbench: domain-shift scenario construction and weighted-AUPRC
evaluation for multi-label clinical-style time series.

Pipeline: synthesize (or load) a dataset -> decompose its disease labels
into a landscape of latent factors -> materialize source/target shift
scenarios -> inject measurement discrepancies -> evaluate any predictor's
generalization with weighted AUPRC.
"""

__version__ = "0.1.0"

from driftbench.backend import BACKEND, have_extension  # noqa: F401
