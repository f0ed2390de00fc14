"""Plug-in information estimators over discrete (small-cardinality) columns.

Everything is measured in bits (log base 2) and estimated by straight
maximum likelihood from empirical counts: H = -sum_v p(v) log2 p(v) with
0 log 0 = 0.  Joint entropies count observed configurations sparsely, so
matrices with dozens of binary columns stay cheap -- the number of distinct
configurations is bounded by the sample count, never by 2^d.

Tiny negative rounding residues (>= -1e-12) on quantities that are
analytically nonnegative are clamped to zero; anything more negative is
returned as-is so tests can catch genuine bugs.
"""

from dataclasses import dataclass

import numpy as np

CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class FactorColumn:
    """A latent factor assignment: length-N values in 0..cardinality-1."""

    values: np.ndarray
    cardinality: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.int64)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1:
            raise ValueError("factor values must be one-dimensional")
        if self.cardinality < 1:
            raise ValueError("cardinality must be >= 1")
        if vals.size and (vals.min() < 0 or vals.max() >= self.cardinality):
            raise ValueError("factor values out of range for cardinality")


class DiscreteMatrix:
    """Named discrete columns sharing a sample index.

    values : (N, d) integer array, column i taking values 0..cards[i]-1
    names  : column names (defaults to x0..x{d-1})
    cards  : per-column cardinalities (defaults to observed max + 1)
    """

    def __init__(self, values, names=None, cards=None):
        vals = np.asarray(values, dtype=np.int64)
        if vals.ndim != 2:
            raise ValueError("values must be a (N, d) array")
        self.values = vals
        n, d = vals.shape
        if names is None:
            names = [f"x{i}" for i in range(d)]
        if len(names) != d:
            raise ValueError("names length does not match column count")
        self.names = list(names)
        if cards is None:
            cards = [int(vals[:, i].max()) + 1 if n else 1 for i in range(d)]
        cards = [int(c) for c in cards]
        if len(cards) != d:
            raise ValueError("cards length does not match column count")
        for i, c in enumerate(cards):
            if c < 1:
                raise ValueError(f"column {self.names[i]}: cardinality must be >= 1")
            if n and (vals[:, i].min() < 0 or vals[:, i].max() >= c):
                raise ValueError(f"column {self.names[i]}: values out of range 0..{c - 1}")
        self.cards = cards

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def column(self, i) -> np.ndarray:
        return self.values[:, i]

    def rows(self, index) -> "DiscreteMatrix":
        return DiscreteMatrix(self.values[index], self.names, self.cards)


def _as_values(column) -> np.ndarray:
    if isinstance(column, FactorColumn):
        return column.values
    vals = np.asarray(column, dtype=np.int64)
    if vals.ndim != 1:
        raise ValueError("column must be one-dimensional")
    return vals


def _as_matrix_values(matrix) -> np.ndarray:
    if isinstance(matrix, DiscreteMatrix):
        return matrix.values
    vals = np.asarray(matrix, dtype=np.int64)
    if vals.ndim != 2:
        raise ValueError("matrix must be a (N, d) array")
    return vals


def _clamp(x: float, clamp: bool) -> float:
    if clamp and -CLAMP_TOL <= x < 0.0:
        return 0.0
    return x


def _entropy_from_counts(counts: np.ndarray, n: int) -> float:
    # H = log2(N) - sum(c log2 c)/N; exact for c in {0, N} as well
    counts = counts[counts > 0].astype(np.float64)
    return float(np.log2(n) - np.sum(counts * np.log2(counts)) / n)


def _config_codes(values: np.ndarray) -> np.ndarray:
    """Mixed-radix codes for row configurations (one int64 per row)."""
    n, d = values.shape
    radix = values.max(axis=0).astype(np.int64) + 1
    if np.prod(radix.astype(object)) < 2**62:
        codes = values[:, 0].copy()
        for i in range(1, d):
            codes = codes * radix[i] + values[:, i]
        return codes
    # cardinality product overflows int64: fall back to lexicographic ids
    _, codes = np.unique(values, axis=0, return_inverse=True)
    return codes.astype(np.int64)


def entropy(column, clamp: bool = True) -> float:
    """Plug-in marginal entropy of one discrete column, in bits."""
    vals = _as_values(column)
    if vals.size == 0:
        raise ValueError("entropy of an empty column is undefined")
    _, counts = np.unique(vals, return_counts=True)
    return _clamp(_entropy_from_counts(counts, vals.size), clamp)


def joint_entropy(matrix, clamp: bool = True) -> float:
    """Plug-in entropy of the joint configuration distribution, in bits."""
    vals = _as_matrix_values(matrix)
    if vals.size == 0:
        raise ValueError("joint entropy of an empty matrix is undefined")
    _, counts = np.unique(_config_codes(vals), return_counts=True)
    return _clamp(_entropy_from_counts(counts, vals.shape[0]), clamp)


def mutual_information(a, b, clamp: bool = True) -> float:
    """I(A;B) = H(A) + H(B) - H(A,B), clamped at zero for rounding residue."""
    va, vb = _as_values(a), _as_values(b)
    if va.size != vb.size:
        raise ValueError("columns must have equal length")
    raw = (
        entropy(va, clamp=False)
        + entropy(vb, clamp=False)
        - joint_entropy(np.column_stack([va, vb]), clamp=False)
    )
    return _clamp(raw, clamp)


def total_correlation(matrix, clamp: bool = True) -> float:
    """TC(X) = sum_i H(X_i) - H(X); zero iff the columns are empirically
    independent."""
    vals = _as_matrix_values(matrix)
    if vals.shape[1] < 1 or vals.shape[0] < 1:
        raise ValueError("total correlation needs at least one column and one sample")
    marginals = sum(entropy(vals[:, i], clamp=False) for i in range(vals.shape[1]))
    raw = marginals - joint_entropy(vals, clamp=False)
    return _clamp(raw, clamp)


def conditional_total_correlation(matrix, z, clamp: bool = True) -> float:
    """Residual total correlation after observing z:
    TC(X|Z) = sum_z p(z) TC(X | Z=z)."""
    vals = _as_matrix_values(matrix)
    zvals = _as_values(z)
    if zvals.size != vals.shape[0]:
        raise ValueError("factor length does not match matrix")
    n = vals.shape[0]
    raw = 0.0
    for zv in np.unique(zvals):
        idx = zvals == zv
        raw += (idx.sum() / n) * total_correlation(vals[idx], clamp=False)
    return _clamp(raw, clamp)


def tc_reduction(matrix, z) -> float:
    """TC(X;Z) = TC(X) - TC(X|Z): total correlation explained by z.

    Satisfies the plug-in identity TC(X;Z) = sum_i I(X_i;Z) - I(X;Z).
    Unlike the other quantities this one can be legitimately negative
    (conditioning can expose synergistic dependence), so it is not clamped.
    """
    vals = _as_matrix_values(matrix)
    zvals = _as_values(z)
    if zvals.size != vals.shape[0]:
        raise ValueError("factor length does not match matrix")
    return total_correlation(vals, clamp=False) - conditional_total_correlation(
        vals, zvals, clamp=False
    )
