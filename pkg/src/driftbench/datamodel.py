"""Dataset model shared by every other module.

An episode is one ICU-style stay: demographics, irregular timestamped events
over named channels, and a binary multi-label disease vector.  Events are
stored as a float (n, 3) array of [time_hours, channel_index, value] rows,
sorted by time and, within equal times, by channel index.

All values are immutable by convention once validated; operations return new
objects and are pure functions of their inputs.
"""

from dataclasses import dataclass

import numpy as np

from driftbench.errors import SchemaError

GENDERS = ("male", "female", "other")
CHANNEL_KINDS = ("continuous", "categorical")

# Never-observed grid cells are imputed with this constant (mask stays 0),
# matching the zero-imputation convention used for masked channels.
IMPUTE_VALUE = 0.0


@dataclass(frozen=True)
class ChannelDescriptor:
    name: str
    unit: str = ""
    kind: str = "continuous"
    masked: bool = False

    def __post_init__(self):
        if not self.name:
            raise SchemaError("channel name must be non-empty")
        if self.kind not in CHANNEL_KINDS:
            raise SchemaError(f"channel {self.name}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class Demographics:
    age: int
    gender: str
    race: str

    def validate(self, record_id="?"):
        if not (0 <= self.age <= 130):
            raise SchemaError(f"record {record_id}: age {self.age} out of range 0..130")
        if self.gender not in GENDERS:
            raise SchemaError(f"record {record_id}: gender {self.gender!r} not in {GENDERS}")
        if not self.race:
            raise SchemaError(f"record {record_id}: race token must be non-empty")


@dataclass
class EpisodeRecord:
    id: str
    demographics: Demographics
    events: np.ndarray          # (n_events, 3) float64: time, channel_index, value
    labels: np.ndarray          # (d,) uint8 in {0, 1}

    def __post_init__(self):
        self.events = np.asarray(self.events, dtype=np.float64).reshape(-1, 3)
        self.labels = np.asarray(self.labels, dtype=np.uint8).reshape(-1)

    def validate(self, n_channels: int, n_diseases: int):
        rid = self.id
        if not rid:
            raise SchemaError("record id must be non-empty")
        self.demographics.validate(rid)
        if self.labels.size != n_diseases:
            raise SchemaError(
                f"record {rid}: labels length {self.labels.size} != d={n_diseases}"
            )
        if self.labels.size and self.labels.max() > 1:
            raise SchemaError(f"record {rid}: labels must be 0/1")
        ev = self.events
        if ev.size == 0:
            return
        if not np.all(np.isfinite(ev)):
            raise SchemaError(f"record {rid}: non-finite event field")
        times, chans = ev[:, 0], ev[:, 1]
        if times.min() < 0:
            raise SchemaError(f"record {rid}: negative event time")
        if np.any(chans != np.round(chans)):
            raise SchemaError(f"record {rid}: non-integer channel_index")
        if chans.min() < 0 or chans.max() >= n_channels:
            raise SchemaError(f"record {rid}: channel_index out of range 0..{n_channels - 1}")
        if not _events_sorted(ev):
            raise SchemaError(f"record {rid}: events not sorted by (time, channel_index)")


def _events_sorted(events: np.ndarray) -> bool:
    if events.shape[0] < 2:
        return True
    t, c = events[:, 0], events[:, 1]
    dt = np.diff(t)
    return bool(np.all(dt >= 0) and np.all((dt > 0) | (np.diff(c) >= 0)))


def sort_events(events: np.ndarray) -> np.ndarray:
    """Stable sort by (time, channel_index); same-channel same-time order is
    preserved so the last event in input order wins under LOCF."""
    events = np.asarray(events, dtype=np.float64).reshape(-1, 3)
    order = np.lexsort((events[:, 1], events[:, 0]))
    return events[order]


@dataclass
class Dataset:
    channels: list
    diseases: list
    records: list

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def n_diseases(self) -> int:
        return len(self.diseases)

    @property
    def n_records(self) -> int:
        return len(self.records)

    def validate(self) -> "Dataset":
        names = [c.name for c in self.channels]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate channel names")
        if len(set(self.diseases)) != len(self.diseases):
            raise SchemaError("duplicate disease names")
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise SchemaError(f"record {rec.id}: duplicated id")
            seen.add(rec.id)
            rec.validate(self.n_channels, self.n_diseases)
        return self

    def label_matrix(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, self.n_diseases), dtype=np.uint8)
        return np.stack([rec.labels for rec in self.records])

    def record_ids(self) -> list:
        return [rec.id for rec in self.records]

    def disease_index(self, name: str) -> int:
        try:
            return self.diseases.index(name)
        except ValueError:
            raise KeyError(f"unknown disease name: {name}") from None

    def channel_index(self, name: str) -> int:
        for i, ch in enumerate(self.channels):
            if ch.name == name:
                return i
        raise KeyError(f"unknown channel name: {name}")

    def subset(self, indices) -> "Dataset":
        """New dataset over the selected records (original order preserved);
        channel and disease lists are shared."""
        return Dataset(self.channels, self.diseases, [self.records[i] for i in indices])

    def regularize(self, record: EpisodeRecord, step: float, horizon: float) -> "RegularGrid":
        return regularize(record, step, horizon, self.n_channels)


@dataclass
class RegularGrid:
    step: float
    values: np.ndarray          # (T, D)
    observed_mask: np.ndarray   # (T, D) uint8; 0 => value is IMPUTE_VALUE

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.shape[0]) * self.step


def regularize(record: EpisodeRecord, step: float, horizon: float,
               n_channels: int) -> RegularGrid:
    """Sample the episode onto a regular grid with last-observation-carried-
    forward: cell (t_j, c) holds the most recent event value at time <= t_j;
    before a channel's first observation the cell is 0.0 with mask 0.

    T = floor(horizon / step) + 1 grid rows at times 0, step, 2*step, ...
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if horizon < step:
        raise ValueError("horizon must be >= step")
    t_count = int(np.floor(horizon / step)) + 1
    grid_times = np.arange(t_count) * float(step)
    values = np.full((t_count, n_channels), IMPUTE_VALUE)
    mask = np.zeros((t_count, n_channels), dtype=np.uint8)

    ev = record.events
    if ev.shape[0]:
        chans = ev[:, 1].astype(np.int64)
        for c in np.unique(chans):
            sel = chans == c
            # events are time-sorted; equal times keep input order, so
            # searchsorted(..., 'right') - 1 lands on the last one <= t_j
            t_c, v_c = ev[sel, 0], ev[sel, 2]
            idx = np.searchsorted(t_c, grid_times, side="right") - 1
            has = idx >= 0
            values[has, c] = v_c[idx[has]]
            mask[has, c] = 1
    return RegularGrid(step=float(step), values=values, observed_mask=mask)


def summarize_features(grid: RegularGrid) -> np.ndarray:
    """Per channel: [mean, population std, min, max, last value, observed
    fraction] over the grid rows, concatenated into one 6*D vector.
    Never-observed channels contribute six zeros."""
    v = grid.values
    m = grid.observed_mask
    feats = np.stack(
        [
            v.mean(axis=0),
            v.std(axis=0),  # population std: divide by T
            v.min(axis=0),
            v.max(axis=0),
            v[-1, :],
            m.mean(axis=0),
        ],
        axis=1,
    )
    return feats.reshape(-1)
