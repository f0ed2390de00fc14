import numpy as np
import pytest

from driftbench.datamodel import (
    ChannelDescriptor,
    Dataset,
    Demographics,
    EpisodeRecord,
    RegularGrid,
    regularize,
    sort_events,
    summarize_features,
)
from driftbench.errors import SchemaError


def make_record(events, labels=(0, 1), rid="r1"):
    return EpisodeRecord(
        id=rid,
        demographics=Demographics(age=50, gender="female", race="white"),
        events=np.asarray(events, dtype=float).reshape(-1, 3),
        labels=np.asarray(labels, dtype=np.uint8),
    )


def test_locf_hand_trace():
    rec = make_record([[0, 0, 5], [50, 0, 7]])
    grid = regularize(rec, step=48, horizon=96, n_channels=2)
    assert np.allclose(grid.values[:, 0], [5, 5, 7])
    assert grid.observed_mask[:, 0].tolist() == [1, 1, 1]
    assert grid.times.tolist() == [0, 48, 96]


def test_locf_unobserved_channel_is_zero():
    rec = make_record([[0, 0, 5]])
    grid = regularize(rec, step=48, horizon=96, n_channels=2)
    assert np.all(grid.values[:, 1] == 0.0)
    assert np.all(grid.observed_mask[:, 1] == 0)


def test_grid_length_formula():
    rec = make_record([[0, 0, 1]])
    grid = regularize(rec, step=96, horizon=96, n_channels=1)
    assert grid.values.shape[0] == 2
    assert grid.times.tolist() == [0, 96]


def test_before_first_observation_masked_zero():
    rec = make_record([[10, 0, 3.5]])
    grid = regularize(rec, step=4, horizon=20, n_channels=1)
    assert grid.values[:, 0].tolist() == [0, 0, 0, 3.5, 3.5, 3.5]
    assert grid.observed_mask[:, 0].tolist() == [0, 0, 0, 1, 1, 1]


def test_locf_same_timestamp_last_wins():
    rec = make_record([[5, 0, 1.0], [5, 0, 2.0]])
    grid = regularize(rec, step=5, horizon=10, n_channels=1)
    assert grid.values[1, 0] == 2.0


def test_locf_monotone_in_horizon():
    rec = make_record([[0, 0, 1], [30, 0, 4], [70, 0, 9]])
    short = regularize(rec, step=10, horizon=50, n_channels=1)
    long = regularize(rec, step=10, horizon=100, n_channels=1)
    assert np.array_equal(long.values[: short.values.shape[0]], short.values)


def test_regularize_rejects_bad_step():
    rec = make_record([[0, 0, 1]])
    with pytest.raises(ValueError):
        regularize(rec, step=0, horizon=10, n_channels=1)
    with pytest.raises(ValueError):
        regularize(rec, step=20, horizon=10, n_channels=1)


def test_regularize_order_independent_after_sort():
    fwd = make_record([[0, 0, 1], [10, 1, 2], [20, 0, 3]])
    perm = make_record(sort_events(np.array([[20, 0, 3], [0, 0, 1], [10, 1, 2]])))
    a = regularize(fwd, 10, 20, 2)
    b = regularize(perm, 10, 20, 2)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.observed_mask, b.observed_mask)


def test_summarize_constant_channel():
    grid = RegularGrid(
        step=1.0,
        values=np.full((4, 1), 3.0),
        observed_mask=np.ones((4, 1), dtype=np.uint8),
    )
    assert summarize_features(grid).tolist() == [3, 0, 3, 3, 3, 1]


def test_summarize_never_observed():
    grid = RegularGrid(step=1.0, values=np.zeros((4, 1)), observed_mask=np.zeros((4, 1), np.uint8))
    assert summarize_features(grid).tolist() == [0, 0, 0, 0, 0, 0]


def test_summarize_hand_values():
    grid = RegularGrid(
        step=48.0,
        values=np.array([[5.0], [5.0], [7.0]]),
        observed_mask=np.ones((3, 1), dtype=np.uint8),
    )
    feats = summarize_features(grid)
    assert feats[0] == pytest.approx(5.6667, abs=1e-4)
    assert feats[1] == pytest.approx(0.9428, abs=1e-4)  # population std
    assert feats[2:6].tolist() == [5, 7, 7, 1]


def test_demographics_validation():
    with pytest.raises(SchemaError):
        Demographics(age=131, gender="male", race="white").validate()
    with pytest.raises(SchemaError):
        Demographics(age=40, gender="m", race="white").validate()
    with pytest.raises(SchemaError):
        Demographics(age=40, gender="male", race="").validate()


def test_record_validation_errors_name_the_record():
    rec = make_record([[0, 5, 1]], rid="bad-chan")
    with pytest.raises(SchemaError, match="bad-chan"):
        rec.validate(n_channels=2, n_diseases=2)
    rec = make_record([[0, 0, 1]], labels=(0, 1, 1), rid="bad-labels")
    with pytest.raises(SchemaError, match="bad-labels"):
        rec.validate(n_channels=2, n_diseases=2)


def test_dataset_validation():
    channels = [ChannelDescriptor("hr"), ChannelDescriptor("bp")]
    r1 = make_record([[0, 0, 1]], rid="a")
    r2 = make_record([[0, 1, 1]], rid="a")
    ds = Dataset(channels=channels, diseases=["d1", "d2"], records=[r1, r2])
    with pytest.raises(SchemaError, match="duplicated id"):
        ds.validate()
    ds = Dataset(channels=channels, diseases=["d1", "d1"], records=[r1])
    with pytest.raises(SchemaError, match="duplicate disease"):
        ds.validate()


def test_channel_descriptor_kind():
    with pytest.raises(SchemaError):
        ChannelDescriptor(name="x", kind="weird")


def test_dataset_subset_preserves_order(small_synth):
    dataset, _ = small_synth
    sub = dataset.subset([5, 2, 9])
    assert sub.record_ids() == [dataset.records[i].id for i in (5, 2, 9)]
    assert sub.n_channels == dataset.n_channels
