import numpy as np
import pytest

from driftbench.errors import SchemaError
from driftbench.synth import (
    ComorbidityRule,
    SynthConfig,
    SynthManifest,
    age_biased_config,
    generate,
    mimic76_masked_names,
    verify_manifest,
)


def test_full_coupling_makes_group_labels_identical():
    cfg = SynthConfig(
        n_records=50, seed=1, group_coupling=(1.0, 1.0, 1.0), baseline_rate=0.0
    )
    ds, man = generate(cfg)
    lm = ds.label_matrix()
    for grp in cfg.groups:
        idx = [ds.disease_index(n) for n in grp]
        block = lm[:, idx]
        assert np.all(block.min(axis=1) == block.max(axis=1))


def test_zero_coupling_zero_baseline_gives_all_zero_labels():
    cfg = SynthConfig(n_records=30, seed=2, group_coupling=(0, 0, 0), baseline_rate=0.0)
    ds, _ = generate(cfg)
    assert ds.label_matrix().sum() == 0


def test_within_group_correlation_dominates_across_seeds():
    for seed in range(5):
        ds, man = generate(SynthConfig(n_records=1500, seed=seed))
        report = verify_manifest(ds, man)
        corr = [c for c in report["checks"] if c["name"] == "within_vs_cross_group_correlation"]
        assert corr and corr[0]["ok"], corr


def test_generate_deterministic():
    a, _ = generate(SynthConfig(n_records=40, seed=9))
    b, _ = generate(SynthConfig(n_records=40, seed=9))
    assert a.record_ids() == b.record_ids()
    for ra, rb in zip(a.records, b.records):
        assert np.array_equal(ra.events, rb.events)
        assert np.array_equal(ra.labels, rb.labels)
        assert ra.demographics == rb.demographics


def test_manifest_verifies_fresh_pair(small_synth):
    ds, man = small_synth
    report = verify_manifest(ds, man)
    assert report["ok"], report["failures"]


def test_manifest_sweep_10_seeds():
    for seed in range(10):
        ds, man = generate(SynthConfig(n_records=300, seed=seed))
        report = verify_manifest(ds, man)
        assert report["ok"], (seed, report["failures"])


def test_manifest_catches_tampering(small_synth):
    ds, man = small_synth
    tampered = ds.subset(range(ds.n_records))
    rec = tampered.records[0]
    labels = rec.labels.copy()
    labels[0] = 1 - labels[0]
    rec.labels = labels
    report = verify_manifest(tampered, man)
    assert not report["ok"]
    assert any(f["name"].startswith("label_count[") for f in report["failures"])


def test_manifest_round_trip(small_synth):
    _, man = small_synth
    blob = man.to_dict()
    assert SynthManifest.from_dict(blob).to_dict() == blob


def test_config_validation():
    with pytest.raises(SchemaError):
        SynthConfig(group_activation=(0.5, 0.5)).validate()  # wrong arity
    with pytest.raises(SchemaError):
        SynthConfig(group_coupling=(0.9, 0.9, 1.2)).validate()
    with pytest.raises(SchemaError):
        SynthConfig(
            comorbidity_rules=(ComorbidityRule(group=0, disease="nope", prob=0.5),)
        ).validate()
    with pytest.raises(SchemaError):
        SynthConfig.from_dict({"unknown_key": 1})


def test_config_round_trip():
    cfg = age_biased_config(n_records=123, seed=4)
    assert SynthConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


def test_mimic76_layout():
    cfg = SynthConfig(n_records=3, seed=0, channel_layout="mimic76")
    ds, _ = generate(cfg)
    assert ds.n_channels == 76
    masked = mimic76_masked_names()
    assert len(masked) == 35
    for name in masked:
        ds.channel_index(name)  # must exist


def test_comorbidity_rule_fires_only_when_predicates_hold():
    rule = ComorbidityRule(group=0, disease="pneumonia", prob=1.0, age_below=60)
    cfg = SynthConfig(
        n_records=800, seed=6, comorbidity_rules=(rule,), baseline_rate=0.0,
        group_coupling=(0.9, 0.9, 0.0), group_activation=(0.5, 0.5, 0.5),
    )
    ds, man = generate(cfg)
    lm = ds.label_matrix()
    pneumonia = lm[:, ds.disease_index("pneumonia")]
    ages = np.array([r.demographics.age for r in ds.records])
    active0 = np.array([(m >> 0) & 1 for m in man.activations], dtype=bool)
    # prob 1.0: fires exactly on (group0 active, age < 60)
    assert np.array_equal(pneumonia == 1, active0 & (ages < 60))


def test_signal_channels_shift_with_labels():
    cfg = SynthConfig(n_records=300, seed=8, signal_shift=4.0)
    ds, _ = generate(cfg)
    ci = ds.channel_index("sig_pneumonia")
    di = ds.disease_index("pneumonia")
    with_d, without_d = [], []
    for rec in ds.records:
        ev = rec.events
        vals = ev[ev[:, 1] == ci, 2]
        (with_d if rec.labels[di] else without_d).extend(vals.tolist())
    assert np.mean(with_d) > np.mean(without_d) + 2.0
