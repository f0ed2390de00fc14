import json

from driftbench import jsonio
from driftbench.cli import main

CARD = ["coronary_atherosclerosis", "lipid_metabolism_disorder",
        "essential_hypertension", "congestive_heart_failure"]
RENAL = ["acute_renal_failure", "chronic_kidney_disease",
         "secondary_hypertension", "fluid_electrolyte_disorder"]


def synth_args(tmp_path, out="data", n=500, seed=3):
    cfg = tmp_path / "synth.json"
    cfg.write_text(json.dumps({"n_records": n, "seed": seed}))
    return ["synth", "--config", str(cfg), "--out", str(tmp_path / out)]


def test_synth_writes_dataset_and_manifest(tmp_path, capsys):
    assert main(synth_args(tmp_path)) == 0
    out = tmp_path / "data"
    assert (out / "manifest.json").exists()
    assert (out / "records.jsonl").exists()
    assert (out / "synth_manifest.json").exists()
    assert "500 records" in capsys.readouterr().out


def test_synth_bad_probability_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"group_coupling": [0.9, 0.9, 1.7]}))
    code = main(["synth", "--config", str(cfg), "--out", str(tmp_path / "x")])
    assert code == 2
    assert "group_coupling" in capsys.readouterr().err


def test_synth_missing_config_exit_3(tmp_path):
    assert main(["synth", "--config", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "x")]) == 3


def test_synth_deterministic_reruns(tmp_path):
    assert main(synth_args(tmp_path, out="a")) == 0
    assert main(synth_args(tmp_path, out="b")) == 0
    for name in ("manifest.json", "records.jsonl", "synth_manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_landscape_json_and_dot_agree(tmp_path):
    main(synth_args(tmp_path))
    data = str(tmp_path / "data")
    assert main(["landscape", "--data", data, "--k", "3", "--seed", "1",
                 "--out", str(tmp_path / "land.json")]) == 0
    assert main(["landscape", "--data", data, "--k", "3", "--seed", "1",
                 "--out", str(tmp_path / "land.dot"), "--format", "dot"]) == 0
    land = jsonio.load(tmp_path / "land.json")
    dot = (tmp_path / "land.dot").read_text()
    assert len(land["factors"]) >= 1
    assert (tmp_path / "land.json.model.json").exists()
    for disease, factor in land["clusters"].items():
        assert f'factor_{factor} -- "{disease}"' in dot


def test_landscape_all_constant_labels_exit_4(tmp_path, capsys):
    cfg = tmp_path / "flat.json"
    cfg.write_text(json.dumps({
        "n_records": 60, "seed": 1, "group_coupling": [0, 0, 0], "baseline_rate": 0.0,
    }))
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "flat")]) == 0
    code = main(["landscape", "--data", str(tmp_path / "flat"),
                 "--out", str(tmp_path / "l.json")])
    assert code == 4


def scenario_spec(tmp_path, seed=5):
    spec = {
        "kind": "dual_to_single",
        "params": {"set_a": CARD, "set_b": RENAL},
        "seed": seed,
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    return path


def test_scenario_and_evaluate_pipeline(tmp_path, capsys):
    main(synth_args(tmp_path, n=1200))
    spec = scenario_spec(tmp_path)
    pair_dir = tmp_path / "pair"
    assert main(["scenario", "--data", str(tmp_path / "data"),
                 "--spec", str(spec), "--out", str(pair_dir)]) == 0
    assert (pair_dir / "provenance.json").exists()
    report = tmp_path / "report.json"
    assert main(["evaluate", "--pair", str(pair_dir), "--baseline",
                 "--report", str(report), "--epochs", "120"]) == 0
    blob = jsonio.load(report)
    assert 0.0 <= blob["weighted_auprc"] <= 1.0
    assert blob["counts"]["n_target"] > 0
    assert (tmp_path / "report.csv").exists()
    runs = (tmp_path / "runs.csv").read_text().splitlines()
    assert len(runs) == 2 and runs[0].startswith("scenario_kind,")


def test_scenario_unknown_kind_exit_2(tmp_path, capsys):
    main(synth_args(tmp_path, n=300))
    bad = tmp_path / "bad_spec.json"
    bad.write_text(json.dumps({"kind": "mystery", "params": {}}))
    assert main(["scenario", "--data", str(tmp_path / "data"),
                 "--spec", str(bad), "--out", str(tmp_path / "p")]) == 2


def test_scenario_empty_pool_exit_5(tmp_path):
    cfg = tmp_path / "male_only.json"
    cfg.write_text(json.dumps({
        "n_records": 200, "seed": 2, "gender_props": [["male", 1.0]],
    }))
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "m")]) == 0
    spec = tmp_path / "gender.json"
    spec.write_text(json.dumps({
        "kind": "gender_split",
        "params": {"direction": "male_to_female", "cluster": 0},
        "seed": 1,
    }))
    assert main(["scenario", "--data", str(tmp_path / "m"),
                 "--spec", str(spec), "--out", str(tmp_path / "p")]) == 5


def test_evaluate_missing_prediction_id_exit_6(tmp_path, capsys):
    main(synth_args(tmp_path, n=1000))
    pair_dir = tmp_path / "pair"
    main(["scenario", "--data", str(tmp_path / "data"),
          "--spec", str(scenario_spec(tmp_path)), "--out", str(pair_dir)])
    ids = [
        line.split(",")[0]
        for line in (pair_dir / "target_labels.csv").read_text().splitlines()[1:]
    ]
    preds = tmp_path / "preds.csv"
    preds.write_text("record_id,score\n" + "\n".join(f"{r},0.5" for r in ids[1:]) + "\n")
    code = main(["evaluate", "--pair", str(pair_dir), "--predictions", str(preds),
                 "--report", str(tmp_path / "r.json")])
    assert code == 6
    assert ids[0] in capsys.readouterr().err


def test_evaluate_perfect_oracle_predictions(tmp_path):
    main(synth_args(tmp_path, n=1000))
    pair_dir = tmp_path / "pair"
    main(["scenario", "--data", str(tmp_path / "data"),
          "--spec", str(scenario_spec(tmp_path)), "--out", str(pair_dir)])
    rows = (pair_dir / "target_labels.csv").read_text().splitlines()[1:]
    preds = tmp_path / "oracle.csv"
    preds.write_text(
        "record_id,score\n"
        + "\n".join(f"{r.split(',')[0]},{r.split(',')[1]}" for r in rows)
        + "\n"
    )
    report = tmp_path / "r.json"
    assert main(["evaluate", "--pair", str(pair_dir), "--predictions", str(preds),
                 "--report", str(report)]) == 0
    assert jsonio.load(report)["weighted_auprc"] == 1.0


def test_transforms_in_scenario_spec(tmp_path):
    main(synth_args(tmp_path, n=1200))
    spec = {
        "kind": "dual_to_single",
        "params": {"set_a": CARD, "set_b": RENAL},
        "seed": 5,
        "transforms": [
            {"kind": "label_flip", "params": {"p": 0.1}, "seed": 9},
            {"kind": "resample",
             "params": {"source_step": 96, "target_step": 48, "horizon": 96}},
        ],
    }
    path = tmp_path / "spec_t.json"
    path.write_text(json.dumps(spec))
    pair_dir = tmp_path / "pair_t"
    assert main(["scenario", "--data", str(tmp_path / "data"),
                 "--spec", str(path), "--out", str(pair_dir)]) == 0
    prov = jsonio.load(pair_dir / "provenance.json")
    assert [t["kind"] for t in prov["transforms"]] == ["label_flip", "resample"]
    assert prov["transforms"][0]["flip_counts"]["source"] > 0


def test_rerun_idempotent_outputs(tmp_path):
    main(synth_args(tmp_path, n=800))
    spec = scenario_spec(tmp_path)
    for tag in ("1", "2"):
        main(["scenario", "--data", str(tmp_path / "data"), "--spec", str(spec),
              "--out", str(tmp_path / f"pair{tag}")])
        main(["evaluate", "--pair", str(tmp_path / f"pair{tag}"), "--baseline",
              "--report", str(tmp_path / f"rep{tag}.json"), "--epochs", "60",
              "--runs-csv", str(tmp_path / f"runs{tag}.csv")])
    for name in ("provenance.json", "source_labels.csv", "target_labels.csv"):
        assert (tmp_path / "pair1" / name).read_bytes() == (tmp_path / "pair2" / name).read_bytes()
    assert (tmp_path / "rep1.json").read_bytes() == (tmp_path / "rep2.json").read_bytes()
    assert (tmp_path / "runs1.csv").read_bytes() == (tmp_path / "runs2.csv").read_bytes()
    # appending the same run twice leaves runs.csv unchanged
    main(["evaluate", "--pair", str(tmp_path / "pair1"), "--baseline",
          "--report", str(tmp_path / "rep1.json"), "--epochs", "60",
          "--runs-csv", str(tmp_path / "runs1.csv")])
    assert (tmp_path / "runs1.csv").read_bytes() == (tmp_path / "runs2.csv").read_bytes()


def test_scenario_unknown_disease_exit_2(tmp_path, capsys):
    main(synth_args(tmp_path, n=300))
    bad = tmp_path / "bad_disease.json"
    bad.write_text(json.dumps({
        "kind": "dual_to_single",
        "params": {"set_a": ["made_up_disease"], "set_b": RENAL},
        "seed": 1,
    }))
    assert main(["scenario", "--data", str(tmp_path / "data"),
                 "--spec", str(bad), "--out", str(tmp_path / "p")]) == 2
    assert "made_up_disease" in capsys.readouterr().err
