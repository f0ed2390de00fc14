"""Command-line surface: synth -> landscape -> scenario -> evaluate.

Exit codes are a stable API:
  0  success
  2  config / spec / data schema error
  3  I/O failure
  4  degenerate data (e.g. all label columns constant)
  5  empty cohort or class
  6  prediction coverage failure (missing record ids)

Every subcommand is deterministic given its inputs and seed, and idempotent
to re-run: outputs are byte-identical.
"""

import argparse
import os
import sys

import numpy as np

from driftbench import jsonio
from driftbench.dataio import load_dataset, save_dataset
from driftbench.errors import (
    DegenerateDataError,
    EmptyCohortError,
    PredictionCoverageError,
    SchemaError,
)
from driftbench.evaluation import (
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    append_runs_csv,
    evaluate,
    import_predictions,
    predict,
    train_baseline,
)
from driftbench.infotheory import DiscreteMatrix
from driftbench.landscape import build_landscape, export_landscape
from driftbench.scenarios import ScenarioSpec, build_scenario, load_pair, save_pair
from driftbench.sieve import fit_sieve
from driftbench.synth import SynthConfig, generate
from driftbench.transforms import TransformSpec, apply_transforms

_SPEC_HELP = """\
scenario spec JSON:
  {"kind": "age_split", "params": {"direction": "older_to_younger",
   "threshold": 60, "cluster": 0}, "seed": 7, "balance_ratio": 0.6,
   "tau": 0.2, "transforms": [{"kind": "label_flip", "params": {"p": 0.1},
   "side": "source", "seed": 1}]}
kinds and their params:
  age_split       direction (older_to_younger|younger_to_older), threshold, cluster
  gender_split    direction (male_to_female|female_to_male), cluster
  race_split      majority [races...], minority [races...], cluster
  novel_disease   source_cluster, novel_cluster
  dual_to_single  set_a [diseases...], set_b [diseases...]
  single_to_dual  set_a [diseases...], set_b [diseases...]
transform kinds:
  label_flip      p (flip probability); side defaults to source
  resample        source_step, target_step, horizon (hours); both sides
  mask_channels   channels [names...]; side defaults to target
"""


def cmd_synth(args) -> int:
    if args.config:
        config = SynthConfig.from_dict(jsonio.load(args.config))
    else:
        config = SynthConfig().validate()
    if args.seed is not None:
        config.seed = args.seed
    dataset, manifest = generate(config)
    jsonio.ensure_dir(args.out)
    save_dataset(dataset, args.out)
    jsonio.dump(manifest.to_dict(), os.path.join(args.out, "synth_manifest.json"))
    print(f"wrote {dataset.n_records} records, D={dataset.n_channels}, "
          f"d={dataset.n_diseases} -> {args.out}")
    return 0


def cmd_landscape(args) -> int:
    dataset = load_dataset(args.data)
    labels = dataset.label_matrix().astype(np.int64)
    keep = [i for i in range(labels.shape[1]) if labels[:, i].min() != labels[:, i].max()]
    dropped = [dataset.diseases[i] for i in range(labels.shape[1]) if i not in keep]
    if dropped:
        print(f"warning: dropping constant label columns: {dropped}", file=sys.stderr)
    if not keep:
        raise DegenerateDataError("all label columns are constant")
    names = [dataset.diseases[i] for i in keep]
    matrix = DiscreteMatrix(labels[:, keep], names, [2] * len(keep))
    model = fit_sieve(
        matrix, k=args.k, cardinality=args.cardinality, seed=args.seed,
        restarts=args.restarts,
    )
    land = build_landscape(model, matrix)
    export_landscape(land, args.format, args.out)
    model_out = args.model_out or args.out + ".model.json"
    jsonio.dump(model.to_dict(), model_out)
    sizes = ", ".join(f"{tc:.3f}" for tc in model.per_layer_tc)
    print(f"{model.n_layers} factors (bits: {sizes}) -> {args.out}")
    return 0


def cmd_scenario(args) -> int:
    dataset = load_dataset(args.data)
    raw = jsonio.load(args.spec)
    spec = ScenarioSpec.from_dict(raw)
    transforms = [TransformSpec.from_dict(t) for t in raw.get("transforms", [])]
    pair = build_scenario(dataset, spec)
    if transforms:
        pair = apply_transforms(pair, transforms)
    save_pair(pair, args.out)
    print(
        f"{spec.kind}: source n={pair.source.n} "
        f"(pos {pair.source.positive_fraction():.3f}), "
        f"target n={pair.target.n} (pos {pair.target.positive_fraction():.3f}) -> {args.out}"
    )
    return 0


def cmd_evaluate(args) -> int:
    pair = load_pair(args.pair)
    if args.baseline:
        model = train_baseline(
            pair.source, epochs=args.epochs, learning_rate=args.learning_rate,
            seed=args.train_seed,
        )
        predictions = predict(model, pair.target)
    else:
        predictions = import_predictions(args.predictions)
    report = evaluate(pair, predictions)
    jsonio.dump(report.to_dict(), args.report)
    row = report.csv_row()
    row_path = os.path.splitext(args.report)[0] + ".csv"
    with open(row_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(row.keys()) + "\n")
        fh.write(",".join(str(v) for v in row.values()) + "\n")
    runs_csv = args.runs_csv or os.path.join(os.path.dirname(args.report) or ".", "runs.csv")
    append_runs_csv(report, runs_csv)
    print(f"weighted AUPRC {report.weighted:.4f} "
          f"(prevalence {report.per_task[0][3]:.4f}) -> {args.report}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftbench",
        description="Construct domain-shift scenarios from multi-label "
        "time-series datasets and evaluate predictors under them.",
        epilog=_SPEC_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset with planted structure")
    p.add_argument("--config", help="SynthConfig JSON (defaults used when omitted)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("landscape", help="fit the disease landscape of a dataset")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--k", type=int, default=3, help="max number of factors")
    p.add_argument("--cardinality", type=int, default=2)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="landscape output path")
    p.add_argument("--format", choices=("json", "dot"), default="json")
    p.add_argument("--model-out", help="sieve model path (default: <out>.model.json)")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("scenario", help="build a source/target pair from a spec")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--spec", required=True, help="scenario spec JSON (see --help epilog)")
    p.add_argument("--out", required=True, help="pair output directory")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("evaluate", help="score predictions on a pair's target side")
    p.add_argument("--pair", required=True, help="pair directory from `scenario`")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--baseline", action="store_true",
                       help="train the built-in baseline on the source side")
    group.add_argument("--predictions", help="record_id,score CSV from an external model")
    p.add_argument("--report", required=True, help="EvalReport JSON output path")
    p.add_argument("--runs-csv", help="aggregation CSV (default: alongside the report)")
    p.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS)
    p.add_argument("--learning-rate", type=float, default=DEFAULT_LEARNING_RATE)
    p.add_argument("--train-seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    except DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except EmptyCohortError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except PredictionCoverageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 6


if __name__ == "__main__":
    sys.exit(main())
