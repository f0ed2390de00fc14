"""Source/target shift scenario construction.

Six scenario kinds are supported:

  age_split, gender_split, race_split
      Partition the population on the demographic, fit a disease landscape
      on the source pool, take one cluster as the positive class, then
      recompute the landscape on the target pool and expand the positive
      class with diseases strongly correlated (normalized edge weight >=
      tau) to the source conditions.

  novel_disease
      No population split: the record set is halved at random.  Source
      positives are one landscape cluster; target positives add the
      diseases of a second ("novel") cluster.

  dual_to_single / single_to_dual
      Patients are grouped by two disease sets A and B into A-only, B-only,
      neither, and both.  Dual-to-single trains on "both" vs "neither" and
      tests on the single-set groups; single-to-dual is the mirror image.
      Negatives on either side are disjoint halves of the "neither" group.

Both sides are then downsampled to the configured positive fraction
(default 60/40) and stamped with full provenance.  Construction is a pure
function of (dataset, spec): identical inputs give identical pairs.
"""

import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from driftbench import jsonio, rng
from driftbench.datamodel import Dataset
from driftbench.errors import EmptyCohortError, SchemaError
from driftbench.infotheory import DiscreteMatrix
from driftbench.landscape import DiseaseLandscape, build_landscape, correlated_diseases
from driftbench.sieve import fit_sieve

SCENARIO_KINDS = (
    "age_split",
    "gender_split",
    "race_split",
    "novel_disease",
    "dual_to_single",
    "single_to_dual",
)

_REQUIRED_PARAMS = {
    "age_split": {"direction", "threshold", "cluster"},
    "gender_split": {"direction", "cluster"},
    "race_split": {"majority", "minority", "cluster"},
    "novel_disease": {"source_cluster", "novel_cluster"},
    "dual_to_single": {"set_a", "set_b"},
    "single_to_dual": {"set_a", "set_b"},
}

DEFAULT_BALANCE_RATIO = 0.6
DEFAULT_BALANCE_TOLERANCE = 0.02
DEFAULT_TAU = 0.2
DEFAULT_SIEVE = {"layers": 3, "cardinality": 2, "restarts": 10, "max_iters": 200}


@dataclass(frozen=True)
class PositiveClassDef:
    """Positive class = presence of any disease in the set."""

    diseases: tuple
    rule: str = "any-of"

    def __post_init__(self):
        if not self.diseases:
            raise SchemaError("positive class needs at least one disease")
        object.__setattr__(self, "diseases", tuple(self.diseases))

    def to_dict(self) -> dict:
        return {"diseases": list(self.diseases), "rule": self.rule}


@dataclass
class ScenarioSpec:
    kind: str
    params: dict
    seed: int = 0
    balance_ratio: float = DEFAULT_BALANCE_RATIO
    balance_tolerance: float = DEFAULT_BALANCE_TOLERANCE
    tau: float = DEFAULT_TAU
    sieve: dict = field(default_factory=lambda: dict(DEFAULT_SIEVE))

    def validate(self) -> "ScenarioSpec":
        if self.kind not in SCENARIO_KINDS:
            raise SchemaError(f"kind: unknown scenario kind {self.kind!r}")
        required = _REQUIRED_PARAMS[self.kind]
        missing = required - set(self.params)
        extra = set(self.params) - required
        if missing:
            raise SchemaError(f"params: missing {sorted(missing)} for kind {self.kind}")
        if extra:
            raise SchemaError(f"params: unexpected {sorted(extra)} for kind {self.kind}")
        if not 0.0 < self.balance_ratio < 1.0:
            raise SchemaError(f"balance_ratio: {self.balance_ratio} outside (0, 1)")
        for key in ("cluster", "source_cluster", "novel_cluster", "threshold"):
            if key in self.params and not isinstance(self.params[key], (int, float)):
                raise SchemaError(f"params.{key}: expected a number, got {self.params[key]!r}")
        if self.kind == "age_split" and self.params["direction"] not in (
            "older_to_younger",
            "younger_to_older",
        ):
            raise SchemaError(f"params.direction: {self.params['direction']!r}")
        if self.kind == "gender_split" and self.params["direction"] not in (
            "male_to_female",
            "female_to_male",
        ):
            raise SchemaError(f"params.direction: {self.params['direction']!r}")
        if self.kind in ("dual_to_single", "single_to_dual"):
            a, b = set(self.params["set_a"]), set(self.params["set_b"])
            if not a or not b:
                raise SchemaError("params: set_a and set_b must be non-empty")
            if a & b:
                raise SchemaError(f"params: set_a and set_b overlap: {sorted(a & b)}")
        sieve_cfg = dict(DEFAULT_SIEVE)
        sieve_cfg.update(self.sieve or {})
        unknown = set(sieve_cfg) - set(DEFAULT_SIEVE)
        if unknown:
            raise SchemaError(f"sieve: unknown keys {sorted(unknown)}")
        self.sieve = sieve_cfg
        return self

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "seed": self.seed,
            "balance_ratio": self.balance_ratio,
            "balance_tolerance": self.balance_tolerance,
            "tau": self.tau,
            "sieve": dict(self.sieve),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        known = {"kind", "params", "seed", "balance_ratio", "balance_tolerance", "tau", "sieve"}
        unknown = set(d) - known - {"transforms"}
        if unknown:
            raise SchemaError(f"unknown scenario spec keys: {sorted(unknown)}")
        if "kind" not in d or "params" not in d:
            raise SchemaError("scenario spec requires 'kind' and 'params'")
        return cls(
            kind=d["kind"],
            params=dict(d["params"]),
            seed=int(d.get("seed", 0)),
            balance_ratio=float(d.get("balance_ratio", DEFAULT_BALANCE_RATIO)),
            balance_tolerance=float(d.get("balance_tolerance", DEFAULT_BALANCE_TOLERANCE)),
            tau=float(d.get("tau", DEFAULT_TAU)),
            sieve=dict(d.get("sieve", {})),
        ).validate()


@dataclass
class TaskSide:
    """One side of a pair: a record subset plus its binary task labels.
    step/horizon are stamped by the resampling transform."""

    dataset: Dataset
    labels: np.ndarray
    step: float = None
    horizon: float = None

    @property
    def n(self) -> int:
        return self.dataset.n_records

    def positive_fraction(self) -> float:
        return float(self.labels.mean()) if self.labels.size else 0.0


@dataclass
class SourceTargetPair:
    source: TaskSide
    target: TaskSide
    source_positive: PositiveClassDef
    target_positive: PositiveClassDef
    provenance: dict


def label_matrix_of(pool: Dataset) -> DiscreteMatrix:
    return DiscreteMatrix(pool.label_matrix().astype(np.int64), list(pool.diseases),
                          [2] * pool.n_diseases)


def split_population(dataset: Dataset, spec: ScenarioSpec):
    """Partition records by the spec's demographic criterion.  Records
    matching neither side (race lists) are excluded; both pools must be
    non-empty."""
    kind, params = spec.kind, spec.params
    records = dataset.records
    if kind == "age_split":
        threshold = int(params["threshold"])
        older = [i for i, r in enumerate(records) if r.demographics.age >= threshold]
        younger = [i for i, r in enumerate(records) if r.demographics.age < threshold]
        src, tgt = (older, younger) if params["direction"] == "older_to_younger" else (younger, older)
        desc = f"age threshold {threshold} ({params['direction']})"
    elif kind == "gender_split":
        males = [i for i, r in enumerate(records) if r.demographics.gender == "male"]
        females = [i for i, r in enumerate(records) if r.demographics.gender == "female"]
        src, tgt = (males, females) if params["direction"] == "male_to_female" else (females, males)
        desc = f"gender ({params['direction']})"
    elif kind == "race_split":
        majority = set(params["majority"])
        minority = set(params["minority"])
        if majority & minority:
            raise SchemaError(f"race lists overlap: {sorted(majority & minority)}")
        src = [i for i, r in enumerate(records) if r.demographics.race in majority]
        tgt = [i for i, r in enumerate(records) if r.demographics.race in minority]
        desc = "race (majority -> minority)"
    else:
        raise SchemaError(f"{kind} is not a population split")
    if not src or not tgt:
        raise EmptyCohortError(
            f"empty pool for {desc}: source={len(src)}, target={len(tgt)} of {len(records)}"
        )
    return dataset.subset(src), dataset.subset(tgt)


def _fit_pool_landscape(pool: Dataset, sieve_cfg: dict, seed: int) -> DiseaseLandscape:
    matrix = label_matrix_of(pool)
    model = fit_sieve(
        matrix,
        k=sieve_cfg["layers"],
        cardinality=sieve_cfg["cardinality"],
        seed=seed,
        restarts=sieve_cfg["restarts"],
        max_iters=sieve_cfg["max_iters"],
    )
    return build_landscape(model, matrix)


def define_positive_source(source_pool: Dataset, cluster_id: int,
                           landscape: DiseaseLandscape) -> PositiveClassDef:
    """All diseases clustered to the given factor of the source landscape."""
    members = [name for name in landscape.diseases if landscape.clusters[name] == cluster_id]
    unknown = [name for name in members if name not in source_pool.diseases]
    if unknown:
        raise SchemaError(f"landscape diseases missing from pool: {unknown}")
    if not members:
        raise EmptyCohortError(f"cluster {cluster_id} has no member diseases")
    return PositiveClassDef(tuple(members))


def _expand_on_target(target_pool: Dataset, source_def: PositiveClassDef, tau: float,
                      sieve_cfg: dict, seed: int):
    for name in source_def.diseases:
        if name not in target_pool.diseases:
            raise SchemaError(f"source positive disease missing from target pool: {name}")
    land = _fit_pool_landscape(target_pool, sieve_cfg, seed)
    expanded = correlated_diseases(land, source_def.diseases, tau)
    return PositiveClassDef(tuple(expanded)), land


def define_positive_target(target_pool: Dataset, source_def: PositiveClassDef,
                           tau: float, sieve_cfg: dict = None, seed: int = 0) -> PositiveClassDef:
    """Refit the landscape on the target pool and widen the source positive
    class with strongly correlated diseases.  Always a superset of the
    source definition."""
    cfg = dict(DEFAULT_SIEVE)
    cfg.update(sieve_cfg or {})
    definition, _ = _expand_on_target(target_pool, source_def, tau, cfg, seed)
    return definition


def binarize_labels(pool: Dataset, definition: PositiveClassDef) -> np.ndarray:
    """1 iff any disease of the definition is present."""
    unknown = [name for name in definition.diseases if name not in pool.diseases]
    if unknown:
        raise SchemaError(f"unknown disease names: {unknown}")
    idx = [pool.disease_index(name) for name in definition.diseases]
    lm = pool.label_matrix()
    if lm.shape[0] == 0:
        return np.zeros(0, dtype=np.uint8)
    return (lm[:, idx].max(axis=1) > 0).astype(np.uint8)


def balance(pool: Dataset, labels: np.ndarray, ratio: float = DEFAULT_BALANCE_RATIO,
            tolerance: float = DEFAULT_BALANCE_TOLERANCE, seed: int = 0):
    """Downsample one class (seeded, order-preserving) so the positive
    fraction approximates `ratio`; the limiting class is kept whole.

    With tiny class counts the integer rounding granularity can exceed the
    tolerance; the closest achievable split is still returned and the
    deviation is the caller's to record (a warning is emitted).
    """
    labels = np.asarray(labels)
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if len(pos) == 0 or len(neg) == 0:
        raise EmptyCohortError(
            f"cannot balance: {len(pos)} positives / {len(neg)} negatives"
        )
    need_neg = int(round(len(pos) * (1.0 - ratio) / ratio))
    gen = rng.generator(seed, "balance")
    if need_neg <= len(neg):
        keep_pos = pos
        keep_neg = np.sort(gen.choice(neg, size=need_neg, replace=False)) if need_neg < len(neg) else neg
    else:
        need_pos = min(int(round(len(neg) * ratio / (1.0 - ratio))), len(pos))
        keep_pos = np.sort(gen.choice(pos, size=need_pos, replace=False)) if need_pos < len(pos) else pos
        keep_neg = neg
    if len(keep_pos) == 0 or len(keep_neg) == 0:
        raise EmptyCohortError(f"balance ratio {ratio} unattainable with these class counts")
    keep = np.sort(np.concatenate([keep_pos, keep_neg]))
    achieved = len(keep_pos) / len(keep)
    if abs(achieved - ratio) > tolerance:
        warnings.warn(
            f"balanced split off target: positive fraction {achieved:.3f} vs {ratio:.3f} "
            f"(integer granularity at {len(keep_pos)}/{len(keep_neg)})"
        )
    return pool.subset(keep), labels[keep]


def _group_indices(dataset: Dataset, set_a, set_b) -> dict:
    a, b = list(set_a), list(set_b)
    if not a or not b:
        raise SchemaError("disease sets must be non-empty")
    if set(a) & set(b):
        raise SchemaError(f"disease sets overlap: {sorted(set(a) & set(b))}")
    in_a = binarize_labels(dataset, PositiveClassDef(tuple(a))).astype(bool)
    in_b = binarize_labels(dataset, PositiveClassDef(tuple(b))).astype(bool)
    return {
        "a_only": np.flatnonzero(in_a & ~in_b),
        "b_only": np.flatnonzero(~in_a & in_b),
        "neither": np.flatnonzero(~in_a & ~in_b),
        "both": np.flatnonzero(in_a & in_b),
    }


def group_by_disease_sets(dataset: Dataset, set_a, set_b) -> dict:
    """Partition records into a_only / b_only / neither / both by any-of
    membership in the two disjoint disease sets."""
    return {key: dataset.subset(idx) for key, idx in _group_indices(dataset, set_a, set_b).items()}


def _halves(n: int, seed: int):
    """Seeded disjoint halves of range(n), each in ascending order."""
    perm = rng.generator(seed, "half-split").permutation(n)
    cut = n // 2
    return np.sort(perm[:cut]), np.sort(perm[cut:])


def _balanced_side(pool, labels, ratio, tolerance, seed, stream):
    before = {"n": int(len(labels)), "positives": int(labels.sum())}
    side_pool, side_labels = balance(
        pool, labels, ratio, tolerance, seed=rng.derive_seed(seed, "balance", stream)
    )
    after = {
        "n": int(len(side_labels)),
        "positives": int(side_labels.sum()),
        "positive_fraction": float(side_labels.mean()),
    }
    return TaskSide(side_pool, side_labels), {"before": before, "after": after}


def _population_pair(dataset: Dataset, spec: ScenarioSpec):
    source_pool, target_pool = split_population(dataset, spec)
    excluded = dataset.n_records - source_pool.n_records - target_pool.n_records
    src_land = _fit_pool_landscape(
        source_pool, spec.sieve, rng.derive_seed(spec.seed, "sieve", "source")
    )
    source_def = define_positive_source(source_pool, int(spec.params["cluster"]), src_land)
    target_def, tgt_land = _expand_on_target(
        target_pool, source_def, spec.tau, spec.sieve,
        rng.derive_seed(spec.seed, "sieve", "target"),
    )
    y_src = binarize_labels(source_pool, source_def)
    y_tgt = binarize_labels(target_pool, target_def)
    source, src_counts = _balanced_side(
        source_pool, y_src, spec.balance_ratio, spec.balance_tolerance, spec.seed, "source"
    )
    target, tgt_counts = _balanced_side(
        target_pool, y_tgt, spec.balance_ratio, spec.balance_tolerance, spec.seed, "target"
    )
    extra = {
        "pool_sizes": {"source": source_pool.n_records, "target": target_pool.n_records},
        "excluded_records": excluded,
        "landscapes": {"source": src_land.to_dict(), "target": tgt_land.to_dict()},
    }
    return source, target, source_def, target_def, src_counts, tgt_counts, extra


def _novel_pair(dataset: Dataset, spec: ScenarioSpec):
    src_idx, tgt_idx = _halves(dataset.n_records, rng.derive_seed(spec.seed, "novel-half"))
    source_pool, target_pool = dataset.subset(src_idx), dataset.subset(tgt_idx)
    if source_pool.n_records == 0 or target_pool.n_records == 0:
        raise EmptyCohortError("dataset too small to halve")
    land = _fit_pool_landscape(
        source_pool, spec.sieve, rng.derive_seed(spec.seed, "sieve", "source")
    )
    source_def = define_positive_source(source_pool, int(spec.params["source_cluster"]), land)
    novel_id = int(spec.params["novel_cluster"])
    novel = [name for name in land.diseases if land.clusters[name] == novel_id]
    combined = [
        name for name in dataset.diseases if name in set(source_def.diseases) | set(novel)
    ]
    target_def = PositiveClassDef(tuple(combined))
    y_src = binarize_labels(source_pool, source_def)
    y_tgt = binarize_labels(target_pool, target_def)
    source, src_counts = _balanced_side(
        source_pool, y_src, spec.balance_ratio, spec.balance_tolerance, spec.seed, "source"
    )
    target, tgt_counts = _balanced_side(
        target_pool, y_tgt, spec.balance_ratio, spec.balance_tolerance, spec.seed, "target"
    )
    extra = {
        "pool_sizes": {"source": source_pool.n_records, "target": target_pool.n_records},
        "novel_diseases": novel,
        "landscapes": {"source": land.to_dict()},
    }
    return source, target, source_def, target_def, src_counts, tgt_counts, extra


def _label_shift_pair(dataset: Dataset, spec: ScenarioSpec):
    groups = _group_indices(dataset, spec.params["set_a"], spec.params["set_b"])
    singles_idx = np.sort(np.concatenate([groups["a_only"], groups["b_only"]]))
    both_idx, neither_idx = groups["both"], groups["neither"]
    if spec.kind == "dual_to_single":
        src_pos_idx, tgt_pos_idx = both_idx, singles_idx
    else:
        src_pos_idx, tgt_pos_idx = singles_idx, both_idx
    if len(src_pos_idx) == 0 or len(tgt_pos_idx) == 0:
        raise EmptyCohortError(
            f"{spec.kind}: empty positive group "
            f"(both={len(both_idx)}, singles={len(singles_idx)})"
        )
    if len(neither_idx) < 2:
        raise EmptyCohortError(f"{spec.kind}: 'neither' group too small to halve")
    half_a, half_b = _halves(len(neither_idx), rng.derive_seed(spec.seed, "neither-half"))
    any_def = PositiveClassDef(tuple(spec.params["set_a"]) + tuple(spec.params["set_b"]))

    def side(pos_idx, neg_half, stream):
        keep = np.sort(np.concatenate([pos_idx, neither_idx[neg_half]]))
        pool = dataset.subset(keep)
        labels = binarize_labels(pool, any_def)
        return _balanced_side(
            pool, labels, spec.balance_ratio, spec.balance_tolerance, spec.seed, stream
        )

    source, src_counts = side(src_pos_idx, half_a, "source")
    target, tgt_counts = side(tgt_pos_idx, half_b, "target")
    extra = {
        "group_sizes": {key: int(len(idx)) for key, idx in groups.items()},
    }
    return source, target, any_def, any_def, src_counts, tgt_counts, extra


def build_scenario(dataset: Dataset, spec: ScenarioSpec) -> SourceTargetPair:
    """Materialize the spec against a dataset; see the module docstring for
    the per-kind recipes."""
    spec.validate()
    try:
        if spec.kind in ("age_split", "gender_split", "race_split"):
            parts = _population_pair(dataset, spec)
        elif spec.kind == "novel_disease":
            parts = _novel_pair(dataset, spec)
        else:
            parts = _label_shift_pair(dataset, spec)
    except (EmptyCohortError, SchemaError) as exc:
        raise type(exc)(f"[{spec.kind}] {exc}") from exc
    source, target, source_def, target_def, src_counts, tgt_counts, extra = parts

    src_ids = set(source.dataset.record_ids())
    tgt_ids = set(target.dataset.record_ids())
    overlap = src_ids & tgt_ids
    if overlap:
        raise AssertionError(f"source/target record ids intersect: {sorted(overlap)[:5]}")

    provenance = {
        "spec": spec.to_dict(),
        "source_positive": source_def.to_dict(),
        "target_positive": target_def.to_dict(),
        "balance": {"source": src_counts, "target": tgt_counts},
        "transforms": [],
    }
    provenance.update(extra)
    return SourceTargetPair(
        source=source,
        target=target,
        source_positive=source_def,
        target_positive=target_def,
        provenance=provenance,
    )


def build_control_pair(dataset: Dataset, diseases, seed: int = 0,
                       ratio: float = DEFAULT_BALANCE_RATIO,
                       tolerance: float = DEFAULT_BALANCE_TOLERANCE) -> SourceTargetPair:
    """In-distribution control: seeded disjoint halves of the dataset with
    the same any-of positive definition on both sides.  Used as the no-shift
    reference when judging scenario difficulty."""
    definition = PositiveClassDef(tuple(diseases))
    src_idx, tgt_idx = _halves(dataset.n_records, rng.derive_seed(seed, "control-half"))
    sides = []
    counts = []
    for stream, idx in (("source", src_idx), ("target", tgt_idx)):
        pool = dataset.subset(idx)
        labels = binarize_labels(pool, definition)
        side, count = _balanced_side(pool, labels, ratio, tolerance, seed, stream)
        sides.append(side)
        counts.append(count)
    provenance = {
        "spec": {"kind": "control", "diseases": list(definition.diseases), "seed": seed,
                 "balance_ratio": ratio, "balance_tolerance": tolerance},
        "source_positive": definition.to_dict(),
        "target_positive": definition.to_dict(),
        "balance": {"source": counts[0], "target": counts[1]},
        "transforms": [],
    }
    return SourceTargetPair(
        source=sides[0], target=sides[1],
        source_positive=definition, target_positive=definition,
        provenance=provenance,
    )


def _write_labels_csv(side: TaskSide, path):
    ids = side.dataset.record_ids()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("record_id,label\n")
        for rid, lab in zip(ids, side.labels):
            fh.write(f"{rid},{int(lab)}\n")


def _read_labels_csv(path, dataset: Dataset) -> np.ndarray:
    by_id = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != "record_id,label":
            raise SchemaError(f"labels file {path}: bad header {header!r}")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            rid, lab = line.split(",", 1)
            by_id[rid] = int(lab)
    ids = dataset.record_ids()
    if set(by_id) != set(ids):
        raise SchemaError(f"labels file {path}: record ids do not match the dataset")
    return np.asarray([by_id[rid] for rid in ids], dtype=np.uint8)


def save_pair(pair: SourceTargetPair, out_dir) -> None:
    """Emit the pair as two dataset directories, per-side task-label CSVs,
    and a provenance JSON."""
    from driftbench.dataio import save_dataset

    jsonio.ensure_dir(out_dir)
    save_dataset(pair.source.dataset, os.path.join(out_dir, "source"))
    save_dataset(pair.target.dataset, os.path.join(out_dir, "target"))
    _write_labels_csv(pair.source, os.path.join(out_dir, "source_labels.csv"))
    _write_labels_csv(pair.target, os.path.join(out_dir, "target_labels.csv"))
    jsonio.dump(pair.provenance, os.path.join(out_dir, "provenance.json"))


def load_pair(pair_dir) -> SourceTargetPair:
    """Re-load an emitted pair; per-side sampling steps recorded by a
    resample transform are restored from provenance."""
    from driftbench.dataio import load_dataset

    provenance = jsonio.load(os.path.join(pair_dir, "provenance.json"))
    source_ds = load_dataset(os.path.join(pair_dir, "source"))
    target_ds = load_dataset(os.path.join(pair_dir, "target"))
    source = TaskSide(
        source_ds, _read_labels_csv(os.path.join(pair_dir, "source_labels.csv"), source_ds)
    )
    target = TaskSide(
        target_ds, _read_labels_csv(os.path.join(pair_dir, "target_labels.csv"), target_ds)
    )
    for entry in provenance.get("transforms", []):
        if entry.get("kind") == "resample":
            source.step = float(entry["params"]["source_step"])
            source.horizon = float(entry["params"]["horizon"])
            target.step = float(entry["params"]["target_step"])
            target.horizon = float(entry["params"]["horizon"])
    return SourceTargetPair(
        source=source,
        target=target,
        source_positive=PositiveClassDef(tuple(provenance["source_positive"]["diseases"])),
        target_positive=PositiveClassDef(tuple(provenance["target_positive"]["diseases"])),
        provenance=provenance,
    )
