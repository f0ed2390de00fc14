"""Measurement-discrepancy injectors applied to a built scenario pair:
seeded label flips, sampling-rate changes (per-side regular grids with
last-value repetition), and missing-channel masking (events dropped,
channels kept and zero-imputed downstream so predictor arity is stable).
"""

from dataclasses import dataclass, replace

import numpy as np

from driftbench import rng
from driftbench.datamodel import Dataset, EpisodeRecord
from driftbench.errors import SchemaError
from driftbench.scenarios import SourceTargetPair, TaskSide

TRANSFORM_KINDS = ("label_flip", "resample", "mask_channels")

# side a transform applies to when the spec does not say
_DEFAULT_SIDE = {"label_flip": "source", "mask_channels": "target", "resample": "both"}

_REQUIRED_PARAMS = {
    "label_flip": {"p"},
    "resample": {"source_step", "target_step", "horizon"},
    "mask_channels": {"channels"},
}


@dataclass
class TransformSpec:
    kind: str
    params: dict
    side: str = None
    seed: int = 0

    def validate(self) -> "TransformSpec":
        if self.kind not in TRANSFORM_KINDS:
            raise SchemaError(f"kind: unknown transform kind {self.kind!r}")
        required = _REQUIRED_PARAMS[self.kind]
        missing = required - set(self.params)
        extra = set(self.params) - required
        if missing:
            raise SchemaError(f"params: missing {sorted(missing)} for {self.kind}")
        if extra:
            raise SchemaError(f"params: unexpected {sorted(extra)} for {self.kind}")
        if self.side is None:
            self.side = _DEFAULT_SIDE[self.kind]
        if self.side not in ("source", "target", "both"):
            raise SchemaError(f"side: {self.side!r} not in source/target/both")
        if self.kind == "label_flip" and not 0.0 <= float(self.params["p"]) <= 1.0:
            raise SchemaError(f"params.p: {self.params['p']} outside [0, 1]")
        if self.kind == "resample":
            for key in ("source_step", "target_step", "horizon"):
                if float(self.params[key]) <= 0:
                    raise SchemaError(f"params.{key}: must be positive")
        return self

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "side": self.side,
                "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "TransformSpec":
        known = {"kind", "params", "side", "seed"}
        unknown = set(d) - known
        if unknown:
            raise SchemaError(f"unknown transform spec keys: {sorted(unknown)}")
        if "kind" not in d or "params" not in d:
            raise SchemaError("transform spec requires 'kind' and 'params'")
        return cls(
            kind=d["kind"],
            params=dict(d["params"]),
            side=d.get("side"),
            seed=int(d.get("seed", 0)),
        ).validate()


def flip_labels(labels: np.ndarray, p: float, seed: int = 0) -> np.ndarray:
    """Flip each binary label independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"flip probability {p} outside [0, 1]")
    labels = np.asarray(labels, dtype=np.uint8)
    mask = rng.generator(seed, "label-flip").random(labels.size) < p
    return np.where(mask, 1 - labels, labels).astype(np.uint8)


def mask_channels(dataset: Dataset, channel_names) -> Dataset:
    """Drop all events on the named channels and flag their descriptors as
    masked.  Channels stay in place so downstream grids zero-impute them and
    predictors keep a fixed input arity.  Idempotent."""
    names = list(channel_names)
    index = {c.name: i for i, c in enumerate(dataset.channels)}
    unknown = [n for n in names if n not in index]
    if unknown:
        raise SchemaError(f"unknown channel names: {unknown}")
    masked_idx = {index[n] for n in names}
    channels = [
        replace(c, masked=True) if i in masked_idx else c
        for i, c in enumerate(dataset.channels)
    ]
    records = []
    for rec in dataset.records:
        ev = rec.events
        if ev.shape[0]:
            keep = ~np.isin(ev[:, 1].astype(np.int64), list(masked_idx))
            ev = ev[keep]
        records.append(
            EpisodeRecord(id=rec.id, demographics=rec.demographics, events=ev,
                          labels=rec.labels)
        )
    return Dataset(channels=channels, diseases=dataset.diseases, records=records)


def valid_channel_count(dataset: Dataset) -> int:
    return sum(1 for c in dataset.channels if not c.masked)


def resample_pair(pair: SourceTargetPair, source_step: float, target_step: float,
                  horizon: float) -> SourceTargetPair:
    """Stamp each side with its sampling step; features downstream are
    computed from the corresponding regular grids (LOCF)."""
    if source_step <= 0 or target_step <= 0:
        raise ValueError("steps must be positive")
    if horizon < max(source_step, target_step):
        raise ValueError("horizon must cover at least one step on both sides")
    source = replace(pair.source, step=float(source_step), horizon=float(horizon))
    target = replace(pair.target, step=float(target_step), horizon=float(horizon))
    return replace(pair, source=source, target=target)


def _flip_side(side: TaskSide, p: float, seed: int):
    flipped = flip_labels(side.labels, p, seed)
    n_flips = int((flipped != side.labels).sum())
    return replace(side, labels=flipped), n_flips


def apply_transforms(pair: SourceTargetPair, specs) -> SourceTargetPair:
    """Apply a transform list in order; each application is recorded in the
    pair's provenance `transforms` array."""
    for spec in specs:
        spec.validate()
        entry = spec.to_dict()
        if spec.kind == "label_flip":
            p = float(spec.params["p"])
            flips = {}
            source, target = pair.source, pair.target
            if spec.side in ("source", "both"):
                source, flips["source"] = _flip_side(
                    source, p, rng.derive_seed(spec.seed, "flip", "source")
                )
            if spec.side in ("target", "both"):
                target, flips["target"] = _flip_side(
                    target, p, rng.derive_seed(spec.seed, "flip", "target")
                )
            pair = replace(pair, source=source, target=target)
            entry["flip_counts"] = flips
        elif spec.kind == "resample":
            pair = resample_pair(
                pair,
                float(spec.params["source_step"]),
                float(spec.params["target_step"]),
                float(spec.params["horizon"]),
            )
        else:  # mask_channels
            names = list(spec.params["channels"])
            counts = {}
            source, target = pair.source, pair.target
            if spec.side in ("source", "both"):
                masked = mask_channels(source.dataset, names)
                source = replace(source, dataset=masked)
                counts["source"] = valid_channel_count(masked)
            if spec.side in ("target", "both"):
                masked = mask_channels(target.dataset, names)
                target = replace(target, dataset=masked)
                counts["target"] = valid_channel_count(masked)
            pair = replace(pair, source=source, target=target)
            entry["valid_channels"] = counts
        provenance = dict(pair.provenance)
        provenance["transforms"] = list(provenance.get("transforms", [])) + [entry]
        pair = replace(pair, provenance=provenance)
    return pair
