"""Seeded synthetic EHR-like data with planted latent structure.

Labels are driven by hidden per-record group activations: when a group is
active, each member disease fires with the group's coupling probability,
otherwise at a small baseline rate.  Demographics come from configurable
mixtures (with per-group age shifts so population splits see different
landscapes), and optional co-morbidity rules inject population-conditional
extra diagnoses (the mechanism for emulating e.g. younger patients carrying
additional co-occurring conditions).  Channels are Poisson event streams
whose values shift when their paired disease is present, plus pure-noise
channels.

Everything is a deterministic function of the config seed; the manifest
records the planted ground truth so tests can use it as an oracle.
"""

from dataclasses import dataclass

import numpy as np

from driftbench import rng
from driftbench.datamodel import ChannelDescriptor, Dataset, Demographics, EpisodeRecord, sort_events
from driftbench.errors import SchemaError

DEFAULT_GROUP_NAMES = ("cardiac", "renal", "respiratory")
DEFAULT_GROUPS = (
    (
        "coronary_atherosclerosis",
        "lipid_metabolism_disorder",
        "essential_hypertension",
        "congestive_heart_failure",
    ),
    (
        "acute_renal_failure",
        "chronic_kidney_disease",
        "secondary_hypertension",
        "fluid_electrolyte_disorder",
    ),
    (
        "respiratory_failure",
        "pneumonia",
        "copd_bronchiectasis",
        "pleural_effusion",
    ),
)

DEFAULT_GENDER_PROPS = (("male", 0.54), ("female", 0.45), ("other", 0.01))
DEFAULT_RACE_PROPS = (
    ("white", 0.52),
    ("russian", 0.03),
    ("european", 0.06),
    ("hispanic", 0.12),
    ("south_america", 0.03),
    ("african", 0.09),
    ("asian", 0.08),
    ("portuguese", 0.02),
    ("unknown", 0.05),
)

BASELINE_LABEL_RATE = 0.02


@dataclass(frozen=True)
class ComorbidityRule:
    """If `group` is active and the demographic predicate holds, set
    `disease` to 1 with probability `prob`.  Rules apply in listed order."""

    group: int
    disease: str
    prob: float
    age_below: float = None
    age_at_least: float = None
    gender: str = None

    def to_dict(self) -> dict:
        out = {"group": self.group, "disease": self.disease, "prob": self.prob}
        if self.age_below is not None:
            out["age_below"] = self.age_below
        if self.age_at_least is not None:
            out["age_at_least"] = self.age_at_least
        if self.gender is not None:
            out["gender"] = self.gender
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ComorbidityRule":
        return cls(
            group=int(d["group"]),
            disease=d["disease"],
            prob=float(d["prob"]),
            age_below=d.get("age_below"),
            age_at_least=d.get("age_at_least"),
            gender=d.get("gender"),
        )


@dataclass
class SynthConfig:
    n_records: int = 5000
    seed: int = 0
    groups: tuple = DEFAULT_GROUPS
    group_activation: tuple = (0.5, 0.5, 0.5)
    group_coupling: tuple = (0.9, 0.9, 0.9)
    baseline_rate: float = BASELINE_LABEL_RATE
    age_mean: float = 62.0
    age_std: float = 14.0
    age_group_shift: tuple = (8.0, 0.0, -10.0)
    gender_props: tuple = DEFAULT_GENDER_PROPS
    race_props: tuple = DEFAULT_RACE_PROPS
    comorbidity_rules: tuple = ()
    signal_shift: float = 4.0
    n_noise_channels: int = 8
    # < 1.0 weakens channel signal when two or more groups are active at
    # once, so dual-disease presentations look unlike the sum of singles
    dual_damping: float = 1.0
    event_rate: float = 0.05
    horizon: float = 96.0
    channel_layout: str = "default"  # or "mimic76"

    @property
    def diseases(self) -> list:
        return [name for grp in self.groups for name in grp]

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def group_of(self, disease: str) -> int:
        for j, grp in enumerate(self.groups):
            if disease in grp:
                return j
        raise SchemaError(f"disease {disease!r} not in any group")

    def validate(self) -> "SynthConfig":
        if self.n_records < 1:
            raise SchemaError("n_records: must be >= 1")
        if not self.groups or any(len(g) == 0 for g in self.groups):
            raise SchemaError("groups: must be non-empty lists of disease names")
        names = self.diseases
        if len(set(names)) != len(names):
            raise SchemaError("groups: disease names must be unique across groups")
        for label, probs in (
            ("group_activation", self.group_activation),
            ("group_coupling", self.group_coupling),
        ):
            if len(probs) != self.n_groups:
                raise SchemaError(f"{label}: need one value per group")
            for p in probs:
                if not 0.0 <= p <= 1.0:
                    raise SchemaError(f"{label}: probability {p} outside [0, 1]")
        if not 0.0 <= self.baseline_rate <= 1.0:
            raise SchemaError(f"baseline_rate: probability {self.baseline_rate} outside [0, 1]")
        for props, label in ((self.gender_props, "gender_props"), (self.race_props, "race_props")):
            total = sum(p for _, p in props)
            if abs(total - 1.0) > 1e-9:
                raise SchemaError(f"{label}: proportions sum to {total}, expected 1.0")
        for i, rule in enumerate(self.comorbidity_rules):
            if not 0.0 <= rule.prob <= 1.0:
                raise SchemaError(f"comorbidity_rules[{i}].prob: {rule.prob} outside [0, 1]")
            if not 0 <= rule.group < self.n_groups:
                raise SchemaError(f"comorbidity_rules[{i}].group: unknown group {rule.group}")
            if rule.disease not in names:
                raise SchemaError(f"comorbidity_rules[{i}].disease: unknown disease {rule.disease!r}")
        if self.event_rate < 0:
            raise SchemaError("event_rate: must be >= 0")
        if self.horizon <= 0:
            raise SchemaError("horizon: must be positive")
        if not 0.0 <= self.dual_damping <= 1.0:
            raise SchemaError("dual_damping: must be in [0, 1]")
        if self.channel_layout not in ("default", "mimic76"):
            raise SchemaError(f"channel_layout: unknown layout {self.channel_layout!r}")
        return self

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "seed": self.seed,
            "groups": [list(g) for g in self.groups],
            "group_activation": list(self.group_activation),
            "group_coupling": list(self.group_coupling),
            "baseline_rate": self.baseline_rate,
            "age_mean": self.age_mean,
            "age_std": self.age_std,
            "age_group_shift": list(self.age_group_shift),
            "gender_props": [[t, p] for t, p in self.gender_props],
            "race_props": [[t, p] for t, p in self.race_props],
            "comorbidity_rules": [r.to_dict() for r in self.comorbidity_rules],
            "signal_shift": self.signal_shift,
            "n_noise_channels": self.n_noise_channels,
            "dual_damping": self.dual_damping,
            "event_rate": self.event_rate,
            "horizon": self.horizon,
            "channel_layout": self.channel_layout,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        kwargs = {}
        for key in (
            "n_records", "seed", "baseline_rate", "age_mean", "age_std",
            "signal_shift", "n_noise_channels", "dual_damping", "event_rate",
            "horizon", "channel_layout",
        ):
            if key in d:
                kwargs[key] = d[key]
        if "groups" in d:
            kwargs["groups"] = tuple(tuple(g) for g in d["groups"])
        for key in ("group_activation", "group_coupling", "age_group_shift"):
            if key in d:
                kwargs[key] = tuple(d[key])
        for key in ("gender_props", "race_props"):
            if key in d:
                kwargs[key] = tuple((t, float(p)) for t, p in d[key])
        if "comorbidity_rules" in d:
            kwargs["comorbidity_rules"] = tuple(
                ComorbidityRule.from_dict(r) for r in d["comorbidity_rules"]
            )
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise SchemaError(f"unknown synth config keys: {sorted(unknown)}")
        try:
            cfg = cls(**kwargs)
        except TypeError as exc:
            raise SchemaError(f"bad synth config: {exc}") from exc
        return cfg.validate()


def default_config(**overrides) -> SynthConfig:
    return SynthConfig(**overrides).validate()


def age_biased_config(**overrides) -> SynthConfig:
    """A structure where the disease landscape changes across the age split:
    chronic kidney disease and secondary hypertension form a weak satellite
    group of their own, but among patients under 60 they co-present with
    active cardiac disease.  A landscape fit on the older pool keeps them
    separate; refit on the younger pool they join the cardiac cluster, so
    the target positive class expands.  Fit with sieve layers = 4."""
    groups = (
        DEFAULT_GROUPS[0],
        DEFAULT_GROUPS[2],
        ("acute_renal_failure", "fluid_electrolyte_disorder"),
        ("chronic_kidney_disease", "secondary_hypertension"),
    )
    rules = (
        ComorbidityRule(group=0, disease="chronic_kidney_disease", prob=0.85, age_below=60),
        ComorbidityRule(group=0, disease="secondary_hypertension", prob=0.8, age_below=60),
    )
    defaults = dict(
        groups=groups,
        group_activation=(0.5, 0.5, 0.5, 0.15),
        group_coupling=(0.9, 0.9, 0.9, 0.9),
        age_group_shift=(8.0, -10.0, 0.0, 0.0),
        comorbidity_rules=rules,
    )
    defaults.update(overrides)
    return SynthConfig(**defaults).validate()


def mimic76_masked_names() -> list:
    """The 35 channel names of the mimic76 layout's maskable measurement set:
    pH, temperature, height, weight (5 bucket columns each) and all verbal
    response GCS level columns."""
    names = []
    for var, count in (("ph", 5), ("temperature", 5), ("height", 5), ("weight", 5)):
        names += [f"{var}=bucket_{i}" for i in range(count)]
    names += [f"gcs_verbal_response=level_{i:02d}" for i in range(15)]
    return names


def build_channels(config: SynthConfig) -> list:
    signal = [ChannelDescriptor(name=f"sig_{d}") for d in config.diseases]
    if config.channel_layout == "default":
        noise = [ChannelDescriptor(name=f"noise_{i:02d}") for i in range(config.n_noise_channels)]
        return signal + noise
    # mimic76: 35 masked-set one-hot columns + signal + noise filler to 76
    masked_set = [ChannelDescriptor(name=n, kind="categorical") for n in mimic76_masked_names()]
    n_filler = 76 - len(masked_set) - len(signal)
    if n_filler < 0:
        raise SchemaError("mimic76 layout requires at most 41 signal channels")
    noise = [ChannelDescriptor(name=f"noise_{i:02d}") for i in range(n_filler)]
    return masked_set + signal + noise


@dataclass
class SynthManifest:
    """Planted ground truth plus realized statistics for oracle checks."""

    config: SynthConfig
    cluster_map: dict
    n_records: int
    label_counts: dict
    analytic_prevalence: dict      # disease -> expected prevalence (None if rule-touched)
    group_activation_counts: list
    gender_counts: dict
    race_counts: dict
    age_mean_realized: float
    n_age_60_plus: int
    activations: list              # per record: bitmask of active groups

    def to_dict(self) -> dict:
        return {
            "format": "driftbench-synth-manifest-v1",
            "config": self.config.to_dict(),
            "cluster_map": dict(self.cluster_map),
            "n_records": self.n_records,
            "label_counts": dict(self.label_counts),
            "analytic_prevalence": dict(self.analytic_prevalence),
            "group_activation_counts": list(self.group_activation_counts),
            "gender_counts": dict(self.gender_counts),
            "race_counts": dict(self.race_counts),
            "age_mean_realized": self.age_mean_realized,
            "n_age_60_plus": self.n_age_60_plus,
            "activations": list(self.activations),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthManifest":
        return cls(
            config=SynthConfig.from_dict(d["config"]),
            cluster_map=dict(d["cluster_map"]),
            n_records=int(d["n_records"]),
            label_counts=dict(d["label_counts"]),
            analytic_prevalence=dict(d["analytic_prevalence"]),
            group_activation_counts=list(d["group_activation_counts"]),
            gender_counts=dict(d["gender_counts"]),
            race_counts=dict(d["race_counts"]),
            age_mean_realized=float(d["age_mean_realized"]),
            n_age_60_plus=int(d["n_age_60_plus"]),
            activations=list(d["activations"]),
        )


def _categorical(u: np.ndarray, props) -> list:
    tokens = [t for t, _ in props]
    edges = np.cumsum([p for _, p in props])
    idx = np.searchsorted(edges, u, side="right")
    idx = np.minimum(idx, len(tokens) - 1)
    return [tokens[i] for i in idx]


def generate(config: SynthConfig):
    """Build (Dataset, SynthManifest) deterministically from config.seed.

    Draw order is fixed: group activations, label uniforms, age noise,
    gender, race, one uniform vector per co-morbidity rule, then per-record
    event streams.
    """
    config.validate()
    gen = rng.generator(config.seed, "synth")
    n, g = config.n_records, config.n_groups
    diseases = config.diseases
    d = len(diseases)
    group_of = np.asarray([config.group_of(name) for name in diseases])

    act = gen.random((n, g)) < np.asarray(config.group_activation)
    u = gen.random((n, d))
    coupling = np.asarray(config.group_coupling)[group_of]
    thresh = np.where(act[:, group_of], coupling, config.baseline_rate)
    labels = (u < thresh).astype(np.uint8)

    age_noise = gen.normal(size=n)
    ages = config.age_mean + act @ np.asarray(config.age_group_shift) + config.age_std * age_noise
    ages = np.clip(np.round(ages), 0, 110).astype(int)
    genders = _categorical(gen.random(n), config.gender_props)
    races = _categorical(gen.random(n), config.race_props)

    for rule in config.comorbidity_rules:
        ur = gen.random(n)
        fire = act[:, rule.group] & (ur < rule.prob)
        if rule.age_below is not None:
            fire &= ages < rule.age_below
        if rule.age_at_least is not None:
            fire &= ages >= rule.age_at_least
        if rule.gender is not None:
            fire &= np.asarray(genders) == rule.gender
        labels[fire, diseases.index(rule.disease)] = 1

    channels = build_channels(config)
    n_channels = len(channels)
    # map channel -> disease index (or -1 for non-signal channels)
    chan_disease = np.full(n_channels, -1, dtype=np.int64)
    for ci, ch in enumerate(channels):
        if ch.name.startswith("sig_"):
            chan_disease[ci] = diseases.index(ch.name[4:])

    rate_total = config.event_rate * config.horizon * n_channels
    records = []
    for i in range(n):
        n_ev = int(gen.poisson(rate_total))
        shift = np.zeros(n_channels)
        has_sig = chan_disease >= 0
        damp = config.dual_damping if act[i].sum() >= 2 else 1.0
        shift[has_sig] = config.signal_shift * labels[i, chan_disease[has_sig]] * damp
        if n_ev:
            ch = gen.integers(0, n_channels, size=n_ev)
            t = np.round(gen.uniform(0.0, config.horizon, size=n_ev), 2)
            noise = gen.normal(size=n_ev)
            vals = np.round(shift[ch] + noise, 4)
            events = sort_events(np.column_stack([t, ch.astype(np.float64), vals]))
        else:
            events = np.zeros((0, 3))
        records.append(
            EpisodeRecord(
                id=f"synth-{i:05d}",
                demographics=Demographics(age=int(ages[i]), gender=genders[i], race=races[i]),
                events=events,
                labels=labels[i],
            )
        )

    dataset = Dataset(channels=channels, diseases=diseases, records=records).validate()

    rule_touched = {rule.disease for rule in config.comorbidity_rules}
    analytic = {}
    for j, name in enumerate(diseases):
        if name in rule_touched:
            analytic[name] = None
        else:
            grp = group_of[j]
            a, c = config.group_activation[grp], config.group_coupling[grp]
            analytic[name] = a * c + (1 - a) * config.baseline_rate

    gender_counts = {t: genders.count(t) for t, _ in config.gender_props}
    race_counts = {t: races.count(t) for t, _ in config.race_props}
    manifest = SynthManifest(
        config=config,
        cluster_map={name: int(group_of[j]) for j, name in enumerate(diseases)},
        n_records=n,
        label_counts={name: int(labels[:, j].sum()) for j, name in enumerate(diseases)},
        analytic_prevalence=analytic,
        group_activation_counts=[int(x) for x in act.sum(axis=0)],
        gender_counts=gender_counts,
        race_counts=race_counts,
        age_mean_realized=float(ages.mean()),
        n_age_60_plus=int((ages >= 60).sum()),
        activations=[int(x) for x in (act * (1 << np.arange(g))).sum(axis=1)],
    )
    return dataset, manifest


def verify_manifest(dataset: Dataset, manifest: SynthManifest) -> dict:
    """Recount dataset statistics against the manifest.  Exact-match checks
    catch tampering; analytic checks use 3-sigma binomial bounds."""
    checks = []

    def check(name, ok, detail=""):
        checks.append({"name": name, "ok": bool(ok), "detail": detail})

    cfg = manifest.config
    n = dataset.n_records
    check("n_records", n == manifest.n_records, f"{n} vs {manifest.n_records}")

    lm = dataset.label_matrix()
    for j, name in enumerate(dataset.diseases):
        got = int(lm[:, j].sum())
        want = manifest.label_counts.get(name)
        check(f"label_count[{name}]", got == want, f"{got} vs {want}")

    for j, name in enumerate(dataset.diseases):
        p = manifest.analytic_prevalence.get(name)
        if p is None:
            continue
        sigma = np.sqrt(max(p * (1 - p), 1e-12) / n)
        got = lm[:, j].mean()
        check(
            f"analytic_prevalence[{name}]",
            abs(got - p) <= 3 * sigma,
            f"{got:.4f} vs {p:.4f} (3s={3 * sigma:.4f})",
        )

    for grp, (count, a) in enumerate(zip(manifest.group_activation_counts, cfg.group_activation)):
        sigma = np.sqrt(max(a * (1 - a), 1e-12) / n)
        check(
            f"group_activation[{grp}]",
            abs(count / n - a) <= 3 * sigma,
            f"{count / n:.4f} vs {a:.4f}",
        )

    genders = [r.demographics.gender for r in dataset.records]
    races = [r.demographics.race for r in dataset.records]
    for token, want in manifest.gender_counts.items():
        check(f"gender_count[{token}]", genders.count(token) == want)
    for token, want in manifest.race_counts.items():
        check(f"race_count[{token}]", races.count(token) == want)

    ages = np.asarray([r.demographics.age for r in dataset.records])
    check(
        "age_mean",
        abs(float(ages.mean()) - manifest.age_mean_realized) < 1e-9,
        f"{ages.mean():.4f} vs {manifest.age_mean_realized:.4f}",
    )
    check("n_age_60_plus", int((ages >= 60).sum()) == manifest.n_age_60_plus)
    check("activations_length", len(manifest.activations) == n)

    # planted grouping should show up as higher within-group label correlation
    if n >= 100 and min(cfg.group_coupling) > cfg.baseline_rate:
        within, cross = [], []
        stds = lm.std(axis=0)
        centered = lm - lm.mean(axis=0)
        group_of = [cfg.group_of(name) for name in dataset.diseases]
        for a in range(lm.shape[1]):
            for b in range(a + 1, lm.shape[1]):
                if stds[a] == 0 or stds[b] == 0:
                    continue
                corr = float((centered[:, a] * centered[:, b]).mean() / (stds[a] * stds[b]))
                (within if group_of[a] == group_of[b] else cross).append(corr)
        if within and cross:
            check(
                "within_vs_cross_group_correlation",
                np.mean(within) > np.mean(cross),
                f"within={np.mean(within):.3f} cross={np.mean(cross):.3f}",
            )

    failures = [c for c in checks if not c["ok"]]
    return {"ok": not failures, "checks": checks, "failures": failures}
