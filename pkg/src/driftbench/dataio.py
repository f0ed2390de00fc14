"""Dataset serialization.

On disk a dataset is a directory with
  manifest.json  -- channels (name, unit, kind, masked), disease names,
                    and the records file name
  records.jsonl  -- one episode per line: {"id", "demographics",
                    "events": [[time, channel_index, value], ...],
                    "labels": [0/1, ...]}

Serialization is canonical: records sorted by id, events sorted by
(time, channel_index), fixed field order, repr floats.  save -> load ->
save reproduces the files byte for byte.  Loading rejects malformed input
rather than repairing it, with one exception: out-of-order events are
re-sorted stably with a warning.

A long-format CSV pair (events + labels) can also be ingested; see
load_dataset_csv.
"""

import csv
import json
import math
import os
import warnings

import numpy as np

from driftbench import jsonio
from driftbench.datamodel import (
    ChannelDescriptor,
    Dataset,
    Demographics,
    EpisodeRecord,
    _events_sorted,
    sort_events,
)
from driftbench.errors import SchemaError

MANIFEST_NAME = "manifest.json"
RECORDS_NAME = "records.jsonl"
FORMAT_TAG = "driftbench-dataset-v1"

# accepted on input, normalized to the canonical token
_GENDER_ALIASES = {"unknown": "other"}


def _record_to_obj(rec: EpisodeRecord) -> dict:
    events = [[float(t), int(c), float(v)] for t, c, v in sort_events(rec.events)]
    return {
        "id": rec.id,
        "demographics": {
            "age": int(rec.demographics.age),
            "gender": rec.demographics.gender,
            "race": rec.demographics.race,
        },
        "events": events,
        "labels": [int(x) for x in rec.labels],
    }


def _record_from_obj(obj: dict, n_channels: int, n_diseases: int) -> EpisodeRecord:
    try:
        rid = obj["id"]
        demo = obj["demographics"]
        gender = demo["gender"]
        gender = _GENDER_ALIASES.get(gender, gender)
        demographics = Demographics(age=int(demo["age"]), gender=gender, race=demo["race"])
        events = np.asarray(obj["events"], dtype=np.float64).reshape(-1, 3)
        labels = obj["labels"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed record object: {exc}") from exc
    if not _events_sorted(events):
        warnings.warn(f"record {rid}: events out of time order, re-sorting")
        events = sort_events(events)
    rec = EpisodeRecord(id=rid, demographics=demographics, events=events, labels=labels)
    rec.validate(n_channels, n_diseases)
    return rec


def save_dataset(dataset: Dataset, path) -> None:
    """Write the canonical directory form; `path` is a directory."""
    jsonio.ensure_dir(path)
    manifest = {
        "format": FORMAT_TAG,
        "channels": [
            {"name": c.name, "unit": c.unit, "kind": c.kind, "masked": bool(c.masked)}
            for c in dataset.channels
        ],
        "diseases": list(dataset.diseases),
        "records_file": RECORDS_NAME,
    }
    jsonio.dump(manifest, os.path.join(path, MANIFEST_NAME))
    records = sorted(dataset.records, key=lambda r: r.id)
    with open(os.path.join(path, RECORDS_NAME), "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(_record_to_obj(rec), separators=(",", ":")) + "\n")


def load_dataset(path) -> Dataset:
    """Read a dataset directory (or a manifest path); validates everything
    and reports schema violations with the offending record id and field."""
    manifest_path = path
    if os.path.isdir(path):
        manifest_path = os.path.join(path, MANIFEST_NAME)
    base = os.path.dirname(manifest_path)
    manifest = jsonio.load(manifest_path)
    if manifest.get("format") != FORMAT_TAG:
        raise SchemaError(f"unexpected manifest format tag: {manifest.get('format')!r}")
    try:
        channels = [
            ChannelDescriptor(
                name=c["name"],
                unit=c.get("unit", ""),
                kind=c.get("kind", "continuous"),
                masked=bool(c.get("masked", False)),
            )
            for c in manifest["channels"]
        ]
        diseases = list(manifest["diseases"])
        records_file = manifest["records_file"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed manifest: {exc}") from exc

    records = []
    with open(os.path.join(base, records_file), "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"records line {lineno}: invalid JSON: {exc}") from exc
            records.append(_record_from_obj(obj, len(channels), len(diseases)))
    return Dataset(channels=channels, diseases=diseases, records=records).validate()


def load_dataset_csv(events_path, labels_path) -> Dataset:
    """Ingest long-format CSVs:

    events: record_id,time_hours,channel_name,value   (one event per row)
    labels: record_id,<disease_1>,...,<disease_d>     (0/1 cells)

    Channels are the sorted distinct channel names (kind 'continuous');
    records are ordered by id.  Records present in the labels file but
    without events are kept with empty event lists.
    """
    with open(labels_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "record_id" or len(header) < 2:
            raise SchemaError("labels CSV must start with a 'record_id,<diseases...>' header")
        diseases = header[1:]
        labels_by_id = {}
        for row in reader:
            if not row:
                continue
            rid = row[0]
            if rid in labels_by_id:
                raise SchemaError(f"record {rid}: duplicated id in labels CSV")
            if len(row) != len(header):
                raise SchemaError(f"record {rid}: labels row width != header width")
            try:
                labels_by_id[rid] = [int(x) for x in row[1:]]
            except ValueError as exc:
                raise SchemaError(f"record {rid}: non-integer label: {exc}") from exc

    events_by_id = {}
    channel_names = set()
    with open(events_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["record_id", "time_hours", "channel_name", "value"]:
            raise SchemaError(
                "events CSV header must be 'record_id,time_hours,channel_name,value'"
            )
        for row in reader:
            if not row:
                continue
            rid, t, name, v = row
            if rid not in labels_by_id:
                raise SchemaError(f"record {rid}: events present but no labels row")
            try:
                tv, vv = float(t), float(v)
            except ValueError as exc:
                raise SchemaError(f"record {rid}: bad numeric field: {exc}") from exc
            if not (math.isfinite(tv) and math.isfinite(vv)):
                raise SchemaError(f"record {rid}: non-finite event field")
            channel_names.add(name)
            events_by_id.setdefault(rid, []).append((tv, name, vv))

    channels = [ChannelDescriptor(name=n) for n in sorted(channel_names)]
    index = {c.name: i for i, c in enumerate(channels)}
    records = []
    for rid in sorted(labels_by_id):
        triples = events_by_id.get(rid, [])
        events = np.asarray(
            [[t, index[name], v] for t, name, v in triples], dtype=np.float64
        ).reshape(-1, 3)
        records.append(
            EpisodeRecord(
                id=rid,
                # CSV ingestion carries no demographics; neutral placeholders
                demographics=Demographics(age=0, gender="other", race="unknown"),
                events=sort_events(events),
                labels=labels_by_id[rid],
            )
        )
    return Dataset(channels=channels, diseases=diseases, records=records).validate()
