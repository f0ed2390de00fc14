"""Canonical JSON writing: fixed field order (insertion order of the dicts
we build), 2-space indent, '\\n' line endings, trailing newline, floats via
repr (shortest round-trip).  Identical inputs produce identical bytes."""

import json
import os


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def dump(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


def load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
