"""CSV, JSON and MANIFEST output for run directories."""

import csv
import hashlib
import json
import math
import os

import numpy as np

MANIFEST = "MANIFEST"


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars and arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def write_json(path, data):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows):
    """Header row plus one line per row; floats in ``repr`` form so values round-trip."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def read_csv(path):
    """Return ``(header, float array)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)


def write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(directory):
    """Write ``MANIFEST`` with one ``<sha256>  <relative path>`` line per file, sorted by path."""
    entries = []
    for root, _, files in os.walk(directory):
        for name in files:
            full = os.path.join(root, name)
            rel = os.path.relpath(full, directory).replace(os.sep, "/")
            if rel == MANIFEST:
                continue
            entries.append((rel, sha256_file(full)))
    entries.sort()
    text = "".join(f"{digest}  {rel}\n" for rel, digest in entries)
    write_text(os.path.join(directory, MANIFEST), text)
    return dict(entries)


def verify_manifest(directory):
    """Names of files whose hash differs from the MANIFEST (missing files included)."""
    bad = []
    with open(os.path.join(directory, MANIFEST), encoding="utf-8") as fh:
        for line in fh:
            digest, rel = line.rstrip("\n").split("  ", 1)
            full = os.path.join(directory, rel)
            if not os.path.exists(full) or sha256_file(full) != digest:
                bad.append(rel)
    return bad


FIELD_HEADER = ["x", "y", "u", "v", "q", "M", "theta", "rho"]


def write_field(path, field):
    write_csv(path, FIELD_HEADER, field.table())


def write_polylines(path, polylines):
    rows = [(k, float(x), float(y)) for k, line in enumerate(polylines) for x, y in line]
    write_csv(path, ["line", "x", "y"], rows)


__all__ = [
    "FIELD_HEADER",
    "MANIFEST",
    "read_csv",
    "sha256_file",
    "verify_manifest",
    "write_csv",
    "write_field",
    "write_json",
    "write_manifest",
    "write_polylines",
    "write_text",
]
