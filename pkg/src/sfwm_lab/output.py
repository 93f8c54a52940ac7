"""Deterministic, atomic CSV/JSON writers."""

import csv
import io
import json
import math
import os
import tempfile


def fmt(x):
    """Nine significant digits for floats; everything else verbatim."""
    if isinstance(x, float):
        return "%.9g" % x
    return str(x)


def _round(obj):
    if isinstance(obj, float):
        return float("%.9g" % obj) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if hasattr(obj, "item"):
        return _round(obj.item())
    return obj


def atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(float(x)) if hasattr(x, "dtype") else fmt(x) for x in row])
    atomic_write(path, buf.getvalue())


def write_json(path, obj):
    atomic_write(path, json.dumps(_round(obj), indent=1, sort_keys=True) + "\n")
