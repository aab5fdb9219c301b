"""CSV/JSON emission with provenance headers, and the golden-value CSV format."""

import csv
import io
import json
import math

import numpy as np

GOLDEN_COLUMNS = ("b", "alpha", "theta", "y", "freq", "n_samples", "seed")


def fmt(value):
    """Render one CSV cell; floats get 17 significant digits in scientific notation."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".16e")
    return str(value)


def config_header(config):
    lines = []
    for key in sorted(config):
        lines.append(f"# {key} = {json.dumps(_jsonable(config[key]), sort_keys=True)}")
    return lines


def to_csv(rows, columns, config=None, extra_header=()):
    buf = io.StringIO()
    for line in config_header(config or {}):
        buf.write(line + "\n")
    for line in extra_header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(payload):
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def write_golden_csv(path, rows):
    """Write golden Monte Carlo frequencies; ``rows`` are dicts keyed by GOLDEN_COLUMNS."""
    with open(path, "w", newline="") as fh:
        fh.write("# phasequant golden transition frequencies, format version 1\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GOLDEN_COLUMNS)
        for r in rows:
            w.writerow([fmt(r[c]) for c in GOLDEN_COLUMNS])


def read_golden_csv(path):
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    out = []
    for r in csv.DictReader(lines):
        out.append(
            {
                "b": int(r["b"]),
                "alpha": float(r["alpha"]),
                "theta": float(r["theta"]),
                "y": int(r["y"]),
                "freq": float(r["freq"]),
                "n_samples": int(r["n_samples"]),
                "seed": int(r["seed"]),
            }
        )
    return out
