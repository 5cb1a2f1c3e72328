"""CSV, metadata and raw I/Q output.

Every file is written to a temporary sibling and renamed into place, so a
failed write never leaves a partial file behind.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .cpm import ComplexSignal, CpmConfig
from .errors import ConfigurationError

BER_COLUMNS = ("strategy", "rate_n", "es_n0_db", "sigma2", "trials", "bits", "bit_errors",
               "ber", "standard_error", "seed", "wall_time")
INT_COLUMNS = {"rate_n", "trials", "bits", "bit_errors", "seed"}
TEXT_COLUMNS = {"strategy", "mode", "kind"}


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".9g")
    return str(value)


def atomic_write(path, data: bytes) -> Path:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    return buf.getvalue()


def write_csv(rows, path, columns=None) -> Path:
    rows = list(rows)
    if not rows:
        raise ConfigurationError("refusing to write an empty result table")
    columns = tuple(columns or rows[0].keys())
    return atomic_write(path, csv_text(rows, columns).encode("ascii"))


def read_csv(path) -> list[dict]:
    """Parse a CSV written by :func:`write_csv`; empty cells become ``None``."""
    with open(path, newline="") as fh:
        out = []
        for rec in csv.DictReader(fh):
            row = {}
            for key, text in rec.items():
                if text == "":
                    row[key] = None
                elif key in TEXT_COLUMNS:
                    row[key] = text
                elif key in INT_COLUMNS:
                    row[key] = int(text)
                else:
                    row[key] = float(text)
            out.append(row)
    return out


def ber_rows(results, timing: bool = False) -> list[dict]:
    """Flatten result rows; wall time is blanked unless ``timing`` so reruns match byte for byte."""
    rows = []
    for r in results:
        row = r.as_dict()
        row["wall_time"] = row["wall_time"] if timing else None
        rows.append(row)
    return rows


def write_json(doc: dict, path) -> Path:
    text = json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"
    return atomic_write(path, text.encode("utf-8"))


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def emit_reports(results, spec, out_dir, timing: bool = False, extra: dict | None = None,
                 stem: str = "ber") -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.meta.json`` for a BER run."""
    results = list(results)
    if not results:
        raise ConfigurationError("no results to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = write_csv(ber_rows(results, timing), out / f"{stem}.csv", BER_COLUMNS)
    meta = {
        "package_version": __version__,
        "spec": spec.to_dict(),
        "codebook_provenance": dict(spec.codebook),
        "wall_time_total": sum(r.wall_time for r in results),
    }
    meta.update(extra or {})
    meta_path = write_json(meta, out / f"{stem}.meta.json")
    return csv_path, meta_path


def config_hash(cfg: CpmConfig) -> str:
    text = json.dumps(cfg.describe(), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def export_iq(sig: ComplexSignal, path, cfg: CpmConfig, extra: dict | None = None) -> tuple[Path, Path]:
    """Interleaved little-endian float32 I/Q plus a JSON sidecar ``<path>.json``."""
    path = Path(path)
    iq = np.empty(2 * len(sig), dtype="<f4")
    iq[0::2] = sig.samples.real
    iq[1::2] = sig.samples.imag
    data_path = atomic_write(path, iq.tobytes())
    side = {
        "format": "interleaved float32 little-endian I/Q",
        "sample_rate": 1.0 / sig.dt,
        "sample_rate_units": "samples per symbol",
        "t0": sig.t0,
        "num_samples": len(sig),
        "modulation": cfg.describe(),
        "config_hash": config_hash(cfg),
    }
    side.update(extra or {})
    side_path = write_json(side, path.with_name(path.name + ".json"))
    return data_path, side_path


def read_iq(path) -> np.ndarray:
    raw = np.fromfile(path, dtype="<f4")
    return raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)
