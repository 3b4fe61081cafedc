"""CSV and JSON writers for every exported table.

Every CSV starts with one ``#`` comment line carrying the package version and
the config hash, followed by a header row. Floats are written with ``repr``
precision, ``.`` as decimal separator and ``\\n`` line endings. Column
layouts are listed in ``docs/formats.md``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np

from . import __version__

SPECTRUM_COLUMNS = ["index", "re_E", "im_E", "ipr"]
SUMMARY_COLUMNS = ["mu", "U", "ipr_max", "ipr_min", "ipr_ave", "npr_ave", "zeta", "phase"]
PT_COLUMNS = ["mu", "U", "max_abs_imag", "rho_im", "d_im"]
WINDING_COLUMNS = ["mu", "U", "w1", "w2", "raw_phase1", "raw_phase2", "E_B1", "E_B2"]
TRACE_COLUMNS = ["t", "l", "rho"]
FORECAST_COLUMNS = ["rank", "j", "l_peak", "im_E", "overlap"]
EE_COLUMNS = ["t", "p0", "p1", "p2", "s_num", "s_conf", "s_total"]
AVERAGED_EE_COLUMNS = ["mu", "U", "s_num_bar", "s_conf_bar"]
DOUBLON_COLUMNS = ["index", "re_E", "im_E", "weight", "re_E_eff", "im_E_eff"]


def config_hash(payload: dict) -> str:
    """Short SHA-256 of a canonical JSON rendering plus the package version."""
    blob = json.dumps({"version": __version__, "config": payload}, sort_keys=True,
                      separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return repr(x)
    if isinstance(x, (complex, np.complexfloating)):
        return f"{fmt(x.real)}{'+' if x.imag >= 0 else '-'}{fmt(abs(x.imag))}j"
    return str(x)


def header_line(chash: str | None) -> str:
    return f"# nhaah {__version__} config_hash={chash or 'none'}"


def write_csv(path, columns, rows, chash: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(header_line(chash) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    os.replace(tmp, path)
    return path


def read_csv(path):
    """Return ``(config_hash, columns, rows)`` with cells left as strings."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        chash = first.split("config_hash=")[-1] if "config_hash=" in first else None
        reader = csv.reader(fh)
        columns = next(reader)
        rows = list(reader)
    return chash, columns, rows


def write_json(path, payload, chash: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = dict(payload)
    if chash is not None:
        body.setdefault("config_hash", chash)
    body.setdefault("version", __version__)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")
    os.replace(tmp, path)
    return path


def write_spectrum(path, spec, ipr=None, chash=None, params=None) -> Path:
    """Spectrum CSV plus a ``.json`` sidecar with the model parameters and residual."""
    w = np.asarray(spec.eigenvalues)
    ipr = np.full(len(w), np.nan) if ipr is None else np.asarray(ipr)
    rows = [(n, w[n].real, w[n].imag, ipr[n]) for n in range(len(w))]
    path = write_csv(path, SPECTRUM_COLUMNS, rows, chash)
    params = params if params is not None else spec.params
    write_json(Path(path).with_suffix(".json"), {
        "params": params.to_dict() if params is not None else None,
        "residual": spec.residual,
        "D": len(w),
    }, chash)
    return path


def write_trace(path, trace, chash=None) -> Path:
    rows = []
    for t, rho in zip(trace.times, trace.densities):
        rows.extend((t, l + 1, r) for l, r in enumerate(rho))
    return write_csv(path, TRACE_COLUMNS, rows, chash)


def write_forecast(path, forecast, chash=None) -> Path:
    rows = [(n + 1, s.j, s.l_peak, s.im_E, s.overlap) for n, s in enumerate(forecast.ranked_states)]
    path = write_csv(path, FORECAST_COLUMNS, rows, chash)
    write_json(Path(path).with_suffix(".json"), {
        "predicted_jump_times": list(forecast.predicted_jump_times),
        "dominance_sequence": list(forecast.sequence),
        "biorthogonal": [s.biorthogonal for s in forecast.ranked_states],
    }, chash)
    return path


def write_ee(path, decomposition, chash=None) -> Path:
    rows = [(e.time, *e.p_sector, e.s_num, e.s_conf, e.s_total) for e in decomposition]
    return write_csv(path, EE_COLUMNS, rows, chash)
