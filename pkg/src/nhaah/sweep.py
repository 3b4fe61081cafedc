"""Phase-diagram sweeps over ``(mu, U)``.

Each cell is an independent job. Cells write their record to
``<output_dir>/cells/cell_<iU>_<imu>.json`` as soon as they finish; a single
finalizer merges the records into grid-level CSVs and ``grid.json``. A rerun
with the same configuration reuses every completed cell whose stored config
hash matches, so an interrupted sweep resumes where it stopped.
"""

from __future__ import annotations

import json
import math
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .doublon import build_effective_hamiltonian, doublon_band, match_band
from .dynamics import initial_doublon_state, jump_forecast, log_time_grid
from .entanglement import averaged_ee, ee_trace
from .errors import InvalidParameterError
from .localization import DEFAULT_TAU_LOC, summarize
from .model import GOLDEN_ALPHA, ModelParams, build_basis, build_hamiltonian
from .spectral import DEFAULT_EPSILON_IM, eig, extract_pt_boundary, pt_diagnostics
from .topology import DEFAULT_N_THETA, winding_pair

DIAGNOSTICS = ("spectrum", "pt", "localization", "winding", "dynamics", "entanglement", "doublon")
ALPHA_MODES = ("irrational", "rational")
WORKERS_ENV = "NHAAH_WORKERS"

# scalar columns contributed by each diagnostic to the merged grid table
DIAGNOSTIC_COLUMNS = {
    "spectrum": ["spectrum_file"],
    "pt": ["max_abs_imag", "rho_im", "d_im"],
    "localization": ["ipr_max", "ipr_min", "ipr_ave", "npr_ave", "zeta", "phase"],
    "winding": ["w1", "w2", "raw_phase1", "raw_phase2", "E_B1", "E_B2"],
    "dynamics": ["im_E_top", "jump1", "jump2"],
    "entanglement": ["s_num_bar", "s_conf_bar"],
    "doublon": ["band_size", "band_max_dev"],
}
CELL_COLUMNS = ["iU", "imu", "mu", "U", "status"]


@dataclass(frozen=True)
class Range:
    min: float
    max: float
    steps: int

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise InvalidParameterError(f"steps must be an integer >= 1, got {self.steps}")
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise InvalidParameterError("range bounds must be finite")
        if self.min > self.max:
            raise InvalidParameterError(f"range min {self.min} exceeds max {self.max}")
        object.__setattr__(self, "steps", int(self.steps))

    def values(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([float(self.min)])
        return np.linspace(self.min, self.max, self.steps)

    @classmethod
    def parse(cls, spec) -> "Range":
        if isinstance(spec, Range):
            return spec
        if isinstance(spec, (int, float)):
            return cls(float(spec), float(spec), 1)
        if isinstance(spec, dict):
            return cls(float(spec["min"]), float(spec["max"]), spec.get("steps", 1))
        lo, hi, n = spec
        return cls(float(lo), float(hi), n)


@dataclass(frozen=True)
class TimeGrid:
    t_min: float = 0.1
    t_max: float = 1e4
    per_decade: int = 64

    def values(self) -> np.ndarray:
        return log_time_grid(self.t_min, self.t_max, self.per_decade, include_zero=True)


@dataclass(frozen=True)
class SweepConfig:
    base_params: ModelParams = field(default_factory=lambda: ModelParams(L=34))
    mu_range: Range = Range(0.0, 1.5, 16)
    u_range: Range = Range(0.0, 3.0, 16)
    diagnostics: frozenset = frozenset({"pt", "localization"})
    epsilon_im: float = DEFAULT_EPSILON_IM
    tau_loc: float = DEFAULT_TAU_LOC
    n_theta: int = DEFAULT_N_THETA
    time_grid: TimeGrid = TimeGrid()
    w_min: float = 0.9
    alpha_mode: str = "irrational"
    output_dir: Path | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mu_range", Range.parse(self.mu_range))
        object.__setattr__(self, "u_range", Range.parse(self.u_range))
        diags = frozenset(self.diagnostics)
        unknown = diags - set(DIAGNOSTICS)
        if unknown:
            raise InvalidParameterError(f"unknown diagnostics: {sorted(unknown)}")
        if not diags:
            raise InvalidParameterError("at least one diagnostic is required")
        object.__setattr__(self, "diagnostics", diags)
        if self.alpha_mode not in ALPHA_MODES:
            raise InvalidParameterError(f"alpha_mode must be one of {ALPHA_MODES}")
        if not self.epsilon_im > 0 or not self.tau_loc > 0:
            raise InvalidParameterError("epsilon_im and tau_loc must be positive")
        if int(self.workers) != self.workers or self.workers < 1:
            raise InvalidParameterError("workers must be an integer >= 1")
        if self.output_dir is not None:
            object.__setattr__(self, "output_dir", Path(self.output_dir))

    @property
    def mu_values(self) -> np.ndarray:
        return self.mu_range.values()

    @property
    def U_values(self) -> np.ndarray:
        return self.u_range.values()

    def ordered_diagnostics(self) -> list:
        return [d for d in DIAGNOSTICS if d in self.diagnostics]

    def physics_dict(self) -> dict:
        """Everything that influences the numbers; the basis of the config hash."""
        return {
            "params": self.base_params.to_dict(),
            "mu": asdict(self.mu_range),
            "U": asdict(self.u_range),
            "diagnostics": self.ordered_diagnostics(),
            "epsilon_im": self.epsilon_im,
            "tau_loc": self.tau_loc,
            "n_theta": self.n_theta,
            "time_grid": asdict(self.time_grid),
            "w_min": self.w_min,
            "alpha_mode": self.alpha_mode,
        }

    def to_dict(self) -> dict:
        d = self.physics_dict()
        d["output_dir"] = None if self.output_dir is None else str(self.output_dir)
        d["workers"] = self.workers
        return d

    @property
    def hash(self) -> str:
        return io.config_hash(self.physics_dict())

    def cell_params(self, mu: float, U: float) -> ModelParams:
        p = self.base_params.with_(mu=float(mu), U=float(U))
        return p.rational() if self.alpha_mode == "rational" else p

    @classmethod
    def from_mapping(cls, data: dict) -> "SweepConfig":
        data = dict(data)
        params = dict(data.pop("params", {}))
        for key in ("J", "alpha", "L", "theta", "boundary"):
            if key in data:
                params[key] = data.pop(key)
        if params.get("alpha") == "golden":
            params["alpha"] = GOLDEN_ALPHA
        kwargs = {"base_params": ModelParams(**params)}
        if "mu" in data:
            kwargs["mu_range"] = Range.parse(data.pop("mu"))
        if "U" in data:
            kwargs["u_range"] = Range.parse(data.pop("U"))
        if "time_grid" in data:
            kwargs["time_grid"] = TimeGrid(**data.pop("time_grid"))
        if "diagnostics" in data:
            kwargs["diagnostics"] = frozenset(data.pop("diagnostics"))
        allowed = {"epsilon_im", "tau_loc", "n_theta", "w_min", "alpha_mode", "output_dir", "workers"}
        unknown = set(data) - allowed
        if unknown:
            raise InvalidParameterError(f"unknown config keys: {sorted(unknown)}")
        kwargs.update(data)
        return cls(**kwargs)


def load_config(path) -> dict:
    """Read a JSON or YAML config file into a plain mapping."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml
        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise InvalidParameterError(f"{path} does not hold a mapping")
    return data


@dataclass
class PhaseGrid:
    mu_values: np.ndarray
    U_values: np.ndarray
    cells: list
    metadata: dict

    def cell(self, iU: int, imu: int) -> dict:
        return self.cells[iU * len(self.mu_values) + imu]

    def values(self, name: str) -> np.ndarray:
        """``(n_U, n_mu)`` array of a numeric diagnostic, ``nan`` where unavailable."""
        out = np.full((len(self.U_values), len(self.mu_values)), np.nan)
        for rec in self.cells:
            v = rec.get(name)
            if rec["status"] == "ok" and isinstance(v, (int, float)) and not isinstance(v, bool):
                out[rec["iU"], rec["imu"]] = v
        return out

    @property
    def failures(self) -> list:
        return [rec for rec in self.cells if rec["status"] != "ok"]

    @property
    def complete(self) -> int:
        return len(self.cells) - len(self.failures)

    def pt_boundary(self, epsilon_im: float | None = None):
        eps = self.metadata["config"]["epsilon_im"] if epsilon_im is None else epsilon_im
        return extract_pt_boundary(self.mu_values, self.U_values, self.values("max_abs_imag"), eps)


def compute_cell(config: SweepConfig, iU: int, imu: int) -> dict:
    """Every requested diagnostic for one ``(mu, U)`` point."""
    mu, U = config.mu_values[imu], config.U_values[iU]
    params = config.cell_params(mu, U)
    diags = config.diagnostics
    basis = build_basis(params.L)
    ham = build_hamiltonian(params, basis)
    needs_vectors = bool(diags - {"pt"})
    needs_inverse = bool(diags & {"dynamics", "entanglement"})
    spec = eig(ham, vectors=needs_vectors, inverse=needs_inverse)
    rec = {}
    loc = summarize(spec, config.tau_loc) if needs_vectors else None

    if "spectrum" in diags:
        name = f"spectrum_{iU:03d}_{imu:03d}.csv"
        if config.output_dir is not None:
            io.write_spectrum(config.output_dir / "cells" / name, spec, loc.ipr_per_state,
                              chash=config.hash, params=params)
        rec["spectrum_file"] = f"cells/{name}"
    if "pt" in diags:
        pt = pt_diagnostics(spec, config.epsilon_im)
        rec.update(max_abs_imag=pt.max_abs_imag, rho_im=pt.rho_im, d_im=pt.d_im)
    if "localization" in diags:
        rec.update(ipr_max=loc.ipr_max, ipr_min=loc.ipr_min, ipr_ave=loc.ipr_ave,
                   npr_ave=loc.npr_ave, zeta=loc.zeta, phase=loc.phase)
    if "winding" in diags:
        wp = winding_pair(params, spec, loc, n_theta=config.n_theta)
        rec.update(w1=wp.w1, w2=wp.w2, raw_phase1=wp.first.raw_phase, raw_phase2=wp.second.raw_phase,
                   E_B1=io.fmt(wp.first.base_energy), E_B2=io.fmt(wp.second.base_energy))
    psi0 = initial_doublon_state(basis)
    if "dynamics" in diags:
        fc = jump_forecast(spec, psi0, basis=basis)
        jumps = fc.predicted_jump_times + [math.nan, math.nan]
        rec.update(im_E_top=fc.ranked_states[0].im_E, jump1=jumps[0], jump2=jumps[1])
    if "entanglement" in diags:
        s_num, s_conf = averaged_ee(ee_trace(spec, psi0, config.time_grid.values(), basis))
        rec.update(s_num_bar=s_num, s_conf_bar=s_conf)
    if "doublon" in diags:
        if U == 0:
            rec.update(band_size=0, band_max_dev=math.nan)
        else:
            band = doublon_band(spec, basis, config.w_min)
            eff = np.linalg.eigvals(build_effective_hamiltonian(params).entries)
            dev = math.nan
            if len(band) == len(eff):
                dev = match_band(np.asarray(spec.eigenvalues)[band], eff)[1]
            rec.update(band_size=int(len(band)), band_max_dev=dev)
    return rec


def _cell_path(config: SweepConfig, iU: int, imu: int) -> Path:
    return config.output_dir / "cells" / f"cell_{iU:03d}_{imu:03d}.json"


def _run_one(config: SweepConfig, iU: int, imu: int, cell_fn) -> dict:
    rec = {"iU": iU, "imu": imu, "mu": float(config.mu_values[imu]), "U": float(config.U_values[iU])}
    t0 = time.perf_counter()
    try:
        from threadpoolctl import threadpool_limits
        with threadpool_limits(limits=1):
            values = cell_fn(config, iU, imu)
        missing = [c for d in config.ordered_diagnostics() for c in DIAGNOSTIC_COLUMNS[d]
                   if c not in values]
        if missing:
            raise RuntimeError(f"cell result lacks {missing}")
        rec.update(values)
        rec["status"] = "ok"
    except Exception as exc:  # isolate the failure to this cell
        rec["status"] = "failed"
        rec["error"] = f"{type(exc).__name__}: {exc}"
        rec["traceback"] = traceback.format_exc(limit=5)
    rec["wall_time"] = time.perf_counter() - t0
    if config.output_dir is not None:
        io.write_json(_cell_path(config, iU, imu), rec, config.hash)
    return rec


def _load_cell(config: SweepConfig, iU: int, imu: int):
    path = _cell_path(config, iU, imu)
    if not path.exists():
        return None
    try:
        rec = json.loads(path.read_text())
    except (OSError, ValueError):
        return None
    if rec.get("config_hash") != config.hash or rec.get("status") != "ok":
        return None
    rec.pop("config_hash", None)
    rec.pop("version", None)
    return rec


def resolve_workers(config: SweepConfig) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise InvalidParameterError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        if n < 1:
            raise InvalidParameterError(f"{WORKERS_ENV} must be >= 1")
        return n
    return config.workers


def _check_output_dir(path: Path):
    path.mkdir(parents=True, exist_ok=True)
    probe = path / ".write_probe"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise InvalidParameterError(f"output directory {path} is not writable: {exc}") from exc


def run_sweep(config: SweepConfig, cell_fn=compute_cell, resume: bool = True) -> PhaseGrid:
    """Run every cell of the grid, U-major, and merge the results.

    ``cell_fn(config, iU, imu)`` returns the diagnostic mapping of one cell;
    it must be a module-level function when more than one worker is used.
    """
    if config.output_dir is not None:
        _check_output_dir(config.output_dir)
    mu, U = config.mu_values, config.U_values
    order = [(iU, imu) for iU in range(len(U)) for imu in range(len(mu))]
    records = {}
    todo = []
    for key in order:
        rec = _load_cell(config, *key) if (resume and config.output_dir is not None) else None
        if rec is not None:
            rec["resumed"] = True
            records[key] = rec
        else:
            todo.append(key)

    workers = min(resolve_workers(config), max(1, len(todo)))
    if workers == 1:
        for key in todo:
            records[key] = _run_one(config, *key, cell_fn)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {key: pool.submit(_run_one, config, *key, cell_fn) for key in todo}
            for key in todo:
                records[key] = futures[key].result()

    cells = [records[key] for key in order]
    metadata = {
        "version": __version__,
        "config_hash": config.hash,
        "config": config.to_dict(),
        "n_cells": len(cells),
        "n_failed": sum(rec["status"] != "ok" for rec in cells),
        "wall_time": [[rec["iU"], rec["imu"], rec.get("wall_time", math.nan)] for rec in cells],
        "failures": [{"iU": r["iU"], "imu": r["imu"], "mu": r["mu"], "U": r["U"], "error": r["error"]}
                     for r in cells if r["status"] != "ok"],
        "workers": workers,
    }
    grid = PhaseGrid(mu_values=mu, U_values=U, cells=cells, metadata=metadata)
    if config.output_dir is not None:
        finalize(config, grid)
    return grid


def grid_columns(config: SweepConfig) -> list:
    return CELL_COLUMNS + [c for d in config.ordered_diagnostics() for c in DIAGNOSTIC_COLUMNS[d]]


def finalize(config: SweepConfig, grid: PhaseGrid):
    """Merge cell records into ``grid.csv`` and ``grid.json``.

    Run times live only in the JSON, so reruns of the same config give a
    byte-identical ``grid.csv``.
    """
    out = config.output_dir
    columns = grid_columns(config)
    rows = []
    for rec in grid.cells:
        rows.append([rec.get(c, "nan") if rec["status"] == "ok" or c in CELL_COLUMNS else "nan"
                     for c in columns])
    io.write_csv(out / "grid.csv", columns, rows, config.hash)
    if "pt" in config.diagnostics:
        boundary = grid.pt_boundary()
        io.write_csv(out / "pt_boundary.csv", ["U", "mu_c"], boundary, config.hash)
    io.write_json(out / "grid.json", grid.metadata, config.hash)


def with_overrides(config: SweepConfig, **changes) -> SweepConfig:
    """Copy of ``config`` with ``None`` entries in ``changes`` ignored."""
    return replace(config, **{k: v for k, v in changes.items() if v is not None})
