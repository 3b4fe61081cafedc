"""Command-line front end: ``nhaah <command> [options]``.

Exit status is 0 on success, 2 for usage errors (unknown command or flag,
invalid parameter values) and 1 when a computation fails.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, io
from .doublon import (
    build_effective_hamiltonian,
    doublon_band,
    doublon_weights,
    match_band,
    pt_boundary_curve,
)
from .dynamics import detect_jumps, initial_doublon_state, jump_forecast, propagate
from .entanglement import averaged_ee, ee_trace
from .errors import InvalidParameterError
from .localization import summarize
from .model import build_basis, build_hamiltonian
from .spectral import eig, pt_diagnostics
from .sweep import DIAGNOSTICS, Range, SweepConfig, TimeGrid, load_config, run_sweep
from .topology import winding_number, winding_pair

FIGURES = ("fig2c", "fig3", "fig4", "fig6", "fig7", "tableII", "fig10")


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON or YAML config file")
    p.add_argument("--mu", type=float, help="potential strength")
    p.add_argument("--U", type=float, help="onsite interaction")
    p.add_argument("--L", type=int, help="number of sites")
    p.add_argument("--J", type=float, help="hopping amplitude")
    p.add_argument("--boundary", choices=("periodic", "open"))
    p.add_argument("--alpha-mode", choices=("irrational", "rational"),
                   help="golden mean or its Fibonacci approximant F_m/L")
    p.add_argument("--epsilon-im", type=float, help="threshold on |Im E| for PT breaking")
    p.add_argument("--tau-loc", type=float, help="IPR threshold for localization")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--workers", type=int, help="worker processes (overridden by NHAAH_WORKERS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nhaah", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nhaah {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("spectrum", help="eigenvalues, PT and localization summary at one point")
    _common(p)

    p = sub.add_parser("phase-diagram", help="grid sweep over (mu, U)")
    _common(p)
    p.add_argument("--mu-range", nargs=3, metavar=("MIN", "MAX", "STEPS"))
    p.add_argument("--U-range", nargs=3, metavar=("MIN", "MAX", "STEPS"))
    p.add_argument("--diagnostics", help=f"comma-separated subset of {','.join(DIAGNOSTICS)}")
    p.add_argument("--no-resume", action="store_true", help="recompute cells already on disk")

    p = sub.add_parser("winding", help="winding pair (w1, w2), or w at one base energy")
    _common(p)
    p.add_argument("--base-energy", type=complex, help="E_B, e.g. 0+0.1j")
    p.add_argument("--n-theta", type=int, default=256)
    p.add_argument("--method", choices=("auto", "lu", "pencil"), default="auto")
    p.add_argument("--single-particle", action="store_true")

    for name, text in (("evolve", "postselected doublon dynamics and jump forecast"),
                       ("entropy", "number and configuration entanglement along the dynamics")):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--t-max", type=float)
        p.add_argument("--per-decade", type=int)
        p.add_argument("--site", type=int, help="initial doublon site (default ceil(L/2))")

    p = sub.add_parser("doublon", help="doublon band against the effective chain")
    _common(p)
    p.add_argument("--w-min", type=float)

    p = sub.add_parser("reproduce", help="pinned configuration for one figure or table")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--desk", action="store_true", help="small lattice, minutes instead of hours")
    p.add_argument("--out", type=Path)
    p.add_argument("--workers", type=int)
    return parser


def _config(args) -> SweepConfig:
    data = load_config(args.config) if getattr(args, "config", None) else {}
    cfg = SweepConfig.from_mapping(data)
    params = cfg.base_params
    changes = {k: getattr(args, k) for k in ("L", "J", "boundary") if getattr(args, k, None) is not None}
    if changes:
        params = params.with_(**changes)
    updates = {"base_params": params}
    if args.mu is not None:
        updates["mu_range"] = Range(args.mu, args.mu, 1)
    if args.U is not None:
        updates["u_range"] = Range(args.U, args.U, 1)
    for key in ("alpha_mode", "workers", "epsilon_im", "tau_loc", "w_min"):
        if getattr(args, key, None) is not None:
            updates[key] = getattr(args, key)
    if getattr(args, "out", None) is not None:
        updates["output_dir"] = args.out
    if getattr(args, "mu_range", None):
        updates["mu_range"] = Range(float(args.mu_range[0]), float(args.mu_range[1]), int(args.mu_range[2]))
    if getattr(args, "U_range", None):
        updates["u_range"] = Range(float(args.U_range[0]), float(args.U_range[1]), int(args.U_range[2]))
    if getattr(args, "diagnostics", None):
        updates["diagnostics"] = frozenset(s.strip() for s in args.diagnostics.split(",") if s.strip())
    tg = {}
    if getattr(args, "t_max", None) is not None:
        tg["t_max"] = args.t_max
    if getattr(args, "per_decade", None) is not None:
        tg["per_decade"] = args.per_decade
    if tg:
        updates["time_grid"] = replace(cfg.time_grid, **tg)
    return replace(cfg, **updates)


def _point(cfg: SweepConfig):
    if cfg.mu_range.steps != 1 or cfg.u_range.steps != 1:
        raise UsageError("this command needs a single point: give --mu and --U")
    return cfg.cell_params(cfg.mu_range.min, cfg.u_range.min)


def _out(cfg: SweepConfig, default: str) -> Path:
    out = cfg.output_dir if cfg.output_dir is not None else Path("results") / default
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_spectrum(cfg: SweepConfig) -> int:
    params = _point(cfg)
    out = _out(cfg, "spectrum")
    spec = eig(build_hamiltonian(params), inverse=False)
    loc = summarize(spec, cfg.tau_loc)
    pt = pt_diagnostics(spec, cfg.epsilon_im)
    h = cfg.hash
    io.write_spectrum(out / "spectrum.csv", spec, loc.ipr_per_state, h, params)
    io.write_csv(out / "summary.csv", io.SUMMARY_COLUMNS,
                 [(params.mu, params.U, loc.ipr_max, loc.ipr_min, loc.ipr_ave, loc.npr_ave,
                   loc.zeta, loc.phase)], h)
    io.write_csv(out / "pt.csv", io.PT_COLUMNS,
                 [(params.mu, params.U, pt.max_abs_imag, pt.rho_im, pt.d_im)], h)
    print(f"D={spec.D} max|Im E|={pt.max_abs_imag:.6g} rho_Im={pt.rho_im:.4f} "
          f"IPR_max={loc.ipr_max:.4g} IPR_min={loc.ipr_min:.4g} phase={loc.phase}")
    print(f"wrote {out}")
    return 0


def cmd_phase_diagram(cfg: SweepConfig, resume: bool = True) -> int:
    if cfg.output_dir is None:
        cfg = replace(cfg, output_dir=Path("results") / "phase-diagram")
    grid = run_sweep(cfg, resume=resume)
    print(f"{grid.complete}/{len(grid.cells)} cells complete, {len(grid.failures)} failed")
    for rec in grid.failures:
        print(f"  cell (U={rec['U']:g}, mu={rec['mu']:g}): {rec['error']}", file=sys.stderr)
    print(f"wrote {cfg.output_dir}")
    return 0 if not grid.failures else 1


def cmd_winding(cfg: SweepConfig, args) -> int:
    params = _point(cfg)
    out = _out(cfg, "winding")
    if args.base_energy is not None:
        r = winding_number(params, args.base_energy, n_theta=args.n_theta, method=args.method,
                           single_particle=args.single_particle)
        io.write_csv(out / "winding_single.csv", ["mu", "U", "E_B", "w", "raw_phase", "method"],
                     [(params.mu, params.U, r.base_energy, r.value, r.raw_phase, r.method)], cfg.hash)
        print(f"w={r.value} raw={r.raw_phase:.6f}")
    else:
        spec = eig(build_hamiltonian(params), inverse=False)
        wp = winding_pair(params, spec, summarize(spec, cfg.tau_loc), n_theta=args.n_theta,
                          method=args.method)
        io.write_csv(out / "winding.csv", io.WINDING_COLUMNS,
                     [(params.mu, params.U, wp.w1, wp.w2, wp.first.raw_phase, wp.second.raw_phase,
                       wp.first.base_energy, wp.second.base_energy)], cfg.hash)
        print(f"(w1, w2)=({wp.w1}, {wp.w2})")
    print(f"wrote {out}")
    return 0


def _dynamics_setup(cfg: SweepConfig, args):
    params = _point(cfg)
    basis = build_basis(params.L)
    spec = eig(build_hamiltonian(params, basis))
    psi0 = initial_doublon_state(basis, args.site)
    return params, basis, spec, psi0


def cmd_evolve(cfg: SweepConfig, args) -> int:
    params, basis, spec, psi0 = _dynamics_setup(cfg, args)
    out = _out(cfg, "evolve")
    trace = propagate(spec, psi0, cfg.time_grid.values(), basis)
    io.write_trace(out / "trace.csv", trace, cfg.hash)
    fc = jump_forecast(spec, psi0, basis=basis)
    io.write_forecast(out / "forecast.csv", fc, cfg.hash)
    jumps = detect_jumps(trace, L=params.L)
    io.write_csv(out / "jumps.csv", ["t", "from_site", "to_site"], jumps, cfg.hash)
    print("predicted jumps: " + ", ".join(f"{t:.1f}" for t in fc.predicted_jump_times))
    print("observed jumps:  " + ", ".join(f"{t:.1f} ({a}->{b})" for t, a, b in jumps))
    print(f"wrote {out}")
    return 0


def cmd_entropy(cfg: SweepConfig, args) -> int:
    params, basis, spec, psi0 = _dynamics_setup(cfg, args)
    out = _out(cfg, "entropy")
    trace = ee_trace(spec, psi0, cfg.time_grid.values(), basis)
    io.write_ee(out / "ee.csv", trace, cfg.hash)
    s_num, s_conf = averaged_ee(trace)
    io.write_csv(out / "ee_avg.csv", io.AVERAGED_EE_COLUMNS, [(params.mu, params.U, s_num, s_conf)],
                 cfg.hash)
    print(f"late-time S_num={s_num:.6f} S_conf={s_conf:.6f}")
    print(f"wrote {out}")
    return 0


def doublon_rows(spec, basis, params, w_min):
    """Band states next to their matched H_eff eigenvalue (nan when the counts differ)."""
    band = doublon_band(spec, basis, w_min)
    weights = doublon_weights(spec.right_vectors[:, band], basis)
    energies = np.asarray(spec.eigenvalues)[band]
    eff = np.linalg.eigvals(build_effective_hamiltonian(params).entries)
    dev = math.nan
    matched = np.full(len(band), complex(math.nan, math.nan))
    if len(band) == len(eff):
        order, dev = match_band(energies, eff)
        matched = eff[order]
    rows = [(int(j), e.real, e.imag, w, m.real, m.imag)
            for j, e, w, m in zip(band, energies, weights, matched)]
    return band, dev, rows


def cmd_doublon(cfg: SweepConfig) -> int:
    params = _point(cfg)
    out = _out(cfg, "doublon")
    basis = build_basis(params.L)
    spec = eig(build_hamiltonian(params, basis), inverse=False)
    band, dev, rows = doublon_rows(spec, basis, params, cfg.w_min)
    io.write_csv(out / "doublon.csv", io.DOUBLON_COLUMNS, rows, cfg.hash)
    io.write_json(out / "doublon.json", {"band_size": len(band), "L": params.L, "max_deviation": dev,
                                         "params": params.to_dict()}, cfg.hash)
    print(f"band size {len(band)} (L={params.L}), max |E - E_eff| = {dev:.4g}")
    print(f"wrote {out}")
    return 0


def pinned(figure: str, desk: bool) -> dict:
    """Configuration mapping used by ``reproduce``."""
    L_big = 34 if desk else 144
    L_mid = 34 if desk else 89
    steps = 16 if desk else 31
    if figure in ("fig2c", "fig3"):
        diags = ["pt"] if figure == "fig2c" else ["pt", "localization"]
        return {"L": L_big, "mu": {"min": 0.0, "max": 1.5, "steps": steps},
                "U": {"min": 0.0, "max": 2.0, "steps": steps}, "diagnostics": diags}
    if figure == "fig4":
        return {"L": L_mid, "mu": {"min": 0.1, "max": 1.5, "steps": 8 if desk else 15},
                "U": {"min": 0.0, "max": 2.0, "steps": 5 if desk else 11},
                "diagnostics": ["pt", "localization", "winding"]}
    if figure == "fig10":
        return {"L": L_mid, "mu": {"min": 0.0, "max": 1.5, "steps": steps},
                "U": {"min": 1.0, "max": 20.0, "steps": steps}, "diagnostics": ["pt"]}
    if figure in ("fig6", "fig7", "tableII"):
        return {"L": L_mid, "mu": 1.5, "U": 0.8, "diagnostics": ["dynamics"]}
    raise UsageError(f"unknown figure {figure!r}")


def cmd_reproduce(args) -> int:
    out = args.out if args.out is not None else Path("results") / (args.figure + ("-desk" if args.desk else ""))
    base = pinned(args.figure, args.desk)
    if args.workers is not None:
        base["workers"] = args.workers
    fig = args.figure
    if fig in ("fig2c", "fig3", "fig4", "fig10"):
        cfg = SweepConfig.from_mapping(dict(base, output_dir=str(out)))
        code = cmd_phase_diagram(cfg)
        if fig == "fig10":
            io.write_csv(out / "boundary_curve.csv", ["U", "mu_c"],
                         pt_boundary_curve(cfg.U_values), cfg.hash)
        return code
    cfg = SweepConfig.from_mapping(base)
    L = cfg.base_params.L
    basis = build_basis(L)
    psi0 = initial_doublon_state(basis)
    out.mkdir(parents=True, exist_ok=True)
    if fig == "tableII":
        spec = eig(build_hamiltonian(cfg.cell_params(1.5, 0.8), basis))
        fc = jump_forecast(spec, psi0, basis=basis)
        io.write_forecast(out / "tableII.csv", fc, cfg.hash)
        for n, s in enumerate(fc.ranked_states):
            print(f"j={n + 1} l={s.l_peak} Im E={s.im_E:.6f} |c|={s.overlap:.5g}")
        print("predicted jumps: " + ", ".join(f"{t:.0f}" for t in fc.predicted_jump_times))
    elif fig == "fig6":
        for mu in (0.5, 1.0, 1.5):
            spec = eig(build_hamiltonian(cfg.cell_params(mu, 0.8), basis))
            trace = propagate(spec, psi0, cfg.time_grid.values(), basis)
            io.write_trace(out / f"trace_U0.8_mu{mu}.csv", trace, cfg.hash)
            print(f"mu={mu}: final peak site {trace.peak_sites()[-1]}")
    else:
        rows = []
        for U in (0.0, 0.8):
            for mu in (0.5, 1.0, 1.5):
                spec = eig(build_hamiltonian(cfg.cell_params(mu, U), basis))
                trace = ee_trace(spec, psi0, cfg.time_grid.values(), basis)
                io.write_ee(out / f"ee_U{U}_mu{mu}.csv", trace, cfg.hash)
                s_num, s_conf = averaged_ee(trace)
                rows.append((mu, U, s_num, s_conf))
                print(f"U={U} mu={mu}: S_num={s_num:.4f} S_conf={s_conf:.4f}")
        io.write_csv(out / "ee_avg.csv", io.AVERAGED_EE_COLUMNS, rows, cfg.hash)
    print(f"wrote {out}")
    return 0


def _usage(parser, exc) -> int:
    parser.print_usage(sys.stderr)
    print(f"nhaah: error: {exc}", file=sys.stderr)
    return 2


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = None
    if args.command != "reproduce":
        try:
            cfg = _config(args)
        except (InvalidParameterError, OSError, ValueError, KeyError, TypeError) as exc:
            return _usage(parser, exc)
    commands = {
        "reproduce": lambda: cmd_reproduce(args),
        "spectrum": lambda: cmd_spectrum(cfg),
        "phase-diagram": lambda: cmd_phase_diagram(cfg, resume=not args.no_resume),
        "winding": lambda: cmd_winding(cfg, args),
        "evolve": lambda: cmd_evolve(cfg, args),
        "entropy": lambda: cmd_entropy(cfg, args),
        "doublon": lambda: cmd_doublon(cfg),
    }
    try:
        return commands[args.command]()
    except (UsageError, InvalidParameterError) as exc:
        return _usage(parser, exc)
    except Exception as exc:
        print(f"nhaah: {args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
