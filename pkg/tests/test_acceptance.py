"""End-to-end acceptance checks at production lattice sizes.

Each test records one verdict through the ``report`` fixture; the verdicts are
listed together at the end of the pytest run. The whole module takes about 40
minutes on one core and is marked ``slow``.
"""

import math
import os
import time
from functools import lru_cache

import numpy as np
import pytest

from nhaah.doublon import build_effective_hamiltonian, doublon_band, doublon_weights, match_band
from nhaah.dynamics import initial_doublon_state, jump_forecast, propagate
from nhaah.entanglement import averaged_ee, ee_decomposition, ee_trace, half_chain, reduced_blocks
from nhaah.localization import summarize, transition_points
from nhaah.model import ModelParams, build_basis, build_hamiltonian, build_single_particle_hamiltonian
from nhaah.spectral import bisect_pt_threshold, eig, memory_estimate, pt_diagnostics
from nhaah.sweep import Range, SweepConfig, TimeGrid, run_sweep
from nhaah.topology import winding_number, winding_pair
from oracles import entropy, monolithic_rdm, multiset_distance, pairwise_sums

pytestmark = pytest.mark.slow

# windings computed anywhere in this module, for the quantization check
WINDINGS = []


@lru_cache(maxsize=2)
def full_spectrum(L, mu, U):
    """Eigenvalues, eigenvectors and V^-1 at the default irrational alpha."""
    return eig(build_hamiltonian(ModelParams(L=L, mu=mu, U=U), build_basis(L)))


def test_criterion_1_pairwise_sums(report):
    worst = 0.0
    for L in (13, 21, 34):
        for mu in (0.3, 0.8, 1.5):
            p = ModelParams(L=L, mu=mu, U=0.0)
            eps = np.linalg.eigvals(np.array(build_single_particle_hamiltonian(p).entries))
            w = eig(build_hamiltonian(p), vectors=False).eigenvalues
            worst = max(worst, multiset_distance(w, pairwise_sums(eps)))
    ok = report(1, worst < 1e-8, f"max multiset distance {worst:.2e} (tol 1e-8)")
    assert ok


def test_criterion_2_free_transition(report):
    L = 89
    out = {}
    for mu in (0.9, 1.1):
        p = ModelParams(L=L, mu=mu, U=0.0).rational()
        w = eig(build_hamiltonian(p), vectors=False).eigenvalues
        r = winding_number(p, 0.0, eigenvalues=w, method="pencil")
        WINDINGS.append(r)
        out[mu] = (pt_diagnostics(w).max_abs_imag, r.value)
    (im_lo, w_lo), (im_hi, w_hi) = out[0.9], out[1.1]
    checks = [im_lo < 1e-6, im_hi > 0.1, w_lo == 0 and w_hi != 0]
    ok = report(2, all(checks),
                f"|Im E|max(0.9)={im_lo:.2e} (<1e-6 {'ok' if checks[0] else 'FAIL'}), "
                f"|Im E|max(1.1)={im_hi:.3f} (>0.1 {'ok' if checks[1] else 'FAIL'}), "
                f"w(E_B=0): {w_lo} -> {w_hi} ({'ok' if checks[2] else 'FAIL'})")
    assert ok


def test_criterion_3_interacting_boundaries(report):
    cfg = SweepConfig(base_params=ModelParams(L=89), mu_range=Range(0.4, 1.3, 10),
                      u_range=Range(0.8, 0.8, 1), diagnostics={"localization"})
    grid = run_sweep(cfg)
    assert not grid.failures
    c1, c2 = transition_points(grid.mu_values, grid.values("ipr_max")[0], grid.values("ipr_min")[0],
                               cfg.tau_loc)
    ok = report(3, abs(c1 - 0.55) <= 0.10 and abs(c2 - 1.1) <= 0.10,
                f"mu_c1={c1:.3f} (0.55+-0.10), mu_c2={c2:.3f} (1.1+-0.10)")
    assert ok


def test_criterion_4_winding_signature(report):
    L = 89
    got = {}
    for mu in (0.3, 1.0, 1.5):
        p = ModelParams(L=L, mu=mu, U=0.8).rational()
        spec = eig(build_hamiltonian(p), inverse=False)
        wp = winding_pair(p, spec, summarize(spec))
        WINDINGS.extend([wp.first, wp.second])
        got[mu] = (wp.w1, wp.w2)
    ok = got[0.3] == (0, 0) and got[1.0] == (1, 0) and all(got[1.5])
    report(4, ok, f"L={L}: " + ", ".join(f"mu={m}: {v}" for m, v in got.items()))
    assert ok


def test_criterion_5_table(report):
    L = 89
    basis = build_basis(L)
    spec = full_spectrum(L, 1.5, 0.8)
    fc = jump_forecast(spec, initial_doublon_state(basis), k=4, basis=basis)
    im = [s.im_E for s in fc.ranked_states]
    peaks = [s.l_peak for s in fc.ranked_states]
    jumps = fc.predicted_jump_times
    ref_im = (1.81162, 1.80848, 1.79762, 1.78668)
    im_dev = max(abs(a - b) for a, b in zip(im, ref_im))
    ok_jumps = len(jumps) == 2 and all(abs(t - r) <= 0.1 * r for t, r in zip(jumps, (1138, 5941)))
    ok = im_dev < 1e-3 and peaks == [6, 61, 40, 27] and ok_jumps
    report(5, ok, f"max |dIm E|={im_dev:.1e}, peaks {peaks}, jumps "
                  + ", ".join(f"{t:.0f}" for t in jumps))
    assert ok


def test_criterion_6_doublon_band(report):
    L = 89
    basis = build_basis(L)
    p = ModelParams(L=L, mu=1.5, U=10.0)
    spec = eig(build_hamiltonian(p, basis), inverse=False)
    band = doublon_band(spec, basis)
    weights = doublon_weights(spec.right_vectors[:, band], basis)
    eff = np.linalg.eigvals(build_effective_hamiltonian(p).entries)
    dev = match_band(spec.eigenvalues[band], eff)[1] if len(band) == L else math.nan
    ok = len(band) == L and bool(np.all(weights > 0.9)) and dev < 0.05
    report(6, ok, f"{len(band)} band states, min weight {weights.min():.3f}, "
                  f"max |E - E_eff|={dev:.4f} (tol 0.05)")
    assert ok


def test_criterion_7_boundary_curve(report):
    # L=55 with the commensurate 34/55: the sub-threshold |Im E| stays near 1e-8,
    # so the default epsilon_im separates the phases cleanly
    rows = []
    for U in (5.0, 10.0, 20.0):
        p = ModelParams(L=55, U=U).rational()
        rows.append((U, bisect_pt_threshold(p, 0.005, 0.5, tol=5e-4)))
    rel = [abs(mu_c * U - 1.0) for U, mu_c in rows]
    ok = max(rel) <= 0.2
    report(7, ok, ", ".join(f"U={U:g}: mu_c={m:.4f} vs {1 / U:.4f}" for U, m in rows)
           + f" (max rel {max(rel):.1%})")
    assert ok


def test_criterion_8_entanglement(report):
    L = 89
    basis = build_basis(L)
    psi0 = initial_doublon_state(basis)
    times = TimeGrid().values()
    free = ee_trace(full_spectrum(L, 0.5, 0.0), psi0, times, basis)
    conf_max = max(e.s_conf for e in free)
    s_num_free, _ = averaged_ee(free)
    loc = ee_trace(full_spectrum(L, 1.5, 0.8), psi0, times, basis)
    s_num_loc, s_conf_loc = averaged_ee(loc)
    ok = conf_max < 1e-10 and abs(s_num_free - 1.04) <= 0.10 and s_num_loc < 0.02 and s_conf_loc < 0.02
    report(8, ok, f"U=0 max s_conf={conf_max:.1e}, U=0 mu=0.5 late s_num={s_num_free:.4f}, "
                  f"U=0.8 mu=1.5 late s_num={s_num_loc:.2e} s_conf={s_conf_loc:.2e}")
    assert ok


def test_criterion_9_quantization(report):
    for L, mu, U in ((21, 1.5, 0.8), (21, 0.5, 0.8), (34, 1.2, 0.0)):
        p = ModelParams(L=L, mu=mu, U=U).rational()
        spec = eig(build_hamiltonian(p), inverse=False)
        wp = winding_pair(p, spec, summarize(spec, 0.02))
        WINDINGS.extend([wp.first, wp.second])
    worst = max(abs(r.raw_phase - r.value) for r in WINDINGS)
    ok = report(9, worst < 0.05, f"winding residual {worst:.1e} over {len(WINDINGS)} windings (tol 0.05)")
    assert ok


def test_criterion_9_propagator(report):
    from scipy.linalg import expm

    worst = 0.0
    for L, mu, U in ((8, 1.5, 0.8), (13, 0.5, 0.0), (13, 1.5, 3.0)):
        basis = build_basis(L)
        H = build_hamiltonian(ModelParams(L=L, mu=mu, U=U), basis)
        psi0 = initial_doublon_state(basis)
        times = np.array([0.5, 3.0, 20.0])
        tr = propagate(eig(H), psi0, times, basis, keep_states=True)
        for k, t in enumerate(times):
            ref = expm(-1j * np.array(H.entries) * t) @ psi0
            worst = max(worst, np.max(np.abs(tr.states[k] - ref / np.linalg.norm(ref))))
    ok = report(9, worst < 1e-6, f"propagator vs expm {worst:.1e} (tol 1e-6)")
    assert ok


def test_criterion_9_entanglement(report):
    rng = np.random.default_rng(11)
    block_dev = sym_dev = 0.0
    for L in (4, 6, 8):
        basis = build_basis(L)
        for _ in range(3):
            c = rng.normal(size=basis.D) + 1j * rng.normal(size=basis.D)
            c /= np.linalg.norm(c)
            rho, _ = monolithic_rdm(c, basis, half_chain(L))
            d = ee_decomposition(reduced_blocks(c, basis))
            block_dev = max(block_dev, abs(d.s_total - entropy(np.linalg.eigvalsh(rho))))
            dB = ee_decomposition(reduced_blocks(c, basis, np.arange(L // 2 + 1, L + 1)))
            sym_dev = max(sym_dev, abs(d.s_total - dB.s_total), abs(d.s_num - dB.s_num),
                          abs(d.s_conf - dB.s_conf))
    ok = report(9, block_dev < 1e-10 and sym_dev < 1e-8,
                f"block vs monolithic {block_dev:.1e} (tol 1e-10), A/B symmetry {sym_dev:.1e} (tol 1e-8)")
    assert ok


def test_criterion_10_performance(report, tmp_path):
    workers = min(4, os.cpu_count() or 1)
    cfg = SweepConfig(base_params=ModelParams(L=34), mu_range=Range(0.0, 1.5, 20), u_range=Range(0.0, 3.0, 20),
                      diagnostics={"pt", "localization"}, output_dir=tmp_path, workers=workers)
    t0 = time.perf_counter()
    grid = run_sweep(cfg)
    elapsed = time.perf_counter() - t0
    est = memory_estimate(build_basis(144).D)
    detail = (f"20x20 L=34 grid in {elapsed:.0f} s on {workers} worker(s) (limit 600 s), "
              f"{grid.complete}/400 cells; L=144 peak estimate {est / 2 ** 30:.1f} GiB (limit 16)")
    ok = grid.complete == 400 and elapsed < 600 and est < 16 * 2 ** 30
    if os.environ.get("NHAAH_RUN_L144") == "1":
        t0 = time.perf_counter()
        spec = eig(build_hamiltonian(ModelParams(L=144, mu=0.5, U=0.8)), inverse=False)
        detail += f"; L=144 diagonalized in {time.perf_counter() - t0:.0f} s, residual {spec.residual:.1e}"
    else:
        detail += "; L=144 run skipped (set NHAAH_RUN_L144=1)"
    report(10, ok, detail)
    assert ok
