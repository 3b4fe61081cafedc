"""
Postselected wavepacket dynamics and jump prediction
====================================================

A doublon starts in the middle of the ring. Under non-unitary evolution the
state is carried by the mode with the largest growth rate it overlaps with, and
it jumps when a faster-growing but weakly populated mode finally wins.
"""

# %%
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from nhaah.dynamics import detect_jumps, initial_doublon_state, jump_forecast, log_time_grid, propagate
from nhaah.model import ModelParams, build_basis, build_hamiltonian
from nhaah.spectral import eig

out = Path("results/notebooks")
out.mkdir(parents=True, exist_ok=True)

# %%
L = 34
basis = build_basis(L)
spec = eig(build_hamiltonian(ModelParams(L=L, mu=1.5, U=0.8), basis))
psi0 = initial_doublon_state(basis)
fc = jump_forecast(spec, psi0, k=6, basis=basis)
for n, s in enumerate(fc.ranked_states, 1):
    print(f"{n}: site {s.l_peak:3d}  Im E={s.im_E:.5f}  overlap={s.overlap:.3e}")
print("predicted jumps:", [round(t, 1) for t in fc.predicted_jump_times])

# %%
trace = propagate(spec, psi0, log_time_grid(0.1, 1e4, 32), basis)
print("observed jumps:", [(round(t, 1), a, b) for t, a, b in detect_jumps(trace, L=L)])
fig, ax = plt.subplots(figsize=(6, 3.5))
ax.pcolormesh(trace.times[1:], range(1, L + 1), trace.densities[1:].T, shading="nearest")
for t in fc.predicted_jump_times:
    ax.axvline(t, color="w", ls="--", lw=0.8)
ax.set_xscale("log")
ax.set_xlabel("t")
ax.set_ylabel("site")
fig.tight_layout()
fig.savefig(out / "04_dynamics.png", dpi=120)
