"""
Number and configuration entanglement
=====================================

Split the ring in half. Particle number in the left half fixes a block of the
reduced density matrix, so the entropy separates into a number part and a
configuration part. Without interaction the configuration part vanishes.
"""

# %%
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nhaah.dynamics import initial_doublon_state, log_time_grid
from nhaah.entanglement import averaged_ee, ee_trace
from nhaah.model import ModelParams, build_basis, build_hamiltonian
from nhaah.spectral import eig

out = Path("results/notebooks")
out.mkdir(parents=True, exist_ok=True)

# %%
L = 34
basis = build_basis(L)
psi0 = initial_doublon_state(basis)
times = log_time_grid(0.1, 1e4, 16)
fig, ax = plt.subplots(1, 2, figsize=(9, 3.5), sharey=True)
for k, U in enumerate((0.0, 0.8)):
    for mu in (0.5, 1.0, 1.5):
        spec = eig(build_hamiltonian(ModelParams(L=L, mu=mu, U=U), basis))
        tr = ee_trace(spec, psi0, times, basis)
        s_num, s_conf = averaged_ee(tr)
        print(f"U={U} mu={mu}: late S_num={s_num:.3f} S_conf={s_conf:.3f}")
        ax[k].plot(times[1:], [e.s_num for e in tr][1:], label=f"num, mu={mu}")
        ax[k].plot(times[1:], [e.s_conf for e in tr][1:], "--", label=f"conf, mu={mu}")
    ax[k].set_xscale("log")
    ax[k].set_title(f"U={U}")
    ax[k].set_xlabel("t")
ax[0].axhline(1.5 * np.log(2), color="k", lw=0.6)
ax[0].legend(fontsize=7)
fig.tight_layout()
fig.savefig(out / "05_entanglement.png", dpi=120)
