"""
Two bosons on a non-Hermitian quasicrystal: spectrum and PT breaking
====================================================================

Build the two-boson Hamiltonian, check it against single-particle pair sums at
U = 0, then watch the spectrum leave the real axis as mu grows.
"""

# %%
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nhaah.model import ModelParams, build_hamiltonian, build_single_particle_hamiltonian
from nhaah.spectral import eig, free_two_boson_spectrum, pt_diagnostics

out = Path("results/notebooks")
out.mkdir(parents=True, exist_ok=True)

# %%
# Without interaction the two-boson energies are sums eps_i + eps_j, i <= j.
p = ModelParams(L=21, mu=0.8, U=0.0)
eps = np.linalg.eigvals(np.array(build_single_particle_hamiltonian(p).entries))
i, j = np.triu_indices(len(eps))
pairs = np.sort_complex(eps[i] + eps[j])
w = np.sort_complex(eig(build_hamiltonian(p), vectors=False).eigenvalues)
print("D =", len(w), " largest gap to pair sums:", np.max(np.abs(w - pairs)))

# %%
# On a commensurate ring (alpha = 21/34) the unbroken side is real up to a
# finite-size tail that shrinks roughly like mu^L.
mus = np.linspace(0.2, 1.6, 15)
imax = []
for mu in mus:
    q = ModelParams(L=34, mu=mu, U=0.0).rational()
    imax.append(pt_diagnostics(eig(build_hamiltonian(q), vectors=False)).max_abs_imag)
for mu, v in zip(mus, imax):
    print(f"mu={mu:.1f}  max|Im E|={v:.2e}")

# %%
# Above threshold the spectrum follows the free-boson loops 2J[cos(k - ih) + cos(q - ih)].
q = ModelParams(L=34, mu=1.5, U=0.0).rational()
w = eig(build_hamiltonian(q), vectors=False).eigenvalues
free = free_two_boson_spectrum(q, n_k=128)
fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
ax[0].semilogy(mus, np.maximum(imax, 1e-16), "o-")
ax[0].set_xlabel("mu")
ax[0].set_ylabel("max |Im E|")
ax[1].plot(free.real, free.imag, ",", color="0.7")
ax[1].plot(w.real, w.imag, ".", ms=3)
ax[1].set_xlabel("Re E")
ax[1].set_ylabel("Im E")
fig.tight_layout()
fig.savefig(out / "01_spectrum.png", dpi=120)
