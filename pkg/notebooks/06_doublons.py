"""
Doublons at strong coupling
===========================

For U >> J a doubly occupied site is an eigenstate up to virtual hops. The
resulting single-doublon chain hops with 2J^2/U and feels twice the potential,
so it breaks PT symmetry at mu = J^2/U instead of mu = J.
"""

# %%
import numpy as np

from nhaah.doublon import build_effective_hamiltonian, doublon_band, match_band, pt_boundary_curve
from nhaah.model import ModelParams, build_basis, build_hamiltonian
from nhaah.spectral import bisect_pt_threshold, eig

# %%
L = 34
basis = build_basis(L)
for U in (10.0, 20.0, 40.0):
    p = ModelParams(L=L, mu=1.5, U=U)
    spec = eig(build_hamiltonian(p, basis), inverse=False)
    band = doublon_band(spec, basis)
    eff = np.linalg.eigvals(build_effective_hamiltonian(p).entries)
    print(f"U={U:>4}: {len(band)} band states, max |E - E_eff| = {match_band(spec.eigenvalues[band], eff)[1]:.4f}")

# %%
# The numerical threshold on a commensurate L=21 ring against J^2/U.
for U, mu_c in pt_boundary_curve([5.0, 10.0, 20.0]):
    found = bisect_pt_threshold(ModelParams(L=21, U=U).rational(), 0.005, 0.5, tol=1e-3)
    print(f"U={U:>4}: bisection {found:.3f}, J^2/U = {mu_c:.3f}")
