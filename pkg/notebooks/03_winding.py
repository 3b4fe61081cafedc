"""
Spectral winding numbers
========================

Thread a flux theta through the ring and count how often det[H(theta) - E_B]
winds around zero. Two base energies, taken from the first and the last states
to localize, give the pair (w1, w2).
"""

# %%
from nhaah.localization import summarize
from nhaah.model import ModelParams, build_hamiltonian
from nhaah.spectral import eig
from nhaah.topology import winding_number, winding_pair

# %%
# One particle: the loop around E_B = 0 appears exactly at mu = J.
for mu in (0.8, 1.2):
    r = winding_number(ModelParams(L=21, mu=mu), 0.0, single_particle=True)
    print(f"single particle, mu={mu}: w={r.value} (raw {r.raw_phase:+.4f})")

# %%
# Two bosons at U = 0.8 on a commensurate ring, one point per phase.
for mu in (0.3, 0.8, 1.5):
    p = ModelParams(L=55, mu=mu, U=0.8).rational()
    spec = eig(build_hamiltonian(p), inverse=False)
    wp = winding_pair(p, spec, summarize(spec))
    print(f"mu={mu}: (w1, w2) = ({wp.w1}, {wp.w2}), "
          f"E_B1={wp.first.base_energy:.3f}, E_B2={wp.second.base_energy:.3f}")
