"""Number and configuration entanglement entropy of two bosons across a cut.

The reduced density matrix of region A is block diagonal in the number of
bosons ``N_A`` found in A. Each block is assembled directly from the
symmetrized amplitudes, so no ``2^L``-sized object is ever formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import propagate
from .errors import InvalidParameterError, NumericalConsistencyError
from .model import FockBasis

NORM_TOL = 1e-10
P_FLOOR = 1e-14
NEGATIVE_TOL = 1e-10


@dataclass(frozen=True)
class ReducedBlocks:
    """Sector blocks of the reduced density matrix, ``blocks[n]`` for ``N_A = n``.

    Block 1 is indexed by the A sites, block 2 by the symmetrized pairs inside
    A in lexicographic order.
    """

    block0: np.ndarray = field(repr=False)
    block1: np.ndarray = field(repr=False)
    pair_amplitudes: np.ndarray = field(repr=False)
    sites_A: np.ndarray = field(repr=False)

    @property
    def block2(self) -> np.ndarray:
        # both bosons in A leave B in its vacuum, so this block has rank one
        v = self.pair_amplitudes
        return np.outer(v, v.conj())

    @property
    def blocks(self):
        return (self.block0, self.block1, self.block2)

    @property
    def probabilities(self) -> np.ndarray:
        v = self.pair_amplitudes
        return np.array([self.block0[0, 0].real, np.trace(self.block1).real, np.vdot(v, v).real])


@dataclass(frozen=True)
class EEDecomposition:
    time: float
    p_sector: np.ndarray
    s_num: float
    s_conf: float
    s_total: float


def half_chain(L: int) -> np.ndarray:
    """Sites ``1..floor(L/2)``."""
    return np.arange(1, L // 2 + 1)


def reduced_blocks(state, basis: FockBasis, sites_A=None) -> ReducedBlocks:
    """Partial trace over the complement of ``sites_A`` (default: the left half)."""
    state = np.asarray(state)
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > NORM_TOL:
        raise InvalidParameterError(f"state is not normalized (norm = {norm!r})")
    L = basis.L
    A = half_chain(L) if sites_A is None else np.sort(np.asarray(sites_A, dtype=int))
    in_A = np.zeros(L + 1, dtype=bool)
    in_A[A] = True
    B = np.array([l for l in range(1, L + 1) if not in_A[l]], dtype=int)

    # Fock amplitude of |1_a 1_b> (a != b) and |2_a> is the symmetrized coefficient itself
    coeff = np.zeros((L, L), dtype=complex)
    a, b = basis.pairs[:, 0] - 1, basis.pairs[:, 1] - 1
    coeff[a, b] = state
    coeff[b, a] = state

    iu_B = np.triu_indices(len(B))
    vec0 = coeff[np.ix_(B - 1, B - 1)][iu_B]
    block0 = np.array([[np.vdot(vec0, vec0)]])

    M = coeff[np.ix_(A - 1, B - 1)]
    block1 = M @ M.conj().T

    iu_A = np.triu_indices(len(A))
    vec2 = coeff[np.ix_(A - 1, A - 1)][iu_A]
    return ReducedBlocks(block0=block0, block1=block1, pair_amplitudes=vec2, sites_A=A)


def _block_spectrum(block: np.ndarray) -> np.ndarray:
    if block.size == 0:
        return np.zeros(0)
    herm = 0.5 * (block + block.conj().T)
    lam = np.linalg.eigvalsh(herm)
    if lam.min() < -NEGATIVE_TOL:
        raise NumericalConsistencyError(f"reduced block has eigenvalue {lam.min():.3e}")
    return np.clip(lam, 0.0, None)


def _xlogx(x: np.ndarray, log) -> float:
    x = x[x > P_FLOOR]
    return float(-np.sum(x * log(x)))


def ee_decomposition(blocks: ReducedBlocks, time: float = 0.0, base: float = math.e) -> EEDecomposition:
    """``S = S_num + S_conf`` from the sector blocks; natural log unless ``base`` is given."""
    log = np.log if base == math.e else (lambda x: np.log(x) / math.log(base))
    v = blocks.pair_amplitudes
    spectra = [_block_spectrum(blocks.block0), _block_spectrum(blocks.block1),
               np.array([np.vdot(v, v).real])]
    p = np.array([s.sum() for s in spectra])
    s_num = _xlogx(p, log)
    s_conf = 0.0
    for pn, lam in zip(p, spectra):
        if pn > P_FLOOR:
            s_conf += pn * _xlogx(lam / pn, log)
    return EEDecomposition(time=float(time), p_sector=p, s_num=s_num, s_conf=s_conf,
                           s_total=s_num + s_conf)


def ee_trace(spec, psi0, times, basis: FockBasis | None = None, sites_A=None,
             base: float = math.e):
    """Entropy decomposition along a postselected trajectory."""
    basis = basis if basis is not None else spec.basis
    trace = propagate(spec, psi0, times, basis=basis, keep_states=True)
    return [ee_decomposition(reduced_blocks(s, basis, sites_A), time=t, base=base)
            for t, s in zip(trace.times, trace.states)]


def last_decade(times) -> tuple:
    times = np.asarray(times)
    return (float(times[-1]) / 10.0, float(times[-1]))


def averaged_ee(trace, window=None):
    """Mean ``(S_num, S_conf)`` over the samples with ``t_start <= t <= t_end``.

    The default window is the last decade of the trace.
    """
    times = np.array([e.time for e in trace])
    t_start, t_end = window if window is not None else last_decade(times)
    sel = (times >= t_start) & (times <= t_end)
    if not np.any(sel):
        raise InvalidParameterError(f"no samples in window [{t_start}, {t_end}]")
    s_num = np.array([e.s_num for e in trace])[sel]
    s_conf = np.array([e.s_conf for e in trace])[sel]
    return float(s_num.mean()), float(s_conf.mean())
