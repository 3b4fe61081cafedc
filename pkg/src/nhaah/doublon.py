"""Bound boson pairs at strong coupling and their effective single-particle chain."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidParameterError
from .model import FockBasis, ModelParams, build_single_particle_hamiltonian

DEFAULT_W_MIN = 0.9


@dataclass(frozen=True)
class EffectiveHamiltonian:
    entries: np.ndarray = field(repr=False)
    params: ModelParams

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def hopping(self) -> float:
        return 2.0 * self.params.J ** 2 / self.params.U


def build_effective_hamiltonian(params: ModelParams) -> EffectiveHamiltonian:
    """Second-order doublon Hamiltonian on ``L`` sites.

    A doublon hops with ``+2J^2/U``, feels twice the single-boson potential and
    carries the constant ``U + 4J^2/U``: each of the two virtual break-up
    channels (l, l-1) and (l, l+1) lowers the denominator by ``U`` and
    contributes ``2J^2/U``.
    """
    if params.U == 0:
        raise InvalidParameterError("the doublon expansion needs U != 0")
    t = 2.0 * params.J ** 2 / params.U
    # H_0 with hopping -J' and potential amplitude mu' has the doublon form for J' = -t, mu' = 2 mu
    chain = build_single_particle_hamiltonian(params.with_(J=-t, mu=2.0 * params.mu)).entries
    H = np.array(chain) + (params.U + 2.0 * t) * np.eye(params.L)
    H.setflags(write=False)
    return EffectiveHamiltonian(entries=H, params=params)


def doublon_weights(vectors, basis: FockBasis) -> np.ndarray:
    """Weight on doubly occupied sites for every column of ``vectors``."""
    V = np.asarray(vectors)
    if V.ndim == 1:
        V = V[:, None]
    return np.sum(np.abs(V[basis.doublon_indices]) ** 2, axis=0)


def doublon_weight(state, basis: FockBasis) -> float:
    return float(doublon_weights(state, basis)[0])


def doublon_band(spec, basis: FockBasis | None = None, w_min: float = DEFAULT_W_MIN) -> np.ndarray:
    """Eigenstate indices with doublon weight above ``w_min``, by descending ``Re E``."""
    if not 0.0 < w_min < 1.0:
        raise InvalidParameterError("w_min must lie in (0, 1)")
    basis = basis if basis is not None else spec.basis
    w = doublon_weights(spec.right_vectors, basis)
    idx = np.flatnonzero(w > w_min)
    re = np.asarray(spec.eigenvalues).real[idx]
    return idx[np.argsort(-re, kind="stable")]


def match_band(band_energies, eff_energies):
    """Pair band energies with effective ones; returns (order into ``eff_energies``, max |dE|).

    Squared distances make the assignment strictly convex, so degenerate pairs
    cannot be crossed to lower the sum at the cost of a larger maximum.
    """
    a = np.asarray(band_energies, dtype=complex)
    b = np.asarray(eff_energies, dtype=complex)
    if len(a) != len(b):
        raise InvalidParameterError(f"band has {len(a)} states, effective chain {len(b)}")
    if len(a) == 0:
        return np.zeros(0, dtype=int), float("nan")
    d = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(d ** 2)
    order = np.empty(len(a), dtype=int)
    order[rows] = cols
    return order, float(d[rows, cols].max())


def top_real_part_states(spec, count: int) -> np.ndarray:
    """Indices of the ``count`` eigenvalues with the largest real parts, descending."""
    re = np.asarray(spec.eigenvalues).real
    return np.argsort(-re, kind="stable")[:count]


def pt_boundary_curve(U_values, J: float = 1.0):
    """Analytic doublon threshold ``mu_c = J^2 / U``."""
    U = np.asarray(U_values, dtype=float)
    if np.any(U <= 0):
        raise InvalidParameterError("all U must be positive")
    return [(float(u), J ** 2 / float(u)) for u in U]
