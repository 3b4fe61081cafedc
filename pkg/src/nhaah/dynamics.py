"""Postselected nonunitary evolution of two-boson wavepackets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInitialStateError, DegenerateRateError, InvalidParameterError
from .model import FockBasis


@dataclass(frozen=True)
class EvolutionTrace:
    times: np.ndarray
    densities: np.ndarray = field(repr=False)
    log_norm: np.ndarray = field(repr=False)
    states: np.ndarray | None = field(default=None, repr=False)

    def peak_sites(self) -> np.ndarray:
        """1-based site of maximal density at each time."""
        return np.argmax(self.densities, axis=1) + 1

    def unnormalized_state(self, k: int) -> np.ndarray:
        """``exp(-iHt) psi0`` at ``times[k]``; overflows for large growth rates."""
        if self.states is None:
            raise InvalidParameterError("trace was computed without states")
        return math.exp(self.log_norm[k]) * self.states[k]


@dataclass(frozen=True)
class RankedState:
    j: int
    l_peak: int
    im_E: float
    overlap: float
    biorthogonal: float


@dataclass(frozen=True)
class JumpForecast:
    ranked_states: list
    predicted_jump_times: list
    sequence: list = field(default_factory=list)


def log_time_grid(t_min: float = 0.1, t_max: float = 1e4, per_decade: int = 64,
                  include_zero: bool = True) -> np.ndarray:
    """Logarithmically spaced times, optionally preceded by ``t = 0``."""
    if not 0 < t_min < t_max:
        raise InvalidParameterError("need 0 < t_min < t_max")
    n = int(round(per_decade * math.log10(t_max / t_min))) + 1
    t = np.logspace(math.log10(t_min), math.log10(t_max), n)
    return np.concatenate([[0.0], t]) if include_zero else t


def initial_doublon_state(basis: FockBasis, site: int | None = None) -> np.ndarray:
    """Both bosons on ``site``, by default the central site ``ceil(L/2)``."""
    l0 = math.ceil(basis.L / 2) if site is None else site
    psi = np.zeros(basis.D, dtype=complex)
    psi[basis.idx(l0, l0)] = 1.0
    return psi


def density_map(basis: FockBasis) -> np.ndarray:
    """``D x L`` matrix turning basis probabilities into ``rho_l = <n_l>/2``."""
    M = np.zeros((basis.D, basis.L))
    rows = np.arange(basis.D)
    np.add.at(M, (rows, basis.pairs[:, 0] - 1), 0.5)
    np.add.at(M, (rows, basis.pairs[:, 1] - 1), 0.5)
    return M


def propagate(spec, psi0, times, basis: FockBasis | None = None,
              keep_states: bool = False, chunk: int = 64) -> EvolutionTrace:
    """Evolve ``psi0`` with ``exp(-iHt)`` and renormalize at every time.

    The state is expanded biorthogonally, ``c = V^{-1} psi0``. Mode amplitudes
    are formed from ``ln|c_j| + t Im E_j`` shifted by their maximum, so growth
    factors far beyond the floating-point range stay finite.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise InvalidParameterError("times must be a non-empty 1-d sequence")
    if np.any(times < 0):
        raise InvalidParameterError("times must be non-negative")
    if np.any(np.diff(times) < 0):
        raise InvalidParameterError("times must be sorted ascending")
    basis = basis if basis is not None else spec.basis
    V = spec.right_vectors
    c = spec.expansion_coefficients(psi0)
    mag = np.abs(c)
    if not np.any(mag > 0):
        raise DegenerateInitialStateError("initial state has zero overlap with every mode")
    with np.errstate(divide="ignore"):
        logc = np.log(mag)
    phase = np.where(mag > 0, c / np.where(mag > 0, mag, 1.0), 0.0)
    E = np.asarray(spec.eigenvalues)

    to_density = density_map(basis) if basis is not None else None
    dens, lnorm, kept = [], [], []
    for s in range(0, times.size, chunk):
        t = times[s:s + chunk, None]
        expo = logc[None, :] + t * E.imag[None, :]
        top = expo.max(axis=1, keepdims=True)
        amps = np.exp(expo - top) * phase[None, :] * np.exp(-1j * t * E.real[None, :])
        states = amps @ V.T
        norms = np.linalg.norm(states, axis=1)
        states /= norms[:, None]
        lnorm.append(top[:, 0] + np.log(norms))
        if to_density is not None:
            dens.append((np.abs(states) ** 2) @ to_density)
        if keep_states:
            kept.append(states)
    densities = np.vstack(dens) if dens else np.empty((times.size, 0))
    return EvolutionTrace(times=times, densities=densities, log_norm=np.concatenate(lnorm),
                          states=np.vstack(kept) if keep_states else None)


def jump_forecast(spec, psi0, k: int = 4, basis: FockBasis | None = None,
                  convention: str = "overlap") -> JumpForecast:
    """Rank the ``k`` fastest-growing modes and predict when each takes over.

    ``convention="overlap"`` weighs mode ``j`` by ``|<psi_j|psi0>|`` with unit
    right eigenvectors; ``"biorthogonal"`` uses ``|(V^{-1} psi0)_j|``. The
    dominant mode is the top of the envelope ``ln|c_j| + t Im E_j`` over
    ``t >= 0``, and each predicted time is where the next mode overtakes it.
    """
    if k < 2:
        raise InvalidParameterError("k must be >= 2")
    basis = basis if basis is not None else spec.basis
    E = np.asarray(spec.eigenvalues)
    V = spec.right_vectors
    psi0 = np.asarray(psi0)
    order = np.argsort(-E.imag, kind="stable")[:k]
    if np.any(np.abs(np.diff(E.imag[order])) < 1e-12):
        raise DegenerateRateError("two of the top modes share the same Im E")
    overlap = np.abs(V[:, order].conj().T @ psi0)
    bio = np.abs(spec.expansion_coefficients(psi0)[order]) if spec.inverse_vectors is not None \
        else np.full(len(order), np.nan)
    ranked = []
    for n, j in enumerate(order):
        rho = basis.site_density(V[:, j]) if basis is not None else None
        l_peak = int(np.argmax(rho)) + 1 if rho is not None else -1
        ranked.append(RankedState(j=int(j), l_peak=l_peak, im_E=float(E.imag[j]),
                                  overlap=float(overlap[n]), biorthogonal=float(bio[n])))

    if convention == "overlap":
        weight = overlap
    elif convention == "biorthogonal":
        weight = bio
    else:
        raise InvalidParameterError(f"unknown convention {convention!r}")
    with np.errstate(divide="ignore"):
        logc = np.log(weight)
    rates = E.imag[order]

    # upper envelope of the lines logc + t * rate, walked forward from t = 0
    current = int(np.lexsort((rates, logc))[-1])
    jumps, sequence = [], [int(order[current])]
    while True:
        best_t, best = math.inf, None
        for m in range(len(order)):
            if rates[m] <= rates[current] or not np.isfinite(logc[m]):
                continue
            t_cross = (logc[current] - logc[m]) / (rates[m] - rates[current])
            if t_cross < best_t or (t_cross == best_t and rates[m] > rates[best]):
                best_t, best = t_cross, m
        if best is None:
            break
        jumps.append(float(best_t))
        current = best
        sequence.append(int(order[current]))
    return JumpForecast(ranked_states=ranked, predicted_jump_times=jumps, sequence=sequence)


def detect_jumps(trace: EvolutionTrace, min_distance: int = 3, L: int | None = None):
    """Times where the density peak moves by at least ``min_distance`` sites.

    Returns ``(t, from_site, to_site)`` tuples; distances respect the ring
    geometry when ``L`` is given.
    """
    peaks = trace.peak_sites()
    out = []
    for n in range(1, len(peaks)):
        d = abs(int(peaks[n]) - int(peaks[n - 1]))
        if L is not None:
            d = min(d, L - d)
        if d >= min_distance:
            out.append((float(trace.times[n]), int(peaks[n - 1]), int(peaks[n])))
    return out
