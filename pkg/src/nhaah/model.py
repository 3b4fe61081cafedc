"""Two-boson Bose-Hubbard chain with a complex quasiperiodic potential.

Sites are labelled ``1..L``. The potential on site ``l`` is
``-mu * exp(i(2*pi*alpha*l + theta/L))`` and bosons on the same site pay ``U``.
States live in the symmetrized two-boson position basis: ``|2_l>`` for a
doubly occupied site and ``(|l,l'> + |l',l>)/sqrt(2)`` for ``l < l'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError

GOLDEN_ALPHA = (math.sqrt(5.0) - 1.0) / 2.0

PERIODIC = "periodic"
OPEN = "open"


def fibonacci_alpha(L: int) -> float:
    """Rational approximant ``F_m / F_{m+1}`` of the golden mean.

    ``F_{m+1}`` is the largest Fibonacci number not exceeding ``L``, so for a
    Fibonacci length the potential becomes exactly commensurate with the ring.
    """
    if L < 2:
        raise InvalidParameterError(f"L must be >= 2, got {L}")
    a, b = 1, 2
    while a + b <= L:
        a, b = b, a + b
    return a / b


@dataclass(frozen=True)
class ModelParams:
    J: float = 1.0
    mu: float = 0.0
    alpha: float = GOLDEN_ALPHA
    U: float = 0.0
    L: int = 89
    theta: float = 0.0
    boundary: str = PERIODIC

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise InvalidParameterError(f"L must be an integer >= 2, got {self.L}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        # the closed end 2*pi is accepted so a twist sweep can include its endpoint
        if not 0.0 <= self.theta <= 2.0 * math.pi:
            raise InvalidParameterError(f"theta must lie in [0, 2*pi], got {self.theta}")
        if self.boundary not in (PERIODIC, OPEN):
            raise InvalidParameterError(f"unknown boundary {self.boundary!r}")
        for name in ("J", "mu", "U"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        object.__setattr__(self, "L", int(self.L))

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def rational(self) -> "ModelParams":
        """Same parameters with alpha replaced by its Fibonacci approximant."""
        return replace(self, alpha=fibonacci_alpha(self.L))

    def to_dict(self) -> dict:
        return {
            "J": self.J,
            "mu": self.mu,
            "alpha": self.alpha,
            "U": self.U,
            "L": self.L,
            "theta": self.theta,
            "boundary": self.boundary,
        }


@dataclass(frozen=True)
class FockBasis:
    """Lexicographically ordered pairs ``(l, l')`` with ``1 <= l <= l' <= L``."""

    L: int
    pairs: np.ndarray = field(repr=False)
    index: np.ndarray = field(repr=False)

    @property
    def D(self) -> int:
        return len(self.pairs)

    @property
    def index_of(self) -> dict:
        return {(int(a), int(b)): n for n, (a, b) in enumerate(self.pairs)}

    def idx(self, l: int, lp: int) -> int:
        """Basis index of the pair ``{l, lp}`` in either order."""
        return int(self.index[l - 1, lp - 1])

    @property
    def doublon_indices(self) -> np.ndarray:
        return self.index[np.arange(self.L), np.arange(self.L)]

    def wavefunction(self, state) -> np.ndarray:
        """First-quantized symmetric amplitude matrix ``psi[l-1, l'-1]``.

        ``sum |psi|**2`` equals the squared norm of ``state``.
        """
        state = np.asarray(state)
        a = self.pairs[:, 0] - 1
        b = self.pairs[:, 1] - 1
        off = a != b
        psi = np.zeros((self.L, self.L), dtype=np.result_type(state.dtype, np.complex128))
        psi[a, b] = np.where(off, state / math.sqrt(2.0), state)
        psi[b, a] = psi[a, b]
        return psi

    def from_wavefunction(self, psi) -> np.ndarray:
        """Inverse of :meth:`wavefunction` for symmetric ``psi``."""
        psi = np.asarray(psi)
        a = self.pairs[:, 0] - 1
        b = self.pairs[:, 1] - 1
        return np.where(a != b, psi[a, b] * math.sqrt(2.0), psi[a, b])

    def site_density(self, state) -> np.ndarray:
        """Half the mean occupation of each site; sums to ``||state||**2``."""
        psi = self.wavefunction(state)
        return np.sum(np.abs(psi) ** 2, axis=1)


@dataclass(frozen=True)
class HamiltonianMatrix:
    entries: np.ndarray = field(repr=False)
    params: ModelParams
    basis: FockBasis | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def build_basis(L: int) -> FockBasis:
    if int(L) != L or L < 2:
        raise InvalidParameterError(f"L must be an integer >= 2, got {L}")
    L = int(L)
    a, b = np.triu_indices(L)
    pairs = np.stack([a + 1, b + 1], axis=1)
    index = np.empty((L, L), dtype=np.int64)
    index[a, b] = np.arange(len(a))
    index[b, a] = index[a, b]
    pairs.setflags(write=False)
    index.setflags(write=False)
    return FockBasis(L=L, pairs=pairs, index=index)


def onsite_potential(params: ModelParams) -> np.ndarray:
    """Complex onsite energies ``-mu * exp(i(2*pi*alpha*l + theta/L))``, l = 1..L."""
    l = np.arange(1, params.L + 1)
    return -params.mu * np.exp(1j * (2.0 * np.pi * params.alpha * l + params.theta / params.L))


def _neighbours(params: ModelParams, sites: np.ndarray, step: int):
    """Target site of a hop by ``step`` and a mask of hops that exist."""
    L = params.L
    target = sites + step
    if params.boundary == PERIODIC:
        return (target - 1) % L + 1, np.ones_like(sites, dtype=bool)
    return target, (target >= 1) & (target <= L)


def hopping_matrix(params: ModelParams, basis: FockBasis) -> np.ndarray:
    """Kinetic part ``-J sum_l (b_l^dag b_{l+1} + h.c.)`` in the symmetrized basis."""
    D = basis.D
    T = np.zeros((D, D), dtype=np.complex128)
    a = basis.pairs[:, 0]
    b = basis.pairs[:, 1]
    doublon = a == b
    cols = np.arange(D)
    # move the particle sitting at `src`; the other one stays at `other`
    for src, other, active in ((a, b, np.ones(D, dtype=bool)), (b, a, ~doublon)):
        n_src = np.where(doublon, 2.0, 1.0)
        for step in (+1, -1):
            dst, ok = _neighbours(params, src, step)
            ok = ok & active
            n_dst = (dst == other).astype(float)
            amp = -params.J * np.sqrt(n_src) * np.sqrt(n_dst + 1.0)
            rows = basis.index[dst[ok] - 1, other[ok] - 1]
            np.add.at(T, (rows, cols[ok]), amp[ok])
    return T


def build_hamiltonian(params: ModelParams, basis: FockBasis | None = None) -> HamiltonianMatrix:
    if basis is None:
        basis = build_basis(params.L)
    if basis.L != params.L:
        raise InvalidParameterError(f"basis has L={basis.L} but params have L={params.L}")
    H = hopping_matrix(params, basis)
    v = onsite_potential(params)
    a = basis.pairs[:, 0] - 1
    b = basis.pairs[:, 1] - 1
    diag = v[a] + v[b] + params.U * (a == b)
    H[np.arange(basis.D), np.arange(basis.D)] += diag
    H.setflags(write=False)
    return HamiltonianMatrix(entries=H, params=params, basis=basis)


def build_single_particle_hamiltonian(params: ModelParams) -> HamiltonianMatrix:
    L = params.L
    H = np.zeros((L, L), dtype=np.complex128)
    sites = np.arange(1, L + 1)
    dst, ok = _neighbours(params, sites, +1)
    np.add.at(H, (sites[ok] - 1, dst[ok] - 1), -params.J)
    np.add.at(H, (dst[ok] - 1, sites[ok] - 1), -params.J)
    H[np.arange(L), np.arange(L)] += onsite_potential(params)
    H.setflags(write=False)
    return HamiltonianMatrix(entries=H, params=params, basis=None)
