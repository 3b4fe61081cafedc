"""Spectral winding numbers under a twist of the quasiperiodic phase.

The twisted Hamiltonian is ``H(theta) = K + exp(i theta / L) P`` where ``P`` is
the diagonal potential at zero twist and ``K`` holds hopping and interaction.
The winding number counts how often ``det[H(theta) - E_B]`` encircles zero as
``theta`` runs over ``[0, 2 pi]``.

Two evaluators are provided. ``"lu"`` samples ``arg det`` through an LU
factorization at every twist and refines any step whose phase jump exceeds
``pi/2``. ``"pencil"`` factorizes the determinant once through the eigenvalues
``z_k`` of the pencil ``K - E_B + z P``, so ``det = c prod_k (z - z_k)`` and
the phase accumulated along the arc ``z = exp(i theta/L)`` follows in closed
form for every root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InvalidParameterError, SingularBaseError
from .localization import LocalizationSummary, summarize
from .model import ModelParams, build_basis, build_hamiltonian, build_single_particle_hamiltonian, onsite_potential
from .spectral import eig

QUANTIZATION_TOL = 0.05
DEFAULT_N_THETA = 256
SINGULAR_DISTANCE = 1e-6
# eigenvalues with a larger imaginary part count as complex when picking base energies
COMPLEX_TOL = 1e-6
# above this dimension the default evaluator switches from LU sampling to the pencil
AUTO_PENCIL_DIM = 1000


@dataclass(frozen=True)
class WindingResult:
    value: int
    raw_phase: float
    n_theta: int
    base_energy: complex
    method: str = "lu"


@dataclass(frozen=True)
class WindingPair:
    first: WindingResult
    second: WindingResult

    @property
    def w1(self) -> int:
        return self.first.value

    @property
    def w2(self) -> int:
        return self.second.value

    def __iter__(self):
        return iter((self.w1, self.w2))


class QuantizationError(RuntimeError):
    """Accumulated phase is not within tolerance of an integer."""

    def __init__(self, message, raw_phase):
        super().__init__(message)
        self.raw_phase = raw_phase


def is_commensurate(params: ModelParams, tol: float = 1e-12) -> bool:
    """True when ``alpha * L`` is an integer, so the twist cycle closes exactly."""
    x = params.alpha * params.L
    return abs(x - round(x)) < tol


def closing_params(params: ModelParams) -> ModelParams:
    """``params`` itself if commensurate, else its Fibonacci approximant.

    For ``alpha = p/L`` a full twist shifts every phase by ``2 pi/L``, which is
    a lattice translation, so ``H(2 pi)`` is unitarily equivalent to ``H(0)``
    and the determinant phase is a closed loop. An incommensurate ``alpha``
    leaves an open path whose phase change is not an integer.
    """
    return params if is_commensurate(params) else params.rational()


def twist_split(params: ModelParams, single_particle: bool = False):
    """Return ``(K, p)`` with ``H(theta) = K + exp(i theta/L) diag(p)``."""
    p0 = params.with_(theta=0.0)
    if single_particle:
        H = np.array(build_single_particle_hamiltonian(p0).entries)
        p = onsite_potential(p0)
    else:
        basis = build_basis(params.L)
        H = np.array(build_hamiltonian(p0, basis).entries)
        v = onsite_potential(p0)
        p = v[basis.pairs[:, 0] - 1] + v[basis.pairs[:, 1] - 1]
    idx = np.arange(len(p))
    H[idx, idx] -= p
    return H, p


def _wrap(x):
    return (x + np.pi) % (2.0 * np.pi) - np.pi


class _LUPhase:
    def __init__(self, K, p, E_B, L):
        self.A = K - E_B * np.eye(K.shape[0])
        self.p = p
        self.L = L
        self.idx = np.arange(K.shape[0])

    def __call__(self, theta: float) -> float:
        M = self.A.copy()
        M[self.idx, self.idx] += np.exp(1j * theta / self.L) * self.p
        lu, piv = sla.lu_factor(M, check_finite=False, overwrite_a=True)
        d = np.diag(lu)
        mag = np.abs(d)
        if mag.min() == 0.0 or mag.min() < 1e-14 * mag.max():
            raise SingularBaseError(f"det[H(theta) - E_B] vanishes near theta = {theta:.6g}")
        swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
        return float(np.sum(np.angle(d)) + np.pi * (swaps % 2))


def _pencil_roots(K, p, E_B):
    """Finite roots ``z_k`` of ``det(K - E_B + z diag(p)) = 0``."""
    A = K - E_B * np.eye(K.shape[0])
    mag = np.abs(p)
    if mag.max() == 0.0:
        return np.empty(0, dtype=complex)
    if mag.min() > 1e-8 * mag.max():
        # diag(p) invertible: z are eigenvalues of -diag(1/p) A
        return sla.eigvals(-A / p[:, None], check_finite=False)
    z = sla.eigvals(A, -np.diag(p), check_finite=False, homogeneous_eigvals=True)
    alpha, beta = z
    finite = np.abs(beta) > 1e-12 * np.abs(alpha)
    return alpha[finite] / beta[finite]


def arc_phase(roots, L: int) -> np.ndarray:
    """Exact change of ``arg(z - r)`` as ``z`` runs from 1 to ``exp(2 pi i/L)`` on the unit circle."""
    r = np.asarray(roots, dtype=complex)
    a = 1.0 + 0j
    b = np.exp(2j * np.pi / L)
    chord = np.angle((b - r) / (a - r))
    m = np.exp(1j * np.pi / L)
    # segment between chord and arc: inside the circle, same side of the chord as the arc midpoint
    side = ((b - a).conjugate() * (r - a)).imag
    side_m = ((b - a).conjugate() * (m - a)).imag
    in_segment = (np.abs(r) < 1.0) & (np.sign(side) == np.sign(side_m))
    return chord + 2.0 * np.pi * in_segment


def _distance_to_arc(r, L: int) -> np.ndarray:
    r = np.asarray(r, dtype=complex)
    phi = np.angle(r) % (2.0 * np.pi)
    on_span = phi <= 2.0 * np.pi / L
    ends = np.minimum(np.abs(r - 1.0), np.abs(r - np.exp(2j * np.pi / L)))
    return np.where(on_span, np.abs(np.abs(r) - 1.0), ends)


def _accumulate(phase, n_theta: int, max_depth: int = 40):
    """Unwrapped phase change over ``[0, 2 pi]`` with adaptive bisection."""
    thetas = np.linspace(0.0, 2.0 * np.pi, n_theta + 1)
    values = [phase(t) for t in thetas]
    total = 0.0
    evaluations = len(values)

    def segment(t0, f0, t1, f1, depth):
        nonlocal evaluations
        d = _wrap(f1 - f0)
        if abs(d) <= np.pi / 2:
            return d
        if depth >= max_depth:
            raise SingularBaseError(f"phase does not resolve near theta = {t0:.6g}")
        tm = 0.5 * (t0 + t1)
        fm = phase(tm)
        evaluations += 1
        return segment(t0, f0, tm, fm, depth + 1) + segment(tm, fm, t1, f1, depth + 1)

    for k in range(n_theta):
        total += segment(thetas[k], values[k], thetas[k + 1], values[k + 1], 0)
    return total / (2.0 * np.pi), evaluations


def winding_number(params: ModelParams, E_B: complex, n_theta: int = DEFAULT_N_THETA,
                   method: str = "auto", single_particle: bool = False,
                   eigenvalues=None, strict: bool = True) -> WindingResult:
    """Winding of ``det[H(theta/L) - E_B]`` around the origin for ``theta`` in ``[0, 2 pi]``.

    ``eigenvalues`` (at zero twist) enables the up-front check that ``E_B``
    is not on the spectrum. With ``strict`` a phase further than
    :data:`QUANTIZATION_TOL` from an integer raises :class:`QuantizationError`.
    """
    if params.boundary != "periodic":
        raise InvalidParameterError("winding numbers are defined under periodic boundaries")
    if n_theta < 64:
        raise InvalidParameterError("n_theta must be >= 64")
    E_B = complex(E_B)
    params = closing_params(params)
    if eigenvalues is not None:
        dist = np.min(np.abs(np.asarray(eigenvalues) - E_B))
        if dist < SINGULAR_DISTANCE:
            raise SingularBaseError(f"E_B = {E_B} lies {dist:.2e} from an eigenvalue")
    K, p = twist_split(params, single_particle)
    L = params.L
    if method == "auto":
        method = "pencil" if K.shape[0] > AUTO_PENCIL_DIM else "lu"

    if method == "lu":
        phase = _LUPhase(K, p, E_B, L)
        raw, used = _accumulate(phase, n_theta)
        if abs(raw - round(raw)) >= QUANTIZATION_TOL:
            # one retry on a doubled grid before the result is rejected
            raw, used = _accumulate(phase, 2 * n_theta)
    elif method == "pencil":
        roots = _pencil_roots(K, p, E_B)
        if roots.size and np.min(_distance_to_arc(roots, L)) < 1e-12:
            raise SingularBaseError("a pencil root lies on the twist arc")
        raw = float(np.sum(arc_phase(roots, L)) / (2.0 * np.pi))
        used = 0
    else:
        raise InvalidParameterError(f"unknown method {method!r}")

    value = int(round(raw))
    if strict and abs(raw - value) >= QUANTIZATION_TOL:
        raise QuantizationError(f"winding phase {raw:.4f} is not quantized", raw)
    return WindingResult(value=value, raw_phase=float(raw), n_theta=int(used),
                         base_energy=E_B, method=method)


def select_base_energies(spec, localization: LocalizationSummary, complex_tol: float = COMPLEX_TOL):
    """``Re E`` of the first and of the last eigenstate to localize.

    The first is the most localized state among those that are localized
    (``IPR > tau_loc``) with a complex energy, or the global IPR maximum when
    there are none; a real eigenvalue at the end of a loop would otherwise put
    ``E_B1`` on the loop itself. The last is the global IPR minimum.
    """
    p = localization.ipr_per_state
    w = np.asarray(spec.eigenvalues)
    pool = np.flatnonzero((np.abs(w.imag) > complex_tol) & (p > localization.tau_loc))
    if pool.size == 0:
        pool = np.arange(len(w))
    j1 = pool[int(np.argmax(p[pool]))]
    j2 = int(np.argmin(p))
    return complex(w[j1].real), complex(w[j2].real)


def winding_pair(params: ModelParams, spec, localization: LocalizationSummary,
                 n_theta: int = DEFAULT_N_THETA, method: str = "auto",
                 offset: float = 1e-3) -> WindingPair:
    """``(w1, w2)`` at the base energies from :func:`select_base_energies`.

    A base energy that coincides with an eigenvalue (a real eigenvalue whose
    real part was taken) is moved off the real axis by ``i * offset``. For an
    incommensurate ``alpha`` the spectrum, IPRs and windings are all taken
    from the Fibonacci approximant (see :func:`closing_params`).
    """
    if not is_commensurate(params):
        params = params.rational()
        spec = eig(build_hamiltonian(params), inverse=False)
        localization = summarize(spec, localization.tau_loc)
    results = []
    for E_B in select_base_energies(spec, localization):
        if np.min(np.abs(np.asarray(spec.eigenvalues) - E_B)) < max(SINGULAR_DISTANCE, offset):
            E_B = E_B + 1j * offset
        results.append(winding_number(params, E_B, n_theta=n_theta, method=method,
                                      eigenvalues=spec.eigenvalues))
    return WindingPair(*results)
