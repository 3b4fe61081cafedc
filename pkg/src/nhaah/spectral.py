"""Dense non-Hermitian eigendecomposition and PT-breaking diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import DomainError, InvalidParameterError, SolverError
from .model import HamiltonianMatrix, ModelParams, build_hamiltonian

DEFAULT_EPSILON_IM = 1e-6
RESIDUAL_RTOL = 1e-8


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues sorted by (Re, Im) with unit-norm right eigenvectors as columns.

    ``inverse_vectors`` holds ``V^{-1}``; its rows give the biorthogonal
    expansion coefficients of a state.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray | None = field(default=None, repr=False)
    inverse_vectors: np.ndarray | None = field(default=None, repr=False)
    residual: float = float("nan")
    hamiltonian: HamiltonianMatrix | None = field(default=None, repr=False)

    @property
    def D(self) -> int:
        return len(self.eigenvalues)

    @property
    def params(self) -> ModelParams | None:
        return None if self.hamiltonian is None else self.hamiltonian.params

    @property
    def basis(self):
        return None if self.hamiltonian is None else self.hamiltonian.basis

    def expansion_coefficients(self, state) -> np.ndarray:
        """Biorthogonal coefficients ``c = V^{-1} state``."""
        if self.inverse_vectors is None:
            raise InvalidParameterError("decomposition was computed without V^-1")
        return self.inverse_vectors @ np.asarray(state)


@dataclass(frozen=True)
class PTDiagnostics:
    max_abs_imag: float
    rho_im: float
    d_im: int
    epsilon_im: float


def _sorted_order(w: np.ndarray) -> np.ndarray:
    return np.lexsort((w.imag, w.real))


def max_residual(H: np.ndarray, w: np.ndarray, V: np.ndarray, block: int = 512) -> float:
    """``max_j ||H v_j - E_j v_j||_2`` evaluated in column blocks."""
    res = 0.0
    for s in range(0, V.shape[1], block):
        Vb = V[:, s:s + block]
        R = H @ Vb - Vb * w[s:s + block]
        res = max(res, float(np.max(np.linalg.norm(R, axis=0))))
    return res


def spectral_scale(A: np.ndarray) -> float:
    """Cheap upper bound ``sqrt(||A||_1 ||A||_inf)`` on the spectral norm."""
    absA = np.abs(A)
    return float(math.sqrt(absA.sum(axis=0).max() * absA.sum(axis=1).max()))


def memory_estimate(D: int, vectors: bool = True) -> int:
    """Upper estimate in bytes of the peak memory of :func:`eig`, Hamiltonian included.

    Counted in dense complex ``D x D`` arrays: the Hamiltonian, the copy LAPACK
    overwrites, and with vectors the eigenvectors, their reordered copy and
    the LU factor used for ``V^{-1}``. Measured peaks stay below these factors.
    """
    factor = 4.5 if vectors else 2.5
    return int(math.ceil(factor * 16 * D * D))


def eig(H: HamiltonianMatrix | np.ndarray, vectors: bool = True, inverse: bool = True,
        check: bool = True) -> SpectralDecomposition:
    """Full eigendecomposition of a dense complex Hamiltonian (LAPACK ``zgeev``).

    With ``vectors=False`` only eigenvalues are computed, which roughly halves
    the cost and is all that the PT diagnostics need.
    """
    ham = H if isinstance(H, HamiltonianMatrix) else None
    A = np.asarray(H.entries if ham is not None else H)
    if not np.all(np.isfinite(A)):
        raise InvalidParameterError("Hamiltonian has non-finite entries")
    try:
        if not vectors:
            w = sla.eigvals(A, check_finite=False)
            return SpectralDecomposition(eigenvalues=w[_sorted_order(w)], hamiltonian=ham)
        w, V = sla.eig(A, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"eigensolver failed: {exc}") from exc

    order = _sorted_order(w)
    w = w[order]
    V = V[:, order]
    # zgeev already normalizes; renormalize to remove the last ulp of drift
    V /= np.linalg.norm(V, axis=0)

    residual = float("nan")
    if check:
        residual = max_residual(A, w, V)
        scale = max(spectral_scale(A), 1.0)
        if residual > RESIDUAL_RTOL * scale:
            raise SolverError(f"eigen-residual {residual:.3e} exceeds bound", residual=residual)

    Vinv = None
    if inverse:
        try:
            Vinv = sla.inv(V, check_finite=False, overwrite_a=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SolverError(f"eigenvector matrix is singular: {exc}", residual=residual) from exc
    w.setflags(write=False)
    V.setflags(write=False)
    if Vinv is not None:
        Vinv.setflags(write=False)
    return SpectralDecomposition(eigenvalues=w, right_vectors=V, inverse_vectors=Vinv,
                                 residual=residual, hamiltonian=ham)


def pt_diagnostics(spec, epsilon_im: float = DEFAULT_EPSILON_IM) -> PTDiagnostics:
    """Maximal ``|Im E|`` and the fraction of eigenvalues with ``|Im E| > epsilon_im``.

    ``spec`` is a :class:`SpectralDecomposition` or a bare array of eigenvalues.
    """
    if not epsilon_im > 0:
        raise InvalidParameterError("epsilon_im must be positive")
    w = np.asarray(spec.eigenvalues if isinstance(spec, SpectralDecomposition) else spec)
    im = np.abs(w.imag)
    d_im = int(np.count_nonzero(im > epsilon_im))
    return PTDiagnostics(max_abs_imag=float(im.max()), rho_im=d_im / len(w),
                         d_im=d_im, epsilon_im=float(epsilon_im))


def free_two_boson_spectrum(params: ModelParams, n_k: int = 64) -> np.ndarray:
    """Thermodynamic-limit energies of two free bosons on an ``n_k x n_k`` momentum grid."""
    if n_k < 2:
        raise InvalidParameterError("n_k must be >= 2")
    J, mu = params.J, params.mu
    k = np.linspace(-np.pi, np.pi, n_k)
    kk, qq = np.meshgrid(k, k, indexing="ij")
    if abs(mu) <= abs(J):
        E = 2.0 * J * (np.cos(kk) + np.cos(qq)) + 0j
    else:
        if mu / J <= 0:
            raise DomainError("h = ln(mu/J) needs mu/J > 0 (mu and J are taken positive)")
        h = math.log(mu / J)
        E = 2.0 * J * (np.cos(kk - 1j * h) + np.cos(qq - 1j * h))
    return E.ravel()


def first_crossing(x, y, level: float) -> float:
    """Smallest ``x`` where ``y`` exceeds ``level``, linearly interpolated.

    Returns ``x[0]`` when the first sample is already above and ``nan`` when
    no sample is.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.argsort(x)
    x, y = x[order], y[order]
    above = np.flatnonzero(y > level)
    if above.size == 0:
        return float("nan")
    k = above[0]
    if k == 0:
        return float(x[0])
    frac = (level - y[k - 1]) / (y[k] - y[k - 1])
    return float(x[k - 1] + frac * (x[k] - x[k - 1]))


def extract_pt_boundary(mu_values, U_values, max_abs_imag, epsilon_im: float = DEFAULT_EPSILON_IM):
    """Per ``U`` row, the smallest ``mu`` where ``max |Im E|`` exceeds ``epsilon_im``.

    ``max_abs_imag[i, k]`` belongs to ``(U_values[i], mu_values[k])``. The
    crossing is linearly interpolated between neighbouring grid points; rows
    without a crossing get ``nan``.
    """
    mu = np.asarray(mu_values, dtype=float)
    U = np.asarray(U_values, dtype=float)
    M = np.asarray(max_abs_imag, dtype=float).reshape(len(U), len(mu))
    return [(float(u), first_crossing(mu, row, epsilon_im)) for u, row in zip(U, M)]


def bisect_pt_threshold(params: ModelParams, lo: float, hi: float,
                        epsilon_im: float = DEFAULT_EPSILON_IM, tol: float = 1e-3) -> float:
    """PT-breaking ``mu`` of ``params`` (its own ``mu`` is ignored) by bisection.

    Needs ``max |Im E| <= epsilon_im`` at ``lo`` and ``> epsilon_im`` at ``hi``
    and assumes a single crossing in between. Returns the midpoint of the
    final bracket, which is narrower than ``tol``.
    """
    if not 0 <= lo < hi or tol <= 0:
        raise InvalidParameterError("need 0 <= lo < hi and tol > 0")

    def broken(mu):
        w = eig(build_hamiltonian(params.with_(mu=mu)), vectors=False).eigenvalues
        return pt_diagnostics(w, epsilon_im).max_abs_imag > epsilon_im

    if broken(lo) or not broken(hi):
        raise InvalidParameterError(f"[{lo}, {hi}] does not bracket the PT threshold")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if broken(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
