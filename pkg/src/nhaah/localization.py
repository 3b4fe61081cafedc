"""Participation ratios of eigenstates and the extended/critical/localized call."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .spectral import first_crossing

DEFAULT_TAU_LOC = 0.01
NORM_TOL = 1e-10

EXTENDED = "Extended"
CRITICAL = "Critical"
LOCALIZED = "Localized"


@dataclass(frozen=True)
class LocalizationSummary:
    ipr_per_state: np.ndarray = field(repr=False)
    ipr_max: float
    ipr_min: float
    ipr_ave: float
    npr_ave: float
    zeta: float
    tau_loc: float
    phase: str


def _check_normalized(state):
    state = np.asarray(state)
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > NORM_TOL:
        raise InvalidParameterError(f"state is not normalized (norm = {norm!r})")
    return state


def ipr(state) -> float:
    """Sum of fourth powers of the basis amplitudes of a unit vector."""
    state = _check_normalized(state)
    return float(np.sum(np.abs(state) ** 4))


def npr(state) -> float:
    state = _check_normalized(state)
    return 1.0 / (len(state) * ipr(state))


def iprs(vectors) -> np.ndarray:
    """IPR of every column, without the per-state normalization check."""
    V = np.asarray(vectors)
    return np.sum(np.abs(V) ** 4, axis=0)


def classify(ipr_max: float, ipr_min: float, tau_loc: float) -> str:
    if ipr_max < tau_loc:
        return EXTENDED
    if ipr_min > tau_loc:
        return LOCALIZED
    return CRITICAL


def summarize(spec, tau_loc: float = DEFAULT_TAU_LOC) -> LocalizationSummary:
    """Aggregate IPR/NPR statistics over all eigenstates of a decomposition."""
    V = spec.right_vectors
    if V is None:
        raise InvalidParameterError("decomposition has no eigenvectors")
    D = V.shape[0]
    if not 1.0 / D < tau_loc < 1.0:
        raise InvalidParameterError(f"tau_loc must lie in (1/D, 1), got {tau_loc}")
    norms = np.linalg.norm(V, axis=0)
    if np.max(np.abs(norms - 1.0)) > NORM_TOL:
        raise InvalidParameterError("eigenvectors are not unit-normalized")
    p = iprs(V)
    q = 1.0 / (D * p)
    ipr_ave = float(p.mean())
    npr_ave = float(q.mean())
    ipr_max = float(p.max())
    ipr_min = float(p.min())
    return LocalizationSummary(
        ipr_per_state=p,
        ipr_max=ipr_max,
        ipr_min=ipr_min,
        ipr_ave=ipr_ave,
        npr_ave=npr_ave,
        zeta=math.log10(ipr_ave * npr_ave),
        tau_loc=float(tau_loc),
        phase=classify(ipr_max, ipr_min, tau_loc),
    )


def mobility_edge_map(spec, summary: LocalizationSummary) -> np.ndarray:
    """Rows ``(re_E, im_E, ipr)``, one per eigenstate, sorted by ``re_E``."""
    w = np.asarray(spec.eigenvalues)
    table = np.column_stack([w.real, w.imag, summary.ipr_per_state])
    return table[np.argsort(table[:, 0], kind="stable")]


def transition_points(mu_values, ipr_max, ipr_min, tau_loc: float = DEFAULT_TAU_LOC):
    """``(mu_c1, mu_c2)`` along a line of fixed ``U``.

    ``mu_c1`` is where the most localized state first passes ``tau_loc``
    (extended to critical), ``mu_c2`` where the least localized one does
    (critical to localized). Crossings are interpolated linearly; ``nan``
    marks a transition outside the scanned range.
    """
    mu = np.asarray(mu_values, dtype=float)
    hi = np.asarray(ipr_max, dtype=float)
    lo = np.asarray(ipr_min, dtype=float)
    if not (mu.shape == hi.shape == lo.shape) or mu.ndim != 1:
        raise InvalidParameterError("mu_values, ipr_max and ipr_min must be 1-d of equal length")
    return first_crossing(mu, hi, tau_loc), first_crossing(mu, lo, tau_loc)
