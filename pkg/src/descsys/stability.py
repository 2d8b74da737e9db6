"""Equilibrium sets and stability of the optimal solution.

Power-boundedness of ``Jp`` decides Lyapunov stability, a spectral radius
below one decides asymptotic stability.  Both are decided structurally from
the Jordan blocks; finite-horizon norms of ``Jp^k`` are reported only as
evidence.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .numerics import DEFAULT_TOLERANCES, Tolerances, as_column
from .pencil import RegularSystem, SpectralSummary, WeierstrassDecomposition
from .solution import consistency_projector, optimal_trajectory

__all__ = [
    "Classification",
    "EquilibriumSet",
    "StabilityVerdict",
    "K_PROBE",
    "equilibrium_set",
    "is_power_bounded",
    "classify_stability",
    "empirical_decay_check",
]

K_PROBE = 1000


class Classification(str, enum.Enum):
    ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"
    LYAPUNOV_STABLE = "LyapunovStable"
    UNSTABLE = "Unstable"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class EquilibriumSet:
    """Orthonormal basis of ``E = N_r(F - G) ∩ colspan Qp`` (``m x d``)."""

    basis: np.ndarray = field(repr=False)
    one_is_eigenvalue: bool

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class StabilityVerdict:
    classification: Classification
    spectral_radius: float
    boundary_blocks_trivial: bool
    power_bound_estimate: float
    evidence_horizon: int


def _near_one(a, tol):
    return abs(a - 1.0) <= tol.cluster_abs


def equilibrium_set(sys: RegularSystem, w: WeierstrassDecomposition,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> EquilibriumSet:
    """Equilibrium states of ``F Y_{k+1} = G Y_k``.

    Without a finite eigenvalue at 1 the zero state is the only equilibrium
    and the basis is empty.  Otherwise the basis spans the null space of the
    stacked constraint ``[F - G; I - Pi]``.  ``F - G`` is scaled to unit
    norm so that one rank cutoff serves both halves; ``I - Pi`` is an
    orthogonal projector and already has norm 1 or 0.
    """
    m = sys.m
    if not any(_near_one(a, tol) for a, _ in w.finite_blocks):
        return EquilibriumSet(np.zeros((m, 0), dtype=np.complex128), False)
    A = sys.F - sys.G
    norm = np.linalg.norm(A, 2)
    if norm > 0:
        A = A / norm
    stacked = np.vstack([A, np.eye(m) - consistency_projector(w, tol)])
    # both halves have unit scale, so the cutoff is absolute
    _, s, Vh = np.linalg.svd(stacked)
    rank = int(np.count_nonzero(s > tol.rank_rel))
    return EquilibriumSet(Vh[rank:].conj().T.copy(), True)


def _power_norms(Jp, horizon):
    """``max_{k <= horizon} ||Jp^k||_2`` by repeated multiplication."""
    p = Jp.shape[0]
    if p == 0:
        return 0.0
    X = np.eye(p, dtype=np.complex128)
    best = 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(horizon):
            X = Jp @ X
            if not np.all(np.isfinite(X)):
                return float("inf")
            best = max(best, float(np.linalg.norm(X, 2)))
    return best


def _boundary_trivial(w, tol):
    return all(k == 1 for a, k in w.finite_blocks if abs(abs(a) - 1.0) <= tol.cluster_abs)


def is_power_bounded(w: WeierstrassDecomposition, tol: Tolerances = DEFAULT_TOLERANCES,
                     k_probe: int = K_PROBE):
    """Whether ``sup_k ||Jp^k||`` is finite, with a finite-horizon estimate.

    True iff every finite eigenvalue has ``|a| < 1 - cluster_abs`` or lies in
    the band ``| |a| - 1 | <= cluster_abs`` with only 1x1 blocks.

    Returns
    -------
    (bool, float)
        Structural verdict and ``max_{k <= k_probe} ||Jp^k||_2``.
    """
    bounded = True
    for a, k in w.finite_blocks:
        r = abs(a)
        if r < 1.0 - tol.cluster_abs:
            continue
        if r <= 1.0 + tol.cluster_abs and k == 1:
            continue
        bounded = False
    return bounded, _power_norms(w.Jp, k_probe)


def classify_stability(sys: RegularSystem, w: WeierstrassDecomposition,
                       spec: SpectralSummary, tol: Tolerances = DEFAULT_TOLERANCES,
                       k_probe: int = K_PROBE) -> StabilityVerdict:
    """Classify the optimal solution.

    AsymptoticallyStable when every finite eigenvalue lies inside the disc
    ``|s| < 1 - cluster_abs`` (vacuously so when ``p = 0``), otherwise
    LyapunovStable when ``Jp`` is power bounded, otherwise Unstable.
    """
    radius = float(spec.spectral_radius)
    bounded, c = is_power_bounded(w, tol, k_probe)
    if radius < 1.0 - tol.cluster_abs:
        label = Classification.ASYMPTOTICALLY_STABLE
    elif bounded:
        label = Classification.LYAPUNOV_STABLE
    else:
        label = Classification.UNSTABLE
    return StabilityVerdict(label, radius, _boundary_trivial(w, tol), c, k_probe)


def empirical_decay_check(w: WeierstrassDecomposition, Y0, K: int,
                          tol: Tolerances = DEFAULT_TOLERANCES,
                          decay_rel: float = 1e-6) -> bool:
    """True iff ``||Y_K|| <= decay_rel * (1 + ||Y_0||)`` along the optimal trajectory.

    ``Y_0`` here is the repaired initial state.  An empirical cross-check of
    :func:`classify_stability`, not a substitute for it.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    y = as_column(Y0, w.m, "Y0")
    with np.errstate(over="ignore", invalid="ignore"):
        traj = optimal_trajectory(y, w, K, tol)
    start = np.linalg.norm(traj.states[0])
    end = np.linalg.norm(traj.states[-1])
    return bool(end <= decay_rel * (1.0 + start))
