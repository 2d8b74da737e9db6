"""Consistency of initial conditions and optimal trajectories.

The consistent initial conditions are exactly ``colspan Qp``.  A
non-consistent ``Y0`` is repaired by its orthogonal projection
``Pi Y0`` with ``Pi = Qp (Qp* Qp)^{-1} Qp*``, the closest consistent point in
the 2-norm, and the optimal solution is ``Y_k = Qp Jp^k C`` with
``C = (Qp* Qp)^{-1} Qp* Y0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .numerics import DEFAULT_TOLERANCES, Tolerances, as_column, least_squares_solve
from .pencil import RegularSystem, WeierstrassDecomposition

__all__ = [
    "ConsistencyReport",
    "TrajectoryRecord",
    "consistency_projector",
    "check_consistency",
    "optimal_trajectory",
    "closed_form_solution",
    "audit_residuals",
    "residual_scale",
]


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    distance: float
    projected_Y0: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class TrajectoryRecord:
    """States ``Y_0 .. Y_K`` (rows of ``states``) and one-step residuals.

    ``residuals[k]`` is ``||F Y_{k+1} - G Y_k||_2``.
    """

    states: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    coordinate_C: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.states.shape[0] - 1

    def __post_init__(self):
        for arr in (self.states, self.residuals, self.coordinate_C):
            arr.flags.writeable = False


def consistency_projector(w: WeierstrassDecomposition,
                          tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Orthogonal projector onto ``colspan Qp``; the zero matrix when ``p = 0``.

    Raises
    ------
    RankDeficient
        If the columns of ``Qp`` are numerically dependent.
    """
    m, p = w.m, w.p
    if p == 0:
        return np.zeros((m, m), dtype=np.complex128)
    Qp = w.Qp
    pinv = least_squares_solve(Qp, np.eye(m, dtype=np.complex128), tol)
    Pi = Qp @ pinv
    return 0.5 * (Pi + Pi.conj().T)


def check_consistency(Y0, w: WeierstrassDecomposition,
                      tol: Tolerances = DEFAULT_TOLERANCES) -> ConsistencyReport:
    """Distance from ``Y0`` to the consistent set and the repaired point.

    ``Y0`` is consistent when the distance is at most
    ``residual_abs * (1 + ||Y0||)``.
    """
    y = as_column(Y0, w.m, "Y0")
    projected = consistency_projector(w, tol) @ y
    distance = float(np.linalg.norm(y - projected))
    consistent = distance <= tol.residual_abs * (1.0 + np.linalg.norm(y))
    return ConsistencyReport(bool(consistent), distance, projected)


def _step_residuals(sys: RegularSystem, states: np.ndarray) -> np.ndarray:
    if states.shape[0] < 2:
        return np.zeros(0)
    diff = states[1:] @ sys.F.T - states[:-1] @ sys.G.T
    return np.linalg.norm(diff, axis=1)


def _propagate(C, w: WeierstrassDecomposition, K: int) -> TrajectoryRecord:
    if K < 0:
        raise ValueError(f"horizon K must be >= 0, got {K}")
    z = np.array(C, dtype=np.complex128)
    coords = np.empty((K + 1, w.p), dtype=np.complex128)
    for k in range(K + 1):
        coords[k] = z
        z = w.Jp @ z
    states = coords @ w.Qp.T
    return TrajectoryRecord(states, _step_residuals(w.system, states), np.array(C, dtype=np.complex128))


def optimal_trajectory(Y0, w: WeierstrassDecomposition, K: int,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> TrajectoryRecord:
    """Optimal solution from a possibly non-consistent ``Y0`` over ``k = 0..K``.

    The coordinate ``C = (Qp* Qp)^{-1} Qp* Y0`` is advanced by repeated
    multiplication with ``Jp``; powers of ``Jp`` are never formed.  The first
    state is the projection of ``Y0`` onto the consistent set.
    """
    y = as_column(Y0, w.m, "Y0")
    C = least_squares_solve(w.Qp, y, tol)
    return _propagate(C, w, K)


def closed_form_solution(C, w: WeierstrassDecomposition, K: int) -> TrajectoryRecord:
    """General solution ``Y_k = Qp Jp^k C`` for a given coordinate vector ``C``."""
    return _propagate(as_column(C, w.p, "C"), w, K)


def residual_scale(sys: RegularSystem, traj: TrajectoryRecord) -> float:
    """``(1 + ||F|| + ||G||) * max_k ||Y_k||``, the scale of the dynamic residual."""
    peak = float(np.max(np.linalg.norm(traj.states, axis=1), initial=0.0))
    return (1.0 + np.linalg.norm(sys.F, 2) + np.linalg.norm(sys.G, 2)) * peak


def audit_residuals(sys: RegularSystem, traj: TrajectoryRecord,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """``max_k ||F Y_{k+1} - G Y_k||_2`` recomputed from ``sys``; 0 when ``K = 0``."""
    if traj.states.shape[1] != sys.m:
        raise DimensionMismatch("trajectory dimension does not match the system")
    return float(np.max(_step_residuals(sys, traj.states), initial=0.0))
