"""Dense complex linear algebra kernel.

Rank decisions, orthonormal bases, least squares and numerical Jordan
structure recovery.  All routines work on ``complex128`` arrays; real input
is embedded with zero imaginary part.

Jordan structure is recovered without forming powers of ``M - aI``.  For each
eigenvalue cluster a staircase reduction peels off successive null spaces,
giving the Weyr characteristic ``n_1 >= n_2 >= ...`` (the rank sequence of
the powers) together with an orthonormal basis of the generalized
eigenspace.  Jordan chains are then read off level by level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, IllConditionedStructure, RankDeficient

__all__ = [
    "Tolerances",
    "DEFAULT_TOLERANCES",
    "JordanStructure",
    "as_matrix",
    "as_column",
    "numerical_rank",
    "orthonormal_range_basis",
    "null_space_basis",
    "least_squares_solve",
    "jordan_structure",
    "jordan_matrix",
    "block_order_key",
    "realify",
]

# straddling singular values closer than this ratio make a rank decision unstable
GAP_RATIO = 10.0


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used throughout the package.

    Parameters
    ----------
    rank_rel : float
        Relative singular value cutoff; ``sigma_i > rank_rel * sigma_max``
        counts towards the rank.
    cluster_abs : float
        Eigenvalues closer than this are merged into one cluster.  Also the
        width of the band around the unit circle treated as "on" it.
    residual_abs : float
        Acceptance threshold for reconstruction and dynamic residuals.
    """

    rank_rel: float = 1e-10
    cluster_abs: float = 1e-8
    residual_abs: float = 1e-8

    def __post_init__(self):
        for name in ("rank_rel", "cluster_abs", "residual_abs"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if self.rank_rel >= 1:
            raise ValueError(f"rank_rel must be < 1, got {self.rank_rel!r}")


DEFAULT_TOLERANCES = Tolerances()


def as_matrix(M, name="matrix") -> np.ndarray:
    """Validate ``M`` as a finite 2-D array and return a complex copy."""
    A = np.array(M, dtype=np.complex128)
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return A


def as_column(y, m=None, name="vector") -> np.ndarray:
    """Return ``y`` as a finite complex 1-D array of length ``m``."""
    v = np.array(y, dtype=np.complex128)
    if v.ndim == 2 and 1 in v.shape:
        v = v.reshape(-1)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be a vector, got shape {v.shape}")
    if m is not None and v.shape[0] != m:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {m}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return v


def _svdvals(A):
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def _count_above(s, cutoff):
    return int(np.count_nonzero(s > cutoff))


def numerical_rank(M, tol: Tolerances = DEFAULT_TOLERANCES) -> int:
    """Number of singular values above ``tol.rank_rel * sigma_max``.

    >>> numerical_rank(np.diag([1.0, 1e-16]))
    1
    """
    s = _svdvals(as_matrix(M))
    if s.size == 0 or s[0] == 0:
        return 0
    return _count_above(s, tol.rank_rel * s[0])


def orthonormal_range_basis(M, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Orthonormal basis of the column space of ``M`` (``m x rank``)."""
    A = as_matrix(M)
    if A.size == 0:
        return np.zeros((A.shape[0], 0), dtype=np.complex128)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    r = 0 if s[0] == 0 else _count_above(s, tol.rank_rel * s[0])
    return U[:, :r].copy()


def null_space_basis(M, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Orthonormal basis of the right null space of ``M`` (``n x nullity``)."""
    A = as_matrix(M)
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n, dtype=np.complex128)
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    r = 0 if s.size == 0 or s[0] == 0 else _count_above(s, tol.rank_rel * s[0])
    return Vh[r:].conj().T.copy()


def least_squares_solve(A, b, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Minimize ``||A x - b||_2`` for ``A`` of full column rank.

    Solved through a thin QR factorization, so the result equals
    ``(A* A)^{-1} A* b`` without forming the normal equations.  ``b`` may be
    a vector or a matrix of right-hand sides.

    Raises
    ------
    RankDeficient
        If the columns of ``A`` are dependent at ``tol.rank_rel``.
    """
    A = as_matrix(A, "A")
    B = np.array(b, dtype=np.complex128)
    vector = B.ndim == 1
    if vector:
        B = B[:, None]
    if B.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"A has {A.shape[0]} rows but b has {B.shape[0]}")
    n = A.shape[1]
    if n == 0:
        x = np.zeros((0, B.shape[1]), dtype=np.complex128)
        return x[:, 0] if vector else x
    if numerical_rank(A, tol) < n:
        raise RankDeficient(f"A ({A.shape[0]}x{n}) does not have full column rank")
    Qf, R = np.linalg.qr(A, mode="reduced")
    x = np.linalg.solve(R, Qf.conj().T @ B)
    return x[:, 0] if vector else x


@dataclass(frozen=True)
class JordanStructure:
    """Jordan blocks of a square matrix ``M`` with ``M T = T J``.

    ``eigenvalues[i]`` and ``block_sizes[i]`` describe the i-th block; the
    columns of ``transform`` are the chains, block after block, each chain
    ordered from eigenvector to top generalized vector.
    """

    eigenvalues: tuple
    block_sizes: tuple
    transform: np.ndarray = field(repr=False)

    @property
    def order(self) -> int:
        return int(sum(self.block_sizes))

    def jordan_matrix(self) -> np.ndarray:
        return jordan_matrix(self.eigenvalues, self.block_sizes)

    def block_slices(self):
        start = 0
        for k in self.block_sizes:
            yield slice(start, start + k)
            start += k


def jordan_matrix(eigenvalues, block_sizes) -> np.ndarray:
    """Block diagonal matrix of Jordan blocks with unit superdiagonals."""
    n = int(sum(block_sizes))
    J = np.zeros((n, n), dtype=np.complex128)
    start = 0
    for a, k in zip(eigenvalues, block_sizes):
        idx = np.arange(start, start + k)
        J[idx, idx] = a
        J[idx[:-1], idx[1:]] = 1.0
        start += k
    return J


def block_order_key(value, size, tol: Tolerances = DEFAULT_TOLERANCES):
    """Sort key: modulus descending, argument ascending, size descending.

    Modulus and argument are quantized to ``cluster_abs`` so that rounding
    noise (e.g. between a conjugate pair) cannot flip the order.
    """
    value = complex(value)
    if abs(value.imag) <= tol.cluster_abs:
        value = complex(value.real, 0.0)
    mod = round(abs(value) / tol.cluster_abs)
    arg = round(float(np.angle(value)) / tol.cluster_abs) if mod else 0
    return (-mod, arg, -int(size))


def realify(M, tol: Tolerances = DEFAULT_TOLERANCES):
    """Return ``M.real`` when every imaginary magnitude is ``<= residual_abs``."""
    A = np.asarray(M)
    if np.iscomplexobj(A) and A.size and np.max(np.abs(A.imag)) > tol.residual_abs:
        return A
    return np.real(A).copy()


# --------------------------------------------------------------------------
# Jordan structure


def _split(A, cutoff):
    """SVD split of ``A`` into null and complement bases.

    Returns ``(null, comp, unstable)`` where ``unstable`` flags a pair of
    singular values straddling ``cutoff`` within a factor of ``GAP_RATIO``.
    """
    n = A.shape[1]
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    r = _count_above(s, cutoff)
    V = Vh.conj().T
    unstable = False
    if 0 < r < s.size and s[r] > 0:
        unstable = s[r - 1] / s[r] < GAP_RATIO
    elif r == s.size and r > 0:
        unstable = s[r - 1] < GAP_RATIO * cutoff
    elif r == 0 and s.size and s[0] > 0:
        unstable = s[0] > cutoff / GAP_RATIO
    # square A: columns beyond len(s) do not occur
    return V[:, r:n], V[:, :r], unstable


def _staircase(A, cutoff, limit=None):
    """Peel successive null spaces off ``A``.

    Returns ``(weyr, basis, unstable)``: the nullity increments
    ``n_j = dim ker A^j - dim ker A^(j-1)``, an orthonormal basis of the
    generalized null space ordered level by level, and whether any rank
    decision was unstable.  ``limit`` stops early once the accumulated
    nullity exceeds it.
    """
    m = A.shape[0]
    B = np.eye(m, dtype=np.complex128)
    weyr, levels = [], []
    unstable = False
    total = 0
    while B.shape[1] > 0:
        null, comp, flag = _split(B.conj().T @ A @ B, cutoff)
        unstable |= flag
        if null.shape[1] == 0:
            break
        weyr.append(null.shape[1])
        levels.append(B @ null)
        total += null.shape[1]
        B = B @ comp
        if limit is not None and total > limit:
            break
    basis = np.hstack(levels) if levels else np.zeros((m, 0), dtype=np.complex128)
    return weyr, basis, unstable


def _nullity(A, cutoff):
    s = _svdvals(A)
    return s.size - _count_above(s, cutoff)


def _cluster(M, lam, cutoff, tol):
    """Group computed eigenvalues into clusters of equal true eigenvalue.

    Eigenvalues within ``cluster_abs`` are always merged.  A defective
    eigenvalue of block size ``k`` is split by rounding into ``k`` values
    spread far wider than ``cluster_abs``, so units are grown greedily by
    distance and the largest group whose mean ``a`` carries at least as many
    null directions of ``M - aI`` (counted by the staircase) as the group
    has members is kept.
    """
    n = lam.size
    # single linkage at cluster_abs
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(lam[i] - lam[j]) <= tol.cluster_abs:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    units = sorted(groups.values(), key=lambda g: (lam[g].real.mean(), lam[g].imag.mean(), g[0]))

    eye = np.eye(M.shape[0], dtype=np.complex128)
    clusters = []
    remaining = list(units)
    while remaining:
        seed = remaining.pop(0)
        centre = lam[seed].mean()
        order = sorted(
            range(len(remaining)),
            key=lambda u: (np.min(np.abs(lam[remaining[u]] - centre)), u),
        )
        members = list(seed)
        best, best_used = list(seed), []
        used = []
        for step in range(len(order) + 1):
            if step:
                used.append(order[step - 1])
                members = members + remaining[order[step - 1]]
            a = lam[members].mean()
            A = M - a * eye
            if _nullity(A, cutoff) == 0:
                continue
            weyr, _, _ = _staircase(A, cutoff, limit=len(members))
            if sum(weyr) >= len(members):
                best, best_used = list(members), list(used)
        for u in sorted(best_used, reverse=True):
            remaining.pop(u)
        clusters.append(best)
    return clusters


def _chains(A, weyr, basis):
    """Jordan chains of the nilpotent restriction of ``A`` to ``basis``.

    Returns a list of ``(size, columns)`` with columns ordered from
    eigenvector up to the top of the chain, largest chains first.
    """
    offsets = np.concatenate([[0], np.cumsum(weyr)])
    Nil = basis.conj().T @ A @ basis
    L = len(weyr)
    tops = []  # (level, coordinate vector)
    for j in range(L, 0, -1):
        lo, hi = offsets[j - 1], offsets[j]
        width = hi - lo
        need = weyr[j - 1] - (weyr[j] if j < L else 0)
        if need < 0:
            raise IllConditionedStructure("Weyr characteristic is not non-increasing")
        if need == 0:
            continue
        existing = []
        for level, v in tops:
            w = v
            for _ in range(level - j):
                w = Nil @ w
            existing.append(w[lo:hi])
        if existing:
            E = np.column_stack(existing)
            U, s, _ = np.linalg.svd(E, full_matrices=True)
            comp = U[:, E.shape[1]:]
        else:
            comp = np.eye(width, dtype=np.complex128)
        if comp.shape[1] < need:
            raise IllConditionedStructure("chain levels are not independent")
        for c in range(need):
            v = np.zeros(basis.shape[1], dtype=np.complex128)
            v[lo:hi] = comp[:, c]
            tops.append((j, v))

    chains = []
    for level, v in tops:
        cols = [basis @ v]
        for _ in range(level - 1):
            cols.append(A @ cols[-1])
        cols.reverse()
        C = np.column_stack(cols)
        C /= np.max(np.linalg.norm(C, axis=0))
        chains.append((level, C))
    return chains


def jordan_structure(M, tol: Tolerances = DEFAULT_TOLERANCES) -> JordanStructure:
    """Numerical Jordan decomposition ``M T = T J``.

    Eigenvalue clusters are represented by their arithmetic mean.  Block sizes
    come from the staircase rank sequence at that mean.  Blocks are ordered by
    :func:`block_order_key`.

    Raises
    ------
    IllConditionedStructure
        If a rank decision is unstable, the counts are inconsistent, the
        chain matrix is singular or the reconstruction residual exceeds
        ``tol.residual_abs * ||M||``.
    """
    M = as_matrix(M)
    n = M.shape[0]
    if M.shape[1] != n:
        raise DimensionMismatch(f"jordan_structure needs a square matrix, got {M.shape}")
    if n == 0:
        return JordanStructure((), (), np.zeros((0, 0), dtype=np.complex128))
    norm = np.linalg.norm(M, 2)
    scale = norm if norm > 0 else 1.0
    cutoff = tol.rank_rel * scale

    lam = np.linalg.eigvals(M)
    eye = np.eye(n, dtype=np.complex128)
    blocks = []
    for members in _cluster(M, lam, cutoff, tol):
        a = complex(lam[members].mean())
        A = M - a * eye
        weyr, basis, unstable = _staircase(A, cutoff)
        if unstable:
            raise IllConditionedStructure(
                f"rank decisions near eigenvalue {a:.6g} straddle the cutoff")
        if sum(weyr) != len(members):
            raise IllConditionedStructure(
                f"eigenvalue {a:.6g}: {len(members)} computed eigenvalues but "
                f"{sum(weyr)} null directions")
        for size, C in _chains(A, weyr, basis):
            blocks.append((a, size, C))

    blocks.sort(key=lambda b: block_order_key(b[0], b[1], tol))
    eigenvalues = tuple(b[0] for b in blocks)
    sizes = tuple(int(b[1]) for b in blocks)
    T = np.hstack([b[2] for b in blocks])

    Tn = T / np.linalg.norm(T, axis=0)
    if numerical_rank(Tn, tol) < n:
        raise IllConditionedStructure("Jordan chain matrix is numerically singular")
    J = jordan_matrix(eigenvalues, sizes)
    if np.linalg.norm(M @ T - T @ J, 2) > tol.residual_abs * scale:
        raise IllConditionedStructure("Jordan reconstruction residual too large")
    return JordanStructure(eigenvalues, sizes, T)
