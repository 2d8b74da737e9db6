"""Regularity certification and Weierstrass decomposition of ``sF - G``.

The decomposition goes through the shift-invert matrix
``W = (s0 F - G)^{-1} F`` at the regularity witness ``s0``.  In Weierstrass
coordinates ``W = Q diag((s0 I - J)^{-1}, (s0 H - I)^{-1} H) Q^{-1}``, so the
nonzero eigenvalues ``mu`` of ``W`` are ``1 / (s0 - a)`` for the finite
eigenvalues ``a`` and the zero eigenvalue carries the infinite structure with
the block sizes of ``H``.  Jordan chains of ``W`` are mapped to chains of the
pencil by an upper triangular change of basis inside each block, and ``P``
is obtained from ``P [F Qp, G Qq] = I``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ReconstructionFailure, SingularPencil
from .numerics import (
    DEFAULT_TOLERANCES,
    Tolerances,
    as_matrix,
    block_order_key,
    jordan_matrix,
    jordan_structure,
    numerical_rank,
)

__all__ = [
    "PROBE_SEED",
    "RegularSystem",
    "SpectralSummary",
    "WeierstrassDecomposition",
    "certify_regularity",
    "finite_spectrum",
    "weierstrass_decompose",
    "verify_decomposition",
    "decomposition_scales",
]

PROBE_SEED = 20240521


@dataclass(frozen=True)
class RegularSystem:
    """A square pencil ``(F, G)`` with a regularity witness.

    ``certificate`` is a point ``s0`` where ``s0 F - G`` is numerically
    nonsingular; ``witness_ratio`` is its ``sigma_min / sigma_max``.
    """

    F: np.ndarray = field(repr=False)
    G: np.ndarray = field(repr=False)
    certificate: complex
    witness_ratio: float
    probes: tuple = field(default=(), repr=False)

    @property
    def m(self) -> int:
        return self.F.shape[0]

    @property
    def is_real(self) -> bool:
        return not (np.any(self.F.imag) or np.any(self.G.imag))


@dataclass(frozen=True)
class SpectralSummary:
    """Finite elementary divisors ``(a_j, p_j)`` and infinite multiplicity ``q``.

    ``finite_eigs`` holds one ``(eigenvalue, block size)`` pair per Jordan
    block; ``infinite_blocks`` the block sizes of the nilpotent part.
    """

    finite_eigs: tuple
    infinite_blocks: tuple
    m: int

    @property
    def nu(self) -> int:
        return len(self.finite_eigs)

    @property
    def p(self) -> int:
        return int(sum(k for _, k in self.finite_eigs))

    @property
    def q(self) -> int:
        return int(sum(self.infinite_blocks))

    @property
    def spectral_radius(self) -> float:
        return max((abs(a) for a, _ in self.finite_eigs), default=0.0)


@dataclass(frozen=True)
class WeierstrassDecomposition:
    """``P F Q = diag(I_p, Hq)`` and ``P G Q = diag(Jp, I_q)``."""

    system: RegularSystem = field(repr=False)
    P: np.ndarray = field(repr=False)
    Q: np.ndarray = field(repr=False)
    Jp: np.ndarray = field(repr=False)
    Hq: np.ndarray = field(repr=False)
    finite_blocks: tuple
    infinite_blocks: tuple

    @property
    def p(self) -> int:
        return self.Jp.shape[0]

    @property
    def q(self) -> int:
        return self.Hq.shape[0]

    @property
    def m(self) -> int:
        return self.p + self.q

    @property
    def nilpotency_index(self) -> int:
        return max(self.infinite_blocks, default=0)

    @property
    def Qp(self) -> np.ndarray:
        return self.Q[:, : self.p]

    @property
    def Qq(self) -> np.ndarray:
        return self.Q[:, self.p:]

    def canonical_F(self) -> np.ndarray:
        out = np.zeros((self.m, self.m), dtype=np.complex128)
        out[: self.p, : self.p] = np.eye(self.p)
        out[self.p:, self.p:] = self.Hq
        return out

    def canonical_G(self) -> np.ndarray:
        out = np.zeros((self.m, self.m), dtype=np.complex128)
        out[: self.p, : self.p] = self.Jp
        out[self.p:, self.p:] = np.eye(self.q)
        return out


def _square_pair(F, G):
    F = as_matrix(F, "F")
    G = as_matrix(G, "G")
    if F.shape[0] != F.shape[1] or G.shape != F.shape:
        raise DimensionMismatch(
            f"F and G must be square of equal size, got {F.shape} and {G.shape}")
    if F.shape[0] == 0:
        raise DimensionMismatch("empty system")
    return F, G


def probe_points(F, G) -> np.ndarray:
    """The ``m + 1`` deterministic probe points used by :func:`certify_regularity`."""
    m = F.shape[0]
    nF = np.linalg.norm(F, 2)
    nG = np.linalg.norm(G, 2)
    # with F = 0 every probe gives -G and the radius is irrelevant
    radius = 1.0 + nG / nF if nF > 0 else 1.0
    angles = np.random.default_rng(PROBE_SEED).uniform(0.0, 2.0 * np.pi, m + 1)
    return radius * np.exp(1j * angles)


def certify_regularity(F, G, tol: Tolerances = DEFAULT_TOLERANCES) -> RegularSystem:
    """Check that ``det(sF - G)`` is not identically zero.

    A nonzero polynomial of degree at most ``m`` cannot vanish at all of the
    ``m + 1`` probe points, so the pencil is declared singular only if every
    probe fails.  A probe ``s`` passes when ``s F - G`` has full numerical
    rank, i.e. ``sigma_min > rank_rel * sigma_max``.

    Raises
    ------
    DimensionMismatch
        If ``F`` and ``G`` are not square of equal size.
    SingularPencil
        If every probe fails.
    """
    F, G = _square_pair(F, G)
    tried = []
    for s in probe_points(F, G):
        sv = np.linalg.svd(s * F - G, compute_uv=False)
        ratio = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
        tried.append((complex(s), ratio))
        if ratio > tol.rank_rel:
            return RegularSystem(F, G, complex(s), ratio, tuple(tried))
    raise SingularPencil(
        f"det(sF - G) vanishes at all {len(tried)} probe points; the pencil is not regular",
        tried,
    )


def _shift_invert(sys: RegularSystem, tol: Tolerances):
    """Jordan structure of ``W`` split into finite and infinite blocks."""
    s0 = sys.certificate
    W = np.linalg.solve(s0 * sys.F - sys.G, sys.F)
    js = jordan_structure(W, tol)
    zero_tol = tol.rank_rel * max(1.0, np.linalg.norm(W, 2))
    finite, infinite = [], []
    for mu, k, sl in zip(js.eigenvalues, js.block_sizes, js.block_slices()):
        T = js.transform[:, sl]
        if abs(mu) <= zero_tol:
            infinite.append((k, T))
        else:
            finite.append((s0 - 1.0 / mu, mu, k, T))
    return finite, infinite


def _snap(a, sys, tol):
    if sys.is_real and abs(a.imag) <= tol.cluster_abs:
        return complex(a.real, 0.0)
    return a


def finite_spectrum(sys: RegularSystem, tol: Tolerances = DEFAULT_TOLERANCES) -> SpectralSummary:
    """Finite eigenvalues with block sizes, plus the infinite block sizes.

    Eigenvalues ``mu`` of ``W`` with ``|mu| <= rank_rel * max(1, ||W||)``
    belong to the eigenvalue at infinity; every other ``mu`` maps to
    ``a = s0 - 1/mu`` with the same Jordan block size.
    """
    finite, infinite = _shift_invert(sys, tol)
    eigs = sorted(
        ((_snap(a, sys, tol), k) for a, _, k, _ in finite),
        key=lambda e: block_order_key(e[0], e[1], tol),
    )
    inf_sizes = tuple(sorted((k for k, _ in infinite), reverse=True))
    return SpectralSummary(tuple(eigs), inf_sizes, sys.m)


def _upper_chain(E):
    """Columns ``E^(k-1) e_k, ..., E e_k, e_k`` for strictly upper triangular ``E``.

    With ``S`` built this way ``E S = S N`` where ``N`` is the nilpotent Jordan
    block, provided the superdiagonal of ``E`` has no zeros.
    """
    k = E.shape[0]
    cols = [np.eye(k, dtype=np.complex128)[:, -1]]
    for _ in range(k - 1):
        cols.append(E @ cols[-1])
    return np.column_stack(cols[::-1])


def _normalize_chain(C, real):
    C = C / np.max(np.linalg.norm(C, axis=0))
    if real:
        # the real part of a chain of a real pencil with a real eigenvalue is again a chain
        head = C[:, 0]
        c = head[np.argmax(np.abs(head))]
        C = (C * (abs(c) / c)).real.astype(np.complex128)
        C = C / np.max(np.linalg.norm(C, axis=0))
    return C


def _assemble(sys, finite, infinite, tol, real):
    s0 = sys.certificate
    fin_cols, fin_blocks = [], []
    for a, mu, k, T in finite:
        a = _snap(a, sys, tol)
        N = jordan_matrix([0.0], [k])
        E = s0 * np.eye(k) - np.linalg.inv(mu * np.eye(k) + N) - a * np.eye(k)
        C = T @ _upper_chain(E)
        fin_cols.append(_normalize_chain(C, real and a.imag == 0.0))
        fin_blocks.append((a, k))
    order = sorted(range(len(fin_blocks)), key=lambda i: block_order_key(*fin_blocks[i], tol))
    fin_blocks = [fin_blocks[i] for i in order]
    fin_cols = [fin_cols[i] for i in order]

    inf_cols, inf_blocks = [], []
    for k, T in sorted(infinite, key=lambda b: -b[0]):
        N = jordan_matrix([0.0], [k])
        E = -N @ np.linalg.inv(np.eye(k) - s0 * N)
        C = T @ _upper_chain(E)
        inf_cols.append(_normalize_chain(C, real))
        inf_blocks.append(k)

    m = sys.m
    Qp = np.hstack(fin_cols) if fin_cols else np.zeros((m, 0), dtype=np.complex128)
    Qq = np.hstack(inf_cols) if inf_cols else np.zeros((m, 0), dtype=np.complex128)
    Q = np.hstack([Qp, Qq])
    Jp = jordan_matrix([a for a, _ in fin_blocks], [k for _, k in fin_blocks])
    Hq = jordan_matrix([0.0] * len(inf_blocks), inf_blocks)
    R = np.hstack([sys.F @ Qp, sys.G @ Qq])
    if numerical_rank(R / np.linalg.norm(R, axis=0), tol) < m:
        raise ReconstructionFailure("[F Qp, G Qq] is numerically singular")
    P = np.linalg.solve(R, np.eye(m, dtype=np.complex128))
    if real:
        P, Q = P.real.astype(np.complex128), Q.real.astype(np.complex128)
    return WeierstrassDecomposition(sys, P, Q, Jp, Hq, tuple(fin_blocks), tuple(inf_blocks))


def decomposition_scales(sys: RegularSystem, w: WeierstrassDecomposition):
    """Residual scales ``(1 + ||F||) ||P|| ||Q||`` and ``(1 + ||G||) ||P|| ||Q||``."""
    pq = np.linalg.norm(w.P, 2) * np.linalg.norm(w.Q, 2)
    return (
        (1.0 + np.linalg.norm(sys.F, 2)) * pq,
        (1.0 + np.linalg.norm(sys.G, 2)) * pq,
    )


def verify_decomposition(sys: RegularSystem, w: WeierstrassDecomposition,
                         tol: Tolerances = DEFAULT_TOLERANCES):
    """Spectral norms of ``PFQ - diag(I, Hq)`` and ``PGQ - diag(Jp, I)``."""
    if w.P.shape != sys.F.shape or w.Q.shape != sys.F.shape:
        raise DimensionMismatch("decomposition does not match the system dimension")
    rF = np.linalg.norm(w.P @ sys.F @ w.Q - w.canonical_F(), 2)
    rG = np.linalg.norm(w.P @ sys.G @ w.Q - w.canonical_G(), 2)
    return float(rF), float(rG)


def _acceptable(sys, w, tol):
    rF, rG = verify_decomposition(sys, w, tol)
    sF, sG = decomposition_scales(sys, w)
    return rF <= tol.residual_abs * sF and rG <= tol.residual_abs * sG, (rF, rG)


def weierstrass_decompose(sys: RegularSystem,
                          tol: Tolerances = DEFAULT_TOLERANCES) -> WeierstrassDecomposition:
    """Nonsingular ``P, Q`` bringing ``(F, G)`` to Weierstrass form.

    ``Jp`` is a Jordan matrix with blocks in :func:`block_order_key` order and
    ``Hq`` a nilpotent Jordan matrix with blocks by decreasing size.  For a
    real pencil, chains of real eigenvalues and of the infinite eigenvalue are
    taken real, so ``P`` and ``Q`` come out real when the finite spectrum is.

    Raises
    ------
    IllConditionedStructure
        Propagated from the Jordan structure of the shift-invert matrix.
    ReconstructionFailure
        If the canonical-form residuals exceed ``residual_abs`` times their
        scales.
    """
    finite, infinite = _shift_invert(sys, tol)
    want_real = sys.is_real and all(
        _snap(a, sys, tol).imag == 0.0 for a, _, _, _ in finite)
    attempts = [True, False] if want_real else [False]
    last = None
    for real in attempts:
        try:
            w = _assemble(sys, finite, infinite, tol, real)
        except ReconstructionFailure as exc:
            last = exc
            continue
        ok, residuals = _acceptable(sys, w, tol)
        if ok:
            return w
        last = ReconstructionFailure(
            f"Weierstrass residuals {residuals[0]:.3g}, {residuals[1]:.3g} exceed tolerance",
            residuals)
    raise last
