"""Pencils with planted Weierstrass structure, used as round-trip oracles."""

from dataclasses import dataclass

import numpy as np

from descsys.numerics import jordan_matrix

# distinct values are at least 0.1 apart
REAL_POOL = (-1.4, -0.9, -0.6, -0.3, 0.0, 0.2, 0.5, 0.8, 1.2)
COMPLEX_POOL = (0.3 + 0.4j, -0.5 + 0.5j, 0.1 - 0.7j)


@dataclass
class Planted:
    F: np.ndarray
    G: np.ndarray
    finite: list       # [(eigenvalue, block size)]
    infinite: list     # [block size]
    P0: np.ndarray
    Q0: np.ndarray

    @property
    def p(self):
        return sum(k for _, k in self.finite)

    @property
    def q(self):
        return sum(self.infinite)

    @property
    def nilpotency_index(self):
        return max(self.infinite, default=0)


def random_nonsingular(rng, m, complex_=False, max_cond=1e3):
    while True:
        A = rng.standard_normal((m, m))
        if complex_:
            A = A + 1j * rng.standard_normal((m, m))
        if np.linalg.cond(A) <= max_cond:
            return A


def build(finite, infinite, rng, complex_=None):
    """``F = P0^-1 diag(I, H) Q0^-1`` and ``G = P0^-1 diag(J, I) Q0^-1``."""
    p = sum(k for _, k in finite)
    q = sum(infinite)
    m = p + q
    J = jordan_matrix([a for a, _ in finite], [k for _, k in finite])
    H = jordan_matrix([0.0] * len(infinite), list(infinite))
    A = np.zeros((m, m), dtype=complex)
    B = np.zeros((m, m), dtype=complex)
    A[:p, :p] = np.eye(p)
    A[p:, p:] = H
    B[:p, :p] = J
    B[p:, p:] = np.eye(q)
    if complex_ is None:
        complex_ = bool(np.any(np.imag([a for a, _ in finite])))
    P0 = random_nonsingular(rng, m, complex_)
    Q0 = random_nonsingular(rng, m, complex_)
    Pi, Qi = np.linalg.inv(P0), np.linalg.inv(Q0)
    F = Pi @ A @ Qi
    G = Pi @ B @ Qi
    if not complex_:
        F, G = F.real, G.real
    return Planted(F, G, list(finite), list(infinite), P0, Q0)


def partition(rng, n, max_part=3):
    parts = []
    while n > 0:
        k = int(rng.integers(1, min(n, max_part) + 1))
        parts.append(k)
        n -= k
    return parts


def random_planted(rng, m_max=8, pool=None):
    m = int(rng.integers(1, m_max + 1))
    q = int(rng.integers(0, m + 1))
    p = m - q
    use_complex = rng.random() < 0.3
    if pool is None:
        pool = REAL_POOL + (COMPLEX_POOL if use_complex else ())
    finite = [(pool[int(rng.integers(len(pool)))], k) for k in partition(rng, p)]
    infinite = partition(rng, q)
    return build(finite, infinite, rng, complex_=use_complex or None)


def match_blocks(got, want, tol=1e-6):
    """Multiset equality of ``(eigenvalue, size)`` pairs, eigenvalues within ``tol``."""
    want = list(want)
    for a, k in got:
        for i, (b, l) in enumerate(want):
            if k == l and abs(a - b) <= tol:
                want.pop(i)
                break
        else:
            return False
    return not want
