"""Dense linear algebra over a prime field F_p.

Matrices are numpy int64 arrays with entries in [0, p). Products of two
reduced entries stay below 2**31 for the primes we accept, so a row update
never overflows before the modular reduction.
"""

from __future__ import annotations

import numpy as np

MAX_PRIME = 46337  # floor(sqrt(2**31)); keeps p*p*cols well inside int64


def as_matrix(a, p: int) -> np.ndarray:
    m = np.array(a, dtype=np.int64)
    if m.ndim == 1:
        m = m.reshape(1, -1) if m.size else m.reshape(0, 0)
    return np.mod(m, p)


def matmul(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """Exact product mod p, chunked so the int64 accumulator cannot overflow."""
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch {a.shape} x {b.shape}")
    inner = a.shape[1]
    step = max(1, (2**62) // (p * p))
    if inner <= step:
        return (a @ b) % p
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    for s in range(0, inner, step):
        out = (out + a[:, s:s + step] @ b[s:s + step]) % p
    return out


def rref(a, p: int, *, copy: bool = True) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form. Returns (R, pivot columns); R keeps only nonzero rows."""
    m = np.array(a, dtype=np.int64, copy=copy) % p
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(m[r:, c])
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            m[[r, i]] = m[[i, r]]
        inv = pow(int(m[r, c]), p - 2, p)
        if inv != 1:
            m[r, c:] = (m[r, c:] * inv) % p
        others = np.flatnonzero(m[:, c])
        others = others[others != r]
        if others.size:
            m[others, c:] = (m[others, c:] - np.outer(m[others, c], m[r, c:])) % p
        pivots.append(c)
        r += 1
    return m[:r], pivots


def rank(a, p: int) -> int:
    m = np.array(a, dtype=np.int64) % p
    if m.size == 0:
        return 0
    rows, cols = m.shape
    # eliminate along the shorter side
    if rows > cols:
        m = m.T.copy()
        rows, cols = cols, rows
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(m[r:, c])
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            m[[r, i]] = m[[i, r]]
        inv = pow(int(m[r, c]), p - 2, p)
        m[r, c:] = (m[r, c:] * inv) % p
        below = r + 1 + np.flatnonzero(m[r + 1:, c])
        if below.size:
            m[below, c:] = (m[below, c:] - np.outer(m[below, c], m[r, c:])) % p
        r += 1
    return r


def nullspace(a, p: int) -> np.ndarray:
    """Basis of {v : A v = 0} as the rows of the returned array."""
    m = np.array(a, dtype=np.int64) % p
    cols = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(cols, dtype=np.int64)
    r, piv = rref(m, p, copy=False)
    pivset = set(piv)
    free = [c for c in range(cols) if c not in pivset]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    if free:
        basis[np.arange(len(free)), free] = 1
        if piv:
            basis[:, piv] = (-r[:, free].T) % p
    return basis


def solve_linear(a, b, p: int) -> np.ndarray | None:
    """Some x with A x = b, or None when the system is inconsistent."""
    m = np.array(a, dtype=np.int64) % p
    bb = np.array(b, dtype=np.int64).reshape(-1) % p
    if m.shape[0] != bb.shape[0]:
        raise ValueError(f"A has {m.shape[0]} rows but b has length {bb.shape[0]}")
    cols = m.shape[1]
    aug = np.concatenate([m, bb.reshape(-1, 1)], axis=1)
    r, piv = rref(aug, p, copy=False)
    if piv and piv[-1] == cols:
        return None
    x = np.zeros(cols, dtype=np.int64)
    for i, c in enumerate(piv):
        x[c] = r[i, cols]
    return x


def row_basis(a, p: int) -> np.ndarray:
    """Reduced basis of the row space."""
    m = np.array(a, dtype=np.int64)
    if m.size == 0:
        return np.zeros((0, m.shape[1] if m.ndim == 2 else 0), dtype=np.int64)
    return rref(m, p)[0]


def inverse(a, p: int) -> np.ndarray | None:
    m = np.array(a, dtype=np.int64) % p
    n = m.shape[0]
    if m.shape != (n, n):
        raise ValueError("inverse of a non-square matrix")
    r, piv = rref(np.concatenate([m, np.eye(n, dtype=np.int64)], axis=1), p, copy=False)
    if len(piv) < n or piv[n - 1] != n - 1:
        return None
    return r[:, n:]


def det_nonzero(a, p: int) -> bool:
    a = np.asarray(a)
    return a.shape[0] == a.shape[1] and rank(a, p) == a.shape[0]


def charpoly(a, p: int) -> list[int]:
    """Characteristic polynomial coefficients, highest degree first (Faddeev-LeVerrier)."""
    m = np.array(a, dtype=np.int64) % p
    n = m.shape[0]
    if n >= p:
        raise ValueError("matrix too large for Faddeev-LeVerrier in this characteristic")
    coeffs = [1]
    mk = np.zeros_like(m)
    ident = np.eye(n, dtype=np.int64)
    c = 1
    for k in range(1, n + 1):
        mk = matmul(m, (mk + c * ident) % p, p)
        c = (-int(np.trace(mk) % p) * pow(k, p - 2, p)) % p
        coeffs.append(c)
    return coeffs


def poly_roots(coeffs: list[int], p: int) -> list[int]:
    """All roots in F_p of a univariate polynomial (highest degree first), by evaluation."""
    xs = np.arange(p, dtype=np.int64)
    acc = np.zeros(p, dtype=np.int64)
    for c in coeffs:
        acc = (acc * xs + c) % p
    return [int(v) for v in np.flatnonzero(acc == 0)]


def matrix_power(a: np.ndarray, k: int, p: int) -> np.ndarray:
    result = np.eye(a.shape[0], dtype=np.int64)
    base = a % p
    while k:
        if k & 1:
            result = matmul(result, base, p)
        base = matmul(base, base, p)
        k >>= 1
    return result
