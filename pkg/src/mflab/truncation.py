"""Finite-dimensional models of modules over R = S/(f) modulo m^L.

A module with generators e_1..e_a and relation columns c_1..c_r is modelled at
level L as the quotient of F_L = (S/m^L)^a by the span of all monomial
multiples of the relation columns. The quotient is represented by the
non-pivot coordinates of the reduced relation matrix; monomials are ordered by
ascending degree so pivots land on lowest-degree terms and the non-pivot
monomials form a local standard basis.
"""

from __future__ import annotations

import os
from collections import OrderedDict
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

from . import linalg
from .poly import Poly, PolyMatrix, RingCtx


class TruncationTooLarge(MemoryError):
    pass


def memory_cap_bytes() -> int:
    return int(os.environ.get("MFLAB_MEMORY_CAP_MB", "2048")) * 2**20


@lru_cache(maxsize=None)
def monomials(nvars: int, L: int) -> tuple[tuple[int, ...], ...]:
    """Exponent vectors of degree < L: ascending degree, descending lex inside a degree."""
    out = []
    for d in range(L):
        level = []
        for combo in combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for k in combo:
                e[k] += 1
            level.append(tuple(e))
        out.extend(sorted(set(level), reverse=True))
    return tuple(out)


@lru_cache(maxsize=None)
def monomial_index(nvars: int, L: int) -> dict:
    return {e: i for i, e in enumerate(monomials(nvars, L))}


@lru_cache(maxsize=32)
def mult_table(nvars: int, L: int) -> np.ndarray:
    """table[a, b] = index of monomial a*b, or -1 when deg(a*b) >= L."""
    mons = np.array(monomials(nvars, L), dtype=np.int64).reshape(-1, nvars)
    M = mons.shape[0]
    est = M * M * (nvars + 4) * 8
    if est > memory_cap_bytes():
        raise TruncationTooLarge(f"monomial table at level {L} needs ~{est >> 20} MB")
    base = L + 1
    weights = base ** np.arange(nvars, dtype=np.int64)
    keys = mons @ weights
    order = np.argsort(keys)
    sorted_keys = keys[order]
    sums = mons[:, None, :] + mons[None, :, :]
    deg = sums.sum(axis=2)
    skeys = sums @ weights
    pos = np.searchsorted(sorted_keys, skeys)
    pos = np.clip(pos, 0, M - 1)
    table = np.where((deg < L) & (sorted_keys[pos] == skeys), order[pos], -1)
    return table.astype(np.int64)


def degrees(nvars: int, L: int) -> np.ndarray:
    return np.array([sum(e) for e in monomials(nvars, L)], dtype=np.int64)


@dataclass(frozen=True)
class Presentation:
    """Module with `ngens` generators and relation columns (each a tuple of ngens polys).

    With add_f the relations f*e_k are added; factorization cokernels do not
    need them since f*G lies in the image of phi.
    """

    ctx: RingCtx
    f: Poly
    ngens: int
    relations: tuple[tuple[Poly, ...], ...]
    add_f: bool = False

    @classmethod
    def of_matrix(cls, f: Poly, mat: PolyMatrix, add_f: bool = False) -> Presentation:
        cols = tuple(tuple(mat[i, j] for i in range(mat.rows)) for j in range(mat.cols))
        return cls(f.ctx, f, mat.rows, cols, add_f)

    def all_relations(self) -> tuple[tuple[Poly, ...], ...]:
        if not self.add_f:
            return self.relations
        z = self.ctx.zero()
        extra = tuple(tuple(self.f if k == j else z for k in range(self.ngens)) for j in range(self.ngens))
        return self.relations + extra


class TruncatedModel:
    """The quotient F_L / relations, with normal forms and polynomial actions."""

    def __init__(self, pres: Presentation, L: int):
        if L < 1:
            raise ValueError("truncation level must be >= 1")
        self.pres = pres
        self.L = L
        ctx = pres.ctx
        self.p = ctx.p
        n = ctx.nvars
        self.nmon = M = len(monomials(n, L))
        self.ngens = a = pres.ngens
        self.dimF = a * M
        table = mult_table(n, L)
        index = monomial_index(n, L)
        degs = degrees(n, L)
        rels = [c for c in pres.all_relations() if any(c)]
        est = max(len(rels) * M, self.dimF) * self.dimF * 8 + M * M * (n + 4) * 8
        if est > memory_cap_bytes():
            raise TruncationTooLarge(f"relation matrix at level {L} needs ~{est >> 20} MB")
        blocks = []
        for col in rels:
            order = min(g.order() for g in col if g)
            shifts = np.flatnonzero(degs + order < L)
            if shifts.size == 0:
                continue
            block = np.zeros((shifts.size, self.dimF), dtype=np.int64)
            for k, g in enumerate(col):
                for e, c in g.terms.items():
                    if sum(e) >= L:
                        continue
                    tgt = table[shifts, index[e]]
                    ok = tgt >= 0
                    block[np.flatnonzero(ok), k * M + tgt[ok]] += c
            blocks.append(block % self.p)
        if blocks:
            rel = np.concatenate(blocks, axis=0)
            rel = rel[np.any(rel != 0, axis=1)]
        else:
            rel = np.zeros((0, self.dimF), dtype=np.int64)
        red, piv = linalg.rref(rel, self.p, copy=False) if rel.shape[0] else (rel, [])
        self.pivots = np.array(piv, dtype=np.int64)
        pivset = set(piv)
        self.basis = np.array([i for i in range(self.dimF) if i not in pivset], dtype=np.int64)
        self.dim = int(self.basis.size)
        # normal form: v -> v[basis] - red[:, basis]^T v[pivots]
        self._red_basis = red[:, self.basis] if len(piv) else np.zeros((0, self.dim), dtype=np.int64)
        self._act_cache: dict[Poly, np.ndarray] = {}

    # coordinates ---------------------------------------------------------
    def basis_labels(self) -> list[tuple[int, tuple[int, ...]]]:
        mons = monomials(self.pres.ctx.nvars, self.L)
        return [(int(i) // self.nmon, mons[int(i) % self.nmon]) for i in self.basis]

    def normal_form(self, V: np.ndarray) -> np.ndarray:
        """Normal form of the columns of V (dimF x k) as quotient coordinates (dim x k)."""
        V = np.asarray(V, dtype=np.int64)
        out = V[self.basis]
        if self.pivots.size:
            out = (out - linalg.matmul(self._red_basis.T, V[self.pivots] % self.p, self.p)) % self.p
        return out % self.p

    def lift(self, Q: np.ndarray) -> np.ndarray:
        """Embed quotient coordinates (dim x k) into F_L (dimF x k)."""
        Q = np.asarray(Q, dtype=np.int64)
        out = np.zeros((self.dimF,) + Q.shape[1:], dtype=np.int64)
        out[self.basis] = Q
        return out

    def generator(self, k: int) -> np.ndarray:
        e = np.zeros((self.dimF, 1), dtype=np.int64)
        e[k * self.nmon, 0] = 1
        return self.normal_form(e)[:, 0]

    # actions -------------------------------------------------------------
    def act(self, g: Poly) -> np.ndarray:
        """Matrix of multiplication by g on the quotient."""
        hit = self._act_cache.get(g)
        if hit is not None:
            return hit
        n = self.pres.ctx.nvars
        table = mult_table(n, self.L)
        index = monomial_index(n, self.L)
        comp = self.basis // self.nmon
        mono = self.basis % self.nmon
        S = np.zeros((self.dimF, self.dim), dtype=np.int64)
        cols = np.arange(self.dim)
        for e, c in g.terms.items():
            if sum(e) >= self.L:
                continue
            tgt = table[mono, index[e]]
            ok = tgt >= 0
            np.add.at(S, (comp[ok] * self.nmon + tgt[ok], cols[ok]), c)
        out = self.normal_form(S % self.p)
        self._act_cache[g] = out
        return out

    def act_matrix(self, P: PolyMatrix) -> np.ndarray:
        """Block operator of P acting on column vectors of module elements: Q^cols -> Q^rows."""
        d = self.dim
        out = np.zeros((P.rows * d, P.cols * d), dtype=np.int64)
        for i in range(P.rows):
            for j in range(P.cols):
                if P[i, j]:
                    out[i * d:(i + 1) * d, j * d:(j + 1) * d] = self.act(P[i, j])
        return out

    def projection_to(self, low: TruncatedModel) -> np.ndarray:
        """Matrix of the natural surjection from this level onto a lower level."""
        if low.pres != self.pres or low.L > self.L:
            raise ValueError("projection needs the same presentation at a lower level")
        comp = self.basis // self.nmon
        mono = self.basis % self.nmon
        keep = mono < low.nmon
        E = np.zeros((low.dimF, self.dim), dtype=np.int64)
        E[comp[keep] * low.nmon + mono[keep], np.flatnonzero(keep)] = 1
        return low.normal_form(E)

    def times_poly_vector(self, coeffs: Sequence[np.ndarray], vecs: Sequence[np.ndarray]) -> np.ndarray:
        """sum_j c_j * w_j where c_j are polynomials given by monomial coefficient vectors
        (length >= nmon is truncated) and w_j are quotient vectors of this model."""
        table = mult_table(self.pres.ctx.nvars, self.L)
        M = self.nmon
        acc = np.zeros(self.dimF, dtype=np.int64)
        for c, w in zip(coeffs, vecs):
            c = np.asarray(c[:M], dtype=np.int64) % self.p
            if not c.any():
                continue
            W = self.lift(np.asarray(w).reshape(-1, 1))[:, 0]
            a_idx = np.flatnonzero(c)
            for k in range(self.ngens):
                wk = W[k * M:(k + 1) * M]
                b_idx = np.flatnonzero(wk)
                if b_idx.size == 0:
                    continue
                tgt = table[np.ix_(a_idx, b_idx)]
                vals = np.outer(c[a_idx], wk[b_idx]) % self.p
                ok = tgt >= 0
                np.add.at(acc, k * M + tgt[ok], vals[ok])
        return self.normal_form((acc % self.p).reshape(-1, 1))[:, 0]

    def coefficient_polys(self, q: np.ndarray) -> list[np.ndarray]:
        """Lift a quotient vector to F_L and split it into per-generator monomial coefficient vectors."""
        W = self.lift(np.asarray(q).reshape(-1, 1))[:, 0]
        return [W[k * self.nmon:(k + 1) * self.nmon] for k in range(self.ngens)]


_MODEL_CACHE: OrderedDict = OrderedDict()
_MODEL_CACHE_SIZE = 96


def model(pres: Presentation, L: int) -> TruncatedModel:
    key = (pres, L)
    hit = _MODEL_CACHE.get(key)
    if hit is not None:
        _MODEL_CACHE.move_to_end(key)
        return hit
    m = TruncatedModel(pres, L)
    _MODEL_CACHE[key] = m
    if len(_MODEL_CACHE) > _MODEL_CACHE_SIZE:
        _MODEL_CACHE.popitem(last=False)
    return m


def clear_cache():
    _MODEL_CACHE.clear()


@dataclass(frozen=True)
class TruncationBasis:
    ctx: RingCtx
    f: Poly
    D: int
    monomials: tuple[tuple[int, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.monomials)

    def labels(self) -> list[str]:
        from .poly import _monomial_text

        return [_monomial_text(self.ctx, e) or "1" for e in self.monomials]


def truncation_basis(ctx: RingCtx, f: Poly, D: int) -> TruncationBasis:
    """Monomial basis of S/((f) + m^D)."""
    if f.is_zero() or f.constant_term():
        raise ValueError("f must be nonzero with zero constant term")
    if D < 2:
        raise ValueError("truncation order must be >= 2")
    pres = Presentation(ctx, f, 1, ((f,),))
    mdl = model(pres, D)
    return TruncationBasis(ctx, f, D, tuple(e for _, e in mdl.basis_labels()))


def kernel_gap(D: int) -> int:
    """Extra levels used when computing kernels; their image at level D is free of boundary effects."""
    return D // 2 + 2


def projected_kernel(op_hi: np.ndarray, proj: np.ndarray, blocks: int, p: int) -> np.ndarray:
    """Rows spanning the image at level D of the kernel of op_hi, projected blockwise."""
    K = linalg.nullspace(op_hi, p)
    if K.shape[0] == 0:
        return np.zeros((0, blocks * proj.shape[0]), dtype=np.int64)
    d_hi = proj.shape[1]
    parts = [linalg.matmul(K[:, b * d_hi:(b + 1) * d_hi], proj.T, p) for b in range(blocks)]
    return np.concatenate(parts, axis=1)
