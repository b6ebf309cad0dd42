"""Endomorphism rings and resolutions by add(M)-approximations.

Given M with a free summand and a module N, pick maps f_1..f_n: M -> N whose
classes span Hom(M, N)/m Hom(M, N), always including the maps R -> N that hit
the generators of N. The sum M^n -> N is onto and stays onto after Hom(M, -);
its kernel is the next term. The kernel is read off the mapping cone of the
chain map, which is again a matrix factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .hom import (
    DEFAULT_SCHEDULE,
    ChainMap,
    HomSpace,
    ModuleLike,
    PresentedModule,
    as_mf,
    chain_maps,
    check_same_ring,
    compose,
    ext_periodic,
    hom_space,
    m_times,
    truncate_map,
)
from .mf import MatrixFactorization, blocks, dual, is_free_block, minimalize, require_valid
from .modules import _jsonable, add_membership, default_degree, minimal
from .poly import PolyMatrix

MAX_RESOLUTION_DEPTH = 8


@dataclass
class EndRing:
    M: PresentedModule
    space: HomSpace
    mult_table: np.ndarray  # (k, k, k): basis_i * basis_j = sum_l table[i, j, l] basis_l  (i after j)
    identity: np.ndarray

    @property
    def basis(self) -> np.ndarray:
        return self.space.basis

    @property
    def dim(self) -> int:
        return self.space.dim

    def coords(self, row: np.ndarray) -> np.ndarray | None:
        return linalg.solve_linear(self.basis.T, row.reshape(-1, 1), self.M.ctx.p)

    def multiply(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Coordinates of u o v."""
        p = self.M.ctx.p
        return np.einsum("i,j,ijl->l", u, v, self.mult_table) % p

    def is_idempotent(self, e: np.ndarray) -> bool:
        return bool(np.array_equal(self.multiply(e, e), e % self.M.ctx.p))


def identity_row(M: PresentedModule, space: HomSpace) -> np.ndarray:
    mdl = space.target_model
    return np.concatenate([mdl.generator(k) for k in range(M.mf.size)])


def end_ring(M: PresentedModule) -> EndRing:
    p = M.ctx.p
    space = hom_space(M, M)
    k = space.dim
    table = np.zeros((k, k, k), dtype=np.int64)
    for i in range(k):
        for j in range(k):
            prod = compose(space, space.basis[j], space, space.basis[i])
            c = linalg.solve_linear(space.basis.T, prod.reshape(-1, 1), p)
            if c is None:
                raise ArithmeticError("truncated endomorphisms are not closed under composition")
            table[i, j] = c.reshape(-1)
    ident = linalg.solve_linear(space.basis.T, identity_row(M, space).reshape(-1, 1), p)
    if ident is None:
        raise ArithmeticError("identity map missing from the truncated endomorphisms")
    return EndRing(M, space, table, ident.reshape(-1))


def block_idempotents(E: EndRing) -> list[np.ndarray]:
    """Coordinates of the projections onto the block summands of M's factorization."""
    out = []
    mdl = E.space.target_model
    d = mdl.dim
    for rows, _ in blocks(E.M.mf):
        row = np.zeros(E.M.mf.size * d, dtype=np.int64)
        for r in rows:
            row[r * d:(r + 1) * d] = mdl.generator(r)
        c = E.coords(row)
        if c is not None:
            out.append(c.reshape(-1))
    return out


# -- approximation resolutions ---------------------------------------------

def complete_chain_map(a: PolyMatrix, X: MatrixFactorization, Y: MatrixFactorization) -> ChainMap:
    """Given a with a*phi_X in the image of phi_Y, return (a, b) with b = psi_Y a phi_X / f."""
    f = X.f
    prod = Y.psi @ a @ X.phi
    b = prod.map(lambda g: g.divide_exact(f))
    if a @ X.phi != Y.phi @ b:
        raise ArithmeticError("a does not define a morphism of cokernels")
    return ChainMap(a, b)


def free_rows(m: MatrixFactorization) -> list[int]:
    """Generator indices of the free (R) blocks of a factorization."""
    out = []
    for rows, cols in blocks(m):
        if len(rows) == 1 and len(cols) == 1:
            part = MatrixFactorization(m.f, m.phi.submatrix(rows, cols), m.psi.submatrix(cols, rows))
            if is_free_block(part):
                out.append(rows[0])
    return out


def kernel_mf(X: MatrixFactorization, Y: MatrixFactorization, cm: ChainMap) -> MatrixFactorization | None:
    """Kernel of an onto map coker(phi_X) -> coker(phi_Y), up to free summands."""
    Phi = PolyMatrix.block([[Y.psi, cm.b], [PolyMatrix.zeros(X.ctx, X.size, Y.size), X.phi.scale(-1)]])
    Psi = PolyMatrix.block([[Y.phi, cm.a], [PolyMatrix.zeros(X.ctx, X.size, Y.size), X.psi.scale(-1)]])
    cone = require_valid(MatrixFactorization(X.f, Phi, Psi))
    return minimalize(cone, strip_free=True)


def hstack(mats: Sequence[PolyMatrix]) -> PolyMatrix:
    return PolyMatrix.block([list(mats)])


def approximation(M: MatrixFactorization, N: MatrixFactorization, D: int, degree: int | None = None):
    """Generators of Hom(M, N) spanning Hom/mHom at truncation D, unit maps R -> N first."""
    ctx = M.ctx
    p = ctx.p
    units = []
    for r in free_rows(M):
        for j in range(N.size):
            a = PolyMatrix(ctx, [[ctx.one() if (i, k) == (j, r) else ctx.zero() for k in range(M.size)]
                                 for i in range(N.size)])
            units.append(complete_chain_map(a, M, N))
    space = hom_space(PresentedModule(M, D), PresentedModule(N, D))
    span = m_times(space)
    chosen = []
    r0 = linalg.rank(span, p) if span.size else 0

    def try_add(cm, force=False):
        nonlocal span, r0
        row = truncate_map(space, cm).reshape(1, -1)
        new = np.concatenate([span, row]) if span.size else row
        r = linalg.rank(new, p)
        if r > r0 or force:
            chosen.append(cm)
            span, r0 = new, r
        return r0 >= space.dim

    done = space.dim == 0
    for cm in units:
        done = try_add(cm, force=True)
    if not done:
        d = degree if degree is not None else default_degree(M, N)
        for cm in chain_maps(M, N, d):
            if try_add(cm):
                done = True
                break
    return chosen, {"hom_dim": space.dim, "spanned": int(r0), "spans_mod_m": bool(r0 >= space.dim),
                    "units": len(units), "generators": len(chosen)}


@dataclass
class ApproxStep:
    index: int
    module: MatrixFactorization | None
    membership: str
    n: int = 0
    certificate: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return _jsonable({"index": self.index, "mu": 0 if self.module is None else self.module.size,
                          "module": None if self.module is None else self.module.to_json(),
                          "membership": self.membership, "n": self.n, "certificate": self.certificate})


@dataclass
class ApproxResolution:
    steps: list[ApproxStep]
    terminated: bool
    flags: list[str] = field(default_factory=list)

    @property
    def length(self) -> int | None:
        return len(self.steps) - 1 if self.terminated else None

    def to_json(self) -> dict:
        return {"steps": [s.to_json() for s in self.steps], "terminated": self.terminated,
                "length": self.length, "flags": self.flags}


class ResolutionError(ValueError):
    pass


def construction_resolution(M: ModuleLike, N: ModuleLike, depth: int = MAX_RESOLUTION_DEPTH, D: int = 6,
                            seed: int = 0, degree: int | None = None) -> ApproxResolution:
    check_same_ring(M, N)
    if not 0 <= depth <= MAX_RESOLUTION_DEPTH:
        raise ResolutionError(f"depth must lie in 0..{MAX_RESOLUTION_DEPTH}")
    m = minimal(M)
    if m is None or not free_rows(m):
        raise ResolutionError("M needs R as a direct summand")
    cur = minimal(N)
    steps, flags = [], []
    for i in range(depth + 1):
        mem = "member" if cur is None else add_membership(cur, m, seed=seed).verdict
        step = ApproxStep(i, cur, mem)
        steps.append(step)
        if mem == "member":
            return ApproxResolution(steps, True, flags)
        if mem == "inconclusive":
            flags.append(f"step {i}: membership inconclusive")
        if i == depth:
            break
        gens, cert = approximation(m, cur, D, degree)
        if not cert["spans_mod_m"]:
            flags.append(f"step {i}: generators do not span Hom modulo m at the truncation")
        n = len(gens)
        X = MatrixFactorization(m.f, PolyMatrix.block_diag([m.phi] * n), PolyMatrix.block_diag([m.psi] * n))
        total = ChainMap(hstack([g.a for g in gens]), hstack([g.b for g in gens]))
        step.n = n
        step.certificate = cert
        cur = kernel_mf(X, cur, total)
    flags.append("depth exhausted")
    return ApproxResolution(steps, False, flags)


def pd_probe(M: ModuleLike, N: ModuleLike, depth: int = 6, D: int = 6, seed: int = 0) -> dict:
    res = construction_resolution(M, N, depth, D, seed)
    pd = res.length if res.terminated else f"> {depth}"
    return {"pd": pd, "resolution": res.to_json()}


# -- duality and perpendicular categories ---------------------------------------

def ext_duality_check(M: ModuleLike, N: ModuleLike, schedule=DEFAULT_SCHEDULE) -> dict:
    """Ext^1(M, N) against Ext^1(N*, M*)."""
    m, n = as_mf(M), as_mf(N)
    lhs = ext_periodic(m, n, 1, schedule)
    rhs = ext_periodic(dual(n), dual(m), 1, schedule)
    if not (lhs.stable and rhs.stable):
        verdict = "unstable"
    else:
        verdict = "pass" if lhs.stable_dim == rhs.stable_dim else "fail"
    return {"verdict": verdict, "lhs": lhs.to_json(), "rhs": rhs.to_json()}


def perp_catalog(M: ModuleLike, catalog: Sequence[tuple[str, MatrixFactorization]], n: int = 1,
                 schedule=DEFAULT_SCHEDULE) -> dict:
    """Catalog members X with Ext^i(M, X) = 0 for 1 <= i <= n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    members, unstable, dims = [], [], {}
    for label, X in catalog:
        res = [ext_periodic(M, X, i, schedule) for i in range(1, n + 1)]
        dims[label] = [r.stable_dim for r in res]
        if any(not r.stable for r in res):
            unstable.append(label)
        elif all(r.stable_dim == 0 for r in res):
            members.append(label)
    return {"members": members, "unstable": unstable, "dims": dims}
