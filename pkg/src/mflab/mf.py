"""Matrix factorizations of a hypersurface equation and the operations on them."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from . import linalg
from .parser import parse_factored
from .poly import Poly, PolyMatrix, RingCtx, linear_part, mat_mul


class InvalidFactorization(ValueError):
    pass


@dataclass(frozen=True)
class MFVerdict:
    valid: bool
    product: str | None = None  # "phi*psi" or "psi*phi"
    entry: tuple[int, int] | None = None
    expected: str | None = None
    found: str | None = None

    def __bool__(self):
        return self.valid

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True, eq=True)
class MatrixFactorization:
    """A pair (phi, psi) of square matrices with phi*psi = psi*phi = f*I.

    The module it stands for is coker(phi) over R = S/(f).
    """

    f: Poly
    phi: PolyMatrix
    psi: PolyMatrix

    def __post_init__(self):
        if self.f.is_zero():
            raise InvalidFactorization("f must be nonzero")
        n = self.phi.rows
        if n < 1 or self.phi.shape != (n, n) or self.psi.shape != (n, n):
            raise InvalidFactorization(f"phi {self.phi.shape} and psi {self.psi.shape} must be square of equal size")
        if self.phi.ctx != self.f.ctx or self.psi.ctx != self.f.ctx:
            raise InvalidFactorization("phi, psi and f must share a ring")

    @property
    def ctx(self) -> RingCtx:
        return self.f.ctx

    @property
    def size(self) -> int:
        return self.phi.rows

    @classmethod
    def from_text(cls, ctx: RingCtx, f: str, phi, psi) -> MatrixFactorization:
        return cls(ctx.parse(f), PolyMatrix.from_text(ctx, phi), PolyMatrix.from_text(ctx, psi))

    def to_json(self) -> dict:
        return {
            "vars": list(self.ctx.vars),
            "p": self.ctx.p,
            "f": str(self.f),
            "size": self.size,
            "phi": self.phi.to_text(),
            "psi": self.psi.to_text(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> MatrixFactorization:
        ctx = RingCtx(tuple(doc["vars"]), int(doc["p"]))
        m = cls.from_text(ctx, doc["f"], doc["phi"], doc["psi"])
        if "size" in doc and int(doc["size"]) != m.size:
            raise InvalidFactorization(f"size field {doc['size']} disagrees with matrices of size {m.size}")
        return m

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def __repr__(self):
        return f"MF(f={self.f}, phi={self.phi.to_text()}, psi={self.psi.to_text()})"


def validate_mf(m: MatrixFactorization) -> MFVerdict:
    n = m.size
    target = PolyMatrix.scalar(m.ctx, n, m.f)
    for name, prod in (("phi*psi", mat_mul(m.phi, m.psi)), ("psi*phi", mat_mul(m.psi, m.phi))):
        for i in range(n):
            for j in range(n):
                if prod[i, j] != target[i, j]:
                    return MFVerdict(False, name, (i, j), str(target[i, j]), str(prod[i, j]))
    return MFVerdict(True)


_VALID_CACHE: dict[MatrixFactorization, bool] = {}


def require_valid(m: MatrixFactorization) -> MatrixFactorization:
    ok = _VALID_CACHE.get(m)
    if ok is None:
        verdict = validate_mf(m)
        ok = verdict.valid
        _VALID_CACHE[m] = ok
        if not ok:
            raise InvalidFactorization(f"not a matrix factorization: {verdict.as_dict()}")
    if not ok:
        raise InvalidFactorization("not a matrix factorization")
    return m


def trivial(f: Poly, n: int = 1) -> MatrixFactorization:
    """(f*I, I): cokernel is the free module R^n."""
    return MatrixFactorization(f, PolyMatrix.scalar(f.ctx, n, f), PolyMatrix.identity(f.ctx, n))


def syzygy(m: MatrixFactorization) -> MatrixFactorization:
    require_valid(m)
    return MatrixFactorization(m.f, m.psi, m.phi)


def dual(m: MatrixFactorization) -> MatrixFactorization:
    require_valid(m)
    return MatrixFactorization(m.f, m.phi.T, m.psi.T)


def direct_sum(*ms: MatrixFactorization) -> MatrixFactorization:
    if not ms:
        raise ValueError("direct sum of nothing")
    f = ms[0].f
    for m in ms:
        require_valid(m)
        if m.f != f:
            raise InvalidFactorization(f"cannot add factorizations of {f} and {m.f}")
    if len(ms) == 1:
        return ms[0]
    return MatrixFactorization(f, PolyMatrix.block_diag([m.phi for m in ms]),
                               PolyMatrix.block_diag([m.psi for m in ms]))


def knoerrer(m: MatrixFactorization, u: str = "u", v: str = "v") -> MatrixFactorization:
    """Lift an MF of f to the MF of f + u*v with blocks ([u, psi; phi, -v], [v, psi; phi, -u])."""
    require_valid(m)
    ctx2 = m.ctx.extend(u, v)
    n = m.size
    uu, vv = ctx2.var(u), ctx2.var(v)
    phi, psi = m.phi.embed(ctx2), m.psi.embed(ctx2)
    U = PolyMatrix.scalar(ctx2, n, uu)
    V = PolyMatrix.scalar(ctx2, n, vv)
    big_phi = PolyMatrix.block([[U, psi], [phi, -V]])
    big_psi = PolyMatrix.block([[V, psi], [phi, -U]])
    return MatrixFactorization(m.f.embed(ctx2) + uu * vv, big_phi, big_psi)


@dataclass(frozen=True)
class FactoredEquation:
    ctx: RingCtx
    factors: tuple[Poly, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("an equation needs at least one factor")
        for i, g in enumerate(self.factors, 1):
            if g.ctx != self.ctx:
                raise ValueError(f"factor {i} lives in another ring")
            if g.is_zero():
                raise ValueError(f"factor {i} is zero")
            if g.constant_term():
                raise ValueError(f"factor {i} = {g} has a nonzero constant term")
        for (i, a), (j, b) in combinations(enumerate(self.factors, 1), 2):
            if a.is_scalar_multiple_of(b):
                raise ValueError(f"factors {i} and {j} are proportional; the ring would not be reduced")

    @classmethod
    def from_text(cls, src: str, ctx: RingCtx) -> FactoredEquation:
        return cls(ctx, tuple(parse_factored(src, ctx)))

    @property
    def n(self) -> int:
        return len(self.factors)

    @property
    def f(self) -> Poly:
        return product(self.ctx, self.factors)

    def f_of(self, subset) -> Poly:
        return product(self.ctx, [self.factors[i - 1] for i in sorted(subset)])

    def text(self) -> str:
        return " * ".join(f"({g})" if len(g.terms) > 1 else str(g) for g in self.factors)


def product(ctx: RingCtx, polys) -> Poly:
    acc = ctx.one()
    for g in polys:
        acc = acc * g
    return acc


@dataclass(frozen=True)
class SubsetModuleSpec:
    eq: FactoredEquation
    I: frozenset

    def __post_init__(self):
        object.__setattr__(self, "I", frozenset(self.I))
        if not self.I:
            raise ValueError("the subset I must be nonempty")
        bad = [i for i in self.I if not 1 <= i <= self.eq.n]
        if bad:
            raise ValueError(f"indices {bad} are outside 1..{self.eq.n}")


def s_ideal(spec: SubsetModuleSpec | FactoredEquation, I=None) -> MatrixFactorization:
    """The 1x1 factorization (f_I, f_{I^c}); coker is S_I = S/(f_I)."""
    if isinstance(spec, FactoredEquation):
        spec = SubsetModuleSpec(spec, frozenset(I))
    eq = spec.eq
    comp = set(range(1, eq.n + 1)) - spec.I
    a = eq.f_of(spec.I)
    b = eq.f_of(comp)
    return MatrixFactorization(eq.f, PolyMatrix(eq.ctx, [[a]]), PolyMatrix(eq.ctx, [[b]]))


def all_subsets(n: int) -> list[frozenset]:
    """Nonempty subsets of {1..n} ordered by size, then lexicographically."""
    out = []
    for k in range(1, n + 1):
        out.extend(frozenset(c) for c in combinations(range(1, n + 1), k))
    return out


def subset_label(I) -> str:
    return "S{" + ",".join(str(i) for i in sorted(I)) + "}"


class CocycleError(ValueError):
    pass


def extension_from_cocycle(n: MatrixFactorization, m: MatrixFactorization,
                           alpha: PolyMatrix, beta: PolyMatrix) -> MatrixFactorization:
    """Extension 0 -> coker(phi_n) -> E -> coker(phi_m) -> 0 from a cocycle (alpha, beta).

    The cocycle condition is phi_n*beta + alpha*psi_m = 0 and psi_n*alpha + beta*phi_m = 0.
    """
    require_valid(n)
    require_valid(m)
    if n.f != m.f:
        raise InvalidFactorization("extension of factorizations of different equations")
    if alpha.shape != (n.size, m.size) or beta.shape != (n.size, m.size):
        raise CocycleError(f"cocycle must have shape {(n.size, m.size)}")
    if not (mat_mul(n.phi, beta) + mat_mul(alpha, m.psi)).is_zero():
        raise CocycleError("phi_n*beta + alpha*psi_m != 0")
    if not (mat_mul(n.psi, alpha) + mat_mul(beta, m.phi)).is_zero():
        raise CocycleError("psi_n*alpha + beta*phi_m != 0")
    ctx = n.ctx
    z = PolyMatrix.zeros(ctx, m.size, n.size)
    phi = PolyMatrix.block([[n.phi, alpha], [z, m.phi]])
    psi = PolyMatrix.block([[n.psi, beta], [z, m.psi]])
    return MatrixFactorization(n.f, phi, psi)


def coboundary(n: MatrixFactorization, m: MatrixFactorization, h: PolyMatrix, k: PolyMatrix):
    """The trivial cocycle (phi_n h + k phi_m, -(psi_n k + h psi_m))."""
    alpha = mat_mul(n.phi, h) + mat_mul(k, m.phi)
    beta = -(mat_mul(n.psi, k) + mat_mul(h, m.psi))
    return alpha, beta


# -- structure helpers ------------------------------------------------------

def blocks(m: MatrixFactorization) -> list[tuple[list[int], list[int]]]:
    """Connected blocks of the support graph: pairs (target rows, source columns) of phi."""
    n = m.size
    parent = list(range(2 * n))  # 0..n-1: G indices, n..2n-1: F indices

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for i in range(n):
        for j in range(n):
            if m.phi[i, j]:
                union(i, n + j)
            if m.psi[j, i]:
                union(i, n + j)
    groups: dict[int, tuple[list[int], list[int]]] = {}
    for a in range(2 * n):
        g = groups.setdefault(find(a), ([], []))
        (g[0] if a < n else g[1]).append(a if a < n else a - n)
    return sorted(groups.values(), key=lambda g: (min(g[0] + [2 * n]), min(g[1] + [2 * n])))


def split_blocks(m: MatrixFactorization) -> list[MatrixFactorization]:
    """Split a block-diagonal factorization into its square blocks (when all blocks are square)."""
    parts = blocks(m)
    if any(len(r) != len(c) or not r for r, c in parts):
        return [m]
    return [MatrixFactorization(m.f, m.phi.submatrix(r, c), m.psi.submatrix(c, r)) for r, c in parts]


def is_free_block(m: MatrixFactorization) -> bool:
    """True for a 1x1 factorization (c*f, 1/c): coker is R."""
    return m.size == 1 and m.psi[0, 0].is_constant() and not m.psi[0, 0].is_zero()


def minimalize(m: MatrixFactorization, strip_free: bool = False) -> MatrixFactorization | None:
    """Remove trivial summands split off by nonzero constant entries.

    Constants in phi split off (1, f) summands, whose cokernel is zero; with
    strip_free, constants in psi split off free summands R as well. Returns
    None when nothing is left.
    """
    require_valid(m)
    ctx = m.ctx
    p = ctx.p
    phi = [list(r) for r in m.phi.entries]
    psi = [list(r) for r in m.psi.entries]

    def find_const(a):
        for i, row in enumerate(a):
            for j, x in enumerate(row):
                if x and x.is_constant():
                    return i, j
        return None

    def eliminate(a, b, r, s):
        # a' = P a Q, b' = Q^-1 b P^-1 ; pivot a[r][s] is a nonzero constant
        inv = pow(a[r][s].constant_term(), p - 2, p)
        for i in range(len(a)):
            if i != r and a[i][s]:
                t = a[i][s].scale(inv)
                a[i] = [x - t * y for x, y in zip(a[i], a[r])]
                for row in b:
                    row[r] = row[r] + t * row[i]
        for j in range(len(a)):
            if j != s and a[r][j]:
                t = a[r][j].scale(inv)
                for row in a:
                    row[j] = row[j] - t * row[s]
                b[s] = [x + t * y for x, y in zip(b[s], b[j])]
        a2 = [[x for jj, x in enumerate(row) if jj != s] for ii, row in enumerate(a) if ii != r]
        b2 = [[x for jj, x in enumerate(row) if jj != r] for ii, row in enumerate(b) if ii != s]
        return a2, b2

    while phi:
        hit = find_const(phi)
        if hit is not None:
            phi, psi = eliminate(phi, psi, *hit)
            continue
        if strip_free:
            hit = find_const(psi)
            if hit is not None:
                psi, phi = eliminate(psi, phi, *hit)
                continue
        break
    if not phi:
        return None
    out = MatrixFactorization(m.f, PolyMatrix(ctx, phi), PolyMatrix(ctx, psi))
    require_valid(out)
    return out


# -- rank vectors -----------------------------------------------------------

class InsufficientPoints(RuntimeError):
    def __init__(self, factor_index: int, found: int, wanted: int):
        self.factor_index = factor_index
        super().__init__(f"factor {factor_index}: found {found} smooth points, wanted {wanted}")


def smooth_points(eq: FactoredEquation, i: int, count: int, rng: np.random.Generator,
                  max_trials: int = 400) -> list[tuple[int, ...]]:
    """F_p-points on V(f_i) that are smooth on V(f_i) and off every other component."""
    ctx = eq.ctx
    p = ctx.p
    g = eq.factors[i]
    others = [h for k, h in enumerate(eq.factors) if k != i]
    grads = [g.diff(v) for v in ctx.vars]
    solve_vars = [k for k, v in enumerate(ctx.vars) if g.diff(v)]
    if not solve_vars:
        return []
    pts: list[tuple[int, ...]] = []
    seen = set()
    allvals = np.arange(p, dtype=np.int64)
    for trial in range(max_trials):
        j = solve_vars[trial % len(solve_vars)]
        base = rng.integers(0, p, size=ctx.nvars)
        grid = np.tile(base, (p, 1))
        grid[:, j] = allvals
        roots = np.flatnonzero(g.evaluate_many(grid) == 0)
        for r in roots[:3]:
            pt = tuple(int(v) for v in grid[r])
            if pt in seen:
                continue
            if any(h.evaluate(pt) == 0 for h in others):
                continue
            if all(d.evaluate(pt) == 0 for d in grads):
                continue
            seen.add(pt)
            pts.append(pt)
            if len(pts) >= count:
                return pts
    return pts


def rank_vector(m: MatrixFactorization, eq: FactoredEquation, samples: int = 5, seed: int = 0) -> list[int]:
    """Rank of coker(phi) on each component V(f_i), by majority vote over sampled smooth points."""
    require_valid(m)
    if m.ctx != eq.ctx:
        raise ValueError("factorization and equation live in different rings")
    if m.f != eq.f:
        raise ValueError("factorization is not of the product of the equation factors")
    rng = np.random.default_rng(seed)
    ranks = []
    for i in range(eq.n):
        pts = smooth_points(eq, i, samples, rng)
        if len(pts) < samples:
            raise InsufficientPoints(i + 1, len(pts), samples)
        votes = Counter(m.size - linalg.rank(m.phi.evaluate(pt), eq.ctx.p) for pt in pts)
        ranks.append(votes.most_common(1)[0][0])
    return ranks


# -- random factorizations ----------------------------------------------------

def random_mf(eq: FactoredEquation, size: int, rng: np.random.Generator, ops: int = 4,
              max_degree: int = 1) -> MatrixFactorization:
    """A random valid factorization of eq.f: a diagonal sum of (f_I, f_{I^c}) blocks
    scrambled by random elementary row and column operations with polynomial multipliers."""
    ctx = eq.ctx
    p = ctx.p
    idx = list(range(1, eq.n + 1))
    diag_phi, diag_psi = [], []
    for _ in range(size):
        I = {i for i in idx if rng.random() < 0.5}
        diag_phi.append(eq.f_of(I))
        diag_psi.append(eq.f_of(set(idx) - I))
    z = ctx.zero()
    phi = [[diag_phi[i] if i == j else z for j in range(size)] for i in range(size)]
    psi = [[diag_psi[i] if i == j else z for j in range(size)] for i in range(size)]
    mons = [e for e in _exponents(ctx.nvars, max_degree)]
    for _ in range(ops if size > 1 else 0):
        i, j = rng.choice(size, 2, replace=False)
        g = Poly(ctx, {mons[int(k)]: int(rng.integers(1, p)) for k in rng.choice(len(mons), 2)})
        if rng.random() < 0.5:
            # rows of phi: R_i += g R_j ; columns of psi: C_j -= g C_i
            phi[i] = [a + g * b for a, b in zip(phi[i], phi[j])]
            for row in psi:
                row[j] = row[j] - g * row[i]
        else:
            # columns of phi: C_i += g C_j ; rows of psi: R_j -= g R_i
            for row in phi:
                row[i] = row[i] + g * row[j]
            psi[j] = [a - g * b for a, b in zip(psi[j], psi[i])]
    return require_valid(MatrixFactorization(eq.f, PolyMatrix(ctx, phi), PolyMatrix(ctx, psi)))


def _exponents(nvars: int, d: int):
    from itertools import product as _product

    return [e for e in _product(range(d + 1), repeat=nvars) if sum(e) <= d]
