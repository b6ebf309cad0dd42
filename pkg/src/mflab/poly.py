"""Sparse multivariate polynomials over F_p and matrices of them."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .field import DEFAULT_PRIME, check_prime

MAX_VARS = 6

Exponent = tuple[int, ...]


@dataclass(frozen=True)
class RingCtx:
    vars: tuple[str, ...]
    p: int = DEFAULT_PRIME

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        if not self.vars:
            raise ValueError("a ring needs at least one variable")
        if len(self.vars) > MAX_VARS:
            raise ValueError(f"at most {MAX_VARS} variables are supported")
        if len(set(self.vars)) != len(self.vars):
            raise ValueError(f"duplicate variable names in {self.vars}")
        for v in self.vars:
            if not v.isidentifier():
                raise ValueError(f"bad variable name {v!r}")
        check_prime(self.p)

    @property
    def nvars(self) -> int:
        return len(self.vars)

    def index(self, name: str) -> int:
        try:
            return self.vars.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}") from None

    def extend(self, *names: str) -> RingCtx:
        for n in names:
            if n in self.vars:
                raise ValueError(f"variable {n!r} already in ring {self.vars}")
        return RingCtx(self.vars + tuple(names), self.p)

    def zero(self) -> Poly:
        return Poly(self, {})

    def one(self) -> Poly:
        return self.const(1)

    def const(self, c: int) -> Poly:
        return Poly(self, {(0,) * self.nvars: c})

    def var(self, name: str) -> Poly:
        e = [0] * self.nvars
        e[self.index(name)] = 1
        return Poly(self, {tuple(e): 1})

    def gens(self) -> list[Poly]:
        return [self.var(v) for v in self.vars]

    def parse(self, src: str) -> Poly:
        from .parser import parse_poly

        return parse_poly(src, self)


def grlex_key(e: Exponent):
    return (sum(e), e)


class Poly:
    """Immutable sparse polynomial: exponent tuple -> coefficient in [1, p)."""

    __slots__ = ("ctx", "terms", "_hash")

    def __init__(self, ctx: RingCtx, terms: Mapping[Exponent, int] | None = None):
        p = ctx.p
        clean = {}
        for e, c in (terms or {}).items():
            c = int(c) % p
            if c:
                if len(e) != ctx.nvars:
                    raise ValueError(f"exponent {e} does not fit {ctx.vars}")
                clean[tuple(e)] = c
        self.ctx = ctx
        self.terms = clean
        self._hash = None

    # -- basic predicates -------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def order(self) -> int:
        """Lowest total degree of a term (m-adic order); -1 for zero."""
        return min((sum(e) for e in self.terms), default=-1)

    def constant_term(self) -> int:
        return self.terms.get((0,) * self.ctx.nvars, 0)

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def homogeneous_part(self, d: int) -> Poly:
        return Poly(self.ctx, {e: c for e, c in self.terms.items() if sum(e) == d})

    def truncate(self, d: int) -> Poly:
        """Drop terms of total degree >= d."""
        return Poly(self.ctx, {e: c for e, c in self.terms.items() if sum(e) < d})

    def leading(self) -> tuple[Exponent, int]:
        e = max(self.terms, key=grlex_key)
        return e, self.terms[e]

    # -- arithmetic -------------------------------------------------------
    def _check(self, other: Poly):
        if other.ctx != self.ctx:
            raise ValueError(f"ring mismatch: {self.ctx.vars} vs {other.ctx.vars}")

    def _lift(self, other) -> Poly:
        if isinstance(other, Poly):
            self._check(other)
            return other
        if isinstance(other, int):
            return self.ctx.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0) + c
        return Poly(self.ctx, t)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.ctx, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        p = self.ctx.p
        t: dict[Exponent, int] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = (t.get(e, 0) + c1 * c2) % p
        return Poly(self.ctx, t)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative exponent")
        result = self.ctx.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, c: int) -> Poly:
        return Poly(self.ctx, {e: v * c for e, v in self.terms.items()})

    def divide_exact(self, divisor: Poly) -> Poly:
        """Quotient q with self = q * divisor; raises if the division leaves a remainder."""
        self._check(divisor)
        if divisor.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        p = self.ctx.p
        le, lc = divisor.leading()
        inv = pow(lc, p - 2, p)
        rem = dict(self.terms)
        quot: dict[Exponent, int] = {}
        while rem:
            e = max(rem, key=grlex_key)
            c = rem[e]
            shift = tuple(a - b for a, b in zip(e, le))
            if min(shift) < 0:
                raise ArithmeticError("polynomial division is not exact")
            q = c * inv % p
            quot[shift] = q
            for de, dc in divisor.terms.items():
                k = tuple(a + b for a, b in zip(de, shift))
                v = (rem.get(k, 0) - q * dc) % p
                if v:
                    rem[k] = v
                else:
                    rem.pop(k, None)
        return Poly(self.ctx, quot)

    def is_scalar_multiple_of(self, other: Poly) -> bool:
        """True when self = c * other for a nonzero constant c."""
        self._check(other)
        if self.is_zero() or other.is_zero() or set(self.terms) != set(other.terms):
            return False
        e0 = next(iter(other.terms))
        p = self.ctx.p
        ratio = self.terms[e0] * pow(other.terms[e0], p - 2, p) % p
        return all(self.terms[e] == other.terms[e] * ratio % p for e in other.terms)

    # -- ring changes -----------------------------------------------------
    def embed(self, ctx: RingCtx) -> Poly:
        """Reinterpret in a ring whose variables include ours (matched by name)."""
        if ctx == self.ctx:
            return self
        if ctx.p != self.ctx.p:
            raise ValueError("cannot change the characteristic")
        idx = [ctx.index(v) for v in self.ctx.vars]
        t = {}
        for e, c in self.terms.items():
            ne = [0] * ctx.nvars
            for i, k in zip(idx, e):
                ne[i] = k
            t[tuple(ne)] = c
        return Poly(ctx, t)

    # -- evaluation -------------------------------------------------------
    def evaluate(self, point: Sequence[int]) -> int:
        p = self.ctx.p
        total = 0
        for e, c in self.terms.items():
            term = c
            for v, k in zip(point, e):
                if k:
                    term = term * pow(int(v), k, p) % p
            total += term
        return total % p

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorised evaluation; points has shape (npoints, nvars)."""
        p = self.ctx.p
        pts = np.asarray(points, dtype=np.int64) % p
        out = np.zeros(pts.shape[0], dtype=np.int64)
        for e, c in self.terms.items():
            term = np.full(pts.shape[0], c, dtype=np.int64)
            for i, k in enumerate(e):
                for _ in range(k):
                    term = term * pts[:, i] % p
            out = (out + term) % p
        return out

    def diff(self, name: str) -> Poly:
        i = self.ctx.index(name)
        t = {}
        for e, c in self.terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                t[tuple(ne)] = c * e[i]
        return Poly(self.ctx, t)

    # -- identity ---------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, int):
            return self == self.ctx.const(other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ctx, frozenset(self.terms.items())))
        return self._hash

    def __str__(self):
        return serialize(self)

    def __repr__(self):
        return f"Poly({serialize(self)!r})"


def _monomial_text(ctx: RingCtx, e: Exponent) -> str:
    parts = []
    for v, k in zip(ctx.vars, e):
        if k == 1:
            parts.append(v)
        elif k > 1:
            parts.append(f"{v}^{k}")
    return "*".join(parts)


def serialize(f: Poly) -> str:
    """Canonical text: descending graded-lex order, coefficients in [1, p-1]."""
    if f.is_zero():
        return "0"
    out = []
    for e in sorted(f.terms, key=grlex_key, reverse=True):
        c = f.terms[e]
        mono = _monomial_text(f.ctx, e)
        if not mono:
            out.append(str(c))
        elif c == 1:
            out.append(mono)
        else:
            out.append(f"{c}*{mono}")
    return " + ".join(out)


def linear_part(f: Poly) -> Poly:
    if f.constant_term():
        raise ValueError("unit or non-local input: nonzero constant term")
    return f.homogeneous_part(1)


class PolyMatrix:
    """Immutable dense matrix of polynomials sharing one ring."""

    __slots__ = ("ctx", "rows", "cols", "entries", "_hash")

    def __init__(self, ctx: RingCtx, entries: Iterable[Iterable[Poly]], shape=None):
        grid = tuple(tuple(row) for row in entries)
        rows = len(grid)
        cols = len(grid[0]) if rows else (shape[1] if shape else 0)
        if shape is not None and (rows, cols) != tuple(shape):
            raise ValueError(f"entry grid {rows}x{cols} does not match shape {shape}")
        for row in grid:
            if len(row) != cols:
                raise ValueError("ragged polynomial matrix")
            for x in row:
                if not isinstance(x, Poly) or x.ctx != ctx:
                    raise ValueError("matrix entries must be polynomials over the matrix ring")
        self.ctx = ctx
        self.rows = rows
        self.cols = cols
        self.entries = grid
        self._hash = None

    @classmethod
    def from_ints(cls, ctx: RingCtx, rows: Sequence[Sequence[int]]) -> PolyMatrix:
        return cls(ctx, [[ctx.const(v) for v in r] for r in rows])

    @classmethod
    def from_text(cls, ctx: RingCtx, rows: Sequence[Sequence[str]]) -> PolyMatrix:
        return cls(ctx, [[ctx.parse(s) for s in r] for r in rows])

    @classmethod
    def zeros(cls, ctx: RingCtx, rows: int, cols: int) -> PolyMatrix:
        z = ctx.zero()
        return cls(ctx, [[z] * cols for _ in range(rows)], shape=(rows, cols))

    @classmethod
    def identity(cls, ctx: RingCtx, n: int) -> PolyMatrix:
        return cls.scalar(ctx, n, ctx.one())

    @classmethod
    def scalar(cls, ctx: RingCtx, n: int, g: Poly) -> PolyMatrix:
        z = ctx.zero()
        return cls(ctx, [[g if i == j else z for j in range(n)] for i in range(n)], shape=(n, n))

    @classmethod
    def block(cls, blocks: Sequence[Sequence[PolyMatrix]]) -> PolyMatrix:
        ctx = blocks[0][0].ctx
        out = []
        for brow in blocks:
            height = brow[0].rows
            if any(b.rows != height for b in brow):
                raise ValueError("block heights disagree")
            for i in range(height):
                out.append([x for b in brow for x in b.entries[i]])
        width = sum(b.cols for b in blocks[0])
        return cls(ctx, out, shape=(len(out), width))

    @classmethod
    def block_diag(cls, mats: Sequence[PolyMatrix]) -> PolyMatrix:
        ctx = mats[0].ctx
        grid = []
        for k, a in enumerate(mats):
            grid.append([a if j == k else cls.zeros(ctx, a.rows, b.cols) for j, b in enumerate(mats)])
        return cls.block(grid)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def _same(self, other: PolyMatrix):
        if other.ctx != self.ctx:
            raise ValueError(f"ring mismatch: {self.ctx.vars} vs {other.ctx.vars}")

    def __add__(self, other: PolyMatrix) -> PolyMatrix:
        self._same(other)
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} + {other.shape}")
        return PolyMatrix(self.ctx, [[a + b for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)],
                          shape=self.shape)

    def __neg__(self) -> PolyMatrix:
        return PolyMatrix(self.ctx, [[-a for a in r] for r in self.entries], shape=self.shape)

    def __sub__(self, other: PolyMatrix) -> PolyMatrix:
        return self + (-other)

    def __matmul__(self, other: PolyMatrix) -> PolyMatrix:
        return mat_mul(self, other)

    def scale(self, g: Poly | int) -> PolyMatrix:
        if isinstance(g, int):
            g = self.ctx.const(g)
        return PolyMatrix(self.ctx, [[g * a for a in r] for r in self.entries], shape=self.shape)

    def transpose(self) -> PolyMatrix:
        return PolyMatrix(self.ctx, [list(col) for col in zip(*self.entries)] if self.rows else [],
                          shape=(self.cols, self.rows))

    @property
    def T(self) -> PolyMatrix:
        return self.transpose()

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> PolyMatrix:
        return PolyMatrix(self.ctx, [[self.entries[i][j] for j in cols] for i in rows], shape=(len(rows), len(cols)))

    def embed(self, ctx: RingCtx) -> PolyMatrix:
        return PolyMatrix(ctx, [[a.embed(ctx) for a in r] for r in self.entries], shape=self.shape)

    def map(self, fn) -> PolyMatrix:
        return PolyMatrix(self.ctx, [[fn(a) for a in r] for r in self.entries], shape=self.shape)

    def is_zero(self) -> bool:
        return all(a.is_zero() for r in self.entries for a in r)

    def max_degree(self) -> int:
        return max((a.degree() for r in self.entries for a in r), default=-1)

    def constant_matrix(self) -> np.ndarray:
        return np.array([[a.constant_term() for a in r] for r in self.entries], dtype=np.int64).reshape(self.shape)

    def evaluate(self, point: Sequence[int]) -> np.ndarray:
        return np.array([[a.evaluate(point) for a in r] for r in self.entries], dtype=np.int64).reshape(self.shape)

    def to_text(self) -> list[list[str]]:
        return [[serialize(a) for a in r] for r in self.entries]

    def __eq__(self, other):
        if not isinstance(other, PolyMatrix):
            return NotImplemented
        return self.ctx == other.ctx and self.shape == other.shape and self.entries == other.entries

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ctx, self.shape, self.entries))
        return self._hash

    def __repr__(self):
        return f"PolyMatrix({self.to_text()})"


def mat_mul(a: PolyMatrix, b: PolyMatrix) -> PolyMatrix:
    a._same(b)
    if a.cols != b.rows:
        raise ValueError(f"shape mismatch {a.shape} x {b.shape}")
    z = a.ctx.zero()
    out = []
    for i in range(a.rows):
        row = []
        for j in range(b.cols):
            acc = z
            for k in range(a.cols):
                x, y = a.entries[i][k], b.entries[k][j]
                if x and y:
                    acc = acc + x * y
            row.append(acc)
        out.append(row)
    return PolyMatrix(a.ctx, out, shape=(a.rows, b.cols))
