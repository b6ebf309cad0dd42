"""Module-level predicates: isomorphism, decomposition, add(M) membership, pushforward.

Positive verdicts always come with explicit polynomial chain maps whose
residues modulo m are invertible; by Nakayama such maps are isomorphisms over
the local ring. Negative verdicts rest on fingerprints or on exhaustive
linear algebra inside degree-bounded spaces of chain maps, and say so.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .hom import (
    DEFAULT_SCHEDULE,
    ChainMap,
    ModuleLike,
    PresentedModule,
    as_mf,
    chain_maps,
    check_same_ring,
    check_schedule,
    homology_dim,
    hom_space,
    random_linear_form,
    residue_basis,
    torsion_probe,
)
from .mf import (
    FactoredEquation,
    InsufficientPoints,
    MatrixFactorization,
    minimalize,
    rank_vector,
    require_valid,
    split_blocks,
    syzygy,
)
from .poly import Poly, PolyMatrix
from .truncation import Presentation

MAX_DEPTH = 6


def minimal(M: ModuleLike) -> MatrixFactorization | None:
    """Minimal factorization of the module (None for the zero module)."""
    return minimalize(as_mf(M))


def min_generators(M: ModuleLike) -> int:
    """dim M/mM."""
    m = minimal(M)
    return 0 if m is None else m.size


def default_degree(*ms: MatrixFactorization | None) -> int:
    """Degree bound for chain-map searches: the largest entry degree involved."""
    degs = [1]
    for m in ms:
        if m is not None:
            degs += [m.phi.max_degree(), m.psi.max_degree()]
    return max(degs)


def combine(maps: Sequence[ChainMap], coeffs: Sequence[int]) -> ChainMap:
    a = b = None
    for cm, c in zip(maps, coeffs):
        if c == 0:
            continue
        ta, tb = cm.a.scale(int(c)), cm.b.scale(int(c))
        a = ta if a is None else a + ta
        b = tb if b is None else b + tb
    if a is None:
        a, b = maps[0].a.scale(0), maps[0].b.scale(0)
    return ChainMap(a, b)


def _matrix_combo(basis: Sequence[np.ndarray], coeffs, p: int) -> np.ndarray:
    acc = np.zeros_like(basis[0])
    for B, c in zip(basis, coeffs):
        acc = (acc + int(c) * B) % p
    return acc


# -- fingerprints -------------------------------------------------------------

def _rank_fingerprint(m: MatrixFactorization, eq: FactoredEquation | None, seed: int):
    if eq is None:
        eq = FactoredEquation(m.ctx, (m.f,))
    try:
        return tuple(rank_vector(m, eq, seed=seed))
    except (InsufficientPoints, ValueError):
        return None


def fingerprint(M: ModuleLike, D: int | None = None, eq: FactoredEquation | None = None,
                seed: int = 0, end_dim: bool = True) -> dict:
    """Isomorphism invariants: generator count, truncated dims, rank vector, End dimension."""
    mf = as_mf(M)
    D = D if D is not None else (M.D if isinstance(M, PresentedModule) else DEFAULT_SCHEDULE[0])
    m = minimalize(mf)
    if m is None:
        return {"mu": 0, "dims": [0, 0], "rank": None, "end_dim": 0}
    mod = PresentedModule(m, D)
    out = {
        "mu": m.size,
        "dims": [mod.model(D - 1).dim, mod.model(D).dim],
        "rank": _rank_fingerprint(m, eq, seed),
    }
    if end_dim:
        out["end_dim"] = hom_space(mod, mod).dim
    return out


def fingerprint_diff(a: dict, b: dict) -> list[str]:
    diff = []
    for key in ("mu", "dims", "rank", "end_dim"):
        if key in a and key in b and a[key] is not None and b[key] is not None and a[key] != b[key]:
            diff.append(key)
    return diff


# -- isomorphism ----------------------------------------------------------------

@dataclass
class IsoWitness:
    verdict: str  # isomorphic | not-isomorphic | inconclusive
    forward: ChainMap | None = None
    backward: ChainMap | None = None
    evidence: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def cm(x):
            return None if x is None else {"a": x.a.to_text(), "b": x.b.to_text()}
        return {"verdict": self.verdict, "forward": cm(self.forward), "backward": cm(self.backward),
                "evidence": _jsonable(self.evidence)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    return x


def iso_test(M: ModuleLike, N: ModuleLike, trials: int = 16, seed: int = 0,
             eq: FactoredEquation | None = None, degree: int | None = None, D: int | None = None) -> IsoWitness:
    """Decide M ~ N by fingerprints, then by a search for maps invertible modulo m."""
    check_same_ring(M, N)
    if isinstance(M, PresentedModule) and isinstance(N, PresentedModule) and M.D != N.D:
        from .hom import TruncationMismatch
        raise TruncationMismatch(f"truncation orders differ: {M.D} vs {N.D}")
    m, n = minimal(M), minimal(N)
    if m is None or n is None:
        same = m is None and n is None
        return IsoWitness("isomorphic" if same else "not-isomorphic", evidence={"zero_module": [m is None, n is None]})
    p = m.ctx.p
    if D is None:
        D = M.D if isinstance(M, PresentedModule) else DEFAULT_SCHEDULE[0]
    fm = fingerprint(m, D, eq, seed, end_dim=False)
    fn = fingerprint(n, D, eq, seed, end_dim=False)
    diff = fingerprint_diff(fm, fn)
    evidence = {"fingerprints": [fm, fn]}
    if diff:
        evidence["separated_by"] = diff
        return IsoWitness("not-isomorphic", evidence=evidence)
    d = degree if degree is not None else default_degree(m, n)
    fwd, bwd = chain_maps(m, n, d), chain_maps(n, m, d)
    rf, rb = residue_basis(fwd, p), residue_basis(bwd, p)
    evidence.update({"degree": d, "residue_dims": [len(rf), len(rb)]})
    if not rf or not rb:
        return IsoWitness("inconclusive", evidence=evidence)
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        cf = rng.integers(0, p, size=len(fwd))
        cb = rng.integers(0, p, size=len(bwd))
        F, B = combine(fwd, cf), combine(bwd, cb)
        if linalg.det_nonzero(F.residue() % p, p) and linalg.det_nonzero(B.residue() % p, p):
            return IsoWitness("isomorphic", F, B, evidence)
    return IsoWitness("inconclusive", evidence=evidence)


# -- decomposition -------------------------------------------------------------

@dataclass
class Decomposition:
    verdict: str  # indecomposable-likely | decomposes | inconclusive
    factors: list[MatrixFactorization] | None = None
    evidence: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        facs = None if self.factors is None else [f.to_json() for f in self.factors]
        return {"verdict": self.verdict, "factors": facs, "evidence": _jsonable(self.evidence)}


def _fitting_split(t: np.ndarray, lam: int, p: int):
    """Basis change adapted to k^n = ker (t-lam)^n (+) im (t-lam)^n, or None if trivial."""
    n = t.shape[0]
    s = linalg.matrix_power((t - lam * np.eye(n, dtype=np.int64)) % p, n, p)
    K = linalg.nullspace(s, p)
    k = K.shape[0]
    if k in (0, n):
        return None
    Im = linalg.row_basis(s.T.copy(), p)
    P = np.concatenate([K, Im], axis=0).T % p
    return P, k


def _conjugate(m: MatrixFactorization, P: np.ndarray, Q: np.ndarray) -> MatrixFactorization:
    p = m.ctx.p
    Pi = PolyMatrix.from_ints(m.ctx, linalg.inverse(P, p).tolist())
    Qi = PolyMatrix.from_ints(m.ctx, linalg.inverse(Q, p).tolist())
    Pm = PolyMatrix.from_ints(m.ctx, P.tolist())
    Qm = PolyMatrix.from_ints(m.ctx, Q.tolist())
    return MatrixFactorization(m.f, Pi @ m.phi @ Qm, Qi @ m.psi @ Pm)


def indecomposable_probe(M: ModuleLike, trials: int = 64, seed: int = 0, depth: int = MAX_DEPTH,
                         degree: int | None = None) -> Decomposition:
    """Search End(M) modulo m for a nontrivial idempotent and split along it."""
    m = minimal(M)
    if m is None:
        return Decomposition("inconclusive", evidence={"reason": "zero module"})
    p = m.ctx.p
    if m.size == 1:
        return Decomposition("indecomposable-likely", [m], {"reason": "cyclic module, local endomorphism ring"})
    if depth <= 0:
        return Decomposition("inconclusive", evidence={"reason": "depth cap reached"})
    d = degree if degree is not None else default_degree(m)
    ends = chain_maps(m, m, d)
    rng = np.random.default_rng(seed)
    evidence = {"degree": d, "end_residue_dim": len(residue_basis(ends, p))}
    for trial in range(trials):
        c = rng.integers(0, p, size=len(ends))
        t = combine(ends, c)
        ta, tb = t.residue() % p, np.asarray(t.b.constant_matrix(), dtype=np.int64) % p
        for lam in linalg.poly_roots(linalg.charpoly(ta, p), p):
            sa = _fitting_split(ta, lam, p)
            if sa is None:
                continue
            P, k = sa
            sb = _fitting_split(tb, lam, p)
            evidence.update({"trial": trial, "eigenvalue": int(lam), "idempotent_rank": k})
            if sb is not None and sb[1] == k:
                parts = split_blocks(_conjugate(m, P, sb[0]))
                if len(parts) > 1:
                    factors = []
                    for part in parts:
                        sub = indecomposable_probe(part, trials, seed + 1, depth - 1, degree)
                        factors.extend(sub.factors if sub.verdict == "decomposes" else [part])
                    return Decomposition("decomposes", factors, evidence)
            evidence["split"] = "idempotent found but no constant block splitting"
            return Decomposition("decomposes", None, evidence)
    return Decomposition("indecomposable-likely", [m], evidence)


# -- add(M) membership -------------------------------------------------------------

@dataclass
class Membership:
    verdict: str  # member | not-member | inconclusive
    evidence: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "evidence": _jsonable(self.evidence)}


def add_membership(X: ModuleLike, M: ModuleLike, trials: int = 16, seed: int = 0,
                   degree: int | None = None) -> Membership:
    """X in add(M) iff some sum of composites X -> M -> X is invertible modulo m.

    The residues of all composites g o f span a subspace V of End_k(X/mX); a
    random element of V is invertible with high probability whenever V holds
    an invertible element, and then id_X factors through a power of M.
    """
    check_same_ring(X, M)
    x, m = minimal(X), minimal(M)
    if x is None:
        return Membership("member", {"reason": "zero module"})
    if m is None:
        return Membership("not-member", {"reason": "add of the zero module is zero"})
    p = x.ctx.p
    d = degree if degree is not None else default_degree(x, m)
    into = residue_basis(chain_maps(x, m, d), p)
    back = residue_basis(chain_maps(m, x, d), p)
    evidence = {"degree": d, "mu": x.size, "residue_dims": [len(into), len(back)]}
    if not into or not back:
        evidence["trace_dim"] = 0
        return Membership("not-member", evidence)
    prods = np.stack([linalg.matmul(g, f, p).reshape(-1) for g in back for f in into])
    V = linalg.row_basis(prods, p)
    evidence["trace_dim"] = int(V.shape[0])
    if V.shape[0] == 0:
        return Membership("not-member", evidence)
    rng = np.random.default_rng(seed)
    n = x.size
    for trial in range(trials):
        c = rng.integers(0, p, size=V.shape[0])
        u = linalg.matmul(c.reshape(1, -1), V, p).reshape(n, n)
        if linalg.det_nonzero(u, p):
            evidence["witness_trial"] = trial
            return Membership("member", evidence)
    evidence["trials"] = trials
    return Membership("not-member", evidence)


# -- depth and pushforward ---------------------------------------------------------

def depth_probe(M: ModuleLike, schedule: Sequence[int] = DEFAULT_SCHEDULE, seed: int = 0,
                cap: int | None = None) -> dict:
    """Length of a regular sequence of generic linear forms on M, as far as the probe can see."""
    schedule = check_schedule(schedule)
    mf = minimal(M)
    if mf is None:
        return {"depth": None, "traces": []}
    ctx = mf.ctx
    cap = ctx.nvars - 1 if cap is None else cap
    rng = np.random.default_rng(seed)
    rels = [tuple(mf.phi[i, j] for i in range(mf.size)) for j in range(mf.size)]
    traces = []
    depth = 0
    z = ctx.zero()
    while depth < cap:
        pres = Presentation(ctx, mf.f, mf.size, tuple(rels), add_f=True)
        probe = torsion_probe(pres, schedule, trials=1, seed=int(rng.integers(0, 2**31)))
        traces.append(probe.to_json())
        if probe.verdict != "torsion-free":
            break
        depth += 1
        t = random_linear_form(ctx, rng)
        for k in range(mf.size):
            rels.append(tuple(t if i == k else z for i in range(mf.size)))
    return {"depth": depth, "traces": traces}


@dataclass
class PushforwardResult:
    M1: MatrixFactorization | None
    lam: int
    embedding: PolyMatrix | None
    exactness: list
    rank_check: dict
    depth: dict

    @property
    def exact(self) -> bool:
        return all(d == 0 for _, d in self.exactness)

    def to_json(self) -> dict:
        return {
            "M1": None if self.M1 is None else self.M1.to_json(),
            "lambda": self.lam,
            "embedding": None if self.embedding is None else self.embedding.to_text(),
            "exactness": [list(e) for e in self.exactness],
            "rank_check": _jsonable(self.rank_check),
            "depth": _jsonable(self.depth),
        }


class PushforwardError(ValueError):
    pass


def pushforward(M: ModuleLike, schedule: Sequence[int] = (3, 4, 5), seed: int = 0,
                eq: FactoredEquation | None = None) -> PushforwardResult:
    """0 -> M -> R^lambda -> M1 -> 0 with lambda = mu(M*), obtained by dualizing a presentation of M*.

    For a minimal factorization (phi, psi) of size n, M* = coker(phi^T) needs n
    generators and the dual of its presentation is the embedding
    psi: coker(phi) -> R^n, with cokernel coker(psi).
    """
    mf = as_mf(M)
    require_valid(mf)
    if mf.ctx.nvars < 3:
        raise PushforwardError("pushforward needs a hypersurface of dimension at least 2 (three or more variables)")
    schedule = check_schedule(schedule)
    m = minimal(mf)
    if m is None:
        return PushforwardResult(None, 0, None, [], {}, {})
    probe = torsion_probe(m, schedule, seed=seed)
    if probe.verdict == "has-torsion":
        raise PushforwardError("module has torsion; the pushforward sequence is not defined")
    lam = m.size
    R = Presentation(m.ctx, m.f, 1, ((m.f,),))
    exactness = [(D, homology_dim(m.psi, m.phi, R, D)) for D in schedule]
    m1 = minimalize(syzygy(m))
    rank_check = {}
    rm = _rank_fingerprint(m, eq, seed)
    r1 = _rank_fingerprint(m1, eq, seed) if m1 is not None else tuple(0 for _ in (rm or ()))
    if rm is not None and r1 is not None:
        rank_check = {"rank_M": list(rm), "rank_M1": list(r1),
                      "holds": all(a == lam - b for a, b in zip(r1, rm))}
    d_m = depth_probe(m, schedule, seed)
    d_1 = depth_probe(m1, schedule, seed) if m1 is not None else {"depth": None, "traces": []}
    depth = {"M": d_m["depth"], "M1": d_1["depth"],
             "holds": d_1["depth"] is None or d_m["depth"] is None or d_1["depth"] >= d_m["depth"] - 1}
    return PushforwardResult(m1, lam, m.psi, exactness, rank_check, depth)
