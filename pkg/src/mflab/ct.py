"""Cluster tilting for reduced plane curves f = f_1 ... f_n.

The candidates are the chain sums S^w = (+)_i S/(f_w(1) ... f_w(i)). They are
rigid by nestedness; they are cluster tilting on a catalog exactly when every
catalog module that is Ext^1-orthogonal to S^w on both sides lies in add(S^w).
When some factor is singular, ``witness_non_ct`` builds a module that is
orthogonal but not in add(S^w).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
from typing import Sequence

from .hom import DEFAULT_DEGREE_SCHEDULE, DEFAULT_SCHEDULE, ext1_cocycle, ext_periodic
from .mf import (
    FactoredEquation,
    MatrixFactorization,
    all_subsets,
    direct_sum,
    require_valid,
    s_ideal,
    subset_label,
    syzygy,
)
from .modules import _jsonable, add_membership, fingerprint, fingerprint_diff
from .poly import Poly, PolyMatrix, linear_part


def check_factor_smooth(eq: FactoredEquation) -> list[bool]:
    """Factor i passes iff it has a nonzero linear part (f_i not in m^2)."""
    if eq.ctx.nvars != 2:
        raise ValueError("factor smoothness is checked for plane curves (two variables)")
    return [not linear_part(g).is_zero() for g in eq.factors]


def ext_oracle_nested(I, J) -> bool:
    """Ext^1(S_I, S_J) vanishes iff I and J are nested."""
    I, J = frozenset(I), frozenset(J)
    if not I or not J:
        raise ValueError("subsets must be nonempty")
    return I <= J or J <= I


def check_permutation(omega: Sequence[int], n: int) -> tuple[int, ...]:
    omega = tuple(int(w) for w in omega)
    if sorted(omega) != list(range(1, n + 1)):
        raise ValueError(f"{omega} is not a permutation of 1..{n}")
    return omega


@dataclass(frozen=True)
class OmegaObject:
    eq: FactoredEquation
    omega: tuple[int, ...] | None
    subsets: tuple[frozenset, ...]
    summands: tuple[MatrixFactorization, ...]

    @property
    def mf(self) -> MatrixFactorization:
        return direct_sum(*self.summands)

    def labels(self) -> list[str]:
        return [subset_label(I) for I in self.subsets]


def build_s_omega(eq: FactoredEquation, omega: Sequence[int] | None = None, check_basic: bool = True) -> OmegaObject:
    omega = tuple(range(1, eq.n + 1)) if omega is None else check_permutation(omega, eq.n)
    subsets = tuple(frozenset(omega[:i]) for i in range(1, eq.n + 1))
    obj = OmegaObject(eq, omega, subsets, tuple(s_ideal(eq, I) for I in subsets))
    if check_basic:
        prints = [fingerprint(m, 6, eq, end_dim=False) for m in obj.summands]
        for i in range(len(prints)):
            for j in range(i):
                if not fingerprint_diff(prints[i], prints[j]):
                    raise ValueError(f"summands {i + 1} and {j + 1} are not distinguished; object is not basic")
    return obj


def object_from_subsets(eq: FactoredEquation, subsets: Sequence) -> OmegaObject:
    """Sum of arbitrary S_I (not necessarily a chain)."""
    subs = tuple(frozenset(I) for I in subsets)
    return OmegaObject(eq, None, subs, tuple(s_ideal(eq, I) for I in subs))


def _ext_pair(a: MatrixFactorization, b: MatrixFactorization, schedule, degrees) -> dict:
    return dict(_ext_pair_cached(a, b, tuple(schedule), tuple(degrees)))


@lru_cache(maxsize=8192)
def _ext_pair_cached(a, b, schedule, degrees):
    e = ext_periodic(a, b, 1, schedule)
    c = ext1_cocycle(a, b, degrees)
    return {"periodic": e.stable_dim, "cocycle": c.stable_dim,
            "trace": [list(d) for d in e.dims], "cocycle_trace": [list(d) for d in c.dims]}


def _dim(pair: dict):
    """The agreed dimension, or None if unstable or the engines disagree."""
    if pair["periodic"] == "unstable" or pair["periodic"] != pair["cocycle"]:
        return None
    return pair["periodic"]


def rigidity_check(obj: OmegaObject, schedule=DEFAULT_SCHEDULE, degrees=DEFAULT_DEGREE_SCHEDULE) -> dict:
    """Ext^1 between every ordered pair of summands with both engines, checked against nestedness."""
    n = len(obj.summands)
    matrix, faults, unstable = [], [], False
    for i in range(n):
        row = []
        for j in range(n):
            pair = _ext_pair(obj.summands[i], obj.summands[j], schedule, degrees)
            d = _dim(pair)
            if d is None:
                unstable = True
                if pair["periodic"] != "unstable" and pair["cocycle"] != "unstable":
                    faults.append({"pair": [i, j], "reason": "engines disagree"})
            elif (d == 0) != ext_oracle_nested(obj.subsets[i], obj.subsets[j]):
                faults.append({"pair": [i, j], "reason": "disagrees with nestedness"})
            row.append(pair)
        matrix.append(row)
    dims = [[_dim(c) for c in r] for r in matrix]
    if unstable:
        rigid = None
    else:
        rigid = all(d == 0 for r in dims for d in r)
    return {"rigid": rigid, "dims": dims, "pairs": matrix, "engine_faults": faults}


def subset_catalog(eq: FactoredEquation) -> list[tuple[str, MatrixFactorization]]:
    """All S_I, including the full set (S_{1..n} = R)."""
    return [(subset_label(I), s_ideal(eq, I)) for I in all_subsets(eq.n)]


def default_catalog(eq: FactoredEquation, omega: Sequence[int] | None = None) -> list[tuple[str, MatrixFactorization]]:
    """S_I catalog plus, for every singular factor, the witness module and its syzygy."""
    cat = subset_catalog(eq)
    for b, smooth in enumerate(check_factor_smooth(eq), start=1):
        if not smooth:
            w = witness_mf(eq, b, omega)
            cat += [(f"witness{b}", w), (f"syz(witness{b})", syzygy(w))]
    return cat


def ct_catalog_check(obj: OmegaObject, catalog: Sequence[tuple[str, MatrixFactorization]],
                     schedule=DEFAULT_SCHEDULE, degrees=DEFAULT_DEGREE_SCHEDULE, seed: int = 0) -> dict:
    """For each X: (Ext^1(M,X) = 0 and Ext^1(X,M) = 0) iff X in add(M)."""
    M = obj.mf
    rows, violators, inconclusive = [], [], []
    for label, X in catalog:
        if X.f != M.f:
            raise ValueError(f"catalog module {label} lives over a different equation")
        fwd = [_ext_pair(S, X, schedule, degrees) for S in obj.summands]
        bwd = [_ext_pair(X, S, schedule, degrees) for S in obj.summands]
        dims_f, dims_b = [_dim(q) for q in fwd], [_dim(q) for q in bwd]
        mem = add_membership(X, M, seed=seed)
        row = {"module": label, "ext_M_X": dims_f, "ext_X_M": dims_b, "membership": mem.verdict,
               "traces": {"M_X": fwd, "X_M": bwd}}
        if None in dims_f or None in dims_b or mem.verdict == "inconclusive":
            row["verdict"] = "inconclusive"
            inconclusive.append(label)
        else:
            orth = sum(dims_f) == 0 and sum(dims_b) == 0
            ok = orth == (mem.verdict == "member")
            row["orthogonal"] = orth
            row["verdict"] = "ok" if ok else "violation"
            if not ok:
                violators.append(label)
        rows.append(row)
    return {"rows": rows, "violators": violators, "inconclusive": inconclusive}


@dataclass
class CTReport:
    equation: str
    omega: tuple[int, ...] | None
    factor_smoothness: list[bool]
    rigid: bool | None
    mutual_vanishing_matrix: list
    catalog_closure: list
    overall: str
    witness: dict | None = None
    traces: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return _jsonable({
            "equation": self.equation,
            "omega": list(self.omega) if self.omega else None,
            "verdicts": {
                "factor_smoothness": self.factor_smoothness,
                "rigid": self.rigid,
                "mutual_vanishing_matrix": self.mutual_vanishing_matrix,
                "catalog_closure": self.catalog_closure,
                "overall": self.overall,
            },
            "witness": self.witness,
            "scope": "verdicts quantify over the listed catalog only",
            "traces": self.traces,
        })


def ct_report(eq: FactoredEquation, omega: Sequence[int] | None = None,
              catalog: Sequence[tuple[str, MatrixFactorization]] | None = None,
              schedule=DEFAULT_SCHEDULE, degrees=DEFAULT_DEGREE_SCHEDULE, seed: int = 0) -> CTReport:
    obj = build_s_omega(eq, omega)
    catalog = default_catalog(eq, obj.omega) if catalog is None else list(catalog)
    rig = rigidity_check(obj, schedule, degrees)
    cat = ct_catalog_check(obj, catalog, schedule, degrees, seed)
    closure = [{k: r[k] for k in ("module", "ext_M_X", "ext_X_M", "membership", "verdict")} for r in cat["rows"]]
    witness = None
    if rig["rigid"] is False:
        overall = "refuted"
        witness = {"module": "S^w itself", "reason": "not rigid", "ext_dims": rig["dims"]}
    elif cat["violators"]:
        overall = "refuted"
        label = cat["violators"][0]
        row = next(r for r in cat["rows"] if r["module"] == label)
        mf = dict(catalog)[label]
        witness = {"module": label, "mf": mf.to_json(), "ext_M_X": row["ext_M_X"], "ext_X_M": row["ext_X_M"],
                   "membership": row["membership"]}
    elif rig["rigid"] is None or cat["inconclusive"] or rig["engine_faults"]:
        overall = "inconclusive"
    else:
        overall = "cluster-tilting-on-catalog"
    traces = {"rigidity": rig["pairs"], "catalog": [r["traces"] for r in cat["rows"]]}
    return CTReport(eq.text(), obj.omega, check_factor_smooth(eq), rig["rigid"], rig["dims"], closure,
                    overall, witness, traces)


# -- the witness for a singular factor ------------------------------------------

def ideal_module_mf(g: Poly) -> MatrixFactorization:
    """2x2 factorization of g in (x, y)^2 whose cokernel is non-free over S/(g).

    Writing g = x*a + y*b with a, b in m gives phi = [[x, -b], [y, a]] and its
    adjugate psi = [[a, b], [-y, x]].
    """
    ctx = g.ctx
    if ctx.nvars != 2:
        raise ValueError("the witness construction is for plane curves")
    if g.constant_term() or not linear_part(g).is_zero():
        raise ValueError("factor is smooth (nonzero linear part); no witness exists")
    x, y = ctx.var(ctx.vars[0]), ctx.var(ctx.vars[1])
    xa = {e: c for e, c in g.terms.items() if e[0] > 0}
    yb = {e: c for e, c in g.terms.items() if e[0] == 0}
    a = Poly(ctx, {(e[0] - 1, e[1]): c for e, c in xa.items()})
    b = Poly(ctx, {(e[0], e[1] - 1): c for e, c in yb.items()})
    phi = PolyMatrix(ctx, [[x, -b], [y, a]])
    psi = PolyMatrix(ctx, [[a, b], [-y, x]])
    m = MatrixFactorization(g, phi, psi)
    return require_valid(m)


def witness_mf(eq: FactoredEquation, bad_index: int, omega: Sequence[int] | None = None) -> MatrixFactorization:
    """Orthogonal-but-not-in-add module for S^w when factor bad_index is singular.

    With T the initial segment of w ending at bad_index, the factorization of
    f_bad is scaled by the other factors: (f_{T - bad} * psi_N, f_{T^c} * phi_N).
    """
    n = eq.n
    if not 1 <= bad_index <= n:
        raise ValueError(f"bad_index must lie in 1..{n}")
    omega = tuple(range(1, n + 1)) if omega is None else check_permutation(omega, n)
    N = ideal_module_mf(eq.factors[bad_index - 1])
    k = omega.index(bad_index)
    T = set(omega[:k + 1])
    A = eq.f_of(T - {bad_index})
    B = eq.f_of(set(range(1, n + 1)) - T)
    m = MatrixFactorization(eq.f, N.psi.scale(A), N.phi.scale(B))
    return require_valid(m)


@dataclass
class WitnessResult:
    mf: MatrixFactorization
    bad_index: int
    omega: tuple[int, ...]
    ext_S_W: list
    ext_W_S: list
    membership: str

    @property
    def verified(self) -> bool:
        return all(d == 0 for d in self.ext_S_W + self.ext_W_S) and self.membership == "not-member"

    def to_json(self) -> dict:
        return _jsonable({"mf": self.mf.to_json(), "bad_index": self.bad_index, "omega": list(self.omega),
                          "ext_S_W": self.ext_S_W, "ext_W_S": self.ext_W_S, "membership": self.membership,
                          "verified": self.verified})


def witness_non_ct(eq: FactoredEquation, bad_index: int, omega: Sequence[int] | None = None,
                   schedule=DEFAULT_SCHEDULE, seed: int = 0) -> WitnessResult:
    """Build the witness and verify its Ext vanishing and non-membership."""
    omega = tuple(range(1, eq.n + 1)) if omega is None else check_permutation(omega, eq.n)
    w = witness_mf(eq, bad_index, omega)
    obj = build_s_omega(eq, omega, check_basic=False)
    fwd = [ext_periodic(S, w, 1, schedule).stable_dim for S in obj.summands]
    bwd = [ext_periodic(w, S, 1, schedule).stable_dim for S in obj.summands]
    mem = add_membership(w, obj.mf, seed=seed)
    return WitnessResult(w, bad_index, omega, fwd, bwd, mem.verdict)


def all_omegas(n: int) -> list[tuple[int, ...]]:
    return list(permutations(range(1, n + 1)))
