"""Config-driven battery of checks; output is deterministic JSON for a fixed config and seed."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .cli import SMALL_SCHEDULE, infer_vars, resolve_module
from .field import DEFAULT_PRIME, check_prime
from .hom import (
    DEFAULT_SCHEDULE,
    check_schedule,
    ext_periodic,
    tensor_mcm_check,
    tor_periodic,
)
from .mf import (
    FactoredEquation,
    all_subsets,
    direct_sum,
    dual,
    knoerrer,
    random_mf,
    s_ideal,
    subset_label,
    syzygy,
    trivial,
    validate_mf,
)
from .poly import RingCtx

KINDS = ("ext", "nestedness", "rigid", "ct", "witness", "six-way", "duality", "knoerrer", "conifold")


class ConfigError(ValueError):
    pass


def default_config_path():
    return resources.files("mflab").joinpath("data/default_suite.json")


def load_config(path: str | None) -> dict:
    src = default_config_path() if path is None else Path(path)
    try:
        doc = json.loads(src.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {src}: {exc}") from exc
    return validate_config(doc)


def validate_config(doc) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - {"p", "seed", "D_schedule", "checks", "description"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = {
        "p": int(doc.get("p", DEFAULT_PRIME)),
        "seed": int(doc.get("seed", 0)),
        "D_schedule": list(check_schedule(doc.get("D_schedule", DEFAULT_SCHEDULE))),
        "checks": doc.get("checks", []),
    }
    check_prime(out["p"])
    if not isinstance(out["checks"], list):
        raise ConfigError("checks must be a list")
    for k, c in enumerate(out["checks"]):
        if not isinstance(c, dict) or c.get("kind") not in KINDS:
            raise ConfigError(f"check {k}: kind must be one of {KINDS}")
        if c["kind"] != "conifold" and "f" not in c:
            raise ConfigError(f"check {k}: missing equation 'f'")
    return out


def _eq(text: str, p: int) -> FactoredEquation:
    return FactoredEquation.from_text(text, RingCtx(infer_vars(text), p))


def _extended(schedule):
    return tuple(schedule) + (schedule[-1] + 2,)


def _subsets(eq):
    return {I: s_ideal(eq, I) for I in all_subsets(eq.n)}


def _lab(I):
    return subset_label(I)


# -- checks -----------------------------------------------------------------------

def check_ext(c, ctx):
    eq = _eq(c["f"], ctx["p"])
    M, N = resolve_module(c["M"], eq), resolve_module(c["N"], eq)
    sched = ctx["D_schedule"] if M.ctx.nvars <= 2 else SMALL_SCHEDULE
    i = int(c.get("i", 1))
    res = tor_periodic(M, N, i, sched) if c.get("tor") else ext_periodic(M, N, i, sched)
    ok = res.stable and ("expect" not in c or res.stable_dim == c["expect"])
    return ("pass" if ok else ("inconclusive" if not res.stable else "fail")), res.to_json()


def _ext_matrix(eq, sched):
    S = _subsets(eq)
    return S, {(I, J): ext_periodic(S[I], S[J], 1, sched) for I in S for J in S}


def check_nestedness(c, ctx):
    eq = _eq(c["f"], ctx["p"])
    sched = ctx["D_schedule"]
    S, mat = _ext_matrix(eq, sched)
    mismatches, unstable = [], []
    for (I, J), r in mat.items():
        if not r.stable:
            unstable.append([_lab(I), _lab(J)])
        elif (r.stable_dim == 0) != (I <= J or J <= I):
            mismatches.append([_lab(I), _lab(J), r.stable_dim])
    drift = []
    if c.get("extend"):
        for (I, J), r in mat.items():
            r2 = ext_periodic(S[I], S[J], 1, _extended(sched))
            if r2.stable_dim != r.stable_dim:
                drift.append([_lab(I), _lab(J)])
    status = "fail" if mismatches or drift else ("inconclusive" if unstable else "pass")
    dims = {f"{_lab(I)}|{_lab(J)}": r.stable_dim for (I, J), r in mat.items()}
    return status, {"entries": len(mat), "mismatches": mismatches, "unstable": unstable, "drift": drift, "dims": dims}


def check_rigid(c, ctx):
    from .ct import object_from_subsets, rigidity_check

    eq = _eq(c["f"], ctx["p"])
    obj = object_from_subsets(eq, [set(s) for s in c["subsets"]])
    rig = rigidity_check(obj, ctx["D_schedule"])
    if rig["rigid"] is None:
        return "inconclusive", {"dims": rig["dims"]}
    ok = rig["rigid"] == bool(c.get("expect", True))
    return ("pass" if ok else "fail"), {"rigid": rig["rigid"], "dims": rig["dims"], "faults": rig["engine_faults"]}


def _omegas(c, n):
    from .ct import all_omegas

    om = c.get("omega", "all")
    return all_omegas(n) if om == "all" else [tuple(om)]


def check_ct(c, ctx):
    from .ct import ct_report

    eq = _eq(c["f"], ctx["p"])
    expect = c.get("expect", "cluster-tilting-on-catalog")
    rows = []
    for om in _omegas(c, eq.n):
        rep = ct_report(eq, om, schedule=ctx["D_schedule"], seed=ctx["seed"])
        rows.append({"omega": list(om), "overall": rep.overall, "rigid": rep.rigid,
                     "witness": rep.witness["module"] if rep.witness else None})
    ok = all(r["overall"] == expect for r in rows)
    return ("pass" if ok else "fail"), {"expect": expect, "reports": rows}


def check_witness(c, ctx):
    from .ct import check_factor_smooth, witness_non_ct

    eq = _eq(c["f"], ctx["p"])
    bad = c.get("bad_index")
    if bad is None:
        bad = next(i for i, s in enumerate(check_factor_smooth(eq), start=1) if not s)
    rows = []
    for om in _omegas(c, eq.n):
        w = witness_non_ct(eq, bad, om, ctx["D_schedule"], ctx["seed"])
        rows.append({"omega": list(om), "ext_S_W": w.ext_S_W, "ext_W_S": w.ext_W_S,
                     "membership": w.membership, "verified": w.verified})
    ok = all(r["verified"] for r in rows)
    return ("pass" if ok else "fail"), {"bad_index": bad, "witnesses": rows}


def six_way(M, N, sched, seed=0) -> dict:
    """The six vanishing verdicts for a pair of modules."""
    return {
        "ext_MN": ext_periodic(M, N, 1, sched).stable_dim,
        "ext_NM": ext_periodic(N, M, 1, sched).stable_dim,
        "mcm_M_Nd": tensor_mcm_check(M, N, sched, seed).verdict,
        "mcm_Md_N": tensor_mcm_check(dual(M), dual(N), sched, seed).verdict,
        "tor2_Md_N": tor_periodic(dual(M), N, 2, sched).stable_dim,
        "tor2_M_Nd": tor_periodic(M, dual(N), 2, sched).stable_dim,
    }


def six_way_verdicts(v: dict):
    """Booleans 'vanishes' per statement, or None where unstable."""
    out = []
    for key in ("ext_MN", "ext_NM", "tor2_Md_N", "tor2_M_Nd"):
        out.append(None if v[key] == "unstable" else v[key] == 0)
    for key in ("mcm_M_Nd", "mcm_Md_N"):
        out.append(None if v[key] == "unstable" else v[key] == "MCM")
    return out


def six_way_catalog(eq: FactoredEquation, minimum: int = 5):
    """S_I, witnesses for singular factors and, if that is too small, pairwise sums of S_I."""
    from .ct import default_catalog

    cat = default_catalog(eq)
    if len(cat) < minimum:
        base = list(cat)
        for a in range(len(base)):
            for b in range(a + 1, len(base)):
                cat.append((f"{base[a][0]}+{base[b][0]}", direct_sum(base[a][1], base[b][1])))
    return cat


def check_six_way(c, ctx):
    eq = _eq(c["f"], ctx["p"])
    cat = six_way_catalog(eq)
    pairs = [(a, b) for a in cat for b in cat]
    limit = c.get("max_pairs")
    if limit:
        pairs = pairs[: int(limit)]
    rows, bad, unstable = [], [], []
    for (la, A), (lb, B) in pairs:
        v = six_way(A, B, ctx["D_schedule"], ctx["seed"])
        b = six_way_verdicts(v)
        known = [x for x in b if x is not None]
        if len(known) < len(b):
            unstable.append([la, lb])
        if len(set(known)) > 1:
            bad.append([la, lb])
        rows.append({"pair": [la, lb], "verdicts": v})
    status = "fail" if bad else ("inconclusive" if unstable else "pass")
    return status, {"pairs": len(pairs), "disagreements": bad, "unstable": unstable, "rows": rows}


def check_duality(c, ctx):
    eq = _eq(c["f"], ctx["p"])
    S = _subsets(eq)
    sched = ctx["D_schedule"]
    bad, unstable = [], []
    for I in S:
        for J in S:
            a = ext_periodic(S[I], S[J], 1, sched)
            b = ext_periodic(dual(S[J]), dual(S[I]), 1, sched)
            if not (a.stable and b.stable):
                unstable.append([_lab(I), _lab(J)])
            elif a.stable_dim != b.stable_dim:
                bad.append([_lab(I), _lab(J), a.stable_dim, b.stable_dim])
    status = "fail" if bad else ("inconclusive" if unstable else "pass")
    return status, {"pairs": len(S) ** 2, "mismatches": bad, "unstable": unstable}


def check_knoerrer(c, ctx):
    from .modules import iso_test

    eq = _eq(c["f"], ctx["p"])
    rng = np.random.default_rng(ctx["seed"])
    count = int(c.get("random", 20))
    valid = 0
    for k in range(count):
        m = random_mf(eq, 1 + k % 3, rng)
        valid += bool(validate_mf(knoerrer(m)).valid)
    S = _subsets(eq)
    iso = {}
    for I, m in S.items():
        iso[_lab(I)] = iso_test(knoerrer(syzygy(m)), syzygy(knoerrer(m)), seed=ctx["seed"]).verdict
    transfer, bad = [], []
    for I, J in c.get("pairs", []):
        a, b = s_ideal(eq, set(I)), s_ideal(eq, set(J))
        e0 = ext_periodic(a, b, 1, ctx["D_schedule"]).stable_dim
        e1 = ext_periodic(knoerrer(a), knoerrer(b), 1, SMALL_SCHEDULE).stable_dim
        transfer.append([list(I), list(J), e0, e1])
        if "unstable" in (e0, e1) or (e0 == 0) != (e1 == 0):
            bad.append([list(I), list(J)])
    ok = valid == count and all(v == "isomorphic" for v in iso.values()) and not bad
    return ("pass" if ok else "fail"), {"valid_images": [valid, count], "syzygy_commutes": iso,
                                        "ext_transfer": transfer}


def conifold_catalog(p: int = DEFAULT_PRIME):
    """M = R (+) K over xy + uv with K the Knoerrer image of S_x, and the catalog of the probe."""
    eq = FactoredEquation.from_text("x*y", RingCtx(("x", "y"), p))
    K = knoerrer(s_ideal(eq, {1}))
    R = trivial(K.f)
    cat = [("R", R), ("K", K), ("K*", dual(K)), ("syz K", syzygy(K)), ("syz K*", syzygy(dual(K)))]
    return direct_sum(R, K), cat


def check_conifold(c, ctx):
    from .endo import pd_probe, perp_catalog
    from .modules import add_membership

    M, cat = conifold_catalog(ctx["p"])
    sched = tuple(c.get("schedule", SMALL_SCHEDULE))
    perp = perp_catalog(M, cat, 1, sched)
    add = [lab for lab, X in cat if add_membership(X, M, seed=ctx["seed"]).verdict == "member"]
    depth = int(c.get("depth", 6))
    pds = {lab: pd_probe(M, X, depth, D=int(c.get("D", 4)), seed=ctx["seed"])["pd"] for lab, X in cat}
    ok = sorted(perp["members"]) == sorted(add) and not perp["unstable"] and all(
        isinstance(v, int) and v <= 3 for v in pds.values())
    return ("pass" if ok else "fail"), {"perp": perp["members"], "add": add, "pd": pds,
                                        "note": "catalog-level consistency evidence, not a proof"}


CHECKS = {
    "ext": check_ext,
    "nestedness": check_nestedness,
    "rigid": check_rigid,
    "ct": check_ct,
    "witness": check_witness,
    "six-way": check_six_way,
    "duality": check_duality,
    "knoerrer": check_knoerrer,
    "conifold": check_conifold,
}


def run_suite(cfg: dict) -> dict:
    cfg = validate_config(cfg)
    ctx = {"p": cfg["p"], "seed": cfg["seed"], "D_schedule": tuple(cfg["D_schedule"])}
    results = []
    for k, c in enumerate(cfg["checks"]):
        name = c.get("name", f"{c['kind']}-{k}")
        try:
            status, details = CHECKS[c["kind"]](c, ctx)
        except (ValueError, ArithmeticError) as exc:
            status, details = "fail", {"error": f"{type(exc).__name__}: {exc}"}
        results.append({"name": name, "kind": c["kind"], "status": status, "details": details})
    counts = {s: sum(r["status"] == s for r in results) for s in ("pass", "fail", "inconclusive")}
    exit_code = 3 if counts["fail"] else (2 if counts["inconclusive"] else 0)
    return {
        "meta": {"p": cfg["p"], "vars": ["x", "y"], "D_schedule": cfg["D_schedule"], "seed": cfg["seed"],
                 "version": __version__},
        "checks": results,
        "summary": {**counts, "total": len(results), "exit_code": exit_code},
    }
