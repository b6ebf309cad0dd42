"""Command-line interface.

Exit codes: 0 pass or stable, 1 usage error, 2 inconclusive or unstable, 3 refuted.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .field import DEFAULT_PRIME, check_prime
from .hom import DEFAULT_SCHEDULE, check_schedule, ext1_cocycle, ext_periodic, tor_periodic
from .mf import (
    FactoredEquation,
    MatrixFactorization,
    direct_sum,
    dual,
    knoerrer,
    s_ideal,
    syzygy,
    trivial,
)
from .parser import ParseError
from .poly import RingCtx
from .truncation import TruncationTooLarge

EXIT_OK, EXIT_USAGE, EXIT_INCONCLUSIVE, EXIT_REFUTED = 0, 1, 2, 3
SMALL_SCHEDULE = (3, 4, 5)
_VAR_ORDER = ("x", "y", "z", "w", "u", "v")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    p: int = DEFAULT_PRIME
    vars: tuple[str, ...] = ("x", "y")
    D_schedule: tuple[int, ...] = DEFAULT_SCHEDULE
    seed: int = 0
    depth: int = 6
    out: str | None = None

    def __post_init__(self):
        check_prime(self.p)
        self.D_schedule = check_schedule(self.D_schedule)

    def meta(self) -> dict:
        return {"p": self.p, "vars": list(self.vars), "D_schedule": list(self.D_schedule),
                "seed": self.seed, "version": __version__}


def infer_vars(text: str) -> tuple[str, ...]:
    names = set(re.findall(r"[A-Za-z_][A-Za-z_0-9]*", text))
    rank = {v: i for i, v in enumerate(_VAR_ORDER)}
    return tuple(sorted(names, key=lambda v: (rank.get(v, len(rank)), v)))


def parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.replace(" ", "").split(",") if t)
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


# -- module specs ---------------------------------------------------------

_WRAPPERS = {"knoerrer": None, "syz": syzygy, "syzygy": syzygy, "dual": dual}


def _split_args(body: str) -> list[str]:
    parts, depth, cur = [], 0, ""
    for ch in body:
        if ch in "({":
            depth += 1
        elif ch in ")}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    return [p.strip() for p in parts if p.strip()]


def _fresh_pair(ctx: RingCtx) -> tuple[str, str]:
    k = 0
    while True:
        u, v = ("u", "v") if k == 0 else (f"u{k}", f"v{k}")
        if u not in ctx.vars and v not in ctx.vars:
            return u, v
        k += 1


def resolve_module(spec: str, eq: FactoredEquation) -> MatrixFactorization:
    """R | S{1,2} | knoerrer(X) | syz(X) | dual(X) | sum(X, Y, ...) | path/to/mf.json"""
    s = spec.strip()
    if s == "R":
        return trivial(eq.f)
    m = re.fullmatch(r"S\{([\d,\s]+)\}", s)
    if m:
        I = set(parse_int_list(m.group(1)))
        if not I or not I <= set(range(1, eq.n + 1)):
            raise UsageError(f"subset {sorted(I)} is not a nonempty subset of 1..{eq.n}")
        return s_ideal(eq, I)
    m = re.fullmatch(r"([a-z]+)\((.*)\)", s, flags=re.S)
    if m and (m.group(1) in _WRAPPERS or m.group(1) == "sum"):
        name, body = m.group(1), m.group(2)
        if name == "sum":
            parts = [resolve_module(a, eq) for a in _split_args(body)]
            if not parts:
                raise UsageError("sum() needs at least one summand")
            return direct_sum(*parts)
        inner = resolve_module(body, eq)
        if name == "knoerrer":
            return knoerrer(inner, *_fresh_pair(inner.ctx))
        return _WRAPPERS[name](inner)
    path = Path(s)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise UsageError(f"no such file: {s}")
        try:
            return MatrixFactorization.from_json(json.loads(path.read_text()))
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"{s}: not a matrix factorization file ({exc})") from exc
    raise UsageError(f"cannot read module spec {spec!r}")


def _same_ring(*ms: MatrixFactorization):
    for m in ms[1:]:
        if m.f != ms[0].f:
            raise UsageError("modules live over different rings (wrap both in knoerrer(...) or neither)")


# -- output -----------------------------------------------------------------

def dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def emit(cfg: RunConfig, result) -> None:
    text = dump({"meta": cfg.meta(), "result": result})
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


# -- commands ----------------------------------------------------------------

def _equation(args) -> tuple[FactoredEquation, RunConfig]:
    vars_ = tuple(args.vars.split(",")) if args.vars else infer_vars(args.f)
    if not vars_:
        raise UsageError("equation has no variables")
    ctx = RingCtx(vars_, args.p)
    eq = FactoredEquation.from_text(args.f, ctx)
    if args.schedule:
        sched = parse_int_list(args.schedule)
    else:
        sched = DEFAULT_SCHEDULE if len(vars_) <= 2 else SMALL_SCHEDULE
    cfg = RunConfig(args.p, vars_, sched, args.seed, getattr(args, "depth", 6), args.out)
    return eq, cfg


def _schedule_for(cfg: RunConfig, m: MatrixFactorization, explicit: bool):
    """Extra Knoerrer variables make truncations much larger; use the small schedule there."""
    if explicit or m.ctx.nvars <= 2:
        return cfg.D_schedule
    return SMALL_SCHEDULE


def cmd_ext(args, tor: bool = False) -> int:
    eq, cfg = _equation(args)
    M, N = resolve_module(args.M, eq), resolve_module(args.N, eq)
    _same_ring(M, N)
    sched = _schedule_for(cfg, M, bool(args.schedule))
    cfg.D_schedule = sched
    cfg.vars = M.ctx.vars
    if tor:
        res = tor_periodic(M, N, args.i, sched)
    elif args.engine == "cocycle":
        if args.i != 1:
            raise UsageError("the cocycle engine computes Ext^1 only")
        res = ext1_cocycle(M, N, parse_int_list(args.degrees))
    else:
        res = ext_periodic(M, N, args.i, sched)
    emit(cfg, res.to_json())
    return EXIT_OK if res.stable else EXIT_INCONCLUSIVE


def cmd_transform(args, fn) -> int:
    eq, cfg = _equation(args)
    m = fn(resolve_module(args.M, eq))
    cfg.vars = m.ctx.vars
    emit(cfg, m.to_json())
    return EXIT_OK


def cmd_iso(args) -> int:
    from .modules import iso_test

    eq, cfg = _equation(args)
    M, N = resolve_module(args.M, eq), resolve_module(args.N, eq)
    _same_ring(M, N)
    cfg.vars = M.ctx.vars
    use_eq = eq if M.ctx == eq.ctx else None
    w = iso_test(M, N, trials=args.trials, seed=cfg.seed, eq=use_eq, D=cfg.D_schedule[0])
    emit(cfg, w.to_json())
    return {"isomorphic": EXIT_OK, "not-isomorphic": EXIT_REFUTED}.get(w.verdict, EXIT_INCONCLUSIVE)


def cmd_pushforward(args) -> int:
    from .modules import PushforwardError, pushforward

    eq, cfg = _equation(args)
    M = resolve_module(args.M, eq)
    cfg.vars = M.ctx.vars
    sched = _schedule_for(cfg, M, bool(args.schedule))
    cfg.D_schedule = sched
    if M.ctx.nvars < 3:
        raise UsageError("pushforward needs at least three variables")
    try:
        res = pushforward(M, sched, cfg.seed)
    except PushforwardError as exc:
        emit(cfg, {"error": str(exc)})
        return EXIT_REFUTED
    emit(cfg, res.to_json())
    return EXIT_OK if res.exact else EXIT_REFUTED


def cmd_ct_check(args) -> int:
    from .ct import ct_report

    eq, cfg = _equation(args)
    omega = parse_int_list(args.omega) if args.omega else None
    rep = ct_report(eq, omega, schedule=cfg.D_schedule, seed=cfg.seed)
    emit(cfg, rep.to_json())
    return {"cluster-tilting-on-catalog": EXIT_OK, "refuted": EXIT_REFUTED}.get(rep.overall, EXIT_INCONCLUSIVE)


def cmd_witness(args) -> int:
    from .ct import witness_non_ct

    eq, cfg = _equation(args)
    omega = parse_int_list(args.omega) if args.omega else None
    w = witness_non_ct(eq, args.bad_index, omega, cfg.D_schedule, cfg.seed)
    emit(cfg, w.to_json())
    return EXIT_OK if w.verified else EXIT_INCONCLUSIVE


def cmd_endo_probe(args) -> int:
    from .endo import pd_probe

    eq, cfg = _equation(args)
    M, N = resolve_module(args.M, eq), resolve_module(args.N, eq)
    _same_ring(M, N)
    cfg.vars = M.ctx.vars
    res = pd_probe(M, N, depth=args.depth, D=args.D, seed=cfg.seed)
    emit(cfg, res)
    return EXIT_OK if isinstance(res["pd"], int) else EXIT_INCONCLUSIVE


def cmd_suite(args) -> int:
    from .suite import load_config, run_suite

    cfg_doc = load_config(args.config)
    report = run_suite(cfg_doc)
    text = dump(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return report["summary"]["exit_code"]


# -- parser -------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(sp: argparse.ArgumentParser, needs_f: bool = True):
    if needs_f:
        sp.add_argument("--f", required=True, help='equation in factored form, e.g. "x*y*(x+y)"')
        sp.add_argument("--vars", help="comma-separated variable names (default: read from the equation)")
        sp.add_argument("--p", type=int, default=DEFAULT_PRIME, help="prime characteristic")
        sp.add_argument("--schedule", help="truncation orders, e.g. 8,10,12")
        sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="write JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mflab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"mflab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, helptext in (("ext", "dimension of Ext^i(M, N)"), ("tor", "dimension of Tor_i(M, N)")):
        sp = sub.add_parser(name, help=helptext)
        _common(sp)
        sp.add_argument("--M", required=True)
        sp.add_argument("--N", required=True)
        sp.add_argument("--i", type=int, default=1)
        if name == "ext":
            sp.add_argument("--engine", choices=("periodic", "cocycle"), default="periodic")
            sp.add_argument("--degrees", default="3,4,5", help="degree bounds for the cocycle engine")

    for name in ("knoerrer", "syzygy", "dual"):
        sp = sub.add_parser(name, help=f"{name} of a factorization, printed as JSON")
        _common(sp)
        sp.add_argument("--M", required=True)

    sp = sub.add_parser("iso", help="isomorphism test with witnesses")
    _common(sp)
    sp.add_argument("--M", required=True)
    sp.add_argument("--N", required=True)
    sp.add_argument("--trials", type=int, default=16)

    sp = sub.add_parser("pushforward", help="0 -> M -> R^lambda -> M1 -> 0")
    _common(sp)
    sp.add_argument("--M", required=True)

    sp = sub.add_parser("ct-check", help="cluster-tilting report for S^omega")
    _common(sp)
    sp.add_argument("--omega", help="permutation, e.g. 2,1,3 (default: identity)")

    sp = sub.add_parser("witness", help="module refuting cluster tilting for a singular factor")
    _common(sp)
    sp.add_argument("--bad-index", type=int, required=True)
    sp.add_argument("--omega")

    sp = sub.add_parser("endo-probe", help="add(M)-approximation resolution of N and its length")
    _common(sp)
    sp.add_argument("--M", required=True)
    sp.add_argument("--N", required=True)
    sp.add_argument("--depth", type=int, default=6)
    sp.add_argument("--D", type=int, default=6, help="truncation order for Hom spaces")

    sp = sub.add_parser("suite", help="run a battery of checks from a JSON config")
    _common(sp, needs_f=False)
    sp.add_argument("--config", help="config path (default: the shipped acceptance battery)")
    return ap


COMMANDS = {
    "ext": cmd_ext,
    "tor": lambda a: cmd_ext(a, tor=True),
    "knoerrer": lambda a: cmd_transform(a, lambda m: knoerrer(m, *_fresh_pair(m.ctx))),
    "syzygy": lambda a: cmd_transform(a, syzygy),
    "dual": lambda a: cmd_transform(a, dual),
    "iso": cmd_iso,
    "pushforward": cmd_pushforward,
    "ct-check": cmd_ct_check,
    "witness": cmd_witness,
    "endo-probe": cmd_endo_probe,
    "suite": cmd_suite,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ParseError) as exc:
        print(f"mflab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TruncationTooLarge as exc:
        print(f"mflab: truncation too large: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except ValueError as exc:
        print(f"mflab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
