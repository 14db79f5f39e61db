import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from src.common import config
from src.common import curves
from src.common import lie_layers as ll
from src.common import matrix_groups as mg
from src.common import oracle
from src.common import ring_matrix as rm
from src.common import subgroup_engine as se
from src.common.criteria import (
    IsogenyDecomposition,
    TorusFactor,
    center_invariants,
    check_2_2_5,
    check_2_3_exceptions,
    check_2_4,
    check_3_3_1,
    check_3_4_1,
    prime_of,
    run_fixture,
)
from src.common.dynkin import parse_datum, tilde_datum
from src.common.errors import ParseError, SurjectivityError, exit_code_for
from src.common.galois_ring import parse_element, parse_ring, primitive_root, ring_arith, teichmuller
from src.common.report import render

log = logging.getLogger(__name__)

SUBCOMMANDS = ("ring", "group", "lift-check", "layers", "criteria", "oracle", "curve")
TORUS_DEGREE = {"GL": None, "GSp": 2, "GSO_plus": 2, "GSO_minus": 2}


# =========================
# REQUEST
# =========================
@dataclass
class CommandRequest:
    subcommand: str
    action: Optional[str] = None
    options: Dict[str, Any] = field(default_factory=dict)
    fmt: str = "structured"
    seed: int = config.SEED
    threads: int = config.THREADS
    word_budget: int = config.WORD_BUDGET
    node_budget: int = config.SCHREIER_NODE_BUDGET
    prime_budget: int = config.PRIME_BUDGET

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ParseError(f"unknown subcommand {self.subcommand!r}")
        for name in ("threads", "word_budget", "node_budget", "prime_budget"):
            if getattr(self, name) < 1:
                raise ParseError(f"{name} must be positive, got {getattr(self, name)}")

    def opt(self, name: str, default: Any = None) -> Any:
        value = self.options.get(name)
        return default if value is None else value

    def need(self, name: str) -> Any:
        value = self.options.get(name)
        if value is None:
            raise ParseError(f"--{name.replace('_', '-')} is required for {self.subcommand} {self.action or ''}".strip())
        return value


def read_generators(path: str, D: mg.GroupDescriptor) -> List[np.ndarray]:
    """One matrix per line, row-major integers separated by whitespace or commas; '#' starts a comment."""
    p = Path(path)
    if not p.exists():
        raise ParseError(f"generator file {path} not found")
    out = []
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        body = line.split("#", 1)[0].replace(",", " ").strip()
        if not body:
            continue
        try:
            vals = [int(v) for v in body.split()]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: not a list of integers") from exc
        M = rm.from_ints(D.ring, D.size, vals)
        out.append(D.canon(M[None])[0] if D.is_quotient else M)
    if not out:
        raise ParseError(f"{path} holds no generators")
    return out


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ParseError(f"bad integer list {text!r}") from exc


# =========================
# RING / GROUP
# =========================
def _ring(req: CommandRequest) -> Tuple[int, Dict]:
    desc = parse_ring(req.need("ring"))
    out: Dict[str, Any] = {
        "ring": str(desc), "p": desc.p, "r": desc.r, "n": desc.n, "q": desc.q,
        "order": desc.order, "unit_count": desc.unit_count, "modulus": list(desc.modulus),
        "primitive_root": str(primitive_root(desc)),
    }
    op = req.opt("op")
    if op:
        a = parse_element(req.need("a"), desc)
        b = parse_element(req.opt("b"), desc) if req.opt("b") else None
        result = ring_arith(a, b, op)
        out["op"] = {"name": op, "a": str(a), "b": str(b) if b else None, "result": str(result)}
        if op not in ("inv", "is_unit"):
            out["op"]["teichmuller_of_a"] = str(teichmuller(a, desc))
    return 0, out


def _group(req: CommandRequest) -> Tuple[int, Dict]:
    D = mg.parse_descriptor(req.need("group"))
    out: Dict[str, Any] = {
        "group": str(D), "family": D.family, "size": D.size, "level": D.level,
        "order": mg.group_order(D), "residue_order": mg.field_order(D), "lie_dimension": mg.lie_dimension(D),
    }
    if req.opt("generators"):
        rows = []
        for i, M in enumerate(read_generators(req.opt("generators"), D)):
            mem = mg.membership_and_multiplier(M, D)
            rows.append({"index": i, "member": mem.member,
                         "multiplier": str(mem.multiplier) if mem.multiplier is not None else None,
                         "reason": mem.reason})
        out["membership"] = rows
        return (0 if all(r["member"] for r in rows) else 20), out
    return 0, out


# =========================
# ENGINE
# =========================
def _subgroup(req: CommandRequest) -> se.GeneratedSubgroup:
    D = mg.parse_descriptor(req.need("group"))
    gens = read_generators(req.need("generators"), D)
    return se.generated_subgroup(D, gens, req.opt("hypothesis", []))


def _tilde_report(req: CommandRequest, K: se.GeneratedSubgroup):
    D = K.desc
    if D.family not in TORUS_DEGREE:
        raise ParseError(f"mode TILDE is implemented for {', '.join(TORUS_DEGREE)}, got {D.family}")
    degree = req.opt("torus_degree") or TORUS_DEGREE[D.family] or D.size
    datum = tilde_datum(D.family, D.size, req.opt("k1", 1))
    iso = IsogenyDecomposition([TorusFactor(req.opt("torus_rank", 1), degree)], D.ring.p)
    return check_2_4(datum, iso, D.ring.q, compute=not req.opt("no_compute", False))


def _lift_check(req: CommandRequest) -> Tuple[int, Dict]:
    K = _subgroup(req)
    mode = req.opt("mode", se.FULL)
    report = _tilde_report(req, K) if mode == se.TILDE else None
    verdict = se.decide_surjectivity(K, mode, report, req.word_budget, req.node_budget)
    out: Dict[str, Any] = {"verdict": verdict.to_dict()}
    if report is not None:
        out["criteria"] = report.to_dict()
    if req.opt("index"):
        out["index"] = se.index_decomposition(K, req.word_budget, req.node_budget).to_dict()
    return verdict.exit_code, out


def _layers(req: CommandRequest) -> Tuple[int, Dict]:
    K = _subgroup(req)
    filtration = se.layer_filtration(K, req.word_budget, req.node_budget)
    out: Dict[str, Any] = {
        "group": str(K.desc),
        "residue_order": filtration.residue.order,
        "residue_target_order": filtration.residue.target_order,
        "lie_dimension": filtration.lie_dim,
        "layers": [{"layer": s, "dim": d, "basis": filtration.layers[s].tolist()}
                   for s, d in sorted(filtration.dims.items())],
        "exact": filtration.exact,
        "reason": filtration.reason,
        "order": filtration.order,
    }
    if req.opt("shape"):
        out["layer_shape"] = se.check_3_3_2_shape(filtration)
    return (0 if filtration.exact else 30), out


# =========================
# CRITERIA
# =========================
def _datum(req: CommandRequest, name: str = "datum"):
    return parse_datum(req.need(name), req.opt("k1", 1))


def _criteria(req: CommandRequest) -> Tuple[int, Dict]:
    action = req.action
    if action == "check225":
        report = check_2_2_5(_datum(req), req.need("q"))
    elif action == "check23":
        report = check_2_3_exceptions(_datum(req), req.need("q"))
    elif action == "check24":
        if req.opt("fixture"):
            report = run_fixture(req.opt("fixture"), compute=not req.opt("no_compute", False))
        else:
            q = req.need("q")
            iso = IsogenyDecomposition([TorusFactor(req.opt("torus_rank", 1), req.need("torus_degree"),
                                                    not req.opt("nonsplit", False))], prime_of(q))
            report = check_2_4(_datum(req), iso, q, compute=not req.opt("no_compute", False))
    elif action == "center":
        if req.opt("group"):
            return 0, {"center": center_invariants(mg.parse_descriptor(req.opt("group")))}
        return 0, {"center": center_invariants(_datum(req))}
    elif action == "check331":
        report = check_3_3_1(_datum(req, "der"), _datum(req, "tilde"), req.need("p"),
                             req.opt("disjoint", False), req.opt("torus_rank", 1))
    elif action == "check341":
        report = check_3_4_1(_datum(req), req.need("p"))
    else:
        raise ParseError(f"unknown criteria action {action!r}")
    return (0 if report.conclusion is not None else 20), {"criteria": report.to_dict()}


# =========================
# ORACLE
# =========================
def _oracle_group(req: CommandRequest):
    D = mg.parse_descriptor(req.need("group"))
    gens = read_generators(req.opt("generators"), D) if req.opt("generators") else mg.standard_generators(D)
    return D, gens


def _oracle(req: CommandRequest) -> Tuple[int, Dict]:
    action = req.action
    if action == "enumerate":
        D, gens = _oracle_group(req)
        G = oracle.enumerate_closure(D, gens, req.opt("bound", config.ENUM_BOUND))
        return 0, {"group": str(D), "order": G.order, "full_order": mg.group_order(D),
                   "full": G.order == mg.group_order(D), "max_depth": int(G.depth.max())}
    if action == "section":
        cover = mg.parse_descriptor(req.need("cover"))
        base = mg.parse_descriptor(req.need("base"))
        res = oracle.find_section(cover, base, req.opt("relation_budget", config.SECTION_RELATION_BUDGET), req.seed)
        return (0 if res.found else 20), {"section": {
            "found": res.found, "base_order": res.base_order, "kernel_order": res.kernel_order,
            "certificate": res.certificate, "lifts": [rm.to_ints(M) for M in res.lifts]}}
    if action == "factors":
        D, gens = _oracle_group(req)
        G = oracle.enumerate_closure(D, gens, req.opt("bound", config.ENUM_BOUND))
        factors = oracle.composition_factors(G)
        return 0, {"group": str(D), "order": G.order,
                   "factors": [{"order": f.order, "abelian": f.abelian, "simple": f.simple, "label": f.label}
                               for f in factors]}
    if action == "generation":
        D = mg.parse_descriptor(req.need("group"))
        S = read_generators(req.opt("generators"), D) if req.opt("generators") else None
        report = oracle.verify_generation_props(D, S)
        return (0 if report.implication_holds is not False else 20), {"generation": report}
    raise ParseError(f"unknown oracle action {action!r}")


# =========================
# CURVES
# =========================
def _primes_up_to(f: curves.HyperellipticInput, bound: int) -> List[int]:
    return [ell for ell in sympy.primerange(3, bound + 1) if f.lead % ell and curves.disc(f) % ell]


def _curve(req: CommandRequest) -> Tuple[int, Dict]:
    action = req.action
    if action == "search":
        f = curves.search_cubic(_int_list(req.need("targets")), req.need("bound"), req.prime_budget)
        return 0, {"cubic": str(f), "coefficients": list(f.coeffs),
                   "discriminant": curves.disc_sqfree(f).to_dict()}
    if action == "count" and req.opt("quartic"):
        ell = req.need("ell")
        return 0, {"plane_quartic": {"ell": ell, "points": curves.plane_quartic_count(ell)}}
    f = curves.parse_polynomial(req.need("f"))
    if action == "verdict":
        verdict = curves.verdict_4_2_1(f, req.opt("d"), req.opt("assert_e_is_q", False), req.prime_budget)
        return verdict.exit_code, {"verdict": verdict.to_dict()}
    if action == "disc":
        return 0, {"polynomial": str(f), "discriminant": curves.disc_sqfree(f).to_dict()}
    if action == "pattern":
        ell = req.need("ell")
        return 0, {"polynomial": str(f), "ell": ell, "pattern": list(curves.factor_pattern_mod(f, ell))}
    if action == "certify":
        cert = curves.certify_Sn(f, req.prime_budget)
        code = {curves.SN_CERTIFIED: 0, curves.NOT_SN: 20}.get(cert.verdict, 30)
        return code, {"polynomial": str(f), "certificate": cert.to_dict()}
    if action == "count":
        primes = [req.opt("ell")] if req.opt("ell") else _primes_up_to(f, req.need("up_to"))
        rows = curves.frobenius_table(f, primes, req.threads)
        ok = all(r.weil_ok and r.functional_equation_ok and r.extra_count_ok is not False for r in rows)
        return (0 if ok else 20), {"polynomial": str(f), "frobenius": [r.to_dict() for r in rows]}
    if action == "mod2":
        primes = [req.opt("ell")] if req.opt("ell") else _primes_up_to(f, req.need("up_to"))
        rows = [curves.mod2_consistency(f, ell) for ell in primes]
        return (0 if all(r.equal for r in rows) else 20), {"polynomial": str(f),
                                                           "mod2": [r.to_dict() for r in rows]}
    raise ParseError(f"unknown curve action {action!r}")


HANDLERS: Dict[str, Callable[[CommandRequest], Tuple[int, Dict]]] = {
    "ring": _ring,
    "group": _group,
    "lift-check": _lift_check,
    "layers": _layers,
    "criteria": _criteria,
    "oracle": _oracle,
    "curve": _curve,
}


def run(req: CommandRequest) -> Tuple[int, Dict]:
    """Dispatch a request; errors become a report with the mapped exit code."""
    payload: Dict[str, Any] = {"command": req.subcommand, "action": req.action, "seed": req.seed}
    try:
        code, body = HANDLERS[req.subcommand](req)
    except SurjectivityError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        code = exit_code_for(exc)
        body = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        factor = getattr(exc, "factor", "")
        if factor:
            body["error"]["factor"] = factor
    payload.update(body)
    payload["exit_code"] = code
    return code, payload


# =========================
# ARGUMENTS
# =========================
def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", dest="fmt", choices=("text", "structured"), default="structured")
    parser.add_argument("--seed", type=int, default=config.SEED)
    parser.add_argument("--threads", type=int, default=config.THREADS)
    parser.add_argument("--word-budget", type=int, default=config.WORD_BUDGET)
    parser.add_argument("--node-budget", type=int, default=config.SCHREIER_NODE_BUDGET)
    parser.add_argument("--prime-budget", type=int, default=config.PRIME_BUDGET)
    parser.add_argument("--log-level", default=config.LOG_LEVEL)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="surjectivity", description="Surjectivity criteria for p-adic matrix groups")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("ring", help="Galois ring arithmetic")
    p.add_argument("--ring", required=True)
    p.add_argument("--op", choices=("add", "sub", "mul", "inv", "is_unit"))
    p.add_argument("--a")
    p.add_argument("--b")
    _common(p)

    p = sub.add_parser("group", help="group descriptor data and membership")
    p.add_argument("--group", required=True)
    p.add_argument("--generators")
    _common(p)

    for name in ("lift-check", "layers"):
        p = sub.add_parser(name)
        p.add_argument("--group", required=True)
        p.add_argument("--generators", required=True)
        p.add_argument("--hypothesis", action="append", default=[])
        if name == "lift-check":
            p.add_argument("--mode", choices=se.MODES, default=se.FULL)
            p.add_argument("--index", action="store_true")
            p.add_argument("--torus-degree", type=int)
            p.add_argument("--torus-rank", type=int, default=1)
            p.add_argument("--k1", type=int, default=1)
            p.add_argument("--no-compute", action="store_true")
        else:
            p.add_argument("--shape", action="store_true")
        _common(p)

    p = sub.add_parser("criteria", help="structural condition checkers")
    p.add_argument("action", choices=("check225", "check23", "check24", "center", "check331", "check341"))
    p.add_argument("--datum")
    p.add_argument("--der")
    p.add_argument("--tilde")
    p.add_argument("--group")
    p.add_argument("--fixture")
    p.add_argument("--q", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--k1", type=int, default=1)
    p.add_argument("--torus-degree", type=int)
    p.add_argument("--torus-rank", type=int, default=1)
    p.add_argument("--nonsplit", action="store_true")
    p.add_argument("--disjoint", action="store_true")
    p.add_argument("--no-compute", action="store_true")
    _common(p)

    p = sub.add_parser("oracle", help="brute-force ground truth")
    p.add_argument("action", choices=("enumerate", "section", "factors", "generation"))
    p.add_argument("--group")
    p.add_argument("--generators")
    p.add_argument("--cover")
    p.add_argument("--base")
    p.add_argument("--bound", type=int)
    p.add_argument("--relation-budget", type=int)
    _common(p)

    p = sub.add_parser("curve", help="the mod-2 criterion for y^2 = f(x)")
    p.add_argument("action", choices=("verdict", "disc", "pattern", "certify", "count", "mod2", "search"))
    p.add_argument("--f")
    p.add_argument("--d", type=int)
    p.add_argument("--ell", type=int)
    p.add_argument("--up-to", type=int)
    p.add_argument("--quartic", action="store_true")
    p.add_argument("--assert-e-is-q", action="store_true")
    p.add_argument("--targets")
    p.add_argument("--bound", type=int)
    _common(p)
    return parser


_GLOBAL = ("subcommand", "action", "fmt", "seed", "threads", "word_budget", "node_budget", "prime_budget", "log_level")


def request_from_args(args: argparse.Namespace) -> CommandRequest:
    options = {k: v for k, v in vars(args).items() if k not in _GLOBAL}
    return CommandRequest(subcommand=args.subcommand, action=getattr(args, "action", None), options=options,
                          fmt=args.fmt, seed=args.seed, threads=args.threads, word_budget=args.word_budget,
                          node_budget=args.node_budget, prime_budget=args.prime_budget)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s | %(levelname)s | %(message)s",
        stream=sys.stderr,
    )
    try:
        req = request_from_args(args)
    except ParseError as exc:
        log.error("bad request: %s", exc)
        print(render({"command": args.subcommand, "error": {"type": "ParseError", "message": str(exc)},
                      "exit_code": 2}, args.fmt))
        return 2
    code, payload = run(req)
    print(render(payload, req.fmt))
    return code


if __name__ == "__main__":
    sys.exit(main())
