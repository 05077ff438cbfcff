"""Command-line front end: norm evaluation, cb-norm estimates, Fock chain
checks, certificate search, subspace decomposition, weight classification,
strip experiments, and reproducible report suites.

Exit codes: 0 all checks pass, 1 check failures, 2 infeasible certificate,
64 usage errors.  The special path "-" reads JSON from stdin / writes to
stdout.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import certificates as cert_mod
from . import fock as fock_mod
from . import linalg as la
from . import reports
from . import spaces as sp_mod
from . import strip as strip_mod
from . import subspaces as sub_mod
from .reports import EXIT_CHECK_FAILURES, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _read_json(path: str):
    if path == "-":
        return json.load(sys.stdin)
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _write_text(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _build_parser() -> _Parser:
    parser = _Parser(prog="opspacelab")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p_norm = sub.add_parser("norm", help="matrix-level norm of an element")
    p_norm.add_argument("--element", default="-",
                        help="JSON file with {space, coefficients} ('-': stdin)")
    p_norm.add_argument("--seed", type=int, default=7)

    p_cb = sub.add_parser("cbnorm", help="exact or level-estimated cb-norms")
    p_cb.add_argument("--matrix", default="-", help="JSON matrix ('-': stdin)")
    p_cb.add_argument("--from", dest="source", default="row",
                      help="row|column, or a space JSON file for --level")
    p_cb.add_argument("--to", dest="target", default="column")
    p_cb.add_argument("--level", type=int, default=0,
                      help="level k for the lower-bound estimate (0: exact)")
    p_cb.add_argument("--seed", type=int, default=7)

    p_fock = sub.add_parser("fock", help="interpolation chain report")
    p_fock.add_argument("--n", type=int, default=2)
    p_fock.add_argument("--d", type=int, default=3)
    p_fock.add_argument("--theta", type=float, default=0.5)
    p_fock.add_argument("--lambdas", type=float, nargs="*", default=None)
    p_fock.add_argument("--seed", type=int, default=7)
    p_fock.add_argument("--output", default="-")

    p_cert = sub.add_parser("certify", help="search a state certificate")
    p_cert.add_argument("--spec", default="-",
                        help="JSON {source_dim, theta, matrix} ('-': stdin)")
    p_cert.add_argument("--seed", type=int, default=11)
    p_cert.add_argument("--output", default="-")

    p_dec = sub.add_parser("decompose", help="row/graph/column splitting")
    p_dec.add_argument("--subspace", default="-",
                       help="JSON {m, basis: [[x, y], ...]} ('-': stdin)")
    p_dec.add_argument("--output", default="-")

    p_cls = sub.add_parser("classify", help="weight-sequence classification")
    p_cls.add_argument("--xi", type=float, nargs="+", required=True)
    p_cls.add_argument("--tail", nargs="+", required=True,
                       choices=list(sub_mod.TAIL_RULES))
    p_cls.add_argument("--epsilon", type=float, default=0.5)
    p_cls.add_argument("--output", default="-")

    p_strip = sub.add_parser("strip", help="strip quadrature experiments")
    p_strip.add_argument("--nodes", type=int, default=96)
    p_strip.add_argument("--tmax", type=float, default=6.0)
    p_strip.add_argument("--basis-dim", type=int, default=16)
    p_strip.add_argument("--output", default="-")

    p_rep = sub.add_parser("report", help="run a named experiment suite")
    p_rep.add_argument("--suite", default="all")
    p_rep.add_argument("--seed", type=int, default=None)
    p_rep.add_argument("--theta", type=float, default=None)
    p_rep.add_argument("--n", type=int, default=None)
    p_rep.add_argument("--d", type=int, default=None)
    p_rep.add_argument("--level", type=int, default=None)
    p_rep.add_argument("--tolerance", action="append", default=[],
                       metavar="KEY=VAL")
    p_rep.add_argument("--format", dest="fmt", default="markdown",
                       choices=["json", "csv", "markdown"])
    p_rep.add_argument("--config", default=None,
                       help="JSON config file; explicit flags win")
    p_rep.add_argument("--output", default="-")
    return parser


def _cmd_norm(args) -> int:
    element = sp_mod.element_from_json(_read_json(args.element))
    res = sp_mod.mn_norm_result(element, sp_mod.SolverOptions(seed=args.seed))
    _write_text("-", _dump({"value": res.value, "converged": res.converged,
                            "active_summands": list(res.active_summands)}))
    return EXIT_OK


def _cmd_cbnorm(args) -> int:
    mat = la.matrix_from_json(_read_json(args.matrix))
    if args.level and args.level > 0:
        src = sp_mod.space_from_json(_read_json(args.source)) \
            if args.source not in ("row", "column") \
            else getattr(sp_mod, args.source)(mat.shape[1])
        tgt = sp_mod.space_from_json(_read_json(args.target)) \
            if args.target not in ("row", "column") \
            else getattr(sp_mod, args.target)(mat.shape[0])
        val = sp_mod.cb_norm_level_estimate(
            mat, src, tgt, args.level, sp_mod.SolverOptions(seed=args.seed))
        _write_text("-", _dump({"estimate": val, "level": args.level,
                                "kind": "lower-bound"}))
        return EXIT_OK
    val = sp_mod.cb_norm_exact(mat, args.source, args.target)
    _write_text("-", _dump({"value": val, "kind": "exact"}))
    return EXIT_OK


def _cmd_fock(args) -> int:
    rng = np.random.default_rng(args.seed)
    lams = args.lambdas if args.lambdas else list(rng.uniform(0.5, 2.0, args.n))
    if len(lams) != args.n:
        raise SystemExit(EXIT_USAGE)
    fk = fock_mod.truncated_fock(args.n, args.d)
    fam = fock_mod.CircularFamily(fock=fk, theta=args.theta,
                                  lambdas=tuple(lams))
    z = la.complex_randn(rng, args.n, 2)
    a = [la.complex_randn(rng, 2, 2) for _ in range(args.n)]
    rep = fock_mod.check_interpolation_chain(fam, z, a)
    payload = {"n": args.n, "d": args.d, "theta": args.theta,
               "lambdas": [float(x) for x in lams],
               "checks": [{"name": it.name, "lhs": it.lhs, "rhs": it.rhs,
                           "slack": it.slack, "pass": it.passed}
                          for it in rep.items]}
    _write_text(args.output, _dump(payload))
    return EXIT_OK if rep.passed else EXIT_CHECK_FAILURES


def _cmd_certify(args) -> int:
    spec_json = _read_json(args.spec)
    basis = None
    if spec_json.get("basis"):
        basis = tuple(la.matrix_from_json(b) for b in spec_json["basis"])
    spec = cert_mod.CbMapSpec(
        source_dim=int(spec_json["source_dim"]),
        theta=float(spec_json["theta"]),
        matrix=la.matrix_from_json(spec_json["matrix"]),
        basis=basis,
        exactness_slack=float(spec_json.get("exactness_slack", 1.0)))
    res = cert_mod.search_certificate(
        spec, cert_mod.SearchOptions(seed=args.seed))
    if res.feasible and res.certificate is not None:
        cert = res.certificate
        payload = {"f": la.matrix_to_json(cert.f),
                   "g": la.matrix_to_json(cert.g),
                   "C": cert.C, "theta": cert.theta,
                   "probes": res.probes_checked,
                   "maxSlack": res.max_violation}
        _write_text(args.output, _dump(payload))
        return EXIT_OK
    payload = {"feasible": False, "best_gap": res.best_gap,
               "probes": res.probes_checked}
    _write_text(args.output, _dump(payload))
    return EXIT_INFEASIBLE


def _cmd_decompose(args) -> int:
    obj = _read_json(args.subspace)
    m = int(obj["m"])
    basis = tuple((np.array([complex(re, im) for re, im in x]),
                   np.array([complex(re, im) for re, im in y]))
                  for x, y in obj["basis"])
    space = sub_mod.SubspaceRC(m=m, basis=basis)
    dec = sub_mod.decompose_subspace(space)
    payload = {
        "row_dim": int(dec.row_basis.shape[1]),
        "graph_weights": [float(x) for x in dec.lambdas],
        "col_dim": int(dec.col_basis.shape[1]),
        "model_gap": dec.gap,
    }
    _write_text(args.output, _dump(payload))
    return EXIT_OK


def _cmd_classify(args) -> int:
    result = sub_mod.classify_weights(args.xi, tuple(args.tail), args.epsilon)
    payload = {"label": result.label, "factors": list(result.factors),
               "heuristic": result.heuristic, "note": result.note,
               "small_block": list(result.small_block),
               "middle_block": list(result.middle_block),
               "large_block": list(result.large_block)}
    _write_text(args.output, _dump(payload))
    return EXIT_OK


def _cmd_strip(args) -> int:
    quad = strip_mod.harmonic_quadrature(node_count=args.nodes,
                                         t_max=args.tmax)
    tr = strip_mod.boundary_transfer(quad, args.basis_dim)
    payload = {
        "mass0": float(np.sum(quad.weights0)),
        "mass1": float(np.sum(quad.weights1)),
        "reproducing_error": strip_mod.reproducing_error(quad),
        "transfer_weights": [float(x) for x in tr.lambdas],
        "truncated": tr.truncated,
        "kernel_dim_scalar": strip_mod.interpolation_kernel_dim(args.basis_dim),
    }
    _write_text(args.output, _dump(payload))
    return EXIT_OK


def _cmd_report(args) -> int:
    config = reports.ExperimentConfig()
    if args.config:
        loaded = _read_json(args.config)
        config.seed = int(loaded.get("seed", config.seed))
        config.suite = loaded.get("suite", config.suite)
        config.tolerances = dict(loaded.get("tolerances", {}))
        config.fmt = loaded.get("format", config.fmt)
        config.output = loaded.get("output", config.output)
    if args.seed is not None:
        config.seed = args.seed
    if args.suite is not None:
        config.suite = args.suite
    if args.fmt is not None:
        config.fmt = args.fmt
    if args.output != "-" or config.output is None:
        config.output = args.output
    for item in args.tolerance:
        if "=" not in item:
            raise SystemExit(EXIT_USAGE)
        key, val = item.split("=", 1)
        config.tolerances[key] = float(val)
    if config.suite not in reports.SUITE_NAMES:
        sys.stderr.write(f"unknown suite {config.suite!r}; choose from "
                         f"{', '.join(reports.SUITE_NAMES)}\n")
        return EXIT_USAGE
    results, code = reports.run_suite(config)
    _write_text(config.output, reports.emit_table(results, config.fmt))
    return code


_COMMANDS = {
    "norm": _cmd_norm,
    "cbnorm": _cmd_cbnorm,
    "fock": _cmd_fock,
    "certify": _cmd_certify,
    "decompose": _cmd_decompose,
    "classify": _cmd_classify,
    "strip": _cmd_strip,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
