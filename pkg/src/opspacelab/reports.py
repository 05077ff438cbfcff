"""Reproducible experiment suites and deterministic report rendering.

Every check reduces to an observed quantity (lhs), a bound (rhs), and the
slack rhs - lhs; a check passes when the slack is nonnegative.  Suites are
deterministic functions of the seed, and tables render byte-identically for
identical inputs.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import certificates as cert_mod
from . import fock as fock_mod
from . import linalg as la
from . import spaces as sp_mod
from . import strip as strip_mod
from . import subspaces as sub_mod

EXIT_OK = 0
EXIT_CHECK_FAILURES = 1
EXIT_INFEASIBLE = 2
EXIT_USAGE = 64


@dataclass(frozen=True)
class CheckResult:
    module: str
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    anchor: str


@dataclass
class ExperimentConfig:
    seed: int = 2024
    suite: str = "all"
    tolerances: dict = field(default_factory=dict)
    output: str | None = None
    fmt: str = "markdown"


def _seed_for(base: int, label: str) -> int:
    return (int(base) + zlib.crc32(label.encode())) % (2 ** 63)


def _check(module, name, lhs, rhs, anchor, tolerances):
    rhs = float(tolerances.get(name, tolerances.get("all", rhs)))
    slack = rhs - lhs
    return CheckResult(module=module, name=name, lhs=float(lhs),
                       rhs=rhs, slack=float(slack),
                       passed=bool(slack >= 0.0), anchor=anchor)


def suite_norms(config: ExperimentConfig):
    tol = config.tolerances
    rng = np.random.default_rng(_seed_for(config.seed, "norms"))
    results = []

    err = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 7))
        u = la.complex_randn(rng, n, n)
        err = max(err, abs(sp_mod.cb_norm_exact(u, "row", "column")
                           - la.schatten_norm(u, 2)))
        err = max(err, abs(sp_mod.cb_norm_exact(u, "row", "row")
                           - la.operator_norm(u)))
    results.append(_check("norms", "endpoint-formulas", err, 1e-10,
                          "row-column-endpoints", tol))

    gap = 0.0
    opts = sp_mod.SolverOptions(seed=int(rng.integers(0, 2 ** 31)))
    for _ in range(4):
        m, n = 2, 2
        coeffs = [la.complex_randn(rng, m, m) for _ in range(n)]
        for theta in (0.25, 0.75):
            val = sp_mod.theta_sup_norm(coeffs, theta, opts).value
            oracle = sp_mod.cp_map_schatten_norm(coeffs, 1.0 / theta, opts)
            gap = max(gap, abs(val - oracle) / max(oracle, 1e-12))
    results.append(_check("norms", "theta-oracle-gap", gap, 1e-3,
                          "interpolated-norm-vs-cp-map", tol))

    gap = 0.0
    for _ in range(4):
        coeffs = [la.complex_randn(rng, 2, 2) for _ in range(3)]
        closed = sp_mod.oh_closed_form_norm(coeffs)
        val = sp_mod.theta_sup_norm(coeffs, 0.5, opts).value
        gap = max(gap, abs(val - closed) / max(closed, 1e-12))
    results.append(_check("norms", "midpoint-closed-form-gap", gap, 1e-4,
                          "midpoint-tensor-identity", tol))

    worst = 0.0
    for n in range(2, 7):
        coeffs = [np.zeros((n, n), dtype=np.complex128) for _ in range(n)]
        for i in range(n):
            coeffs[i][i, 0] = 1.0
        val = sp_mod.mn_norm(sp_mod.MatrixElement(tuple(coeffs), sp_mod.oh(n)))
        worst = max(worst, abs(val - n ** 0.25))
    results.append(_check("norms", "orthonormal-basis-fourth-root", worst,
                          1e-12, "basis-family-values", tol))

    viol = 0.0
    for _ in range(6):
        n = 3
        u = la.complex_randn(rng, n, n)
        u /= la.schatten_norm(u, 2)
        xs = [la.complex_randn(rng, n, 1).ravel() for _ in range(4)]
        lhs = sum(np.linalg.norm(u @ x) ** 2 for x in xs)
        gram = sum(np.outer(x, np.conj(x)) for x in xs)
        viol = max(viol, lhs - la.operator_norm(gram))
    results.append(_check("norms", "endpoint-square-sum-criterion", viol,
                          1e-9, "square-sum-endpoint", tol))

    mid_defect = 0.0
    coeffs = [la.complex_randn(rng, 2, 2) for _ in range(2)]
    thetas = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    vals = {}
    for th in thetas:
        vals[th] = sp_mod.theta_sup_norm(coeffs, th, opts).value
    for lo, mid, hi in [(0.1, 0.2, 0.3), (0.3, 0.4, 0.5), (0.5, 0.6, 0.7),
                        (0.7, 0.8, 0.9), (0.1, 0.3, 0.5), (0.5, 0.7, 0.9)]:
        mid_defect = max(mid_defect, math.log(vals[mid])
                         - 0.5 * (math.log(vals[lo]) + math.log(vals[hi])))
    results.append(_check("norms", "interpolation-log-convexity", mid_defect,
                          5e-3, "midpoint-convexity", tol))
    return results


def suite_fock(config: ExperimentConfig):
    tol = config.tolerances
    rng = np.random.default_rng(_seed_for(config.seed, "fock"))
    results = []
    eq_err = 0.0
    pair_err = 0.0
    bilinear_viol = 0.0
    right_viol = 0.0
    triangle_viol = 0.0
    for _ in range(12):
        n = int(rng.integers(1, 4))
        kk = int(rng.integers(1, 3))
        theta = float(rng.uniform(0.1, 0.9))
        lams = rng.uniform(0.5, 2.0, size=n)
        fk = fock_mod.truncated_fock(n, 3)
        fam = fock_mod.CircularFamily(fock=fk, theta=theta, lambdas=tuple(lams))
        z = la.complex_randn(rng, n, kk)
        a = [la.complex_randn(rng, 2, 2) for _ in range(n)]
        rep = fock_mod.check_interpolation_chain(fam, z, a)
        it = rep.item("coefficient-identity")
        eq_err = max(eq_err, abs(it.lhs - it.rhs))
        it = rep.item("vacuum-pairing")
        pair_err = max(pair_err, abs(it.lhs - it.rhs))
        bilinear_viol = max(bilinear_viol, -rep.item("bilinear-bound").slack)
        right_viol = max(right_viol, -rep.item("right-family-bound").slack)
        triangle_viol = max(triangle_viol, -rep.item("tensor-triangle-bound").slack)
    results.append(_check("fock", "coefficient-identity", eq_err, 1e-10,
                          "scaling-group-norm-identity", tol))
    results.append(_check("fock", "vacuum-pairing", pair_err, 1e-10,
                          "pairing-value", tol))
    results.append(_check("fock", "bilinear-bound", bilinear_viol, 1e-9,
                          "two-sided-pairing-bound", tol))
    results.append(_check("fock", "right-family-bound", right_viol, 1e-9,
                          "mirrored-family-bound", tol))
    results.append(_check("fock", "tensor-triangle-bound", triangle_viol, 1e-9,
                          "convexity-upper-bound", tol))

    fk = fock_mod.truncated_fock(2, 3)
    fam = fock_mod.CircularFamily(fock=fk, theta=0.3, lambdas=(0.7, 1.4))
    fix_err = 0.0
    for i in range(2):
        xi_op = np.asarray(fam.x_op(i).todense())
        fix_err = max(fix_err, float(np.max(np.abs(
            fock_mod.generator_projection(fk, xi_op) - xi_op))))
    results.append(_check("fock", "projection-fixes-generators", fix_err,
                          1e-12, "projection-fixed-points", tol))

    worst_ratio_excess = 0.0
    fk2 = fock_mod.truncated_fock(2, 2)
    for _ in range(10):
        k = int(rng.integers(1, 4))
        blocks = [[la.complex_randn(rng, fk2.dim, fk2.dim) for _ in range(k)]
                  for _ in range(k)]
        x = np.block(blocks)
        px = fock_mod.blockwise_generator_projection(fk2, blocks)
        worst_ratio_excess = max(
            worst_ratio_excess,
            la.operator_norm(px) - 2.0 * la.operator_norm(x))
    results.append(_check("fock", "projection-ampliation-bound",
                          worst_ratio_excess, 1e-8,
                          "two-bounded-projection", tol))
    return results


def suite_certify(config: ExperimentConfig):
    tol = config.tolerances
    rng = np.random.default_rng(_seed_for(config.seed, "certify"))
    results = []
    infeasible = False

    gap = 0.0
    for _ in range(16):
        a0, a1 = rng.uniform(0.05, 5.0, size=2)
        th = float(rng.uniform(0.05, 0.95))
        grid_val, _, analytic, _ = cert_mod.weighted_am_gm(a0, a1, th)
        gap = max(gap, (grid_val - analytic) / max(analytic, 1e-12))
    results.append(_check("certify", "weighted-am-gm-gap", gap, 1e-9,
                          "scalar-infimum-formula", tol))

    ratio_excess = 0.0
    soundness = 0.0
    for trial in range(2):
        N = 2 + trial
        f0 = la.random_density(rng, N)
        scale = float(rng.uniform(0.6, 1.8))
        target = np.zeros((2, N * N), dtype=np.complex128)
        target[0, :] = scale * f0.conj().ravel()
        spec = cert_mod.CbMapSpec(source_dim=N, theta=0.5, matrix=target)
        res = cert_mod.search_certificate(
            spec, cert_mod.SearchOptions(seed=int(rng.integers(0, 2 ** 31))))
        if not res.feasible or res.certificate is None:
            infeasible = True
            continue
        ratio_excess = max(ratio_excess, res.certificate.C / scale - 1.05)
        probes = [la.complex_randn(rng, N * N, 1).ravel() for _ in range(200)]
        rep = cert_mod.verify_pointwise(spec, res.certificate, probes)
        soundness = max(soundness, -rep.min_slack)
    results.append(_check("certify", "planted-constant-recovery",
                          ratio_excess, 0.0, "round-trip-constant", tol))
    results.append(_check("certify", "certificate-soundness", soundness,
                          1e-9, "fresh-probe-slack", tol))

    worst = 0.0
    sums_bad = 0.0
    for _ in range(60):
        n = int(rng.integers(2, 5))
        N = int(rng.integers(2, 5))
        th = float(rng.uniform(0.1, 0.9))
        f = la.random_density(rng, N)
        g = la.random_density(rng, N)
        blocks = [[la.complex_randn(rng, N, N) for _ in range(n)]
                  for _ in range(n)]
        big = np.block(blocks)
        nb = la.operator_norm(big)
        blocks = [[b / nb for b in rowb] for rowb in blocks]
        rep = cert_mod.entrywise_lp_bound_check(f, g, blocks, th)
        worst = max(worst, -rep.slack)
        if not (rep.row_sums_ok and rep.col_sums_ok):
            sums_bad += 1.0
    results.append(_check("certify", "entrywise-lp-bound", worst, 1e-7,
                          "state-weighted-entry-norm", tol))
    results.append(_check("certify", "normalized-sum-budgets", sums_bad, 0.0,
                          "row-column-sum-budgets", tol))
    return results, infeasible


def suite_geometry(config: ExperimentConfig):
    tol = config.tolerances
    rng = np.random.default_rng(_seed_for(config.seed, "geometry"))
    results = []

    worst_gap = 0.0
    for _ in range(10):
        m = int(rng.integers(2, 7))
        k = int(rng.integers(1, min(5, 2 * m)))
        basis = [(la.complex_randn(rng, m, 1).ravel(),
                  la.complex_randn(rng, m, 1).ravel()) for _ in range(k)]
        space = sub_mod.SubspaceRC(m=m, basis=tuple(basis))
        dec = sub_mod.decompose_subspace(space)
        worst_gap = max(worst_gap, dec.gap)
    results.append(_check("geometry", "decomposition-round-trip", worst_gap,
                          1e-8, "row-graph-column-splitting", tol))

    worst = 0.0
    for _ in range(10):
        m = int(rng.integers(2, 7))
        lams = rng.uniform(0.1, 1.0, size=m)
        beta = la.complex_randn(rng, m, m)
        lam = np.diag(lams.astype(np.complex128))
        alpha = np.eye(m, dtype=np.complex128) - beta @ lam
        p = np.block([[alpha, beta], [lam @ alpha, lam @ beta]])
        rep = sub_mod.graph_projection_report(p, lams)
        worst = max(worst, rep.identity_residual,
                    rep.chain_lhs - rep.chain_bound)
    results.append(_check("geometry", "projection-chain", worst, 1e-8,
                          "graph-projection-bounds", tol))

    worst = 0.0
    for _ in range(30):
        m = int(rng.integers(3, 9))
        lams = rng.uniform(0.01, 1.0, size=m)
        eps = float(rng.uniform(0.1, 0.9))
        n = int(rng.integers(1, 5))
        val = sub_mod.capped_hs_mass(lams, eps, n)
        sel = np.sort(lams[lams < eps])[::-1][:n]
        brute = 0.0
        for _ in range(60):
            q = np.linalg.qr(la.complex_randn(rng, sel.size, sel.size))[0] \
                if sel.size else None
            if q is None:
                break
            take = min(n, sel.size)
            cand = math.sqrt(max(np.sum(
                (np.abs(q[:, :take]) ** 2).T @ (sel ** 2)), 0.0))
            brute = max(brute, cand)
        worst = max(worst, brute - val)
    results.append(_check("geometry", "spectral-mass-optimality", worst,
                          1e-9, "orthonormal-tuple-supremum", tol))

    viol = 0.0
    for _ in range(40):
        m = 6
        q = 3
        lams = rng.uniform(0.01, 1.0, size=m)
        eps = 0.5
        small = np.nonzero(lams < eps)[0]
        if small.size == 0:
            continue
        v = np.zeros((m, q), dtype=np.complex128)
        v[small, :] = la.complex_randn(rng, small.size, q)
        v /= max(la.operator_norm(v), 1e-12)
        h = la.complex_randn(rng, q, 1).ravel()
        h /= np.linalg.norm(h)
        a_list = [la.complex_randn(rng, q, q) for _ in range(3)]
        _, _, slack, _ = sub_mod.column_family_bound_check(
            lams, eps, v, h, a_list)
        viol = max(viol, -slack)
    results.append(_check("geometry", "structured-map-bound", viol, 1e-9,
                          "small-range-column-bound", tol))
    return results


def suite_strip(config: ExperimentConfig):
    tol = config.tolerances
    rng = np.random.default_rng(_seed_for(config.seed, "strip"))
    results = []
    quad = strip_mod.harmonic_quadrature()
    mass_err = max(abs(float(np.sum(quad.weights0)) - 1.0),
                   abs(float(np.sum(quad.weights1)) - 1.0))
    results.append(_check("strip", "boundary-mass", mass_err, 1e-8,
                          "probability-measures", tol))
    results.append(_check("strip", "reproducing-property",
                          strip_mod.reproducing_error(quad), 1e-6,
                          "interior-point-reproduction", tol))

    worst = 0.0
    for _ in range(6):
        x = la.complex_randn(rng, 3, 1).ravel()
        res = strip_mod.quotient_midpoint_norm(
            [np.array([[v]]) for v in x], quad, 16, iterations=300)
        worst = max(worst, abs(res.value - np.linalg.norm(x)))
    results.append(_check("strip", "scalar-quotient-identity", worst, 5e-3,
                          "scalar-level-isometry", tol))

    mono = 0.0
    x = [la.complex_randn(rng, 2, 2) for _ in range(2)]
    vals = strip_mod.quotient_norm_sweep(x, quad, (8, 16, 32),
                                         iterations=400)
    for lo, hi in zip(vals[1:], vals[:-1]):
        mono = max(mono, lo - hi)
    results.append(_check("strip", "quotient-monotone-in-basis", mono, 0.0,
                          "nested-feasible-sets", tol))

    tr = strip_mod.boundary_transfer(quad, 12)
    unit_err = la.operator_norm(
        la.dagger(tr.unitary) @ tr.unitary - np.eye(tr.unitary.shape[1]))
    results.append(_check("strip", "transfer-polar-unitarity", unit_err,
                          1e-9, "polar-factor", tol))

    # the field identity is exact linear algebra; a coarse rule suffices
    small = strip_mod.harmonic_quadrature(node_count=8, reproducing_tol=1e-4)
    fk = strip_mod.strip_field_fock(small, cutoff=2)
    ident_err = 0.0
    for _ in range(3):
        coeff = la.complex_randn(rng, 4, 1).ravel()
        mat0, mat1 = strip_mod.basis_boundary_values(small, 4)
        f0 = mat0 @ coeff
        f1 = mat1 @ coeff
        t_op = strip_mod.field_t(fk, small, f0, f1)
        s1 = strip_mod.field_s(fk, strip_mod.j_embed(small, f0, f1))
        s2 = strip_mod.field_s(fk, strip_mod.j_embed(small, 1j * f0, 1j * f1))
        ident_err = max(ident_err, float(np.max(np.abs(
            2.0 * t_op - (s1 - 1j * s2)))))
    results.append(_check("strip", "quantization-identity", ident_err, 1e-10,
                          "field-pair-identity", tol))
    return results


SUITE_NAMES = ("norms", "fock", "certify", "geometry", "strip", "all")


def run_suite(config: ExperimentConfig):
    """Execute a named suite; returns (results, exit_code)."""
    if config.suite not in SUITE_NAMES:
        raise ValueError(f"unknown suite {config.suite!r}")
    names = [config.suite] if config.suite != "all" else \
        ["norms", "fock", "certify", "geometry", "strip"]
    results = []
    infeasible = False
    for name in names:
        if name == "norms":
            results.extend(suite_norms(config))
        elif name == "fock":
            results.extend(suite_fock(config))
        elif name == "certify":
            res, inf = suite_certify(config)
            results.extend(res)
            infeasible = infeasible or inf
        elif name == "geometry":
            results.extend(suite_geometry(config))
        elif name == "strip":
            results.extend(suite_strip(config))
    results.sort(key=lambda r: (r.module, r.name))
    if infeasible:
        code = EXIT_INFEASIBLE
    elif all(r.passed for r in results):
        code = EXIT_OK
    else:
        code = EXIT_CHECK_FAILURES
    return results, code


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def emit_table(results, fmt: str = "markdown") -> str:
    """Deterministic rendering of check rows, ordered by module then name."""
    rows = sorted(results, key=lambda r: (r.module, r.name))
    if fmt == "json":
        payload = [{"module": r.module, "name": r.name, "lhs": r.lhs,
                    "rhs": r.rhs, "slack": r.slack,
                    "pass": r.passed, "anchor": r.anchor} for r in rows]
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        lines = ["module,name,lhs,rhs,slack,pass,anchor"]
        for r in rows:
            lines.append(",".join([r.module, r.name, _fmt(r.lhs), _fmt(r.rhs),
                                   _fmt(r.slack),
                                   "pass" if r.passed else "fail", r.anchor]))
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        lines = ["| module | check | lhs | rhs | slack | result | anchor |",
                 "|---|---|---|---|---|---|---|"]
        for r in rows:
            lines.append("| " + " | ".join(
                [r.module, r.name, _fmt(r.lhs), _fmt(r.rhs), _fmt(r.slack),
                 "pass" if r.passed else "fail", r.anchor]) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")
