"""State-factorization certificates for maps into interpolated Hilbertian
operator spaces.

A certificate for a linear map u from (a subspace of) M_N into C^n carrying
the interpolated structure at parameter theta is a pair of density matrices
(f, g) and a constant C with

    ||u a||  <=  C * f(a* a)^((1-theta)/2) * g(a a*)^(theta/2)      for all a.

Because the weighted geometric mean is the infimum of the linear family
(1-theta) lam^theta f(a*a) + theta lam^-(1-theta) g(aa*) over lam > 0, each
sampled constraint is convex in (f, g), and certificate search reduces to a
bisection over C around a projected-subgradient feasibility solve on the
density-matrix set, with violated samples harvested by random probing.
The search reports the best C it can certify; it never asserts optimality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    as_matrix,
    dagger,
    operator_norm,
    complex_randn,
    lp_operator_norm,
    project_to_density,
)
from .spaces import ThetaParams, c_theta

LAMBDA_CAP = 1e8


@dataclass(frozen=True)
class StateCertificate:
    f: np.ndarray
    g: np.ndarray
    C: float
    theta: float

    def __post_init__(self):
        f = as_matrix(self.f)
        g = as_matrix(self.g)
        for m in (f, g):
            if abs(np.trace(m).real - 1.0) > 1e-10:
                raise ValueError("certificate states must have unit trace")
            w = np.linalg.eigvalsh((m + dagger(m)) / 2.0)
            if w[0] < -1e-10:
                raise ValueError("certificate states must be PSD")
        if self.C < 0:
            raise ValueError("certificate constant must be nonnegative")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)


@dataclass(frozen=True)
class CbMapSpec:
    """Linear map from a subspace of M_N (full algebra when basis is None)
    into C^n carrying the interpolated structure at `theta`.

    `matrix` acts on coefficient vectors: shape (n, N*N) in full-algebra
    mode (row-major vec), or (n, len(basis)) in subspace mode.
    `exactness_slack` multiplies the guaranteed constant in subspace mode.
    """

    source_dim: int
    theta: float
    matrix: np.ndarray
    basis: tuple | None = None
    exactness_slack: float = 1.0

    def __post_init__(self):
        mat = as_matrix(self.matrix)
        n_coeff = self.source_dim ** 2 if self.basis is None \
            else len(self.basis)
        if mat.shape[1] != n_coeff:
            raise ValueError("map matrix has wrong coefficient dimension")
        if self.basis is not None:
            basis = tuple(as_matrix(b) for b in self.basis)
            stacked = np.stack([b.ravel() for b in basis]).T
            if np.linalg.matrix_rank(stacked) < len(basis):
                raise ValueError("basis elements must be linearly independent")
            object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "matrix", mat)

    @property
    def target_dim(self) -> int:
        return self.matrix.shape[0]

    def element(self, coeffs) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=np.complex128).ravel()
        if self.basis is None:
            return coeffs.reshape(self.source_dim, self.source_dim)
        return sum(c * b for c, b in zip(coeffs, self.basis))

    def apply_coeffs(self, coeffs) -> np.ndarray:
        return self.matrix @ np.asarray(coeffs, dtype=np.complex128).ravel()

    def apply(self, a) -> np.ndarray:
        a = as_matrix(a)
        if self.basis is None:
            return self.matrix @ a.ravel()
        stacked = np.stack([b.ravel() for b in self.basis]).T
        coeffs, *_ = np.linalg.lstsq(stacked, a.ravel(), rcond=None)
        return self.matrix @ coeffs


def weighted_am_gm(alpha0: float, alpha1: float, theta: float,
                   points_per_decade: int = 33, zoom_rounds: int = 5):
    """Infimum of (1-theta) lam^theta a0 + theta lam^-(1-theta) a1 over a
    geometric lam grid refined around a1/a0, plus the analytic value.

    Returns (grid_value, lam_star, analytic_value, defined_flag).
    """
    if alpha0 < 0 or alpha1 < 0:
        raise ValueError("inputs must be nonnegative")
    theta = float(theta)
    if alpha0 == 0.0 and alpha1 == 0.0:
        return 0.0, None, 0.0, False
    analytic = alpha0 ** (1.0 - theta) * alpha1 ** theta
    if alpha0 == 0.0 or alpha1 == 0.0:
        # infimum at a lam endpoint; grid chases it but the analytic value is 0
        return analytic, None, analytic, False

    def objective(lams):
        return (1.0 - theta) * lams ** theta * alpha0 \
            + theta * lams ** (-(1.0 - theta)) * alpha1

    center = alpha1 / alpha0
    half_decades = 2.0
    lam_star = center
    value = float(objective(np.array([center]))[0])
    for _ in range(zoom_rounds):
        count = 2 * half_decades * points_per_decade
        grid = lam_star * np.logspace(-half_decades, half_decades,
                                      int(count) + 1)
        vals = objective(grid)
        k = int(np.argmin(vals))
        if vals[k] < value:
            value = float(vals[k])
            lam_star = float(grid[k])
        half_decades /= points_per_decade
    return value, lam_star, analytic, True


def state_values(f, g, a):
    a = as_matrix(a)
    alpha0 = float(np.trace(f @ (dagger(a) @ a)).real)
    alpha1 = float(np.trace(g @ (a @ dagger(a))).real)
    return max(alpha0, 0.0), max(alpha1, 0.0)


@dataclass(frozen=True)
class PointwiseReport:
    slacks: np.ndarray
    min_slack: float
    passed: bool


def verify_pointwise(spec: CbMapSpec, cert: StateCertificate, samples,
                     tol: float = 1e-9) -> PointwiseReport:
    """Per-sample slack C f(a*a)^((1-theta)/2) g(aa*)^(theta/2) - ||u a||.

    Samples are coefficient vectors; the target norm is the Euclidean norm
    of the image coefficients (the interpolated structure is isometric to
    l2 at the vector level).
    """
    th = cert.theta
    slacks = []
    for coeffs in samples:
        a = spec.element(coeffs)
        ua = spec.apply_coeffs(coeffs)
        alpha0, alpha1 = state_values(cert.f, cert.g, a)
        bound = cert.C * alpha0 ** ((1.0 - th) / 2.0) * alpha1 ** (th / 2.0)
        slacks.append(bound - float(np.linalg.norm(ua)))
    slacks = np.array(slacks)
    min_slack = float(slacks.min()) if slacks.size else 0.0
    return PointwiseReport(slacks=slacks, min_slack=min_slack,
                           passed=bool(min_slack >= -tol))


@dataclass(frozen=True)
class FamilyReport:
    slacks: np.ndarray
    min_slack: float
    passed: bool


def verify_finite_families(spec: CbMapSpec, families, constant: float | None = None,
                           tol: float = 1e-9,
                           gram_norms=None) -> FamilyReport:
    """Finite-family criterion: for coefficients (a_i) and weights lam_i > 0,

      sum ||u a_i||^2 <= K^2 { (1-th) ||sum lam^th a*a|| + th ||sum lam^-(1-th) aa*|| }

    with K = c(theta) by default (times the exactness slack).  `families`
    is a list of (coeff_list, lam_list).  `gram_norms`, when given, supplies
    precomputed (column_term, row_term) pairs in place of the C*-algebra
    products, for encoding coefficient systems that live outside an algebra.
    """
    th = spec.theta
    K = constant if constant is not None else c_theta(th) * spec.exactness_slack
    slacks = []
    for idx, (coeff_list, lams) in enumerate(families):
        lhs = sum(float(np.linalg.norm(spec.apply_coeffs(c))) ** 2
                  for c in coeff_list)
        if gram_norms is not None and gram_norms[idx] is not None:
            col_term, row_term = gram_norms[idx]
        else:
            mats = [spec.element(c) for c in coeff_list]
            col = sum(l ** th * (dagger(m) @ m) for m, l in zip(mats, lams))
            rowm = sum(l ** (th - 1.0) * (m @ dagger(m)) for m, l in zip(mats, lams))
            col_term = operator_norm(col)
            row_term = operator_norm(rowm)
        rhs = K ** 2 * ((1.0 - th) * col_term + th * row_term)
        slacks.append(rhs - lhs)
    slacks = np.array(slacks)
    min_slack = float(slacks.min()) if slacks.size else 0.0
    return FamilyReport(slacks=slacks, min_slack=min_slack,
                        passed=bool(min_slack >= -tol))


@dataclass(frozen=True)
class SearchOptions:
    seed: int = 11
    pool_size: int = 64
    probe_rounds: int = 5
    probes_per_round: int = 384
    final_probes: int = 1000
    feasibility_iters: int = 4000
    bisection_iters: int = 28
    c_margin: float = 1e-4
    # relative feasibility margin: constraints must hold with this much
    # slack (scaled per constraint) so the solved states generalize beyond
    # the sampled pool
    margin_rel: float = 2e-3


@dataclass(frozen=True)
class SearchResult:
    certificate: StateCertificate | None
    feasible: bool
    best_gap: float
    probes_checked: int
    max_violation: float


def _probe_coeffs(spec: CbMapSpec, rng, count):
    n_coeff = spec.matrix.shape[1]
    out = []
    for _ in range(count):
        c = complex_randn(rng, n_coeff, 1).ravel()
        a = spec.element(c)
        nrm = operator_norm(a)
        if nrm > 1e-12:
            out.append(c / nrm)
    return out


def _canonical_coeffs(spec: CbMapSpec):
    n_coeff = spec.matrix.shape[1]
    out = []
    if spec.basis is None:
        ident = np.eye(spec.source_dim, dtype=np.complex128).ravel()
        out.append(ident)
    for j in range(n_coeff):
        c = np.zeros(n_coeff, dtype=np.complex128)
        c[j] = 1.0
        a = spec.element(c)
        nrm = operator_norm(a)
        if nrm > 1e-12:
            out.append(c / nrm)
    return out


def _violations(spec, theta, C, f, g, pool_data):
    """Convex violation of each pooled constraint and its linearization weight."""
    norms_sq, gram_a, gram_b = pool_data
    alpha0 = np.einsum("jkl,lk->j", gram_a, f).real
    alpha1 = np.einsum("jkl,lk->j", gram_b, g).real
    alpha0 = np.clip(alpha0, 0.0, None)
    alpha1 = np.clip(alpha1, 0.0, None)
    geo = alpha0 ** (1.0 - theta) * alpha1 ** theta
    return norms_sq - C * C * geo, alpha0, alpha1


def _feasibility_solve(spec, C, pool, opts, f0=None, g0=None):
    """Projected subgradient on max constraint violation over density pairs.

    Feasibility is declared only when every constraint holds with a small
    per-constraint relative margin, so the solved states are interior points
    that generalize beyond the sampled pool."""
    theta = spec.theta
    N = spec.source_dim
    norms_sq = np.array([float(np.linalg.norm(spec.apply_coeffs(c))) ** 2
                         for c in pool])
    gram_a = np.stack([dagger(spec.element(c)) @ spec.element(c) for c in pool])
    gram_b = np.stack([spec.element(c) @ dagger(spec.element(c)) for c in pool])
    pool_data = (norms_sq, gram_a, gram_b)
    margins = opts.margin_rel * np.maximum(norms_sq, 1e-12)
    f = f0 if f0 is not None else np.eye(N, dtype=np.complex128) / N
    g = g0 if g0 is not None else np.eye(N, dtype=np.complex128) / N
    best = (np.inf, f, g)
    for it in range(opts.feasibility_iters):
        viol, alpha0, alpha1 = _violations(spec, theta, C, f, g, pool_data)
        viol = viol + margins
        j = int(np.argmax(viol))
        v = float(viol[j])
        if v < best[0]:
            best = (v, f.copy(), g.copy())
        if v <= 0.0:
            return True, f, g, v
        # supergradient of the geometric mean via its optimal linearization
        a0 = max(float(alpha0[j]), 1e-300)
        a1 = max(float(alpha1[j]), 1e-300)
        lam = min(max(a1 / a0, 1.0 / LAMBDA_CAP), LAMBDA_CAP)
        w_f = C * C * (1.0 - theta) * lam ** theta
        w_g = C * C * theta * lam ** (-(1.0 - theta))
        grad_f = w_f * gram_a[j]
        grad_g = w_g * gram_b[j]
        gn = np.linalg.norm(grad_f) ** 2 + np.linalg.norm(grad_g) ** 2
        if gn <= 0:
            break
        step = v / gn
        f = project_to_density(f + step * grad_f)
        g = project_to_density(g + step * grad_g)
    v, f, g = best
    return False, f, g, v


def search_certificate(spec: CbMapSpec, opts: SearchOptions | None = None) -> SearchResult:
    """Minimize C by bisection over feasibility of the sampled constraint set,
    enlarging the sample pool with violated random probes until a fresh probe
    set passes."""
    opts = opts or SearchOptions()
    theta = spec.theta
    rng = np.random.default_rng(opts.seed)
    pool = _canonical_coeffs(spec) + _probe_coeffs(spec, rng, opts.pool_size)
    if all(np.linalg.norm(spec.apply_coeffs(c)) < 1e-14 for c in pool):
        N = spec.source_dim
        eye = np.eye(N, dtype=np.complex128) / N
        cert = StateCertificate(f=eye, g=eye, C=0.0, theta=theta)
        return SearchResult(cert, True, 0.0, 0, 0.0)

    def pool_lower_bound(items):
        lo = 0.0
        for c in items:
            a = spec.element(c)
            ua = float(np.linalg.norm(spec.apply_coeffs(c)))
            top0 = operator_norm(dagger(a) @ a)
            top1 = operator_norm(a @ dagger(a))
            denom = top0 ** ((1.0 - theta) / 2.0) * top1 ** (theta / 2.0)
            if denom > 0:
                lo = max(lo, ua / denom)
        return lo

    c_lo = pool_lower_bound(pool)
    c_hi = max(4.0 * c_lo, 1e-6)
    f = g = None
    # make sure the upper end is feasible on the pool before bisecting
    for _ in range(40):
        ok, f, g, _ = _feasibility_solve(spec, c_hi, pool, opts, f, g)
        if ok:
            break
        c_hi *= 2.0
    probes_checked = 0
    best_cert = None
    worst_violation = math.inf
    for round_idx in range(opts.probe_rounds):
        lo, hi = c_lo, c_hi
        f_hi, g_hi = f, g
        for _ in range(opts.bisection_iters):
            if hi - lo <= opts.c_margin * max(hi, 1.0):
                break
            mid = 0.5 * (lo + hi)
            ok, fm, gm, _ = _feasibility_solve(spec, mid, pool, opts, f_hi, g_hi)
            if ok:
                hi, f_hi, g_hi = mid, fm, gm
            else:
                lo = mid
        candidate = StateCertificate(f=project_to_density(f_hi),
                                     g=project_to_density(g_hi),
                                     C=hi * (1.0 + 1e-9), theta=theta)
        probes = _probe_coeffs(spec, rng, opts.probes_per_round)
        probes_checked += len(probes)
        report = verify_pointwise(spec, candidate, probes)
        if report.passed:
            fresh = _probe_coeffs(spec, rng, opts.final_probes)
            probes_checked += len(fresh)
            final = verify_pointwise(spec, candidate, fresh)
            if final.passed:
                return SearchResult(candidate, True, 0.0, probes_checked,
                                    max(0.0, -final.min_slack))
            report, probes = final, fresh
        worst_violation = -report.min_slack
        best_cert = candidate
        order = np.argsort(report.slacks)
        for j in order[:16]:
            pool.append(probes[int(j)])
        c_lo = max(c_lo, pool_lower_bound(pool))
        c_hi = max(hi * 1.05, c_lo * 1.05)
        f, g = f_hi, g_hi
    return SearchResult(best_cert, False, worst_violation, probes_checked,
                        worst_violation)


@dataclass(frozen=True)
class EndpointCertificate:
    f: np.ndarray
    C: float
    target: str


def endpoint_certificate(spec: CbMapSpec, target: str,
                         C: float | None = None,
                         opts: SearchOptions | None = None):
    """Single-state certificate search for a row or column target.

    Row target:    ||u x||^2 <= C^2 f(x x*);
    Column target: ||u x||^2 <= C^2 f(x* x).
    With C given, decides feasibility at that constant; otherwise bisects.
    Returns (EndpointCertificate | None, feasible flag, gap).
    """
    opts = opts or SearchOptions()
    if target not in ("row", "column"):
        raise ValueError("target must be 'row' or 'column'")
    rng = np.random.default_rng(opts.seed + 3)
    pool = _canonical_coeffs(spec) + _probe_coeffs(spec, rng, opts.pool_size)
    N = spec.source_dim

    def grams(items):
        mats = [spec.element(c) for c in items]
        if target == "row":
            return np.stack([m @ dagger(m) for m in mats])
        return np.stack([dagger(m) @ m for m in mats])

    def feasibility(cval, items, f0=None):
        gram = grams(items)
        norms_sq = np.array([float(np.linalg.norm(spec.apply_coeffs(c))) ** 2
                             for c in items])
        margins = opts.margin_rel * np.maximum(norms_sq, 1e-12)
        f = f0 if f0 is not None else np.eye(N, dtype=np.complex128) / N
        best = (np.inf, f)
        for _ in range(opts.feasibility_iters):
            vals = np.einsum("jkl,lk->j", gram, f).real
            viol = norms_sq - cval * cval * np.clip(vals, 0.0, None) + margins
            j = int(np.argmax(viol))
            v = float(viol[j])
            if v < best[0]:
                best = (v, f.copy())
            if v <= 0.0:
                return True, f, v
            grad = cval * cval * gram[j]
            gn = np.linalg.norm(grad) ** 2
            if gn <= 0:
                break
            f = project_to_density(f + (v / gn) * grad)
        return False, best[1], best[0]

    if all(np.linalg.norm(spec.apply_coeffs(c)) < 1e-14 for c in pool):
        eye = np.eye(N, dtype=np.complex128) / N
        return EndpointCertificate(f=eye, C=0.0, target=target), True, 0.0

    if C is not None:
        ok, f, gap = feasibility(C, pool)
        if not ok:
            return None, False, gap
        probes = _probe_coeffs(spec, rng, opts.final_probes)
        slack_ok = True
        for c in probes:
            a = spec.element(c)
            gram = a @ dagger(a) if target == "row" else dagger(a) @ a
            val = float(np.trace(f @ gram).real)
            if np.linalg.norm(spec.apply_coeffs(c)) ** 2 > C * C * max(val, 0.0) + 1e-9:
                slack_ok = False
                pool.append(c)
        if slack_ok:
            return EndpointCertificate(f=f, C=C, target=target), True, 0.0
        ok, f, gap = feasibility(C, pool)
        return (EndpointCertificate(f=f, C=C, target=target), True, 0.0) if ok \
            else (None, False, gap)

    lo, hi = 0.0, 1.0
    for _ in range(60):
        ok, f, _ = feasibility(hi, pool)
        if ok:
            break
        hi *= 2.0
    f_hi = f
    for _ in range(opts.bisection_iters):
        if hi - lo <= opts.c_margin * max(hi, 1.0):
            break
        mid =ff = 0.5 * (lo + hi)
        ok, fm, _ = feasibility(mid, pool)
        if ok:
            hi, f_hi = mid, fm
        else:
            lo = mid
    return EndpointCertificate(f=project_to_density(f_hi), C=hi * (1 + 1e-9),
                               target=target), True, 0.0


@dataclass(frozen=True)
class EntrywiseBoundReport:
    lhs: float
    rhs: float
    slack: float
    row_sums_ok: bool
    col_sums_ok: bool
    passed: bool


def entrywise_lp_bound_check(f, g, a_blocks, theta,
                             tol: float = 1e-7) -> EntrywiseBoundReport:
    """For states (f, g) and a block matrix a = (a_ij) in M_n(M_N), check

      || [ f(a_ij* a_ij)^(1-th) g(a_ij a_ij*)^th ]_ij : l_p^n -> l_p^n || <= ||a||

    with p = 1/(1-theta); when ||a|| <= 1, additionally check that the
    entry matrices have column sums (of f-values) and row sums (of
    g-values) at most one.
    """
    th = float(theta)
    f = as_matrix(f)
    g = as_matrix(g)
    n = len(a_blocks)
    entries = np.zeros((n, n))
    alpha0 = np.zeros((n, n))
    alpha1 = np.zeros((n, n))
    blocks = [[as_matrix(a_blocks[i][j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            a = blocks[i][j]
            a0, a1 = state_values(f, g, a)
            alpha0[i, j] = a0
            alpha1[i, j] = a1
            entries[i, j] = a0 ** (1.0 - th) * a1 ** th
    p = 1.0 / (1.0 - th) if th < 1.0 else math.inf
    lhs = lp_operator_norm(entries, p) if 1.0 < p < math.inf else operator_norm(entries)
    big = np.block(blocks)
    rhs = operator_norm(big)
    row_sums_ok = True
    col_sums_ok = True
    if rhs <= 1.0 + 1e-12:
        col_sums_ok = bool(np.max(alpha0.sum(axis=0)) <= 1.0 + 1e-9)
        row_sums_ok = bool(np.max(alpha1.sum(axis=1)) <= 1.0 + 1e-9)
    slack = rhs - lhs
    return EntrywiseBoundReport(lhs=lhs, rhs=rhs, slack=slack,
                                row_sums_ok=row_sums_ok,
                                col_sums_ok=col_sums_ok,
                                passed=bool(slack >= -tol and row_sums_ok
                                            and col_sums_ok))


def diagonal_weighted_sum_check(spec: CbMapSpec, cert: StateCertificate,
                                a_coeff_blocks, s_diag, t_diag,
                                tol: float = 1e-9):
    """Weighted coefficient-sum bound: for diagonal s, t with
    sum s_ii^(2p') <= 1 and sum t_jj^(2p) <= 1 and a block matrix of unit
    norm, sum_ij s_ii^2 ||u(a_ij)||^2 t_jj^2 <= C^2."""
    th = cert.theta
    params = ThetaParams.from_theta(th)
    s = np.asarray(s_diag, dtype=float)
    t = np.asarray(t_diag, dtype=float)
    if np.sum(s ** (2 * params.p_prime)) > 1.0 + 1e-9 \
            or np.sum(t ** (2 * params.p)) > 1.0 + 1e-9:
        raise ValueError("diagonal weights violate their trace-power budgets")
    n = len(a_coeff_blocks)
    total = 0.0
    for i in range(n):
        for j in range(n):
            ua = spec.apply_coeffs(a_coeff_blocks[i][j])
            total += s[i] ** 2 * float(np.linalg.norm(ua)) ** 2 * t[j] ** 2
    bound = cert.C ** 2
    return total, bound, bound - total, bool(bound - total >= -tol)
