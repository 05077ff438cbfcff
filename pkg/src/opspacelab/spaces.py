"""Finite-dimensional Hilbertian operator space structures and matrix norms.

A descriptor picks one of the supported structures on C^n (row, column,
interpolated, intersection, weighted diagonal, graph, direct sum); a
MatrixElement carries coefficients a_1..a_n in M_m against its basis, and
`mn_norm` evaluates ||sum a_i (x) e_i|| in M_m(E).

The interpolated structure at parameter theta is evaluated through the
positive-pair supremum

    sup { (sum_k ||s a_k t||_2^2)^(1/2) : s,t >= 0, tr s^(2p') <= 1, tr t^(2p) <= 1 }

with p = 1/(1-theta), p' = 1/theta, solved by alternating ascent where each
half step is an exact Schatten-dual eigenvalue problem.  An independent
oracle is provided by the completely positive map x -> sum a_i* x a_i acting
on the Schatten class S_p'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    as_matrix,
    dagger,
    operator_norm,
    schatten_norm,
    complex_randn,
    random_psd,
)

ENDPOINT_THETA_CUTOFF = 1e-3


def c_theta(theta: float) -> float:
    """(theta^theta (1-theta)^(1-theta))^(-1); equals 1 at the endpoints, 2 at 1/2."""
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    if theta in (0.0, 1.0):
        return 1.0
    return float(math.exp(-(theta * math.log(theta) + (1 - theta) * math.log(1 - theta))))


@dataclass(frozen=True)
class ThetaParams:
    theta: float
    p: float
    p_prime: float
    c_theta: float

    @classmethod
    def from_theta(cls, theta: float) -> "ThetaParams":
        theta = float(theta)
        if not 0.0 <= theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        p = math.inf if theta == 1.0 else 1.0 / (1.0 - theta)
        p_prime = math.inf if theta == 0.0 else 1.0 / theta
        return cls(theta=theta, p=p, p_prime=p_prime, c_theta=c_theta(theta))


@dataclass(frozen=True)
class OpSpace:
    """Descriptor of one Hilbertian operator space structure on C^n."""

    kind: str                   # row | column | rtheta | rcapc | weighted_diag | graph | direct_sum
    n: int = 0
    theta: float | None = None
    weights: tuple = ()
    summands: tuple = ()

    @property
    def dimension(self) -> int:
        if self.kind == "direct_sum":
            return sum(s.dimension for s in self.summands)
        return self.n

    def to_json(self) -> dict:
        if self.kind == "direct_sum":
            return {"variant": "direct_sum",
                    "summands": [s.to_json() for s in self.summands]}
        out = {"variant": self.kind, "n": self.n}
        if self.kind == "rtheta":
            out["theta"] = self.theta
        if self.kind in ("weighted_diag", "graph"):
            out["weights"] = list(self.weights)
        return out


def row(n: int) -> OpSpace:
    return OpSpace(kind="row", n=int(n))


def column(n: int) -> OpSpace:
    return OpSpace(kind="column", n=int(n))


def r_theta(n: int, theta: float) -> OpSpace:
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    return OpSpace(kind="rtheta", n=int(n), theta=theta)


def oh(n: int) -> OpSpace:
    return r_theta(n, 0.5)


def r_cap_c(n: int) -> OpSpace:
    return OpSpace(kind="rcapc", n=int(n))


def weighted_diag(xi) -> OpSpace:
    xi = tuple(float(x) for x in xi)
    if any(x <= 0 for x in xi):
        raise ValueError("weights must be positive")
    return OpSpace(kind="weighted_diag", n=len(xi), weights=xi)


def graph(lam) -> OpSpace:
    lam = tuple(float(x) for x in lam)
    if any(x <= 0 for x in lam):
        raise ValueError("graph weights must be positive")
    return OpSpace(kind="graph", n=len(lam), weights=lam)


def direct_sum(*spaces: OpSpace) -> OpSpace:
    return OpSpace(kind="direct_sum", summands=tuple(spaces))


def space_from_json(obj) -> OpSpace:
    variant = obj["variant"]
    if variant == "direct_sum":
        return direct_sum(*(space_from_json(s) for s in obj["summands"]))
    if variant == "row":
        return row(obj["n"])
    if variant == "column":
        return column(obj["n"])
    if variant == "rtheta":
        return r_theta(obj["n"], obj["theta"])
    if variant == "oh":
        return oh(obj["n"])
    if variant == "rcapc":
        return r_cap_c(obj["n"])
    if variant == "weighted_diag":
        return weighted_diag(obj["weights"])
    if variant == "graph":
        return graph(obj["weights"])
    raise ValueError(f"unknown space variant {variant!r}")


@dataclass(frozen=True)
class MatrixElement:
    """Element sum_i a_i (x) e_i of M_m(E): square coefficients plus descriptor."""

    coefficients: tuple
    space: OpSpace

    def __post_init__(self):
        coeffs = tuple(as_matrix(a) for a in self.coefficients)
        if len(coeffs) != self.space.dimension:
            raise ValueError("coefficient count must equal the space dimension")
        m = coeffs[0].shape[0]
        for a in coeffs:
            if a.shape != (m, m):
                raise ValueError("all coefficients must be square of equal size")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def block_size(self) -> int:
        return self.coefficients[0].shape[0]

    def to_json(self) -> dict:
        from .linalg import matrix_to_json
        return {"space": self.space.to_json(),
                "coefficients": [matrix_to_json(a) for a in self.coefficients]}


def element_from_json(obj) -> MatrixElement:
    from .linalg import matrix_from_json
    return MatrixElement(
        coefficients=tuple(matrix_from_json(a) for a in obj["coefficients"]),
        space=space_from_json(obj["space"]),
    )


@dataclass(frozen=True)
class SolverOptions:
    multistarts: int = 16
    max_iter: int = 800
    tol: float = 1e-12
    seed: int = 7


@dataclass(frozen=True)
class NormResult:
    value: float
    converged: bool
    active_summands: tuple = ()
    iterations: int = 0


def _row_value(coeffs) -> float:
    acc = sum(a @ dagger(a) for a in coeffs)
    return math.sqrt(operator_norm(acc))


def _column_value(coeffs) -> float:
    acc = sum(dagger(a) @ a for a in coeffs)
    return math.sqrt(operator_norm(acc))


def _weighted_value(coeffs, xi) -> float:
    r = _row_value(coeffs)
    acc = sum((x * x) * (dagger(a) @ a) for a, x in zip(coeffs, xi))
    return max(r, math.sqrt(operator_norm(acc)))


def oh_closed_form_norm(coeffs) -> float:
    """Exact midpoint norm ||sum a_k (x) conj(a_k)||^(1/2)."""
    acc = sum(np.kron(a, np.conj(a)) for a in coeffs)
    return math.sqrt(operator_norm(acc))


def _psd_eigh(mat):
    h = (mat + dagger(mat)) / 2.0
    w, u = np.linalg.eigh(h)
    return np.clip(w, 0.0, None), u


def _dual_step(mat, r):
    """Return (||mat||_{S_r}, argmax) for tr(X mat) over PSD X, ||X||_{S_r*} <= 1.

    The maximizer is X = mat^(r-1) / (tr mat^r)^(1/r*); computed on the
    normalized spectrum so large exponents stay finite.
    """
    w, u = _psd_eigh(mat)
    top = float(w[-1]) if w.size else 0.0
    if top <= 0.0:
        return 0.0, None
    b = w / top
    sr = float(np.sum(b ** r))
    value = top * sr ** (1.0 / r)
    rstar = r / (r - 1.0)
    x_eigs = b ** (r - 1.0) / sr ** (1.0 / rstar)
    x = (u * x_eigs) @ dagger(u)
    return value, (x + dagger(x)) / 2.0


def theta_sup_norm(coeffs, theta, opts: SolverOptions | None = None) -> NormResult:
    """Alternating-ascent solver for the positive-pair supremum at parameter theta.

    Iterates on sigma = s^2 and tau = t^2 directly; each half step is the
    exact Schatten-dual maximizer, so the objective is monotone and every
    iterate yields a certified lower bound.
    """
    opts = opts or SolverOptions()
    theta = float(theta)
    params = ThetaParams.from_theta(theta)
    p, pp = params.p, params.p_prime
    gam = np.stack([as_matrix(a) for a in coeffs])
    m = gam.shape[1]
    rng = np.random.default_rng(opts.seed)
    best = 0.0
    best_conv = False
    total_iters = 0

    def tau_normalized(mat):
        w, u = _psd_eigh(mat)
        top = float(w[-1]) if w.size else 0.0
        if top <= 0.0:
            return None
        b = w / top
        norm_p = top * float(np.sum(b ** p)) ** (1.0 / p)
        x = (u * (w / norm_p)) @ dagger(u)
        return (x + dagger(x)) / 2.0

    for start in range(opts.multistarts):
        if start == 0:
            tau = tau_normalized(np.eye(m, dtype=np.complex128))
        else:
            tau = tau_normalized(random_psd(rng, m))
        if tau is None:
            continue
        prev = -1.0
        converged = False
        iters = 0
        val = 0.0
        for it in range(opts.max_iter):
            iters = it + 1
            bmat = np.einsum("kij,jl,kml->im", gam, tau, np.conj(gam), optimize=True)
            val_sq, sigma = _dual_step(bmat, p)
            if sigma is None:
                val = 0.0
                converged = True
                break
            amat = np.einsum("kji,jl,klm->im", np.conj(gam), sigma, gam, optimize=True)
            val_sq, tau = _dual_step(amat, pp)
            if tau is None:
                val = 0.0
                converged = True
                break
            val = math.sqrt(val_sq)
            if abs(val - prev) <= opts.tol * max(val, 1e-300):
                converged = True
                break
            prev = val
        total_iters += iters
        if val > best:
            best = val
            best_conv = converged
        elif val == best:
            best_conv = best_conv or converged
    return NormResult(value=best, converged=best_conv, iterations=total_iters)


def intro_form_objective(coeffs, theta, s, t) -> float:
    """(sum_k ||s^theta a_k t^(1-theta)||_2^2)^(1/2) for PSD s, t.

    Evaluator for the Hilbert-Schmidt-ball parametrization of the same
    supremum; the substitution s -> s^theta, t -> t^(1-theta) maps its
    feasible set onto the trace-power one.
    """
    from .linalg import fractional_power
    st = fractional_power(s, theta)
    tt = fractional_power(t, 1.0 - theta)
    total = 0.0
    for a in coeffs:
        total += schatten_norm(st @ as_matrix(a) @ tt, 2) ** 2
    return math.sqrt(total)


def mn_norm_result(x: MatrixElement, opts: SolverOptions | None = None) -> NormResult:
    opts = opts or SolverOptions()
    space = x.space
    coeffs = x.coefficients
    kind = space.kind
    if kind == "row":
        return NormResult(_row_value(coeffs), True)
    if kind == "column":
        return NormResult(_column_value(coeffs), True)
    if kind == "rcapc":
        return NormResult(max(_row_value(coeffs), _column_value(coeffs)), True)
    if kind in ("weighted_diag", "graph"):
        return NormResult(_weighted_value(coeffs, space.weights), True)
    if kind == "rtheta":
        theta = space.theta
        if theta <= ENDPOINT_THETA_CUTOFF:
            return NormResult(_column_value(coeffs), True)
        if theta >= 1.0 - ENDPOINT_THETA_CUTOFF:
            return NormResult(_row_value(coeffs), True)
        if theta == 0.5:
            # the closed form is authoritative at the midpoint
            return NormResult(oh_closed_form_norm(coeffs), True)
        return theta_sup_norm(coeffs, theta, opts)
    if kind == "direct_sum":
        offset = 0
        values = []
        converged = True
        for s in space.summands:
            d = s.dimension
            sub = MatrixElement(coefficients=coeffs[offset:offset + d], space=s)
            r = mn_norm_result(sub, opts)
            values.append(r.value)
            converged = converged and r.converged
            offset += d
        top = max(values) if values else 0.0
        active = tuple(i for i, v in enumerate(values)
                       if v >= top - 1e-12 * max(top, 1.0))
        return NormResult(top, converged, active_summands=active)
    raise ValueError(f"unknown space kind {kind!r}")


def mn_norm(x: MatrixElement, opts: SolverOptions | None = None) -> float:
    return mn_norm_result(x, opts).value


def cp_map_schatten_norm(coeffs, p_prime, opts: SolverOptions | None = None) -> float:
    """Square root of || x -> sum a_i* x a_i : S_p' -> S_p' ||.

    Projected nonlinear power iteration on the positive part of the unit
    ball (the norm of a completely positive map is attained there), with
    multistart.  Serves as independent oracle for the interpolated norm.
    """
    opts = opts or SolverOptions()
    p_prime = float(p_prime)
    if not (1.0 < p_prime < math.inf):
        raise ValueError("p' must lie in (1, inf)")
    p = p_prime / (p_prime - 1.0)
    a = np.stack([as_matrix(c) for c in coeffs])
    if a.shape[1] != a.shape[2]:
        raise ValueError("coefficients must be square")
    m = a.shape[1]
    rng = np.random.default_rng(opts.seed + 1)
    best = 0.0
    for start in range(opts.multistarts):
        if start == 0:
            x = np.eye(m, dtype=np.complex128)
        else:
            x = random_psd(rng, m)
        w, u = _psd_eigh(x)
        top = float(w[-1])
        if top <= 0.0:
            continue
        b = w / top
        x = (u * (w / (top * float(np.sum(b ** p_prime)) ** (1.0 / p_prime)))) @ dagger(u)
        prev = -1.0
        val = 0.0
        for _ in range(opts.max_iter):
            z = np.einsum("kji,jl,klm->im", np.conj(a), x, a, optimize=True)
            val, y = _dual_step(z, p_prime)
            if y is None:
                break
            wmat = np.einsum("kij,jl,kml->im", a, y, np.conj(a), optimize=True)
            val, x = _dual_step(wmat, p)
            if x is None:
                break
            if abs(val - prev) <= opts.tol * max(val, 1e-300):
                break
            prev = val
        best = max(best, val)
    return math.sqrt(best)


def cp_map_matrix(coeffs) -> np.ndarray:
    """Dense matricization of x -> sum a_i* x a_i on row-major vec."""
    a = [as_matrix(c) for c in coeffs]
    return sum(np.kron(dagger(c), c.T) for c in a)


def cb_norm_exact(u, source: str, target: str) -> float:
    """Exact cb-norm of a map between row/column structures.

    Row->column and column->row maps have cb-norm equal to the
    Hilbert-Schmidt norm; maps of a structure to itself to the operator norm.
    """
    names = {"row", "column"}
    if source not in names or target not in names:
        raise ValueError("endpoints must be 'row' or 'column'")
    m = as_matrix(u)
    if source == target:
        return operator_norm(m)
    return schatten_norm(m, 2)


def _canonical_families(n_src: int, k: int):
    eye = np.eye(k, dtype=np.complex128)
    out = []
    for i in range(n_src):
        fam = [np.zeros((k, k), dtype=np.complex128) for _ in range(n_src)]
        fam[i] = eye.copy()
        out.append(fam)
    col_fam = []
    row_fam = []
    for i in range(n_src):
        z = np.zeros((k, k), dtype=np.complex128)
        z[i % k, 0] = 1.0
        col_fam.append(z)
        z2 = np.zeros((k, k), dtype=np.complex128)
        z2[0, i % k] = 1.0
        row_fam.append(z2)
    out.append(col_fam)
    out.append(row_fam)
    return out


def cb_norm_level_estimate(u, source: OpSpace, target: OpSpace, level: int,
                           opts: SolverOptions | None = None,
                           random_starts: int = 24, climb_iters: int = 60) -> float:
    """Certified lower bound on the cb-norm from optimized level-k elements.

    Maximizes ||(id (x) u) x||_{M_k(F)} over elements x of the unit ball of
    M_k(E): every evaluated candidate is normalized to unit source norm, so
    any returned value is a genuine lower bound; random search is seeded
    with canonical coordinate families and refined by hill climbing.
    """
    opts = opts or SolverOptions()
    if level < 1:
        raise ValueError("level must be >= 1")
    mat = as_matrix(u)
    n_src = source.dimension
    n_tgt = target.dimension
    if mat.shape != (n_tgt, n_src):
        raise ValueError("map matrix shape must be (dim target, dim source)")
    rng = np.random.default_rng(opts.seed + 2)

    def ratio(fam):
        fam = [as_matrix(f) for f in fam]
        src_norm = mn_norm(MatrixElement(tuple(fam), source), opts)
        if src_norm <= 1e-14:
            return 0.0, None
        img = [sum(mat[j, i] * fam[i] for i in range(n_src)) for j in range(n_tgt)]
        tgt_norm = mn_norm(MatrixElement(tuple(img), target), opts)
        return tgt_norm / src_norm, fam

    best_val = 0.0
    best_fam = None
    candidates = _canonical_families(n_src, level)
    for _ in range(random_starts):
        candidates.append([complex_randn(rng, level, level) for _ in range(n_src)])
    for fam in candidates:
        val, f = ratio(fam)
        if val > best_val:
            best_val, best_fam = val, f
    if best_fam is None:
        return 0.0
    sigma = 0.5
    for _ in range(climb_iters):
        prop = [f + sigma * complex_randn(rng, level, level) for f in best_fam]
        val, f = ratio(prop)
        if val > best_val:
            best_val, best_fam = val, f
        else:
            sigma *= 0.9
    return best_val
