"""Truncated full Fock space over two basis families and generalized circular
elements built from left/right creation operators.

The underlying Hilbert space H carries an orthonormal basis split into two
families e_1..e_n and e'_1..e'_n (2n letters).  The truncated Fock space
keeps words of length at most d; creation operators annihilate top-degree
words, so every tensor norm computed here is a compression of (hence a
certified lower bound on) its untruncated value.

The generators of interest are

    x_i = (1-theta) lam_i^(theta/2) l_i + theta lam_i^(-(1-theta)/2) (l'_i)*
    y_i = (1-theta) lam_i^((1-theta)/2) r'_i + theta lam_i^(-theta/2) (r_i)*

with xi_i = theta (1-theta)^(-1) lam_i^(-1/2); the one-parameter scaling
group multiplies x_j by xi_j^(2iz) and x_j* by xi_j^(-2iz), which is exact
on monomials and needs no truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .linalg import as_matrix, dagger, operator_norm
from .spaces import c_theta

DEFAULT_TENSOR_CAP = 20000


class TruncatedFock:
    """Words of length <= cutoff over 2n letters; the empty word is index 0."""

    def __init__(self, n: int, cutoff: int):
        if n < 1 or cutoff < 1:
            raise ValueError("need at least one generator index and cutoff >= 1")
        self.n = int(n)
        self.cutoff = int(cutoff)
        self.letters = 2 * self.n
        words = []
        for deg in range(self.cutoff + 1):
            words.extend(product(range(self.letters), repeat=deg))
        self.words = words
        self.index = {w: i for i, w in enumerate(words)}
        self.dim = len(words)
        self.degrees = np.array([len(w) for w in words])

    def expected_dim(self) -> int:
        return sum(self.letters ** k for k in range(self.cutoff + 1))

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=np.complex128)
        v[0] = 1.0
        return v

    @lru_cache(maxsize=None)
    def _letter_creation(self, letter: int, side: str):
        rows, cols = [], []
        for i, w in enumerate(self.words):
            if len(w) >= self.cutoff:
                continue
            if side == "left":
                target = (letter,) + w
            else:
                target = w + (letter,)
            rows.append(self.index[target])
            cols.append(i)
        data = np.ones(len(rows), dtype=np.complex128)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.dim, self.dim))

    def creation(self, h, side: str = "left") -> sp.csr_matrix:
        """Compression of x -> h (x) x (left) or x -> x (x) h (right)."""
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        h = np.asarray(h, dtype=np.complex128).ravel()
        if h.size != self.letters:
            raise ValueError("vector must have one component per letter")
        out = sp.csr_matrix((self.dim, self.dim), dtype=np.complex128)
        for j, coeff in enumerate(h):
            if coeff != 0:
                out = out + coeff * self._letter_creation(j, side)
        return out.tocsr()

    def letter_vector(self, letter: int) -> np.ndarray:
        h = np.zeros(self.letters, dtype=np.complex128)
        h[letter] = 1.0
        return h

    def e_vector(self, i: int) -> np.ndarray:
        return self.letter_vector(i)

    def e_prime_vector(self, i: int) -> np.ndarray:
        return self.letter_vector(self.n + i)

    def degree_projection(self, max_degree: int) -> sp.csr_matrix:
        keep = (self.degrees <= max_degree).astype(np.complex128)
        return sp.diags(keep).tocsr()

    def degree_one_slots(self):
        """Indices of the degree-one words (j,) for j = 0..2n-1, in letter order."""
        return [self.index[(j,)] for j in range(self.letters)]


@lru_cache(maxsize=16)
def truncated_fock(n: int, cutoff: int) -> TruncatedFock:
    return TruncatedFock(n, cutoff)


def vacuum_state(t) -> complex:
    """<T vacuum, vacuum>, i.e. the (0, 0) entry."""
    if sp.issparse(t):
        return complex(t[0, 0])
    return complex(np.asarray(t)[0, 0])


@dataclass(frozen=True)
class CircularFamily:
    """Generalized circular generators on a truncated Fock space."""

    fock: TruncatedFock
    theta: float
    lambdas: tuple

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        lams = tuple(float(x) for x in self.lambdas)
        if len(lams) != self.fock.n:
            raise ValueError("one lambda per generator index")
        if any(x <= 0 for x in lams):
            raise ValueError("lambdas must be positive")
        object.__setattr__(self, "lambdas", lams)

    @property
    def n(self) -> int:
        return self.fock.n

    @property
    def xi(self) -> np.ndarray:
        th = self.theta
        return th / (1.0 - th) / np.sqrt(np.array(self.lambdas))

    def x_op(self, i: int) -> sp.csr_matrix:
        th, lam = self.theta, self.lambdas[i]
        left = self.fock._letter_creation(i, "left")
        left_primed = self.fock._letter_creation(self.fock.n + i, "left")
        return ((1.0 - th) * lam ** (th / 2.0) * left
                + th * lam ** (-(1.0 - th) / 2.0) * left_primed.conj().T).tocsr()

    def y_op(self, i: int) -> sp.csr_matrix:
        th, lam = self.theta, self.lambdas[i]
        right = self.fock._letter_creation(i, "right")
        right_primed = self.fock._letter_creation(self.fock.n + i, "right")
        return ((1.0 - th) * lam ** ((1.0 - th) / 2.0) * right_primed
                + th * lam ** (-th / 2.0) * right.conj().T).tocsr()

    def x_ops(self):
        return [self.x_op(i) for i in range(self.n)]

    def y_ops(self):
        return [self.y_op(i) for i in range(self.n)]


def modular_scale(family: CircularFamily, z: complex, word) -> complex:
    """Scalar by which the scaling group at parameter z multiplies a monomial.

    `word` is a sequence of (index, star) letters in the x generators; the
    scalar is prod_j xi_j^(+-2iz), analytic in z.
    """
    xi = family.xi
    log_total = 0.0
    for idx, star in word:
        if not 0 <= idx < family.n:
            raise ValueError("word references an absent generator")
        sign = -1.0 if star else 1.0
        log_total += sign * math.log(xi[idx])
    return complex(np.exp(2j * complex(z) * log_total))


def word_operator(family: CircularFamily, word) -> sp.csr_matrix:
    """Product of x / x* factors, leftmost letter applied last."""
    out = sp.identity(family.fock.dim, dtype=np.complex128, format="csr")
    for idx, star in word:
        op = family.x_op(idx)
        if star:
            op = op.conj().T.tocsr()
        out = out @ op
    return out.tocsr()


def modular_apply(family: CircularFamily, z: complex, word):
    """Image of a monomial under the scaling group: (scalar, same word)."""
    return modular_scale(family, z, word), tuple(word)


def l_theta_norm(family: CircularFamily, coeffs) -> float:
    """Interpolated two-norm of sum_j z_j x_j on the left family.

    Computed as || sum_j z_j xi_j^theta x_j (vacuum) ||, the analytic
    continuation of the scaling group at -i theta / 2 applied inside the
    vacuum vector.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128).ravel()
    if coeffs.size != family.n:
        raise ValueError("need one coefficient per generator")
    xi = family.xi
    vac = family.fock.vacuum()
    acc = np.zeros(family.fock.dim, dtype=np.complex128)
    for j in range(family.n):
        if coeffs[j] != 0:
            acc += coeffs[j] * xi[j] ** family.theta * (family.x_op(j) @ vac)
    return float(np.linalg.norm(acc))


def r_theta_norm(family: CircularFamily, coeffs) -> float:
    """Mirrored interpolated norm of sum_j alpha_j y_j on the right family,
    using the xi^(1-theta) scaling implied by the boundary-flat family."""
    coeffs = np.asarray(coeffs, dtype=np.complex128).ravel()
    if coeffs.size != family.n:
        raise ValueError("need one coefficient per generator")
    xi = family.xi
    vac = family.fock.vacuum()
    acc = np.zeros(family.fock.dim, dtype=np.complex128)
    for j in range(family.n):
        if coeffs[j] != 0:
            acc += coeffs[j] * xi[j] ** (1.0 - family.theta) * (family.y_op(j) @ vac)
    return float(np.linalg.norm(acc))


def scaling_unitary(family: CircularFamily, t: float) -> sp.csr_matrix:
    """First quantization of e_j -> xi_j^(2it) e_j, e'_j -> xi_j^(-2it) e'_j."""
    xi = family.xi
    letter_phase = np.concatenate([xi ** (2j * t), xi ** (-2j * t)])
    diag = np.ones(family.fock.dim, dtype=np.complex128)
    for i, w in enumerate(family.fock.words):
        val = 1.0 + 0j
        for letter in w:
            val *= letter_phase[letter]
        diag[i] = val
    return sp.diags(diag).tocsr()


def generator_projection(fock: TruncatedFock, t) -> np.ndarray:
    """T -> l(Q(T vac)) + l(Q'(T* vac))* with Q, Q' the degree-one projections
    onto the two letter families.  Fixes each x_i and is idempotent."""
    t = np.asarray(t.toarray() if sp.issparse(t) else t, dtype=np.complex128)
    if t.shape != (fock.dim, fock.dim):
        raise ValueError("operator must act on the truncated space")
    vac_col = t[:, 0]
    vac_row_star = np.conj(t[0, :])   # T* applied to the vacuum
    slots = fock.degree_one_slots()
    q = np.zeros(fock.letters, dtype=np.complex128)
    q_prime = np.zeros(fock.letters, dtype=np.complex128)
    for j in range(fock.n):
        q[j] = vac_col[slots[j]]
    for j in range(fock.n, fock.letters):
        q_prime[j] = vac_row_star[slots[j]]
    out = fock.creation(q, "left") + fock.creation(q_prime, "left").conj().T
    return np.asarray(out.todense())


def blockwise_generator_projection(fock: TruncatedFock, x_blocks) -> np.ndarray:
    """Ampliation id_k (x) P applied to a k x k block matrix of operators."""
    k = len(x_blocks)
    d = fock.dim
    out = np.zeros((k * d, k * d), dtype=np.complex128)
    for u in range(k):
        for v in range(k):
            out[u * d:(u + 1) * d, v * d:(v + 1) * d] = \
                generator_projection(fock, x_blocks[u][v])
    return out


def _sparse_operator_norm(a, seed=0) -> float:
    if sp.issparse(a):
        if a.shape[0] <= 700:
            return operator_norm(a.toarray())
        h = (a.conj().T @ a).tocsr()
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(a.shape[0])
        vals = spla.eigsh(h, k=1, which="LA", v0=v0,
                          maxiter=5000, tol=1e-11,
                          return_eigenvectors=False)
        return float(math.sqrt(max(float(vals[0]), 0.0)))
    return operator_norm(a)


def min_tensor_norm(fock: TruncatedFock, terms, cap: int = DEFAULT_TENSOR_CAP) -> float:
    """Operator norm of sum_i T_i (x) a_i on the truncated tensor space.

    Monotone nondecreasing in the cutoff; a certified lower bound on the
    untruncated value since truncation is a compression.
    """
    terms = [(t, as_matrix(a)) for t, a in terms]
    if not terms:
        return 0.0
    m = terms[0][1].shape[0]
    for _, a in terms:
        if a.shape != (m, m):
            raise ValueError("matrix coefficients must be square of equal size")
    total = fock.dim * m
    if total > cap:
        raise ValueError(f"tensor dimension {total} exceeds cap {cap}")
    acc = None
    for t, a in terms:
        ts = t if sp.issparse(t) else sp.csr_matrix(np.asarray(t, dtype=np.complex128))
        term = sp.kron(ts, sp.csr_matrix(a), format="csr")
        acc = term if acc is None else acc + term
    return _sparse_operator_norm(acc.tocsr())


@dataclass(frozen=True)
class ChainItem:
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool


@dataclass(frozen=True)
class ChainReport:
    items: tuple

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def item(self, name: str) -> ChainItem:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)


def check_interpolation_chain(family: CircularFamily, z, a=None,
                              tol_eq: float = 1e-10,
                              tol_ineq: float = 1e-9) -> ChainReport:
    """Verify the interpolation chain for x(k) = sum_i z_i(k) x_i.

    z is an n x K coefficient block.  Items:
      coefficient-identity   (sum |z|^2)^(1/2) = c(theta) (sum_k ||x(k)||^2)^(1/2)
      vacuum-pairing         sum_k <y(k) x(k) vac, vac> = theta (1-theta) sum |z|^2
      bilinear-bound         |pairing| <= left-norms * right-norms
      right-family-bound     right norms <= (1-theta)^theta theta^(1-theta) ||z||
      tensor-triangle-bound  truncated min-norm <= convexity upper bound (needs a)
    """
    zmat = np.asarray(z, dtype=np.complex128)
    if zmat.ndim == 1:
        zmat = zmat[:, None]
    n, kk = zmat.shape
    if n != family.n:
        raise ValueError("z must have one row per generator")
    theta = family.theta
    cth = c_theta(theta)
    z_sq = float(np.sum(np.abs(zmat) ** 2))
    vac = family.fock.vacuum()
    x_ops = family.x_ops()
    y_ops = family.y_ops()

    items = []

    left_sq = sum(l_theta_norm(family, zmat[:, k]) ** 2 for k in range(kk))
    lhs = math.sqrt(z_sq)
    rhs = cth * math.sqrt(left_sq)
    err = abs(lhs - rhs)
    items.append(ChainItem("coefficient-identity", lhs, rhs, tol_eq - err,
                           err <= tol_eq * max(1.0, lhs)))

    pairing = 0.0 + 0j
    for k in range(kk):
        xv = np.zeros(family.fock.dim, dtype=np.complex128)
        for i in range(n):
            if zmat[i, k] != 0:
                xv += zmat[i, k] * (x_ops[i] @ vac)
        yxv = np.zeros(family.fock.dim, dtype=np.complex128)
        for i in range(n):
            if zmat[i, k] != 0:
                yxv += np.conj(zmat[i, k]) * (y_ops[i] @ xv)
        pairing += yxv[0]
    target = theta * (1.0 - theta) * z_sq
    err = abs(pairing - target)
    items.append(ChainItem("vacuum-pairing", abs(pairing), target, tol_eq - err,
                           err <= tol_eq * max(1.0, target)))

    right_sq = sum(r_theta_norm(family, np.conj(zmat[:, k])) ** 2 for k in range(kk))
    bilinear_rhs = math.sqrt(left_sq) * math.sqrt(right_sq)
    slack = bilinear_rhs - abs(pairing)
    items.append(ChainItem("bilinear-bound", abs(pairing), bilinear_rhs, slack,
                           slack >= -tol_ineq))

    right_bound = (1.0 - theta) ** theta * theta ** (1.0 - theta) * math.sqrt(z_sq)
    slack = right_bound - math.sqrt(right_sq)
    items.append(ChainItem("right-family-bound", math.sqrt(right_sq), right_bound,
                           slack, slack >= -tol_ineq))

    if a is not None:
        coeffs = [as_matrix(c) for c in a]
        if len(coeffs) != n:
            raise ValueError("need one matrix coefficient per generator")
        lams = np.array(family.lambdas)
        col = sum(l ** theta * (dagger(c) @ c) for c, l in zip(coeffs, lams))
        rowm = sum(l ** (theta - 1.0) * (c @ dagger(c)) for c, l in zip(coeffs, lams))
        upper = math.sqrt((1.0 - theta) * operator_norm(col)
                          + theta * operator_norm(rowm))
        lower = min_tensor_norm(family.fock,
                                [(family.x_op(i), coeffs[i]) for i in range(n)])
        slack = upper - lower
        items.append(ChainItem("tensor-triangle-bound", lower, upper, slack,
                               slack >= -tol_ineq))

    return ChainReport(items=tuple(items))


def boundary_flat_family(family: CircularFamily, zval: complex):
    """Operators f_i(z) on the right family whose boundary norms are flat.

    f_i(z) = ((1-theta)^(1-z) theta^z)^(-1)
             ((1-theta) lam_i^(z/2) r'_i + theta lam_i^(-(1-z)/2) r_i*);
    at Re z = 0 the vacuum vector of sum alpha_i f_i(z) has norm ||alpha||,
    at Re z = 1 the adjoint vacuum vector does.
    """
    th = family.theta
    zval = complex(zval)
    pref = 1.0 / ((1.0 - th) ** (1.0 - zval) * th ** zval)
    ops = []
    for i in range(family.n):
        lam = family.lambdas[i]
        right = family.fock._letter_creation(i, "right")
        right_primed = family.fock._letter_creation(family.fock.n + i, "right")
        op = pref * ((1.0 - th) * lam ** (zval / 2.0) * right_primed
                     + th * lam ** (-(1.0 - zval) / 2.0) * right.conj().T)
        ops.append(op.tocsr())
    return ops
