"""Dense complex linear algebra substrate shared by every other module.

Conventions fixed here once and relied on elsewhere:
  * matrices are numpy complex128 arrays, row-major;
  * inner products are linear in the FIRST argument;
  * Hermitian inputs are symmetrized as (A + A*)/2 before eigendecomposition;
  * the PSD eigenvalue floor is 1e-12 * ||A||; eigenvalues below it are
    clamped to zero when taking fractional powers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_RTOL = 1e-10
PSD_EIG_RTOL = 1e-10
PSD_FLOOR_RTOL = 1e-12


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite complex128 2-d array, validating shape and entries."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError("expected a 2-d matrix with at least one row and column")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError("matrix entries must be finite")
    return m


def dagger(a) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def inner(u, v) -> complex:
    """Inner product on C^k, linear in the first argument."""
    u = np.asarray(u).ravel()
    v = np.asarray(v).ravel()
    return complex(np.dot(u, np.conj(v)))


def operator_norm(a) -> float:
    a = np.asarray(a, dtype=np.complex128)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def singular_values(a) -> np.ndarray:
    return np.linalg.svd(np.asarray(a, dtype=np.complex128), compute_uv=False)


def schatten_norm(a, p) -> float:
    """(sum_i sigma_i^p)^(1/p); p=inf is the operator norm, p=2 Hilbert-Schmidt."""
    p = float(p)
    if not p >= 1.0:
        raise ValueError("Schatten exponent must satisfy p >= 1")
    s = singular_values(as_matrix(a))
    top = float(s[0]) if s.size else 0.0
    if top == 0.0:
        return 0.0
    if np.isinf(p):
        return top
    if p == 1.0:
        return float(np.sum(s))
    if p == 2.0:
        return float(np.sqrt(np.sum(s * s)))
    # factor out the largest singular value so large p does not overflow
    return top * float(np.sum((s / top) ** p) ** (1.0 / p))


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


@dataclass(frozen=True)
class HermitianSpectrum:
    """Eigen data of a (symmetrized) Hermitian matrix, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ dagger(u)


def hermitian_spectrum(a) -> HermitianSpectrum:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError("eigendecomposition needs a square matrix")
    h = (m + dagger(m)) / 2.0
    w, u = np.linalg.eigh(h)
    return HermitianSpectrum(eigenvalues=w, eigenvectors=u)


def fractional_power(a, alpha) -> np.ndarray:
    """alpha-th power of a PSD matrix via eigendecomposition.

    Input must be Hermitian up to 1e-10*||A|| and have min eigenvalue
    >= -1e-10*||A||.  Eigenvalues below the PSD floor 1e-12*||A|| map to 0
    for alpha > 0 and to 1 for alpha = 0 (so A**0 is the identity).
    """
    alpha = float(alpha)
    if alpha < 0.0:
        raise ValueError("exponent must be nonnegative")
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError("fractional power needs a square matrix")
    scale = operator_norm(m)
    if operator_norm(m - dagger(m)) > HERMITICITY_RTOL * max(scale, 1e-300):
        raise ValueError("matrix is not Hermitian within tolerance")
    spec = hermitian_spectrum(m)
    w = spec.eigenvalues
    if w.size and float(w[0]) < -PSD_EIG_RTOL * scale:
        raise ValueError("matrix is not positive semidefinite within tolerance")
    floor = PSD_FLOOR_RTOL * scale
    if alpha == 0.0:
        return np.eye(m.shape[0], dtype=np.complex128)
    wa = np.where(w > floor, np.clip(w, 0.0, None), 0.0) ** alpha
    u = spec.eigenvectors
    out = (u * wa) @ dagger(u)
    return (out + dagger(out)) / 2.0


def psd_part(a) -> np.ndarray:
    """Nearest PSD matrix: symmetrize and clip negative eigenvalues."""
    spec = hermitian_spectrum(as_matrix(a))
    w = np.clip(spec.eigenvalues, 0.0, None)
    u = spec.eigenvectors
    out = (u * w) @ dagger(u)
    return (out + dagger(out)) / 2.0


def _simplex_project(v: np.ndarray) -> np.ndarray:
    # Euclidean projection of a real vector onto {x >= 0, sum x = 1}
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    rho = int(np.nonzero(cond)[0][-1])
    tau = css[rho] / (rho + 1)
    return np.clip(v - tau, 0.0, None)


def project_to_density(a) -> np.ndarray:
    """Frobenius-nearest density matrix (PSD, trace one) to a matrix."""
    spec = hermitian_spectrum(as_matrix(a))
    w = _simplex_project(spec.eigenvalues.real)
    u = spec.eigenvectors
    out = (u * w) @ dagger(u)
    return (out + dagger(out)) / 2.0


def lp_operator_norm(m, p, seed=0, tol=1e-9, starts=8, max_iter=2000) -> float:
    """Norm of an entrywise-nonnegative matrix as a map l_p^n -> l_p^n.

    Uses the nonlinear power iteration over nonnegative vectors (the
    maximizer of a nonnegative matrix is attainable at a nonnegative
    vector), with multistart from random and uniform starts and relative
    convergence `tol`.
    """
    p = float(p)
    if not (1.0 < p < np.inf):
        raise ValueError("lp exponent must lie in (1, inf)")
    a = as_matrix(m)
    if np.max(np.abs(a.imag)) > 1e-12 or np.min(a.real) < -1e-12:
        raise ValueError("matrix must be entrywise nonnegative")
    a = np.clip(a.real, 0.0, None)
    if np.max(a) == 0.0:
        return 0.0
    rows, cols = a.shape
    q = p / (p - 1.0)
    rng = np.random.default_rng(seed)

    def _value(v):
        return float(np.linalg.norm(a @ v, p))

    best = 0.0
    for s in range(starts):
        if s == 0:
            v = np.full(cols, 1.0)
        else:
            v = rng.random(cols) + 1e-12
        v /= np.linalg.norm(v, p)
        val = _value(v)
        for _ in range(max_iter):
            y = a @ v
            ny = np.linalg.norm(y, p)
            if ny == 0.0:
                break
            z = (y / ny) ** (p - 1.0)
            w = a.T @ z
            nw = np.linalg.norm(w, q)
            if nw == 0.0:
                break
            v = (w / nw) ** (q - 1.0)
            v /= np.linalg.norm(v, p)
            new = _value(v)
            if abs(new - val) <= tol * max(new, 1e-300):
                val = new
                break
            val = new
        best = max(best, val)
    return best


def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r).copy()
    ph /= np.abs(ph)
    return q * ph


def complex_randn(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols))
            + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_psd(rng: np.random.Generator, n: int) -> np.ndarray:
    g = complex_randn(rng, n, n)
    return g @ dagger(g)


def random_density(rng: np.random.Generator, n: int) -> np.ndarray:
    w = random_psd(rng, n)
    return w / np.trace(w).real


def orthonormal_columns(a, tol=1e-12) -> np.ndarray:
    """Orthonormal basis of the column span, rank-truncated by SVD."""
    m = as_matrix(a)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return u[:, :0]
    rank = int(np.sum(s > tol * s[0]))
    return u[:, :rank]


def subspace_gap(a, b, tol=1e-12) -> float:
    """Operator-norm distance between orthogonal projectors onto two spans."""
    qa = orthonormal_columns(a, tol)
    qb = orthonormal_columns(b, tol)
    pa = qa @ dagger(qa)
    pb = qb @ dagger(qb)
    return operator_norm(pa - pb)


def matrix_to_json(a) -> dict:
    """Shared JSON matrix format: {"rows", "cols", "data": [[re, im], ...]}."""
    m = as_matrix(a)
    data = [[float(x.real), float(x.imag)] for x in m.ravel()]
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "data": data}


def matrix_from_json(obj) -> np.ndarray:
    rows = int(obj["rows"])
    cols = int(obj["cols"])
    data = obj["data"]
    if len(data) != rows * cols:
        raise ValueError("matrix data length does not match rows*cols")
    flat = np.array([complex(re, im) for re, im in data], dtype=np.complex128)
    return as_matrix(flat.reshape(rows, cols))
