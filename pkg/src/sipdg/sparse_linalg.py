"""Compressed sparse-row matrices and the iterative solvers used by the
experiment harness: plain CG, CG preconditioned by zero-fill incomplete
Cholesky (ICCG), and SOR.

The factorization, triangular-solve and SOR kernels are inherently
sequential, so they run as numba kernels over the raw CSR arrays;
everything runs in one logical thread, which makes every solve
bit-reproducible.  IC(0) breakdown (a nonpositive pivot) is reported,
never repaired: it is an observable outcome on badly penalized systems.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from numba import njit

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERATIONS = "max-iterations"
STATUS_BREAKDOWN = "preconditioner-breakdown"
STATUS_DIVERGED = "diverged"


class PreconditionerBreakdown(ArithmeticError):
    """IC(0) met a nonpositive pivot."""


@dataclass
class SparseMatrix:
    """Square CSR matrix; column indices sorted and unique within rows."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    symmetric: bool = False
    _csr: sp.csr_matrix = field(default=None, repr=False, compare=False)

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    def to_scipy(self) -> sp.csr_matrix:
        if self._csr is None:
            self._csr = sp.csr_matrix(
                (self.data, self.indices, self.indptr), shape=(self.n, self.n)
            )
        return self._csr

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.to_scipy() @ np.asarray(x, dtype=float)

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    def transpose_equals_self(self, rtol: float = 1e-13) -> bool:
        A = self.to_scipy()
        d = abs(A - A.T)
        scale = max(abs(A).max(), 1e-300)
        return d.max() <= rtol * scale


@dataclass(frozen=True)
class SolveReport:
    """`relative_residual` is the true residual ||b - Ax|| / ||b|| as
    computed in float64.  `converged` guarantees it does not exceed
    tol + floor/||b||, where floor = eps * nbar * || |A||x| + |b| || is the
    unavoidable float64 residual-evaluation error (for badly scaled systems
    even the exactly rounded solution cannot evaluate below that floor)."""

    x: np.ndarray
    iterations: int
    relative_residual: float
    status: str

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED


def residual_floor(A: "SparseMatrix", x, b) -> float:
    """Norm bound on the float64 evaluation error of b - Ax."""
    S = A.to_scipy()
    nbar = int(np.diff(S.indptr).max(initial=0)) + 2
    absS = sp.csr_matrix((np.abs(S.data), S.indices, S.indptr), shape=S.shape)
    v = absS @ np.abs(x) + np.abs(b)
    return float(np.finfo(float).eps * nbar * np.linalg.norm(v))


def csr_from_triplets(n, triplets, symmetric=False) -> SparseMatrix:
    """Build CSR from (i, j, value) triplets; duplicates are summed.

    `triplets` is either a (rows, cols, values) tuple of arrays or an
    iterable of (i, j, v).
    """
    if isinstance(triplets, tuple) and len(triplets) == 3:
        rows, cols, vals = (np.asarray(a) for a in triplets)
    else:
        t = list(triplets)
        if t:
            rows, cols, vals = (np.asarray(a) for a in zip(*t))
        else:
            rows = cols = np.empty(0, dtype=np.int64)
            vals = np.empty(0)
    if len(rows) and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n):
        raise ValueError("triplet index out of range")
    A = sp.coo_matrix(
        (np.asarray(vals, dtype=float), (rows, cols)), shape=(n, n)
    ).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return from_scipy(A, symmetric=symmetric)


def from_scipy(A, symmetric=False) -> SparseMatrix:
    A = sp.csr_matrix(A)
    A.sort_indices()
    return SparseMatrix(
        n=A.shape[0],
        indptr=A.indptr.astype(np.int64),
        indices=A.indices.astype(np.int64),
        data=A.data.astype(float),
        symmetric=symmetric,
        _csr=None,
    )


def matvec(A: SparseMatrix, x) -> np.ndarray:
    return A.matvec(x)


@njit(cache=True)
def _ic0_kernel(Lp, Li, Lx):
    # up-looking IC(0) on the lower-triangular pattern; indices sorted, so
    # the diagonal entry is the last of each row.  Returns the failing row
    # or -1 on success.
    n = Lp.shape[0] - 1
    for i in range(n):
        start = Lp[i]
        end = Lp[i + 1]
        for idx in range(start, end):
            j = Li[idx]
            s = Lx[idx]
            pi = start
            pj = Lp[j]
            pj_end = Lp[j + 1] - 1  # exclude diagonal of row j
            while pi < idx and pj < pj_end:
                ci = Li[pi]
                cj = Li[pj]
                if ci == cj:
                    s -= Lx[pi] * Lx[pj]
                    pi += 1
                    pj += 1
                elif ci < cj:
                    pi += 1
                else:
                    pj += 1
            if j == i:
                if s <= 0.0:
                    return i
                Lx[idx] = np.sqrt(s)
            else:
                Lx[idx] = s / Lx[Lp[j + 1] - 1]
    return -1


@njit(cache=True)
def _lower_solve(Lp, Li, Lx, b):
    n = Lp.shape[0] - 1
    x = b.copy()
    for i in range(n):
        s = x[i]
        for idx in range(Lp[i], Lp[i + 1] - 1):
            s -= Lx[idx] * x[Li[idx]]
        x[i] = s / Lx[Lp[i + 1] - 1]
    return x


@njit(cache=True)
def _lower_transpose_solve(Lp, Li, Lx, b):
    n = Lp.shape[0] - 1
    x = b.copy()
    for i in range(n - 1, -1, -1):
        xi = x[i] / Lx[Lp[i + 1] - 1]
        x[i] = xi
        for idx in range(Lp[i], Lp[i + 1] - 1):
            x[Li[idx]] -= Lx[idx] * xi
    return x


@njit(cache=True)
def _sor_sweep(Ap, Ai, Ax, b, x, omega):
    n = Ap.shape[0] - 1
    for i in range(n):
        s = b[i]
        d = 0.0
        for idx in range(Ap[i], Ap[i + 1]):
            j = Ai[idx]
            if j == i:
                d = Ax[idx]
            else:
                s -= Ax[idx] * x[j]
        x[i] = (1.0 - omega) * x[i] + omega * s / d


def ic0_factor(A: SparseMatrix) -> SparseMatrix:
    """Zero-fill incomplete Cholesky factor on A's lower sparsity pattern.

    Raises PreconditionerBreakdown on a nonpositive pivot.
    """
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise PreconditionerBreakdown(
            f"nonpositive diagonal entry at row {int(np.argmin(diag))}"
        )
    L = sp.tril(A.to_scipy(), format="csr")
    L.sort_indices()
    Lp = L.indptr.astype(np.int64)
    Li = L.indices.astype(np.int64)
    Lx = L.data.astype(float).copy()
    bad = _ic0_kernel(Lp, Li, Lx)
    if bad >= 0:
        raise PreconditionerBreakdown(f"nonpositive pivot at row {bad}")
    return SparseMatrix(n=A.n, indptr=Lp, indices=Li, data=Lx, symmetric=False)


class IncompleteCholeskyPreconditioner:
    """Applies (L L^T)^{-1} for a lower-triangular CSR factor."""

    def __init__(self, factor: SparseMatrix):
        self.factor = factor

    def apply(self, r: np.ndarray) -> np.ndarray:
        f = self.factor
        y = _lower_solve(f.indptr, f.indices, f.data, np.asarray(r, dtype=float))
        return _lower_transpose_solve(f.indptr, f.indices, f.data, y)


def cg_solve(A: SparseMatrix, b, preconditioner=None, tol=1e-12, maxit=None) -> SolveReport:
    """(Preconditioned) conjugate gradients with a relative 2-norm residual
    stopping rule.

    Iterations stop on the recurrence residual; convergence is then
    confirmed against the true residual up to the float64 evaluation floor
    (see SolveReport).  A failing confirmation restarts from the true
    residual, which also sweeps up recurrence drift on long solves.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=float)
    n = A.n
    if maxit is None:
        maxit = 20 * n
    bnorm = float(np.linalg.norm(b))
    x = np.zeros(n)
    if bnorm == 0.0:
        return SolveReport(x, 0, 0.0, STATUS_CONVERGED)
    apply_m = preconditioner.apply if preconditioner is not None else (lambda r: r)
    r = b.copy()
    z = apply_m(r)
    p = z.copy()
    rz = float(r @ z)
    it = 0
    restarts = 0
    while it < maxit:
        Ap = A.matvec(p)
        pAp = float(p @ Ap)
        # negative curvature is passed through (the classical recurrences are
        # still defined and converge on mildly indefinite systems); only an
        # exact zero-curvature direction or overflow is a breakdown
        if pAp == 0.0 or not np.isfinite(pAp) or rz == 0.0 or not np.isfinite(rz):
            res = float(np.linalg.norm(b - A.matvec(x))) / bnorm
            return SolveReport(x, it, res, STATUS_DIVERGED)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        it += 1
        if not np.isfinite(float(r @ r)):
            res = float(np.linalg.norm(b - A.matvec(x))) / bnorm
            return SolveReport(x, it, res, STATUS_DIVERGED)
        if np.linalg.norm(r) <= tol * bnorm:
            true_r = b - A.matvec(x)
            true_norm = float(np.linalg.norm(true_r))
            if true_norm <= tol * bnorm + residual_floor(A, x, b):
                return SolveReport(x, it, true_norm / bnorm, STATUS_CONVERGED)
            if restarts >= 10:
                return SolveReport(x, it, true_norm / bnorm, STATUS_MAX_ITERATIONS)
            restarts += 1
            r = true_r
            z = apply_m(r)
            p = z.copy()
            rz = float(r @ z)
            continue
        z = apply_m(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    res = float(np.linalg.norm(b - A.matvec(x))) / bnorm
    return SolveReport(x, it, res, STATUS_MAX_ITERATIONS)


def iccg_solve(A: SparseMatrix, b, tol=1e-12, maxit=None) -> SolveReport:
    """IC(0)-preconditioned CG; breakdown becomes a report, not an exception."""
    try:
        M = IncompleteCholeskyPreconditioner(ic0_factor(A))
    except PreconditionerBreakdown:
        b = np.asarray(b, dtype=float)
        return SolveReport(np.zeros(A.n), 0, 1.0, STATUS_BREAKDOWN)
    return cg_solve(A, b, preconditioner=M, tol=tol, maxit=maxit)


def sor_solve(A: SparseMatrix, b, omega=1.5, tol=1e-12, maxit=None) -> SolveReport:
    """Successive over-relaxation sweeps until the relative residual drops
    below tol."""
    if not 0.0 < omega < 2.0:
        raise ValueError(f"omega must lie in (0, 2), got {omega}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    diag = A.diagonal()
    if np.any(diag == 0.0):
        raise ValueError(f"zero diagonal entry at row {int(np.argmin(diag != 0.0))}")
    b = np.asarray(b, dtype=float)
    n = A.n
    if maxit is None:
        maxit = 20 * n
    bnorm = float(np.linalg.norm(b))
    x = np.zeros(n)
    if bnorm == 0.0:
        return SolveReport(x, 0, 0.0, STATUS_CONVERGED)
    for it in range(1, maxit + 1):
        _sor_sweep(A.indptr, A.indices, A.data, b, x, float(omega))
        rnorm = float(np.linalg.norm(b - A.matvec(x)))
        if rnorm <= tol * bnorm + residual_floor(A, x, b):
            return SolveReport(x, it, rnorm / bnorm, STATUS_CONVERGED)
        if not np.isfinite(rnorm) or rnorm > 1e12 * bnorm:
            return SolveReport(x, it, rnorm / bnorm, STATUS_DIVERGED)
    return SolveReport(x, maxit, rnorm / bnorm, STATUS_MAX_ITERATIONS)
