"""Linear algebra kernels: SPD solve, saddle-point solve, symmetric eigensolve.

These wrap LAPACK/SuperLU behind small contracts: every solve verifies its
relative residual, SPD factorizations reject non-positive pivots, and the
generalized eigensolver guarantees B-orthonormal vectors with checked
residuals.  The eigensolver densifies up to dimension 6000 (a fixed,
reproducible crossover); above that it runs LOBPCG, optionally deflating a
known nullspace basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import SparseMatrix
from .errors import EigenSolveError, NotSPDError, SingularSystemError

DENSE_EIG_LIMIT = 6000

_SPD_RESIDUAL_TOL = 1e-10
_SADDLE_RESIDUAL_TOL = 1e-9


@dataclass
class EigenResult:
    """Ascending eigenvalues, B-orthonormal eigenvector columns, residuals.

    ``n_zero`` and ``div_residuals`` are filled by the system-level solvers
    that filter the gradient nullspace; plain gen_sym_eig leaves them None.
    """

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    n_zero: int | None = None
    div_residuals: np.ndarray | None = None


def _unwrap(A):
    if isinstance(A, SparseMatrix):
        return A.mat
    return A


def _as_dense(A) -> np.ndarray:
    A = _unwrap(A)
    if sp.issparse(A):
        return A.toarray()
    return np.asarray(A, dtype=np.float64)


def _rel_residual(A, x, b) -> float:
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return float(np.linalg.norm(A @ x))
    return float(np.linalg.norm(A @ x - b) / nb)


def spd_solve(A, b) -> np.ndarray:
    """Solve Ax = b for symmetric positive definite A.

    Dense inputs (or small sparse ones) go through Cholesky; larger sparse
    matrices use a symmetric-mode LU whose pivots are checked for positivity.
    b may carry multiple right-hand sides as columns.
    """
    b = np.asarray(b, dtype=np.float64)
    A = _unwrap(A)
    if not sp.issparse(A) or A.shape[0] <= 500:
        Ad = _as_dense(A)
        try:
            c, low = sla.cho_factor(Ad, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NotSPDError(f"Cholesky failed: {exc}") from exc
        x = sla.cho_solve((c, low), b)
    else:
        try:
            lu = spla.splu(
                A.tocsc(),
                diag_pivot_thresh=0.0,
                permc_spec="MMD_AT_PLUS_A",
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise SingularSystemError(f"factorization failed: {exc}") from exc
        if lu.U.diagonal().min() <= 0.0:
            raise NotSPDError("non-positive pivot in symmetric factorization")
        x = lu.solve(b)
    res = _rel_residual(A, x, b)
    if res > _SPD_RESIDUAL_TOL:
        raise SingularSystemError(f"SPD solve residual {res:.3e} exceeds {_SPD_RESIDUAL_TOL}")
    return x


def saddle_solve(K, G, f, g=None):
    """Solve the symmetric saddle system [[K, G], [G^T, 0]] (u, p) = (f, g).

    K must be symmetric (typically PSD) and the full block matrix
    nonsingular.  Blocks may themselves be block matrices; only symmetry of
    the assembled system matters to the factorization.
    """
    Km = sp.csr_matrix(_unwrap(K))
    Gm = sp.csr_matrix(_unwrap(G))
    n, p = Gm.shape
    f = np.asarray(f, dtype=np.float64)
    rhs = np.concatenate([f, np.zeros(p) if g is None else np.asarray(g, dtype=np.float64)])
    A = sp.bmat([[Km, Gm], [Gm.T, None]], format="csc")
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SingularSystemError(f"saddle factorization failed: {exc}") from exc
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("saddle solve produced non-finite values")
    res = _rel_residual(A, x, rhs)
    if res > _SADDLE_RESIDUAL_TOL:
        raise SingularSystemError(
            f"saddle solve residual {res:.3e} exceeds {_SADDLE_RESIDUAL_TOL}"
        )
    return x[:n], x[n:], res


def _eig_residuals(A, B, vals, vecs) -> np.ndarray:
    AX = A @ vecs
    BX = B @ vecs
    out = np.empty(len(vals))
    for i, lam in enumerate(vals):
        out[i] = np.linalg.norm(AX[:, i] - lam * BX[:, i]) / np.linalg.norm(vecs[:, i])
    return out


def gen_sym_eig(
    A,
    B,
    count: int,
    method: str = "auto",
    nullspace: np.ndarray | None = None,
    tol: float = 1e-8,
) -> EigenResult:
    """Smallest `count` eigenpairs of the symmetric pencil A x = lambda B x.

    A must be symmetric positive semidefinite and B symmetric positive
    definite.  The dense path returns the smallest eigenvalues including any
    A-nullspace modes (reported as values at roundoff scale).  The iterative
    path (dimension > 6000, or method="lobpcg") deflates the columns of
    ``nullspace`` and therefore skips those zero modes.
    """
    Araw, Braw = _unwrap(A), _unwrap(B)
    n = Araw.shape[0]
    if Araw.shape != (n, n) or Braw.shape != (n, n):
        raise EigenSolveError("pencil matrices must be square and equal-sized")
    if not 1 <= count <= n:
        raise EigenSolveError(f"count {count} out of range for dimension {n}")

    if method == "auto":
        method = "dense" if n <= DENSE_EIG_LIMIT else "lobpcg"

    if method == "dense":
        Ad, Bd = _as_dense(Araw), _as_dense(Braw)
        Ad = 0.5 * (Ad + Ad.T)
        Bd = 0.5 * (Bd + Bd.T)
        try:
            if count == n:
                vals, vecs = sla.eigh(Ad, Bd)
            else:
                vals, vecs = sla.eigh(Ad, Bd, subset_by_index=[0, count - 1])
        except np.linalg.LinAlgError as exc:
            raise NotSPDError(f"generalized eigensolve failed (B not SPD?): {exc}") from exc
    elif method == "lobpcg":
        rng = np.random.default_rng(0)
        X0 = rng.standard_normal((n, count))
        if sp.issparse(Araw):
            norm_a = float(np.abs(Araw).sum(axis=0).max())
        elif isinstance(Araw, np.ndarray):
            norm_a = float(np.abs(Araw).sum(axis=0).max())
        else:
            norm_a = 1.0  # LinearOperator: scale folded into the tol argument
        vals, vecs = spla.lobpcg(
            Araw,
            X0,
            B=Braw,
            Y=nullspace,
            largest=False,
            tol=tol * max(norm_a, 1.0),
            maxiter=1000,
        )
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    else:
        raise EigenSolveError(f"unknown eigensolver method {method!r}")

    residuals = _eig_residuals(Araw, Braw, vals, vecs)
    return EigenResult(values=vals, vectors=vecs, residuals=residuals)
