"""The three model problems, assembled from the mesh/space/solver kernels.

* curl-curl source problem on U_{0,h} x S_h (a saddle system whose scalar
  multiplier vanishes for divergence-free loads),
* fourth-order (quad-curl) source problem: find u in U_{0,h} and the
  auxiliary field phi in U_h with (phi, v) - (curl v, curl u) = 0 for all v
  and (curl phi, curl w) = (f, w) for all w, both fields pinned to the
  discretely divergence-free subspace by scalar multipliers p, q in S_h,
* the fourth-order eigenvalue problem, assembled WITHOUT divergence
  multipliers: with K(i,j) = (curl phi_j^0, curl phi_i) rectangular between
  the constrained and unconstrained edge spaces, the pencil

      [ 0   K^T ] [u]          [ M_N  0 ] [u]
      [ K  -M_M ] [w]  = lambda [ 0    0 ] [w]

  has the same nonzero eigenvalues as the Schur form S = K^T M_M^{-1} K
  against M_N.  Nonzero modes are automatically discretely divergence-free,
  so gradient modes land exactly at zero and are filtered by a relative
  threshold.  The zero multiplicity equals dim(free S_h).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (
    SparseMatrix,
    assemble_curlcurl,
    assemble_gradient_map,
    assemble_load,
    assemble_mass,
    restrict,
)
from .errors import EigenSolveError, NotSPDError, SpaceError
from .fespace import DofVector, FESpace, integrate_errors, make_space
from .manufactured import ManufacturedCase
from .mesh import Mesh, boundary_classification, build_topology
from .solvers import DENSE_EIG_LIMIT, EigenResult, gen_sym_eig, saddle_solve

ZERO_TOL = 1e-8


@dataclass
class Spaces:
    """Edge/nodal space triple shared by the solvers on one mesh."""

    u0: FESpace  # constrained edge space U_{0,h}
    uf: FESpace  # unconstrained edge space U_h
    s0: FESpace  # constrained nodal space S_h


def setup_spaces(mesh: Mesh, order: int) -> Spaces:
    topo = build_topology(mesh)
    bnd = boundary_classification(mesh, topo)
    return Spaces(
        u0=make_space(mesh, "edge", order, constrained=True, topo=topo, boundary=bnd),
        uf=make_space(mesh, "edge", order, constrained=False, topo=topo, boundary=bnd),
        s0=make_space(mesh, "nodal", order, constrained=True, topo=topo, boundary=bnd),
    )


@dataclass
class PencilSystem:
    """Restricted blocks of the fourth-order eigenvalue pencil."""

    K: SparseMatrix  # (M x N): (curl phi_j^0, curl phi_i), columns on free DoFs
    M_N: SparseMatrix  # U_{0,h} mass
    M_M: SparseMatrix  # U_h mass
    G0: SparseMatrix  # free-nodal -> free-edge gradient map (N x P)
    spaces: Spaces

    @property
    def n_free(self) -> int:
        return self.K.shape[1]

    @property
    def m_total(self) -> int:
        return self.K.shape[0]

    @property
    def p_free(self) -> int:
        return self.G0.shape[1]

    def block_pencil(self) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        """Full (N+M) symmetric block pencil for cross-validation."""
        N, M = self.n_free, self.m_total
        A = sp.bmat(
            [[sp.csr_matrix((N, N)), self.K.mat.T], [self.K.mat, -self.M_M.mat]],
            format="csr",
        )
        B = sp.bmat(
            [[self.M_N.mat, None], [None, sp.csr_matrix((M, M))]], format="csr"
        )
        return A, B

    def schur_dense(self) -> np.ndarray:
        """S = K^T M_M^{-1} K as a dense symmetric PSD matrix.

        Formed as W^T W with W = L^{-1} K from the Cholesky factor of M_M,
        which keeps S symmetric PSD by construction.
        """
        Md = self.M_M.to_dense()
        try:
            L = sla.cholesky(Md, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NotSPDError(f"edge mass matrix not SPD: {exc}") from exc
        W = sla.solve_triangular(L, self.K.to_dense(), lower=True)
        S = W.T @ W
        return 0.5 * (S + S.T)

    def schur_operator(self) -> spla.LinearOperator:
        """S as a matrix-free operator (sparse factorization of M_M)."""
        lu = spla.splu(self.M_M.mat.tocsc())
        Km = self.K.mat

        def matmat(X):
            return Km.T @ lu.solve(Km @ X)

        N = self.n_free
        return spla.LinearOperator((N, N), matvec=matmat, matmat=matmat)


def build_quadcurl_pencil(mesh: Mesh, order: int, spaces: Spaces | None = None) -> PencilSystem:
    """Assemble and restrict K, M_N, M_M (and the gradient block) for a mesh."""
    s = spaces if spaces is not None else setup_spaces(mesh, order)
    if s.u0.num_free == 0:
        raise SpaceError("mesh has no interior edge DoFs; pencil is empty")
    Cf = assemble_curlcurl(s.uf, s.uf)
    Mf = assemble_mass(s.uf)
    all_rows = np.arange(s.uf.ndofs)
    K = restrict(Cf, all_rows, s.u0.free_dofs)
    M_N = restrict(Mf, s.u0.free_dofs, s.u0.free_dofs)
    G0 = assemble_gradient_map(s.s0, s.u0)
    return PencilSystem(K=K, M_N=M_N, M_M=Mf, G0=G0, spaces=s)


def _filter_spectrum(
    raw: EigenResult,
    count: int,
    zero_tol: float,
    G0: SparseMatrix,
    M_N: SparseMatrix,
) -> EigenResult:
    """Drop near-zero (gradient) modes, keep the first `count` nonzero pairs."""
    vals = raw.values
    thr = zero_tol * max(float(np.abs(vals).max()), 1e-300)
    keep = np.flatnonzero(vals > thr)
    n_zero = len(vals) - len(keep)
    if len(keep) < count:
        raise EigenSolveError(
            f"only {len(keep)} nonzero eigenvalues available, {count} requested"
        )
    keep = keep[:count]
    vecs = raw.vectors[:, keep]
    Mu = M_N.mat @ vecs
    den = np.linalg.norm(Mu, axis=0)
    num = np.linalg.norm(G0.mat.T @ Mu, axis=0)
    div = np.where(den > 0, num / np.maximum(den, 1e-300), 0.0)
    return EigenResult(
        values=vals[keep],
        vectors=vecs,
        residuals=raw.residuals[keep],
        n_zero=n_zero,
        div_residuals=div,
    )


def solve_quadcurl_eig(
    mesh: Mesh,
    order: int,
    count: int,
    zero_tol: float = ZERO_TOL,
    method: str = "auto",
    pencil: PencilSystem | None = None,
) -> EigenResult:
    """First `count` nonzero eigenvalues of the fourth-order pencil, ascending."""
    if count < 1:
        raise EigenSolveError("count must be >= 1")
    pen = pencil if pencil is not None else build_quadcurl_pencil(mesh, order)
    N, P = pen.n_free, pen.p_free
    if N - P < count:
        raise EigenSolveError(
            f"pencil has only {N - P} nonzero eigenvalues, {count} requested"
        )
    if method == "auto":
        method = "dense" if N <= DENSE_EIG_LIMIT else "lobpcg"
    if method == "dense":
        S = pen.schur_dense()
        raw = gen_sym_eig(S, pen.M_N.to_dense(), min(count + P, N), method="dense")
        return _filter_spectrum(raw, count, zero_tol, pen.G0, pen.M_N)
    # Iterative path: the gradient nullspace is deflated, so no zero modes
    # appear and no filtering window is needed.
    raw = gen_sym_eig(
        pen.schur_operator(),
        pen.M_N.mat,
        count,
        method="lobpcg",
        nullspace=pen.G0.mat.toarray(),
        tol=1e-10 * float(np.abs(pen.K.mat).sum(axis=0).max()),
    )
    res = _filter_spectrum(raw, count, zero_tol, pen.G0, pen.M_N)
    res.n_zero = P  # deflated exactly, by construction
    return res


def solve_maxwell_eig(
    mesh: Mesh,
    order: int,
    count: int,
    zero_tol: float = ZERO_TOL,
    method: str = "auto",
    spaces: Spaces | None = None,
) -> EigenResult:
    """First `count` nonzero curl-curl (Maxwell) eigenvalues on U_{0,h}."""
    if count < 1:
        raise EigenSolveError("count must be >= 1")
    s = spaces if spaces is not None else setup_spaces(mesh, order)
    if s.u0.num_free == 0:
        raise SpaceError("mesh has no interior edge DoFs")
    C0 = assemble_curlcurl(s.u0, s.u0)
    M0 = assemble_mass(s.u0)
    G0 = assemble_gradient_map(s.s0, s.u0)
    N, P = C0.shape[0], G0.shape[1]
    if N - P < count:
        raise EigenSolveError(
            f"pencil has only {N - P} nonzero eigenvalues, {count} requested"
        )
    if method == "auto":
        method = "dense" if N <= DENSE_EIG_LIMIT else "lobpcg"
    if method == "dense":
        raw = gen_sym_eig(C0.to_dense(), M0.to_dense(), min(count + P, N), method="dense")
        return _filter_spectrum(raw, count, zero_tol, G0, M0)
    raw = gen_sym_eig(
        C0.mat,
        M0.mat,
        count,
        method="lobpcg",
        nullspace=G0.mat.toarray(),
    )
    res = _filter_spectrum(raw, count, zero_tol, G0, M0)
    res.n_zero = P
    return res


def divergence_residual(edge_space: FESpace, nodal_space: FESpace, u) -> float:
    """Discrete divergence residual ||G^T M0 u|| / ||M0 u|| (0 for u = 0)."""
    M0 = assemble_mass(edge_space)
    G0 = assemble_gradient_map(nodal_space, edge_space)
    vals = u.values[edge_space.active_dofs] if isinstance(u, DofVector) else np.asarray(u)
    Mu = M0.mat @ vals
    den = np.linalg.norm(Mu)
    if den == 0.0:
        return 0.0
    return float(np.linalg.norm(G0.mat.T @ Mu) / den)


@dataclass
class SourceSolution:
    """Solution bundle of a source problem.

    ``u`` is the primary field; ``phi`` the auxiliary field of the
    fourth-order problem (None for curl-curl); ``p``/``q`` the scalar
    multipliers.  ``p_ratio`` is ||p_h|| / ||u_h|| in L2, the numerical
    version of the multiplier-vanishes statement for divergence-free loads.
    """

    u: DofVector
    phi: DofVector | None
    p: DofVector | None
    q: DofVector | None
    residual: float
    p_ratio: float
    errors: dict | None = None


def _l2_norm_sq(M: SparseMatrix, v: np.ndarray) -> float:
    return float(v @ (M.mat @ v))


def solve_curlcurl_source(mesh: Mesh, order: int, f, load_degree: int = 10) -> SourceSolution:
    """Second-order curl-curl source problem with a scalar multiplier.

    f may be a callable (the load) or a ManufacturedCase; with a case, L2 and
    H(curl) errors against the analytic solution are reported.
    """
    case = f if isinstance(f, ManufacturedCase) else None
    fn = case.f if case is not None else f
    s = setup_spaces(mesh, order)
    if s.u0.num_free == 0:
        raise SpaceError("mesh has no interior edge DoFs")
    C0 = assemble_curlcurl(s.u0, s.u0)
    M0 = assemble_mass(s.u0)
    G0 = assemble_gradient_map(s.s0, s.u0)
    B = M0.mat @ G0.mat
    F = assemble_load(s.uf, fn, degree=load_degree).values[s.u0.free_dofs]
    uvals, pvals, res = saddle_solve(C0.mat, B, F)
    u = s.u0.embed(uvals)
    p = s.s0.embed(pvals)
    Mp = assemble_mass(s.s0)
    norm_u = np.sqrt(_l2_norm_sq(M0, uvals))
    norm_p = np.sqrt(_l2_norm_sq(Mp, pvals))
    ratio = norm_p / max(norm_u, 1e-300) if norm_p > 0 else 0.0
    errors = None
    if case is not None:
        e_l2, e_curl = integrate_errors(s.u0, u, case.u, case.curl_u)
        errors = {
            "l2": e_l2,
            "curl": e_curl,
            "hcurl": float(np.hypot(e_l2, e_curl)),
        }
    return SourceSolution(u=u, phi=None, p=p, q=None, residual=res, p_ratio=ratio, errors=errors)


def solve_quadcurl_source(
    mesh: Mesh,
    order: int,
    f=None,
    load: np.ndarray | None = None,
    load_degree: int = 10,
    spaces: Spaces | None = None,
) -> SourceSolution:
    """Fourth-order source problem via the symmetric four-field saddle system.

    Unknowns (u, phi, p, q); the first block row tests with U_{0,h}, the
    second with U_h, the last two enforce discrete divergence-freedom of u
    and phi.  Either an analytic load f (callable or ManufacturedCase) or a
    pre-assembled load vector on the free edge DoFs may be given.
    """
    case = f if isinstance(f, ManufacturedCase) else None
    s = spaces if spaces is not None else setup_spaces(mesh, order)
    if s.u0.num_free == 0:
        raise SpaceError("mesh has no interior edge DoFs")
    pen = build_quadcurl_pencil(mesh, order, spaces=s)
    K, M_N, Mf, G0 = pen.K, pen.M_N, pen.M_M, pen.G0
    GM = assemble_gradient_map(s.s0, s.uf)
    N, M, P = pen.n_free, pen.m_total, pen.p_free

    if load is not None:
        F = np.asarray(load, dtype=np.float64)
        if F.shape != (N,):
            raise SpaceError(f"load vector must have length {N}")
    else:
        fn = case.f if case is not None else f
        F = assemble_load(s.uf, fn, degree=load_degree).values[s.u0.free_dofs]

    A = sp.bmat(
        [[sp.csr_matrix((N, N)), K.mat.T], [K.mat, -Mf.mat]], format="csr"
    )
    B_N = M_N.mat @ G0.mat
    B_M = Mf.mat @ GM.mat
    G = sp.bmat(
        [[B_N, sp.csr_matrix((N, P))], [sp.csr_matrix((M, P)), -B_M]], format="csr"
    )
    rhs = np.concatenate([F, np.zeros(M)])
    x, y, res = saddle_solve(A, G, rhs)

    u = s.u0.embed(x[:N])
    phi = DofVector(s.uf, x[N:])
    p = s.s0.embed(y[:P])
    q = s.s0.embed(y[P:])
    Mp = assemble_mass(s.s0)
    norm_u = np.sqrt(_l2_norm_sq(M_N, x[:N]))
    norm_p = np.sqrt(_l2_norm_sq(Mp, y[:P]))
    ratio = norm_p / max(norm_u, 1e-300) if norm_p > 0 else 0.0
    errors = None
    if case is not None:
        e_l2, e_curl = integrate_errors(s.u0, u, case.u, case.curl_u)
        e_phi, _ = integrate_errors(s.uf, phi, case.curl2_u, None)
        errors = {
            "l2_u": e_l2,
            "curl_u": e_curl,
            "phi": e_phi,
            "combined": e_curl + e_phi,
        }
    return SourceSolution(u=u, phi=phi, p=p, q=q, residual=res, p_ratio=ratio, errors=errors)
