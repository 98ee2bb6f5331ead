"""Shape functions on the reference tetrahedron.

Two families are provided:

* ``edge``: the first-kind curl-conforming spaces of order 1 and 2,

      R_k = (P_{k-1})^3  (+)  { p homogeneous of degree k : x . p = 0 },

  with dimensions 6 and 20.  Degrees of freedom are tangential moments on
  edges (k moments per edge against 1 and 2s-1) and, for k = 2, two constant
  tangential moments per face.  The dual basis is found by inverting the
  moment matrix of an explicit monomial basis; for k = 1 this reproduces the
  classical functions lam_a grad lam_b - lam_b grad lam_a.

* ``nodal``: scalar Lagrange elements of order 1 and 2 (vertex values, plus
  edge midpoint values for order 2).

All moment functionals are written against the parametrizations

    edge (a,b):    x(s) = v_a + s (v_b - v_a),            s in [0,1],
    face (a,b,c):  x(s,t) = v_a + s (v_b - v_a) + t (v_c - v_a),

with the *unnormalized* direction vectors and the parametric measure.  These
functionals commute with the covariant pull-back of any affine map that sends
reference vertices to physical vertices in order, which is what makes a single
global degree of freedom per mesh entity well defined.
"""

from __future__ import annotations

import numpy as np

from .errors import SpaceError
from .mesh import LOCAL_EDGES, LOCAL_FACES
from .quadrature import segment_rule, triangle_rule

REF_VERTS = np.array(
    [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
)

# --- tiny exponent-dict polynomials -----------------------------------------
# A scalar polynomial is {(i, j, k): coeff}; a vector field is a 3-tuple.

Poly = dict


def poly_eval(p: Poly, pts: np.ndarray) -> np.ndarray:
    out = np.zeros(pts.shape[:-1])
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    for (i, j, k), c in p.items():
        out += c * x**i * y**j * z**k
    return out


def poly_diff(p: Poly, axis: int) -> Poly:
    out: Poly = {}
    for exp, c in p.items():
        if exp[axis] == 0:
            continue
        new = list(exp)
        new[axis] -= 1
        out[tuple(new)] = out.get(tuple(new), 0.0) + c * exp[axis]
    return out


def vec_eval(vp, pts: np.ndarray) -> np.ndarray:
    return np.stack([poly_eval(c, pts) for c in vp], axis=-1)


def vec_curl(vp):
    u0, u1, u2 = vp
    return (
        _poly_sub(poly_diff(u2, 1), poly_diff(u1, 2)),
        _poly_sub(poly_diff(u0, 2), poly_diff(u2, 0)),
        _poly_sub(poly_diff(u1, 0), poly_diff(u0, 1)),
    )


def _poly_sub(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for exp, c in b.items():
        out[exp] = out.get(exp, 0.0) - c
        if out[exp] == 0.0:
            del out[exp]
    return out


def _poly_shift(p: Poly, axis: int) -> Poly:
    """Multiply a polynomial by the coordinate along one axis."""
    out = {}
    for exp, c in p.items():
        new = list(exp)
        new[axis] += 1
        out[tuple(new)] = c
    return out


def _edge_monomials(order: int):
    """Monomial basis of R_order as vector exponent-dict polynomials."""

    def unit(d, p=(0, 0, 0)):
        vp = ({}, {}, {})
        vp[d].update({tuple(p): 1.0})
        return vp

    def cross_x(q):
        # x cross q for vector polynomial q
        qx, qy, qz = q
        return (
            _poly_sub(_poly_shift(qz, 1), _poly_shift(qy, 2)),
            _poly_sub(_poly_shift(qx, 2), _poly_shift(qz, 0)),
            _poly_sub(_poly_shift(qy, 0), _poly_shift(qx, 1)),
        )

    X, Y, Z = (1, 0, 0), (0, 1, 0), (0, 0, 1)
    if order == 1:
        consts = [unit(d) for d in range(3)]
        rots = [cross_x(unit(d)) for d in range(3)]
        return consts + rots
    if order == 2:
        p1 = [unit(d, p) for d in range(3) for p in [(0, 0, 0), X, Y, Z]]
        # x cross (f e_d) for the eight monomials f e_d spanning a complement
        # of the radial kernel span{x} in homogeneous degree-1 vector fields.
        homo = [cross_x(unit(0, f)) for f in (X, Y, Z)]
        homo += [cross_x(unit(1, f)) for f in (X, Y, Z)]
        homo += [cross_x(unit(2, f)) for f in (X, Y)]
        return p1 + homo
    raise SpaceError(f"edge family supports orders 1 and 2, got {order}")


# --- degree-of-freedom functionals -------------------------------------------


class _EdgeMoment:
    """Tangential moment on a local edge against a Legendre-style weight."""

    def __init__(self, local_edge: int, moment: int, degree: int):
        a, b = LOCAL_EDGES[local_edge]
        rule = segment_rule(degree)
        s = rule.points[:, 0]
        self.entity = ("edge", local_edge, moment)
        self.points = REF_VERTS[a] + s[:, None] * (REF_VERTS[b] - REF_VERTS[a])
        self.direction = REF_VERTS[b] - REF_VERTS[a]
        w = np.ones_like(s) if moment == 0 else 2.0 * s - 1.0
        self.weights = rule.weights * w


class _FaceMoment:
    """Constant tangential moment on a local face along one covariant axis."""

    def __init__(self, local_face: int, axis: int, degree: int):
        a, b, c = LOCAL_FACES[local_face]
        rule = triangle_rule(degree)
        s, t = rule.points[:, 0], rule.points[:, 1]
        self.entity = ("face", local_face, axis)
        self.points = (
            REF_VERTS[a]
            + s[:, None] * (REF_VERTS[b] - REF_VERTS[a])
            + t[:, None] * (REF_VERTS[c] - REF_VERTS[a])
        )
        self.direction = (REF_VERTS[b] if axis == 0 else REF_VERTS[c]) - REF_VERTS[a]
        self.weights = rule.weights.copy()


def _edge_dof_functionals(order: int, quad_degree: int):
    dofs = [
        _EdgeMoment(e, m, quad_degree) for e in range(6) for m in range(order)
    ]
    if order == 2:
        dofs += [_FaceMoment(f, ax, quad_degree) for f in range(4) for ax in range(2)]
    return dofs


class EdgeElement:
    """Curl-conforming reference element of order 1 or 2."""

    def __init__(self, order: int):
        self.order = order
        self.monomials = _edge_monomials(order)
        self.ndofs = len(self.monomials)
        self.dofs = _edge_dof_functionals(order, quad_degree=2 * order + 2)
        V = np.empty((self.ndofs, self.ndofs))
        for j, mono in enumerate(self.monomials):
            V[:, j] = self.apply_functionals(lambda pts, m=mono: vec_eval(m, pts)[:, None, :])[:, 0]
        self.coeff = np.linalg.inv(V)

    def apply_functionals(self, field_fn) -> np.ndarray:
        """Apply every DoF functional to fields given by field_fn.

        field_fn maps reference points (n, 3) to values (n, m, 3); the result
        has shape (ndofs, m).
        """
        rows = [
            np.einsum("g,gmc,c->m", dof.weights, field_fn(dof.points), dof.direction)
            for dof in self.dofs
        ]
        return np.array(rows)

    def tabulate(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Basis values and curls at reference points: two (n, ndofs, 3) arrays."""
        mv = np.stack([vec_eval(m, points) for m in self.monomials], axis=1)
        mc = np.stack([vec_eval(vec_curl(m), points) for m in self.monomials], axis=1)
        vals = np.einsum("qjc,ji->qic", mv, self.coeff)
        curls = np.einsum("qjc,ji->qic", mc, self.coeff)
        return vals, curls


class NodalElement:
    """Scalar Lagrange reference element of order 1 or 2."""

    def __init__(self, order: int):
        if order not in (1, 2):
            raise SpaceError(f"nodal family supports orders 1 and 2, got {order}")
        self.order = order
        self.ndofs = 4 if order == 1 else 10

    @staticmethod
    def _bary(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x, y, z = points[..., 0], points[..., 1], points[..., 2]
        lam = np.stack([1.0 - x - y - z, x, y, z], axis=-1)
        dlam = np.array(
            [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        )
        return lam, dlam

    def tabulate(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Basis values (n, ndofs) and gradients (n, ndofs, 3)."""
        lam, dlam = self._bary(points)
        n = points.shape[0]
        if self.order == 1:
            vals = lam
            grads = np.broadcast_to(dlam, (n, 4, 3)).copy()
            return vals, grads
        vals = np.empty((n, 10))
        grads = np.empty((n, 10, 3))
        for v in range(4):
            vals[:, v] = lam[:, v] * (2.0 * lam[:, v] - 1.0)
            grads[:, v, :] = (4.0 * lam[:, v] - 1.0)[:, None] * dlam[v]
        for e, (a, b) in enumerate(LOCAL_EDGES):
            vals[:, 4 + e] = 4.0 * lam[:, a] * lam[:, b]
            grads[:, 4 + e, :] = 4.0 * (
                lam[:, a][:, None] * dlam[b] + lam[:, b][:, None] * dlam[a]
            )
        return vals, grads


_ELEMENT_CACHE: dict = {}


def get_element(family: str, order: int):
    key = (family, order)
    if key not in _ELEMENT_CACHE:
        if family == "edge":
            _ELEMENT_CACHE[key] = EdgeElement(order)
        elif family == "nodal":
            _ELEMENT_CACHE[key] = NodalElement(order)
        else:
            raise SpaceError(f"unknown family {family!r} (expected 'edge' or 'nodal')")
    return _ELEMENT_CACHE[key]


def ref_gradient_matrix(order: int) -> np.ndarray:
    """Edge-space DoF values of the gradients of the nodal shape functions.

    Because gradients pull back to reference gradients under the covariant
    map, this one constant matrix realizes the nodal-to-edge gradient map on
    every tetrahedron of every mesh.
    """
    edge_el = get_element("edge", order)
    nodal_el = get_element("nodal", order)
    return edge_el.apply_functionals(lambda pts: nodal_el.tabulate(pts)[1])


def reference_shape_functions(family: str, order: int, points: np.ndarray):
    """Tabulate reference basis functions at points inside the reference tet.

    Returns (values, curls) for the edge family and (values, gradients) for
    the nodal family.  Points outside the reference tetrahedron (beyond a
    1e-12 tolerance) are rejected.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    tol = 1e-12
    if pts.min() < -tol or pts.sum(axis=1).max() > 1.0 + tol:
        raise SpaceError("point outside the reference tetrahedron")
    return get_element(family, order).tabulate(pts)
