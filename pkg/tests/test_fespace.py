import numpy as np
import pytest

from meshes import jittered_cube_mesh
from quadcurl import (
    DofVector, build_topology, eval_field, generate_cube_mesh,
    integrate_errors, interpolate, make_space,
)
from quadcurl.errors import SpaceError
from quadcurl.fespace import eval_cells, map_points, physical_to_reference

REF_PTS = np.array([[0.25, 0.25, 0.25], [0.1, 0.2, 0.3], [0.55, 0.1, 0.15],
                    [0.05, 0.6, 0.1]])


def test_edge_space_dof_counts(cube2):
    topo = build_topology(cube2)
    E, F = topo.edges.shape[0], topo.faces.shape[0]
    assert make_space(cube2, "edge", 1).ndofs == E == 98
    assert make_space(cube2, "edge", 2).ndofs == 2 * E + 2 * F == 436
    assert make_space(cube2, "nodal", 1).ndofs == 27
    assert make_space(cube2, "nodal", 2).ndofs == 27 + E


def test_constrained_counts(cube2, cube3):
    assert make_space(cube2, "edge", 1, constrained=True).num_free == 26
    assert make_space(cube3, "edge", 1, constrained=True).num_free == 117
    assert make_space(cube2, "nodal", 1, constrained=True).num_free == 1
    assert make_space(cube3, "nodal", 1, constrained=True).num_free == 8
    assert make_space(cube2, "edge", 2, constrained=True).num_free == 196
    # nodal order 2 frees interior vertices and interior edges
    assert make_space(cube2, "nodal", 2, constrained=True).num_free == 1 + 26


def test_unconstrained_active_is_all(cube2):
    space = make_space(cube2, "edge", 1)
    assert space.num_active == space.ndofs
    assert np.array_equal(space.active_dofs, np.arange(space.ndofs))


@pytest.mark.parametrize("order", [1, 2])
def test_constant_field_reproduced(order):
    mesh = jittered_cube_mesh(2, seed=5)
    space = make_space(mesh, "edge", order)
    c = np.array([1.0, -2.0, 0.5])
    vec = interpolate(space, lambda x: np.broadcast_to(c, np.asarray(x).shape).copy())
    vals, curls = eval_cells(space, vec, REF_PTS)
    assert np.abs(vals - c).max() < 1e-11
    assert np.abs(curls).max() < 1e-10


@pytest.mark.parametrize("order", [1, 2])
def test_rotational_field_reproduced(order):
    """x -> x cross c lies in the lowest-order space; curl is -2c."""
    mesh = generate_cube_mesh(2)
    space = make_space(mesh, "edge", order)
    c = np.array([0.4, 1.3, -0.6])
    vec = interpolate(space, lambda x: np.cross(np.asarray(x), c))
    vals, curls = eval_cells(space, vec, REF_PTS)
    phys = map_points(mesh, REF_PTS)
    assert np.abs(vals - np.cross(phys, c)).max() < 1e-11
    assert np.abs(curls - (-2.0 * c)).max() < 1e-10


def test_order2_reproduces_general_linear():
    mesh = jittered_cube_mesh(2, seed=9)
    space = make_space(mesh, "edge", 2)
    A = np.array([[0.3, 1.2, -0.1], [0.7, -0.5, 0.2], [0.0, 0.8, 1.1]])
    b = np.array([0.2, -0.9, 0.4])
    vec = interpolate(space, lambda x: np.asarray(x) @ A.T + b)
    vals, _ = eval_cells(space, vec, REF_PTS)
    phys = map_points(mesh, REF_PTS)
    assert np.abs(vals - (phys @ A.T + b)).max() < 1e-10


def test_nodal_interpolation_exact_for_polynomials(cube2):
    s1 = make_space(cube2, "nodal", 1)
    v1 = interpolate(s1, lambda x: 2.0 * x[..., 0] - x[..., 2] + 1.0)
    vals, grads = eval_cells(s1, v1, REF_PTS)
    phys = map_points(cube2, REF_PTS)
    assert np.abs(vals - (2 * phys[..., 0] - phys[..., 2] + 1)).max() < 1e-12
    assert np.abs(grads - np.array([2.0, 0.0, -1.0])).max() < 1e-12

    s2 = make_space(cube2, "nodal", 2)

    def q(x):
        x = np.asarray(x)
        return x[..., 0] * x[..., 1] + x[..., 2] ** 2

    v2 = interpolate(s2, q)
    vals2, _ = eval_cells(s2, v2, REF_PTS)
    assert np.abs(vals2 - q(phys)).max() < 1e-11


@pytest.mark.parametrize("order", [1, 2])
def test_tangential_continuity_across_interior_faces(order):
    """The jump of the tangential trace vanishes on interior faces."""
    mesh = jittered_cube_mesh(2, seed=13)
    topo = build_topology(mesh)
    space = make_space(mesh, "edge", order)
    rng = np.random.default_rng(0)
    vec = DofVector(space, rng.standard_normal(space.ndofs))

    interior = np.where(topo.face_tets[:, 1] >= 0)[0][:20]
    for f in interior:
        tri = topo.faces[f]
        pts_phys = (mesh.vertices[tri[0]] * 0.55
                    + mesh.vertices[tri[1]] * 0.25
                    + mesh.vertices[tri[2]] * 0.20)[None, :]
        normal = np.cross(mesh.vertices[tri[1]] - mesh.vertices[tri[0]],
                          mesh.vertices[tri[2]] - mesh.vertices[tri[0]])
        normal = normal / np.linalg.norm(normal)
        traces = []
        for t in topo.face_tets[f]:
            ref = physical_to_reference(mesh, t, pts_phys)
            val, _ = eval_field(space, vec, int(t), ref[0])
            traces.append(val - normal * (val @ normal))
        assert np.abs(traces[0] - traces[1]).max() < 1e-10


def test_embed_scatters_free_dofs(cube2):
    space = make_space(cube2, "edge", 1, constrained=True)
    active = np.arange(1.0, space.num_free + 1)
    full = space.embed(active)
    assert full.values.shape == (space.ndofs,)
    assert np.count_nonzero(full.values) == space.num_free
    bmask = np.ones(space.ndofs, dtype=bool)
    bmask[space.free_dofs] = False
    assert np.abs(full.values[bmask]).max() == 0.0


def test_interpolation_error_decreases():
    def u(x):
        x = np.asarray(x)
        s = np.sin(np.pi * x)
        out = np.empty(x.shape)
        out[..., 0] = s[..., 1] * s[..., 2]
        out[..., 1] = s[..., 2] * s[..., 0]
        out[..., 2] = s[..., 0] * s[..., 1]
        return out

    errs = []
    for n in (2, 4):
        mesh = generate_cube_mesh(n)
        space = make_space(mesh, "edge", 1)
        vec = interpolate(space, u)
        e0, _ = integrate_errors(space, vec, exact_value=u)
        errs.append(e0)
    assert errs[1] < 0.65 * errs[0]


def test_integrate_errors_zero_for_exact_field(cube2):
    space = make_space(cube2, "edge", 1)
    c = np.array([0.3, 0.1, -0.2])
    vec = interpolate(space, lambda x: np.cross(np.asarray(x), c))
    e0, e1 = integrate_errors(space, vec,
                              exact_value=lambda x: np.cross(np.asarray(x), c),
                              exact_deriv=lambda x: np.broadcast_to(
                                  -2.0 * c, np.asarray(x).shape).copy())
    assert e0 < 1e-12
    assert e1 < 1e-12


def test_eval_field_outside_rejected(cube2):
    space = make_space(cube2, "edge", 1)
    vec = DofVector(space, np.zeros(space.ndofs))
    with pytest.raises(SpaceError):
        eval_field(space, vec, 0, np.array([0.6, 0.6, 0.6]))


def test_dofvector_length_checked(cube2):
    space = make_space(cube2, "edge", 1)
    with pytest.raises(SpaceError):
        DofVector(space, np.zeros(space.ndofs + 1))
