import numpy as np
import pytest

from quadcurl import curlcurl_sine_case, quadcurl_sin3_case


def fd_curl(F, pts, h=1e-5):
    partials = []
    for ax in range(3):
        dp = pts.copy()
        dm = pts.copy()
        dp[:, ax] += h
        dm[:, ax] -= h
        partials.append((F(dp) - F(dm)) / (2.0 * h))
    out = np.empty_like(pts)
    out[:, 0] = partials[1][:, 2] - partials[2][:, 1]
    out[:, 1] = partials[2][:, 0] - partials[0][:, 2]
    out[:, 2] = partials[0][:, 1] - partials[1][:, 0]
    return out


def gauss_grid(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)
    W = (w[:, None, None] * w[None, :, None] * w[None, None, :]).ravel()
    return pts, W


def test_sine_case_source_is_two_pi_squared_u():
    case = curlcurl_sine_case()
    rng = np.random.default_rng(0)
    pts = rng.random((200, 3))
    assert np.abs(case.f(pts) - 2.0 * np.pi**2 * case.u(pts)).max() < 1e-12


def test_sine_case_traces_and_divergence():
    case = curlcurl_sine_case()
    assert not case.tangential_curl_zero
    assert case.boundary_trace_violation() < 1e-12
    assert case.divergence_violation() < 1e-8


def test_sine_case_curl_consistent_with_finite_differences():
    case = curlcurl_sine_case()
    rng = np.random.default_rng(3)
    pts = 0.1 + 0.8 * rng.random((50, 3))
    assert np.abs(case.curl_u(pts) - fd_curl(case.u, pts)).max() < 1e-7


def test_sin3_case_both_traces_vanish():
    case = quadcurl_sin3_case()
    assert case.tangential_curl_zero
    assert case.boundary_trace_violation() < 1e-10


def test_sin3_case_divergence_free():
    assert quadcurl_sin3_case().divergence_violation() < 1e-6


def test_sin3_second_curl_consistent_with_finite_differences():
    case = quadcurl_sin3_case()
    rng = np.random.default_rng(5)
    pts = 0.1 + 0.8 * rng.random((50, 3))
    got = case.curl2_u(pts)
    ref = fd_curl(case.curl_u, pts)
    scale = 1.0 + np.abs(got).max()
    assert np.abs(got - ref).max() < 1e-4 * scale


def test_sin3_source_satisfies_energy_identity():
    """With both essential traces zero, (f, u) = ||curl^2 u||^2."""
    case = quadcurl_sin3_case()
    pts, W = gauss_grid(32)
    lhs = W @ np.einsum("pc,pc->p", case.f(pts), case.u(pts))
    c2 = case.curl2_u(pts)
    rhs = W @ np.einsum("pc,pc->p", c2, c2)
    assert rhs > 1.0
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_cases_are_cached():
    assert curlcurl_sine_case() is curlcurl_sine_case()
    assert quadcurl_sin3_case() is quadcurl_sin3_case()
