import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ou_calculus import forms, linalg
from ou_calculus.bellman import BellmanParams, PowerFunction, TensorPower, region
from ou_calculus.errors import SectorError, SingularSetError
from ou_calculus.oumodel import AngleSet, delta_contraction
from ou_calculus.rng import substream

from oracles import literal_form

J = np.array([[0.0, 1.0], [-1.0, 0.0]])
HALF_I = 0.5 * np.eye(2)
HALF_I_J = 0.5 * (np.eye(2) - J)


def theta_p(B, p, frac):
    return frac * AngleSet(linalg.numerical_range_angle(B).starred).theta_r(p)


def test_generic_form_matches_literal_kronecker(rng):
    n = 3
    for r in (1.5, 3.0):
        F = PowerFunction(r)
        D = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        for _ in range(10):
            s = rng.standard_normal(2)
            xi = rng.standard_normal((2, n))
            assert forms.hessian_form(F, D, s, xi) == pytest.approx(literal_form(F.hessian(s), D, xi), rel=1e-11)


def test_pair_form_matches_literal_kronecker(rng):
    n = 2
    T = TensorPower(4 / 3)
    D, E = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for _ in range(2))
    v = rng.standard_normal(4)
    omega = rng.standard_normal((4, n))
    expected = forms.hessian_form_kron(T.hessian(v), [D, E], omega)
    assert forms.hessian_form_pair(T, D, E, v, omega) == pytest.approx(expected, rel=1e-11)


@pytest.mark.parametrize("r", [1.25, 1.5, 2.0, 3.0, 8.0])
def test_closed_forms_match_generic(r, rng):
    n = 3
    B = rng.standard_normal((n, n)) + 2 * np.eye(n)
    s = forms.sample_base_points(rng, 2000)
    xi = forms.sample_directions(rng, 2000, n, 2)
    z = s[:, 0] + 1j * s[:, 1]
    hb, hib = forms.power_form_closed(B, r, z, xi[:, 0] + 1j * xi[:, 1])
    F = PowerFunction(r)
    gb, sb = forms.hessian_form(F, B, s, xi, return_scale=True)
    gi, si = forms.hessian_form(F, 1j * B, s, xi, return_scale=True)
    # scale of the closed-form terms: r |z|^(r-2) ||B|| ||xi~||^2
    closed_scale = r * np.abs(z) ** (r - 2) * np.linalg.norm(B, 2) * np.sum(xi**2, axis=(1, 2))
    assert np.max(np.abs(hb - gb) / (sb + closed_scale)) < 1e-12
    assert np.max(np.abs(hib - gi) / (si + closed_scale)) < 1e-12


def test_closed_forms_reject_complex_matrix():
    with pytest.raises(ValueError):
        forms.power_form_closed(1j * np.eye(2), 3.0, np.array([1.0 + 0j]), np.ones((1, 2)))


@settings(max_examples=50, deadline=None)
@given(st.floats(0, math.pi / 2), st.integers(0, 2**31))
def test_real_linearity_in_rotation(theta, seed):
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((2, 2))
    F = PowerFunction(3.0)
    s, xi = rng.standard_normal(2), rng.standard_normal((2, 2))
    base = forms.hessian_form(F, R, s, xi)
    rot = forms.hessian_form(F, 1j * R, s, xi)
    for sign in (1, -1):
        lhs = forms.hessian_form(F, np.exp(sign * 1j * theta) * R, s, xi)
        assert lhs == pytest.approx(math.cos(theta) * base + sign * math.sin(theta) * rot, rel=1e-10, abs=1e-10)


def test_real_matrix_reduces_to_symmetric_part(rng):
    n = 3
    G = rng.standard_normal((n, n))
    R = G @ G.T + np.eye(n) + (lambda K: K - K.T)(rng.standard_normal((n, n)))
    Rs = (R + R.T) / 2
    S = linalg.spd_sqrt(Rs)
    F = PowerFunction(1.5)
    for _ in range(10):
        s, xi = rng.standard_normal(2), rng.standard_normal((2, n))
        h = forms.hessian_form(F, R, s, xi)
        assert forms.hessian_form(F, R.T, s, xi) == pytest.approx(h, rel=1e-11)
        assert forms.hessian_form(F, Rs, s, xi) == pytest.approx(h, rel=1e-11)
        assert forms.hessian_form(F, np.eye(n), s, xi @ S) == pytest.approx(h, rel=1e-10)


def test_identity_form_is_sum_over_coordinates(rng):
    # H^I = sum_j <Hess (xi_1j, xi_2j), (xi_1j, xi_2j)>
    F = PowerFunction(2.5)
    s, xi = rng.standard_normal(2), rng.standard_normal((2, 4))
    H = F.hessian(s)
    expected = sum(xi[:, j] @ H @ xi[:, j] for j in range(4))
    assert forms.hessian_form(F, np.eye(4), s, xi) == pytest.approx(expected, rel=1e-12)


def test_singular_base_point_rejected():
    with pytest.raises(SingularSetError):
        forms.hessian_form(PowerFunction(1.5), np.eye(2), np.zeros(2), np.ones((2, 2)))


def test_delta_max_is_determinant_root():
    for p in (2.0, 3.0, 4.0, 8.0):
        th2 = math.pi / 4
        theta = 0.3 * AngleSet(th2).theta_r(p)
        dm = forms.delta_max(p, th2, theta)
        M = forms.convexity_matrix(p, th2, theta, dm)
        assert np.linalg.det(M) == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.linalg.eigvalsh(forms.convexity_matrix(p, th2, theta, 0.9 * dm)) > 0)


def test_delta_max_for_p_2():
    # q = 2 kills the off-diagonal entry: delta_max = Delta(2, theta) / (1 + tan theta2*)
    th2, theta = 0.5, 0.2
    expected = delta_contraction(2, theta, th2) / (1 + math.tan(th2))
    assert forms.delta_max(2.0, th2, theta) == pytest.approx(expected, rel=1e-14)


def test_choose_delta_and_a0():
    delta, a0 = forms.choose_delta(4.0, 0.3, 0.1)
    q = 4 / 3
    assert delta == pytest.approx(0.9 * forms.delta_max(4.0, 0.3, 0.1))
    assert a0 == pytest.approx(math.sqrt(2 * delta * q * (q - 1)) * delta_contraction(q, 0.1, 0.3), rel=1e-15)
    assert forms.choose_delta(2.0, 0.0, 0.0, fraction=1.0)[0] == 0.99  # cap
    with pytest.raises(SectorError):
        forms.choose_delta(4.0, 0.3, 2.0)
    with pytest.raises(ValueError):
        forms.delta_max(1.5, 0.3, 0.1)


def test_sampling_mixture_covers_regions(rng):
    P = BellmanParams(4.0, 0.3)
    v = forms.sample_bellman_points(rng, 20_000, 4.0)
    tags = set(np.unique(region(P, v)))
    assert {"interior_p", "interior_q"} <= tags
    nz, ne = np.hypot(v[:, 0], v[:, 1]), np.hypot(v[:, 2], v[:, 3])
    near = np.abs(np.log(nz**4 / ne ** (4 / 3))) < 1e-3
    assert near.mean() > 0.05
    assert (ne < 1e-3).mean() > 0.1
    omega = forms.sample_directions(rng, 1000, 3, 4)
    assert omega.shape == (1000, 4, 3)


def test_sampling_is_seeded():
    a = forms.sample_bellman_points(substream(1, "x"), 100, 3.0)
    b = forms.sample_bellman_points(substream(1, "x"), 100, 3.0)
    np.testing.assert_array_equal(a, b)


def test_normalized_margin_floor():
    # a margin at rounding level of a large term sum is not a violation
    m = forms.normalized_margin(-1e-14, 0.0, 1e3)
    assert abs(m) < 1e-9
    assert forms.normalized_margin(-1.0, 1.0, 0.0) == pytest.approx(-1.0)


@pytest.mark.parametrize("B", [HALF_I, HALF_I_J])
def test_power_sector_inequality(B):
    for r in (1.25, 3.0):
        for rep in forms.verify_power_sector(B, r, 5000, seed=2):
            assert rep.passed, rep


def test_power_sector_is_sharp_for_rotation():
    # for B = (I - J)/2 the worst normalized margin approaches 0
    reps = forms.verify_power_sector(HALF_I_J, 3.0, 20_000, seed=4)
    assert min(r.worst for r in reps) < 1e-2


def test_power_sector_fails_with_too_small_cotangent(monkeypatch):
    # shrinking theta_r* (a larger cotangent is fine, a smaller one is not) must be detected
    real = AngleSet.theta_r

    def too_wide(self, r):
        return real(self, r) + 0.2

    monkeypatch.setattr(AngleSet, "theta_r", too_wide)
    reps = forms.verify_power_sector(HALF_I_J, 3.0, 20_000, seed=4)
    assert not all(r.passed for r in reps)


@pytest.mark.parametrize("p", [2.0, 3.0, 8.0])
def test_main_convexity_certificate(p):
    B = HALF_I_J
    cert = forms.verify_main_convexity(B, p, theta_p(B, p, 0.5), 4000, seed=5)
    assert cert.verdict
    assert set(cert.variants) == {"e+B", "e-B", "e+B*", "e-B*"}
    assert cert.a0 == pytest.approx(cert.a0_recomputed(), abs=1e-14)
    doc = json.loads(json.dumps(cert.to_dict()))
    assert doc["verdict"] is True and len(doc["worst_witness"]["v"]) == 4


def test_main_convexity_detects_inflated_a0():
    B = HALF_I_J
    th = theta_p(B, 3.0, 0.5)
    cert = forms.verify_main_convexity(B, 3.0, th, 4000, seed=5)
    big = forms.verify_main_convexity(B, 3.0, th, 4000, seed=5, a0=50 * cert.a0)
    assert cert.verdict and not big.verdict
    assert big.worst_margin < -0.5


def test_convexity_chain_passes():
    for p in (2.0, 3.0):
        reps = forms.verify_convexity_chain(HALF_I_J, p, theta_p(HALF_I_J, p, 0.9), 3000, seed=6)
        assert reps and all(r.passed for r in reps), [r for r in reps if not r.passed]
        names = {r.anchor for r in reps}
        if p == 3.0:
            assert {"tensor-lower", "negative-power-lower", "tensor-expansion"} <= names


def test_mollified_convexity_on_singular_set():
    rep = forms.verify_mollified_convexity(HALF_I_J, 4.0, theta_p(HALF_I_J, 4.0, 0.5), 40, seed=7)
    assert rep.passed
    assert rep.to_dict()["passed"] is True
