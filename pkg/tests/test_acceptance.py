"""End-to-end acceptance criteria, each with its runtime budget.

Every test records a one-line verdict that is printed in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from ou_calculus import forms, linalg
from ou_calculus.bellman import BellmanParams, PowerFunction
from ou_calculus.galerkin import (
    bilinear_estimate,
    heat_flow,
    mean_zero_block,
    mehler_mc,
    ou_matrix,
    random_polynomial,
    sector_angle_sweep,
    semigroup_apply,
    spectrum_distance,
    spectrum_from_drift,
    weighted_norm,
)
from ou_calculus.galerkin import multipliers as mu
from ou_calculus.oumodel import AngleSet, angle_comparison, build_model, gaussian_sample, random_model, rotating_model
from ou_calculus.rng import substream

pytestmark = pytest.mark.acceptance

RESULTS = {}
J = np.array([[0.0, 1.0], [-1.0, 0.0]])


class Criterion:
    def __init__(self, number, budget):
        self.number, self.budget = number, budget

    def __enter__(self):
        self.start = time.perf_counter()
        self.failures = []
        self.detail = ""
        return self

    def check(self, ok, message):
        if not ok:
            self.failures.append(message)

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is not None:
            self.failures.append(f"{exc_type.__name__}: {exc}")
        ok = not self.failures
        detail = self.detail if ok else "; ".join(self.failures[:3])
        RESULTS[self.number] = (ok, elapsed, self.budget, detail)
        print(f"criterion {self.number}: {'PASS' if ok and elapsed < self.budget else 'FAIL'} in {elapsed:.1f}s {detail}")
        assert ok, detail
        assert elapsed < self.budget, f"runtime {elapsed:.1f}s exceeds {self.budget}s"
        return False


def test_01_lyapunov_identity():
    with Criterion(1, 10) as c:
        rng = substream(1, "acceptance:lyapunov")
        worst = 0.0
        for k in range(500):
            n = int(rng.integers(1, 11))
            m = random_model(n, rng)
            res = np.linalg.norm(m.A @ m.Qinf + m.Qinf @ m.A.T - m.Q) / np.linalg.norm(m.Q)
            worst = max(worst, res)
        c.check(worst <= 1e-10, f"worst residual {worst:.2e}")
        c.detail = f"500 models, worst relative residual {worst:.2e}"


def test_02_angle_formulas():
    with Criterion(2, 5) as c:
        m = rotating_model(1.0)
        route1 = m.theta2star.starred
        route2 = linalg.numerical_range_angle(m.B).starred
        c.check(abs(route1 - math.pi / 4) <= 1e-10, f"route 1 gives {route1!r}")
        c.check(abs(route2 - math.pi / 4) <= 1e-10, f"route 2 gives {route2!r}")
        worst_sin, worst_cmp = 0.0, math.inf
        for t2s in np.linspace(0.0, 1.5, 20):
            angles = AngleSet(t2s)
            for r in np.geomspace(1.05, 40.0, 20):
                lhs = math.sin(angles.theta_r(r))
                rhs = math.sin(math.acos(abs(1 - 2 / r))) * math.cos(t2s)
                worst_sin = max(worst_sin, abs(lhs - rhs))
                if r != 2:
                    sharp, interp, flag = angle_comparison(t2s, r)
                    c.check(flag, f"comparison fails at r={r}, theta2*={t2s}")
                    worst_cmp = min(worst_cmp, interp - sharp)
        c.check(worst_sin <= 1e-12, f"sin identity error {worst_sin:.2e}")
        c.detail = f"theta2* err {abs(route1 - math.pi / 4):.1e}/{abs(route2 - math.pi / 4):.1e}, sin err {worst_sin:.1e}, min comparison gap {worst_cmp:.2e}"


def test_03_bellman_estimates():
    with Criterion(3, 60) as c:
        worst = math.inf
        worst_c1 = 0.0
        for p in (2.0, 3.0, 4.0, 8.0):
            for delta in (0.1, 0.5, 0.9):
                params = BellmanParams(p, delta)
                for rep in forms.verify_bellman_estimates(params, 1_000_000, seed=3):
                    c.check(rep.worst >= -1e-9, f"{rep.name}: {rep.worst:.2e}")
                    worst = min(worst, rep.worst)
                b = forms.verify_boundary_c1(params, 1000, seed=3)
                c.check(b.passed, f"{b.name}: gap {-b.worst:.2e}")
                worst_c1 = max(worst_c1, -b.worst)
        c.detail = f"12 cells x 1e6, worst normalized margin {worst:.2e}, boundary gradient gap {worst_c1:.2e}"


def test_04_closed_vs_generic_forms():
    with Criterion(4, 30) as c:
        rng = substream(4, "acceptance:closed")
        worst = 0.0
        total = 0
        for r in (1.25, 1.5, 2.0, 3.0, 4.0, 8.0):
            for k in range(2):
                n = 3
                B = rng.standard_normal((n, n)) + 2 * np.eye(n)
                count = 100_000 // 12 + 1
                s = forms.sample_base_points(rng, count)
                xi = forms.sample_directions(rng, count, n, 2)
                z = s[:, 0] + 1j * s[:, 1]
                hb, hib = forms.power_form_closed(B, r, z, xi[:, 0] + 1j * xi[:, 1])
                gb, sb = forms.hessian_form(PowerFunction(r), B, s, xi, return_scale=True)
                gi, si = forms.hessian_form(PowerFunction(r), 1j * B, s, xi, return_scale=True)
                closed_scale = r * np.abs(z) ** (r - 2) * np.linalg.norm(B, 2) * np.sum(xi**2, axis=(1, 2))
                err = max(np.max(np.abs(hb - gb) / (sb + closed_scale)), np.max(np.abs(hib - gi) / (si + closed_scale)))
                worst = max(worst, err)
                total += count
        c.check(worst <= 1e-10, f"relative disagreement {worst:.2e}")
        c.detail = f"{total} inputs, worst relative disagreement {worst:.2e}"


def _accretive_matrices():
    rng = substream(5, "acceptance:accretive")
    mats = {"I/2": 0.5 * np.eye(2), "(I-J)/2": 0.5 * (np.eye(2) - J)}
    for k in range(3):
        mats[f"random{k}"] = random_model(3, rng).B
    return mats


def test_05_power_sector():
    with Criterion(5, 120) as c:
        worst = math.inf
        for name, B in _accretive_matrices().items():
            for r in (1.25, 1.5, 2.0, 3.0, 4.0, 8.0):
                for rep in forms.verify_power_sector(B, r, 100_000, seed=5):
                    c.check(rep.worst >= -1e-9, f"{name} {rep.name}: {rep.worst:.2e}")
                    worst = min(worst, rep.worst)
        c.detail = f"5 matrices x 6 exponents x 1e5 (B and B*), worst normalized margin {worst:.2e}"


def test_06_main_convexity():
    with Criterion(6, 600) as c:
        mats = {"I/2": 0.5 * np.eye(2), "(I-J)/2": 0.5 * (np.eye(2) - J), "(I-0.3J)/2": 0.5 * (np.eye(2) - 0.3 * J)}
        worst, worst_a0 = math.inf, 0.0
        for p in (2.0, 3.0, 4.0, 8.0):
            for frac in (0.0, 0.5, 0.9):
                for name, B in mats.items():
                    th = frac * AngleSet(linalg.numerical_range_angle(B).starred).theta_r(p)
                    cert = forms.verify_main_convexity(B, p, th, 100_000, seed=6)
                    c.check(cert.worst_margin >= -1e-9, f"p={p} {frac} {name}: {cert.worst_margin:.2e}")
                    a0_err = abs(cert.a0 - cert.a0_recomputed())
                    c.check(a0_err <= 1e-14, f"a0 mismatch {a0_err:.1e}")
                    worst, worst_a0 = min(worst, cert.worst_margin), max(worst_a0, a0_err)
        c.detail = f"36 cells x 4 variants x 1e5, worst normalized margin {worst:.3f}, a0 error {worst_a0:.1e}"


def test_07_mollified_convexity():
    with Criterion(7, 300) as c:
        B = 0.5 * (np.eye(2) - J)
        worst = math.inf
        for p in (2.0, 3.0, 4.0, 8.0):
            th = 0.5 * AngleSet(math.pi / 4).theta_r(p)
            rep = forms.verify_mollified_convexity(B, p, th, 250, seed=7)
            c.check(rep.worst >= -1e-6, f"p={p}: {rep.worst:.2e}")
            worst = min(worst, rep.worst)
        c.detail = f"1000 singular-set points, worst margin {worst:.3e}"


def test_08_galerkin_consistency():
    with Criterion(8, 60) as c:
        models = [build_model([[2.0]], [[1.0]]), rotating_model(1.0)]
        rng = substream(8, "acceptance:galerkin")
        worst_spec, worst_div = 0.0, 0.0
        for m in models:
            op = ou_matrix(m, N=8)
            d = spectrum_distance(op.eigenvalues(), spectrum_from_drift(m, 8))
            c.check(d <= 1e-8, f"spectrum mismatch {d:.2e} (n={m.n})")
            worst_spec = max(worst_spec, d)
        b, m = op.basis, op.model
        Ds = [b.derivative_matrix(i) for i in range(m.n)]
        for _ in range(50):
            f, g = random_polynomial(b, rng), random_polynomial(b, rng)
            lhs = b.inner(op.M @ f, g)
            rhs = sum(m.B[i, j] * (np.conj(Ds[i] @ g) @ b.G @ (Ds[j] @ f)) for i in range(m.n) for j in range(m.n))
            err = abs(lhs - rhs) / max(1.0, abs(lhs))
            worst_div = max(worst_div, err)
        c.check(worst_div <= 1e-9, f"divergence identity error {worst_div:.2e}")
        c.detail = f"spectrum error {worst_spec:.1e}, divergence-form error {worst_div:.1e} on 50 pairs"


def test_09_semigroup_oracles():
    with Criterion(9, 120) as c:
        op = ou_matrix(rotating_model(1.0), N=6)
        b = op.basis
        rng = substream(9, "acceptance:semigroup")
        worst_z = 0.0
        for k in range(20):
            f = random_polynomial(b, rng)
            x = rng.standard_normal(2)
            t = float(rng.uniform(0.1, 2.0))
            exact = b.evaluate(semigroup_apply(op, t, f), x[None])[0]
            mean, err = mehler_mc(op, t, f, x, 100_000, seed=9, index=k)
            z = abs(mean - exact) / err
            c.check(z <= 3, f"Mehler triple {k}: {z:.2f} sigma")
            worst_z = max(worst_z, z)
        # invariance: E[T(t) f] under the invariant measure equals E[f]
        xs = gaussian_sample(op.model.invariant_measure, 100_000, 9, name="invariance")
        V = b.monomials(xs)
        worst_inv = 0.0
        for t in (0.3, 1.0, 3.0):
            f = random_polynomial(b, rng)
            vals = V @ semigroup_apply(op, t, f)
            z = abs(vals.mean() - b.mean(f)) / (np.sqrt(np.mean(np.abs(vals - vals.mean()) ** 2) / vals.size))
            c.check(z <= 3, f"invariance at t={t}: {z:.2f} sigma")
            worst_inv = max(worst_inv, z)
        f = random_polynomial(b, rng)
        law = 0.0
        for t1, t2 in [(0.2, 0.5), (0.3 + 0.2j, 0.4 - 0.1j), (1.0, 2.0)]:
            lhs = semigroup_apply(op, t1, semigroup_apply(op, t2, f))
            law = max(law, np.max(np.abs(lhs - semigroup_apply(op, t1 + t2, f))))
        c.check(law <= 1e-10, f"semigroup law error {law:.2e}")
        c.detail = f"Mehler worst {worst_z:.2f} sigma, invariance worst {worst_inv:.2f} sigma, law error {law:.1e}"


def _random_multipliers(rng, count):
    out = []
    for k in range(count):
        kind = k % 4
        if kind == 0:
            out.append(mu.imaginary_power(float(rng.uniform(-2, 2))))
        elif kind == 1:
            b = float(rng.uniform(0.5, 3))
            out.append(mu.rational(float(rng.uniform(0, b)), b))
        elif kind == 2:
            out.append(mu.exp_sector(float(rng.uniform(0.1, 3))))
        else:
            out.append(mu.product(mu.imaginary_power(float(rng.uniform(-1, 1))), mu.rational(1.0, 1.0)))
    return out


def test_10_crouzeix_delyon():
    with Criterion(10, 120) as c:
        op = ou_matrix(rotating_model(1.0), N=8)
        fov = sector_angle_sweep(mean_zero_block(op))
        theta = fov + 0.05
        rng = substream(10, "acceptance:multipliers")
        worst = 0.0
        for m in _random_multipliers(rng, 10):
            X = mu.multiplier_apply(op, m, theta)
            ratio = weighted_norm(op, X) / mu.sector_sup(m, theta)
            c.check(ratio <= mu.CROUZEIX_DELYON, f"{m.name}: ratio {ratio:.4f}")
            worst = max(worst, ratio)
        c.detail = f"10 multipliers on sector {theta:.4f} > W-angle {fov:.4f}, largest norm/sup ratio {worst:.4f} <= 3.1547"


def test_11_heat_flow_and_bilinear():
    with Criterion(11, 600) as c:
        cases = [
            (ou_matrix(build_model([[2.0]], [[1.0]]), N=6), 2.0, 0.0),
            (ou_matrix(rotating_model(1.0), N=6), 3.0, 0.5),
        ]
        rng = substream(11, "acceptance:heat")
        worst_mono, worst_dec, worst_bil = math.inf, math.inf, math.inf
        for op, p, frac in cases:
            th2 = op.model.theta2star.starred
            th = frac * op.model.angles.theta_r(p)
            delta, _ = forms.choose_delta(p, th2, th)
            u = random_polynomial(op.basis, rng, mean_zero=True)
            v = random_polynomial(op.basis, rng, mean_zero=True)
            rep = heat_flow(op, BellmanParams(p, delta), th, u, v, np.linspace(0, 5, 50), 100_000, seed=11)
            c.check(rep.monotone_margin >= -3, f"{op.model.label}: energy increase {rep.monotone_margin:.2f} sigma")
            c.check(rep.decay_margin >= -3, f"{op.model.label}: decay deficit {rep.decay_margin:.2f} sigma")
            worst_mono, worst_dec = min(worst_mono, rep.monotone_margin), min(worst_dec, rep.decay_margin)
            for frac_b in (frac, 0.9):
                th = frac_b * op.model.angles.theta_r(p)
                delta, _ = forms.choose_delta(p, th2, th)
                for _ in range(10):
                    u = random_polynomial(op.basis, rng, mean_zero=True)
                    v = random_polynomial(op.basis, rng, mean_zero=True)
                    res = bilinear_estimate(op, th, u, v, p, delta, samples=100_000, seed=11)
                    c.check(res.verdict, f"{op.model.label}: {res.value:.3e} > {res.bound:.3e}")
                    worst_bil = min(worst_bil, 1 - res.value / res.bound)
        c.detail = (
            f"monotone margin {worst_mono:.2f} sigma, decay margin {worst_dec:.2f} sigma, "
            f"bilinear slack {worst_bil:.3f} of the bound"
        )
