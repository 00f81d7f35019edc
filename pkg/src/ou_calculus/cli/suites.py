"""Verification suites behind ``ou-calculus run``."""
from concurrent.futures import ThreadPoolExecutor
import math
import time

import numpy as np

from .. import __version__, forms, linalg
from ..bellman import BellmanParams
from ..galerkin import (
    bilinear_estimate,
    heat_flow,
    mehler_mc,
    mean_zero_block,
    ou_matrix,
    ou_matrix_from_drift,
    random_polynomial,
    sector_angle_sweep,
    semigroup_apply,
    spectrum_distance,
    spectrum_from_drift,
    weighted_norm,
)
from ..galerkin import multipliers as mult
from ..oumodel import angle_comparison, load_model, rotating_model, solve_lyapunov
from ..rng import substream
from .report import CheckRecord, ExperimentReport


class Context:
    """Shared state for one run: config, model and derived angles."""

    def __init__(self, cfg, model):
        self.cfg = cfg
        self.model = model
        self.B = model.B
        self.th2 = model.theta2star.starred
        self.theta_p = model.angles.theta_r(cfg.p)
        self.theta = cfg.theta_fraction * self.theta_p
        if cfg.delta is None:
            self.delta, self.a0 = forms.choose_delta(cfg.p, self.th2, self.theta)
        else:
            self.delta = cfg.delta
            self.a0 = forms.a0_constant(cfg.p, self.th2, self.theta, cfg.delta)
        self._op = None

    @property
    def op(self):
        if self._op is None:
            self._op = ou_matrix(self.model, N=self.cfg.N)
        return self._op

    def record(self, suite, name, anchor, value, tolerance=None, **info):
        tol = self.cfg.tol(anchor) if tolerance is None else self.cfg.tolerances.get(anchor, tolerance)
        return CheckRecord(suite, name, anchor, float(value), float(tol), info)

    def from_margin(self, suite, rep):
        return self.record(suite, rep.name, rep.anchor, rep.worst, rep.tolerance, samples=rep.count)


def suite_angles(ctx):
    cfg, m = ctx.cfg, ctx.model
    route2 = linalg.numerical_range_angle(m.B).starred
    recs = [ctx.record("angles", "theta2star_two_routes", "numerical-range-angle", -abs(m.theta2star.starred - route2), 1e-10)]
    table = m.angles.table(cfg.r_values)
    worst_sin, worst_cmp = 0.0, math.inf
    for row in table:
        r = row["r"]
        lhs = math.sin(row["theta_r"])
        rhs = math.sin(row["phi_r"]) * math.sin(math.pi / 2 - ctx.th2)
        worst_sin = max(worst_sin, abs(lhs - rhs))
        sharp, interp, _ = angle_comparison(ctx.th2, r)
        row["interpolation_angle"] = interp
        if r != 2:
            worst_cmp = min(worst_cmp, interp - sharp)
    recs.append(ctx.record("angles", "sin_identity", "angle-sin-identity", -worst_sin, 1e-12))
    if math.isfinite(worst_cmp):
        recs.append(ctx.record("angles", "angle_comparison", "angle-comparison", worst_cmp, 0.0))
    tables = {"theta2star": ctx.th2, "theta_r": table}
    return recs, tables


def suite_lyapunov(ctx):
    m = ctx.model
    qn = np.linalg.norm(m.Q, 2)
    res = np.linalg.norm(m.A @ m.Qinf + m.Qinf @ m.A.T - m.Q, 2) / qn
    recs = [ctx.record("lyapunov", "lyapunov_residual", "lyapunov-identity", -res, 1e-10)]
    bs = np.max(np.abs((m.B + m.B.T) / 2 - m.Q / 2)) / qn
    recs.append(ctx.record("lyapunov", "B_sym_is_Q_half", "lyapunov-identity", -bs, 1e-10))
    worst = 0.0
    for t in (0.1, 1.0, 5.0):
        S = m.semigroup_matrix(t)
        closed = m.Qinf - S @ m.Qinf @ S.T
        worst = max(worst, np.max(np.abs(m.covariance_at(t) - closed)) / qn)
    recs.append(ctx.record("lyapunov", "Qt_quadrature_vs_closed_form", "finite-time-covariance", -worst, 1e-9))
    again = solve_lyapunov(m.A, m.Q)
    recs.append(ctx.record("lyapunov", "solver_deterministic", "lyapunov-identity", -np.max(np.abs(again - m.Qinf)), 0.0))
    return recs, {"Qinf": m.Qinf}


def suite_bellman(ctx):
    params = BellmanParams(ctx.cfg.p, ctx.delta)
    recs = [ctx.from_margin("bellman", r) for r in forms.verify_bellman_estimates(params, ctx.cfg.samples, ctx.cfg.seed)]
    rep = forms.verify_boundary_c1(params, ctx.cfg.points, ctx.cfg.seed)
    recs.append(ctx.from_margin("bellman", rep))
    return recs, {"delta": ctx.delta}


def suite_convexity(ctx):
    cert = forms.verify_main_convexity(ctx.B, ctx.cfg.p, ctx.theta, ctx.cfg.samples, ctx.cfg.seed, delta=ctx.delta)
    recs = [
        ctx.record("convexity", f"convexity[{label}]", "main-convexity", worst, samples=cert.samples)
        for label, worst in cert.variants.items()
    ]
    recs.append(ctx.record("convexity", "a0_recomputed", "delta-a0-construction", -abs(cert.a0 - cert.a0_recomputed()), 1e-14))
    rep = forms.verify_mollified_convexity(ctx.B, ctx.cfg.p, ctx.theta, ctx.cfg.points, ctx.cfg.seed, delta=ctx.delta)
    recs.append(ctx.from_margin("convexity", rep))
    return recs, {"certificate": cert.to_dict()}


def suite_chain(ctx):
    cfg = ctx.cfg
    reps = forms.verify_convexity_chain(ctx.B, cfg.p, ctx.theta, cfg.samples, cfg.seed)
    for r in cfg.r_values:
        reps += forms.verify_power_sector(ctx.B, r, cfg.samples, cfg.seed)
    return [ctx.from_margin("chain", r) for r in reps], {}


def suite_galerkin(ctx):
    op, m, cfg = ctx.op, ctx.model, ctx.cfg
    b = op.basis
    recs = []
    dist = spectrum_distance(op.eigenvalues(), spectrum_from_drift(m, cfg.N))
    recs.append(ctx.record("galerkin", "spectrum_vs_multi_index_sums", "galerkin-spectrum", -dist, 1e-8))
    scale = max(1.0, np.max(np.abs(op.Mstar)))
    adj = np.max(np.abs(op.Mstar - ou_matrix_from_drift(m, b))) / scale
    recs.append(ctx.record("galerkin", "adjoint_two_routes", "galerkin-adjoint", -adj, 1e-8))
    P = op.P
    recs.append(ctx.record("galerkin", "projection_idempotent", "mean-projection", -np.max(np.abs(P @ P - P)), 1e-12))
    recs.append(ctx.record("galerkin", "generator_kills_constants", "mean-projection", -np.max(np.abs(op.M @ P)), 1e-12))
    rng = substream(cfg.seed, "suite:galerkin", 0)
    Ds = [b.derivative_matrix(i) for i in range(m.n)]
    worst = 0.0
    for _ in range(cfg.pairs):
        f, g = random_polynomial(b, rng), random_polynomial(b, rng)
        lhs = b.inner(op.M @ f, g)
        rhs = sum(m.B[i, j] * (np.conj(Ds[i] @ g) @ b.G @ (Ds[j] @ f)) for i in range(m.n) for j in range(m.n))
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    recs.append(ctx.record("galerkin", "divergence_form", "divergence-form", -worst, 1e-9))
    fov = sector_angle_sweep(mean_zero_block(op))
    recs.append(ctx.record("galerkin", "field_of_values_in_sector", "numerical-range-sector", ctx.th2 - fov, 1e-8, angle=fov))
    f = random_polynomial(b, rng)
    law = np.max(np.abs(semigroup_apply(op, 0.3 + 0.1j, semigroup_apply(op, 0.7 - 0.2j, f)) - semigroup_apply(op, 1.0 - 0.1j, f)))
    recs.append(ctx.record("galerkin", "semigroup_law", "semigroup-law", -law, 1e-10))
    inv = abs(b.mean(semigroup_apply(op, 1.3, f)) - b.mean(f))
    recs.append(ctx.record("galerkin", "invariance", "invariant-measure", -inv, 1e-10))
    norm = weighted_norm(op, semigroup_apply(op, 0.5, np.eye(op.dim)))
    recs.append(ctx.record("galerkin", "L2_contraction", "semigroup-contraction", 1 - norm, 1e-10))
    worst_z = math.inf
    for k in range(cfg.pairs):
        f = random_polynomial(b, rng)
        x = rng.standard_normal(m.n)
        t = float(rng.uniform(0.1, 2.0))
        exact = b.evaluate(semigroup_apply(op, t, f), x[None])[0]
        mc, err = mehler_mc(op, t, f, x, cfg.mc_samples, cfg.seed, index=k)
        worst_z = min(worst_z, -abs(mc - exact) / err)
    recs.append(ctx.record("galerkin", "mehler_vs_expm", "kolmogorov-formula", worst_z, cfg.sigmas))
    return recs, {"N": cfg.N, "dim": op.dim, "fov_angle": fov}


def _mean_zero_pairs(ctx, name):
    rng = substream(ctx.cfg.seed, name, 0)
    b = ctx.op.basis
    return [(random_polynomial(b, rng, mean_zero=True), random_polynomial(b, rng, mean_zero=True)) for _ in range(ctx.cfg.pairs)]


def suite_heatflow(ctx):
    cfg = ctx.cfg
    start, stop, count = cfg.t_grid
    grid = np.linspace(start, stop, int(count))
    params = BellmanParams(cfg.p, ctx.delta)
    mono, dec = math.inf, math.inf
    for k, (u, v) in enumerate(_mean_zero_pairs(ctx, "suite:heatflow")):
        rep = heat_flow(ctx.op, params, ctx.theta, u, v, grid, cfg.mc_samples, cfg.seed + k)
        mono, dec = min(mono, rep.monotone_margin), min(dec, rep.decay_margin)
    recs = [
        ctx.record("heatflow", "energy_nonincreasing", "heat-flow-monotone", mono + cfg.sigmas, 0.0),
        ctx.record("heatflow", "decay_dominates_bilinear", "heat-flow-infinitesimal", dec + cfg.sigmas, 0.0),
    ]
    return recs, {"C0": rep.C0, "a0": rep.a0}


def suite_bilinear(ctx):
    worst, C2 = math.inf, None
    for u, v in _mean_zero_pairs(ctx, "suite:bilinear"):
        res = bilinear_estimate(ctx.op, ctx.theta, u, v, ctx.cfg.p, ctx.delta, samples=ctx.cfg.mc_samples, seed=ctx.cfg.seed)
        worst = min(worst, (res.bound - res.value) / res.bound)
        C2 = res.C2
    return [ctx.record("bilinear", "bilinear_integral_bound", "bilinear-estimate", worst, 0.0)], {"C2": C2}


def suite_multiplier(ctx):
    op = ctx.op
    fov = sector_angle_sweep(mean_zero_block(op))
    theta_m = min(fov + 0.1, (fov + math.pi / 2) / 2)
    recs, ratios = [], {}
    for entry in ctx.cfg.multipliers:
        m = mult.from_config(entry)
        X = mult.multiplier_apply(op, m, theta_m)
        ratio = weighted_norm(op, X) / mult.sector_sup(m, theta_m)
        ratios[m.name] = ratio
        recs.append(ctx.record("multiplier", f"crouzeix_delyon[{m.name}]", "crouzeix-delyon", 1 - ratio / mult.CROUZEIX_DELYON, 0.0))
        E = mult.multiplier_eig(op, m)
        if E is not None:
            err = np.max(np.abs(X - E)) / max(1.0, np.max(np.abs(E)))
            recs.append(ctx.record("multiplier", f"contour_vs_eig[{m.name}]", "multiplier-calculus", -err, 1e-8))
    return recs, {"theta_m": theta_m, "norm_ratios": ratios}


SUITES = {
    "angles": suite_angles,
    "lyapunov": suite_lyapunov,
    "bellman": suite_bellman,
    "convexity": suite_convexity,
    "chain": suite_chain,
    "galerkin": suite_galerkin,
    "heatflow": suite_heatflow,
    "bilinear": suite_bilinear,
    "multiplier": suite_multiplier,
}


def model_for(cfg):
    return rotating_model(1.0) if cfg.model is None else load_model(cfg.model)


def run(cfg, model=None):
    """Run the configured suite(s) and assemble an :class:`ExperimentReport`."""
    start = time.perf_counter()
    ctx = Context(cfg, model_for(cfg) if model is None else model)
    names = list(SUITES) if cfg.suite == "all" else [cfg.suite]
    if "multiplier" in names or "galerkin" in names or "heatflow" in names or "bilinear" in names:
        ctx.op  # build once before threads share it
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        results = list(pool.map(lambda name: SUITES[name](ctx), names))
    report = ExperimentReport(config=cfg.to_dict(), seed=cfg.seed, version=__version__)
    report.tables["model"] = {"label": ctx.model.label, "theta2star": ctx.th2, "theta_p": ctx.theta_p, "theta": ctx.theta, "delta": ctx.delta, "a0": ctx.a0}
    for name, (recs, tables) in zip(names, results):
        report.checks.extend(recs)
        report.tables[name] = tables
    if cfg.record_timing:
        report.wall_clock = time.perf_counter() - start
    return report
