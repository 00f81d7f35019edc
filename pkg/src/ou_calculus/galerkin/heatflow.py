"""Heat-flow functional of the Bellman function and the bilinear estimate."""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm

from ..bellman import BellmanParams, bellman_eval, bellman_grad, pack
from ..errors import NumericalError, SectorError
from ..forms import a0_constant
from ..oumodel import gaussian_sample

__all__ = ["HeatFlowReport", "heat_flow", "bilinear_form", "bilinear_estimate", "BilinearResult", "heat_constants"]


def heat_constants(model, p, theta, delta):
    """``(a0, C0, C2)`` for the heat-flow argument.

    ``C0 = a0 / (1 + tan theta2*)``.  ``C2`` bounds the time integral of the
    bilinear form by ``C2 ||u||_p ||v||_q``: the functional starts below
    ``(1 + delta)(||u||_p^p + ||v||_q^q)`` and decays to 0 at rate at least
    ``C0 |bilinear|``; rescaling ``u -> k u``, ``v -> v / k`` and minimizing
    over ``k`` gives ``C2 = (1 + delta) p^{1/p} q^{1/q} / C0``.
    """
    th2 = model.theta2star.starred
    theta_p = model.angles.theta_r(p)
    if not 0 <= theta < theta_p:
        raise SectorError(f"theta={theta:.6g} must lie in [0, theta_p={theta_p:.6g})")
    q = p / (p - 1)
    a0 = a0_constant(p, th2, theta, delta)
    C0 = a0 / (1 + math.tan(th2))
    C2 = (1 + delta) * p ** (1 / p) * q ** (1 / q) / C0
    return a0, C0, C2


def _orbits(op, theta, u, v, t):
    U = expm(-t * np.exp(1j * theta) * op.M) @ u
    V = expm(-t * np.exp(-1j * theta) * op.Mstar) @ v
    return U, V


def bilinear_form(op, theta, u, v, t):
    """``int L T(t e^{i theta}) u * conj(T*(t e^{-i theta}) v)`` exactly in the Gram calculus."""
    U, V = _orbits(op, theta, u, v, t)
    return complex(np.conj(V) @ op.basis.G @ (op.M @ U))


@dataclass
class HeatFlowReport:
    t: np.ndarray
    energy: np.ndarray
    energy_err: np.ndarray
    step_err: np.ndarray
    decay: np.ndarray
    decay_err: np.ndarray
    bilinear: np.ndarray
    C0: float
    a0: float
    delta: float
    samples: int
    notes: dict = field(default_factory=dict)

    @property
    def monotone_margin(self):
        """Worst ``-(E(t_{k+1}) - E(t_k)) / step_err``; nonincreasing within 3 sigma iff >= -3."""
        d = -np.diff(self.energy)
        return float(np.min(d / np.maximum(self.step_err, np.finfo(float).tiny)))

    @property
    def decay_margin(self):
        """Worst ``(-E' - C0 |bilinear|) / sigma``."""
        m = self.decay - self.C0 * np.abs(self.bilinear)
        return float(np.min(m / np.maximum(self.decay_err, np.finfo(float).tiny)))

    def passed(self, sigmas=3.0):
        return self.monotone_margin >= -sigmas and self.decay_margin >= -sigmas


def heat_flow(op, params, theta, u, v, t_grid, samples, seed):
    """Monte-Carlo trajectory of ``E(t) = E[Q(T(t e^{i theta}) u, T*(t e^{-i theta}) v)]``.

    A single sample of the invariant measure is shared by all times, so
    increments have small variance.  ``-E'(t)`` is computed from the chain
    rule with the Wirtinger derivatives of the Bellman function::

        -E'(t) = 2 Re E[e^{i theta} d_zeta Q * (M U) + e^{-i theta} d_eta Q * (M* V)]
    """
    if not isinstance(params, BellmanParams):
        params = BellmanParams(*params)
    a0, C0, _ = heat_constants(op.model, params.p, theta, params.delta)
    x = gaussian_sample(op.model.invariant_measure, samples, seed, name="heat_flow")
    Vx = op.basis.monomials(x)
    t_grid = np.asarray(t_grid, dtype=float)
    rot = np.exp(1j * theta)
    vals, dec, bil = [], [], []
    for t in t_grid:
        U, V = _orbits(op, theta, u, v, t)
        zeta, eta = Vx @ U, Vx @ V
        pts = pack(zeta, eta)
        vals.append(bellman_eval(params, pts))
        gz, ge = bellman_grad(params, pts)
        d = 2 * np.real(rot * gz * (Vx @ (op.M @ U)) + np.conj(rot) * ge * (Vx @ (op.Mstar @ V)))
        dec.append(d)
        bil.append(np.conj(V) @ op.basis.G @ (op.M @ U))
    vals, dec = np.array(vals), np.array(dec)
    sq = math.sqrt(samples)
    energy = vals.mean(axis=1)
    return HeatFlowReport(
        t=t_grid,
        energy=energy,
        energy_err=vals.std(axis=1, ddof=1) / sq,
        step_err=np.diff(vals, axis=0).std(axis=1, ddof=1) / sq,
        decay=dec.mean(axis=1),
        decay_err=dec.std(axis=1, ddof=1) / sq,
        bilinear=np.array(bil),
        C0=C0,
        a0=a0,
        delta=params.delta,
        samples=int(samples),
    )


@dataclass
class BilinearResult:
    value: float
    bound: float
    C2: float
    norm_u: float
    norm_v: float
    t_max: float
    abserr: float

    @property
    def verdict(self):
        return bool(self.value <= self.bound)


def _lp_norm(op, c, r, x):
    vals = op.basis.evaluate(c, x)
    return float(np.mean(np.abs(vals) ** r) ** (1 / r))


def bilinear_estimate(op, theta, u, v, p, delta, samples=200_000, seed=0, t_max=None, epsabs=1e-10, epsrel=1e-8, limit=400):
    """Truncated ``int_0^T |bilinear(t)| dt`` against ``C2 ||u||_p ||v||_q``.

    ``T = 40 / gap`` by default with ``gap = min Re sigma(A)``.  The
    ``L^p`` norms are Monte-Carlo estimates on ``samples`` points.
    """
    _, _, C2 = heat_constants(op.model, p, theta, delta)
    q = p / (p - 1)
    if t_max is None:
        t_max = 40.0 / op.model.gap
    u, v = np.asarray(u), np.asarray(v)
    x = gaussian_sample(op.model.invariant_measure, samples, seed, name="bilinear")
    nu, nv = _lp_norm(op, u, p, x), _lp_norm(op, v, q, x)
    if not np.any(u) or not np.any(v):
        return BilinearResult(0.0, C2 * nu * nv, C2, nu, nv, t_max, 0.0)
    # diagonalize once when safe; otherwise fall back to expm per node
    lam, W = np.linalg.eig(op.M)
    if np.linalg.cond(W) < 1e8:
        Winv = np.linalg.inv(W)
        lam_s, Ws = np.linalg.eig(op.Mstar)
        Wsinv = np.linalg.inv(Ws)
        au, av = Winv @ u, Wsinv @ v
        left = np.conj(Ws).T @ op.basis.G @ op.M @ W
        e, es = np.exp(1j * theta), np.exp(-1j * theta)

        def integrand(t):
            U = np.exp(-t * e * lam) * au
            V = np.exp(-t * es * lam_s) * av
            return abs(np.conj(V) @ left @ U)
    else:

        def integrand(t):
            return abs(bilinear_form(op, theta, u, v, t))

    value, err = quad(integrand, 0.0, t_max, epsabs=epsabs, epsrel=epsrel, limit=limit)
    if not np.isfinite(value) or err > max(epsabs, 1e-6 * abs(value)):
        raise NumericalError(f"bilinear quadrature did not converge (error estimate {err:.2e})")
    return BilinearResult(float(value), C2 * nu * nv, C2, nu, nv, float(t_max), float(err))
