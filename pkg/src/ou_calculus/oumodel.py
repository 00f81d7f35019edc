"""Finite-dimensional nondegenerate Ornstein-Uhlenbeck models.

An OU model is fixed by a diffusion matrix ``Q`` (symmetric positive definite)
and a drift ``A`` with spectrum in the open right half-plane.  Everything else
(the invariant covariance ``Qinf``, the coefficient ``B = Qinf A^T`` and the
sector angles on ``L^r``) is derived here.
"""
from dataclasses import dataclass, field
import json
import math
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm, cho_factor

from . import linalg
from .errors import ConfigError, ModelError, NumericalError, SectorError
from .linalg import SectorAngle
from .rng import substream

__all__ = [
    "OUModel",
    "GaussianMeasure",
    "AngleSet",
    "solve_lyapunov",
    "covariance_at",
    "build_model",
    "theta_r_star",
    "delta_contraction",
    "angle_comparison",
    "gaussian_sample",
    "random_model",
    "rotating_model",
    "load_model",
    "parse_model",
]

LYAPUNOV_RTOL = 1e-10


def _check_spd(Q, name="Q"):
    Q = np.asarray(Q, dtype=float)
    linalg.as_square(Q, name)
    scale = max(np.max(np.abs(Q)), np.finfo(float).tiny)
    if np.max(np.abs(Q - Q.T)) > 1e-12 * scale:
        raise ModelError(f"{name} is not symmetric", invariant="symmetric")
    w = np.linalg.eigvalsh((Q + Q.T) / 2)
    if w[0] <= 1e-14 * scale:
        raise ModelError(f"{name} is not positive definite (smallest eigenvalue {w[0]:.3e})", invariant="spd")
    return (Q + Q.T) / 2


def _check_drift(A):
    A = np.asarray(A, dtype=float)
    linalg.as_square(A, "A")
    lam = np.linalg.eigvals(A)
    worst = lam[np.argmin(lam.real)]
    if worst.real <= 0:
        raise ModelError(
            f"drift eigenvalue {worst:.6g} does not lie in the open right half-plane", invariant="drift_spectrum"
        )
    return A, lam


def solve_lyapunov(A, Q):
    """Solve ``A X + X A^T = Q`` for the invariant covariance.

    Dense Kronecker-sum solve; intended for ``n <= 50``.

    Raises
    ------
    ModelError
        If ``Q`` is not SPD or ``A`` has an eigenvalue with ``Re <= 0``.
    NumericalError
        If the Kronecker system is numerically singular.
    """
    Q = _check_spd(Q)
    A, lam = _check_drift(A)
    n = A.shape[0]
    gap = lam.real.min()
    if 2 * gap <= 1e-13 * max(np.linalg.norm(A, 2), 1.0):
        raise NumericalError(f"Kronecker system is numerically singular (spectral gap {gap:.3e})")
    eye = np.eye(n)
    K = np.kron(eye, A) + np.kron(A, eye)
    try:
        x = np.linalg.solve(K, Q.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Kronecker system is singular: {exc}") from exc
    X = x.reshape(n, n, order="F")
    return (X + X.T) / 2


def _panel_integral(A, Q, t, panels, nodes, weights):
    edges = np.linspace(0.0, t, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    u = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    S = expm(-u[:, None, None] * A[None, :, :])
    return np.einsum("k,kij,jl,kml->im", w, S, Q, S)


def covariance_at(model, t, atol=1e-10, order=10, max_panels=1 << 14):
    """``Q_t = int_0^t e^{-uA} Q e^{-uA^T} du`` by composite Gauss-Legendre.

    The panel count doubles until two successive sums agree to ``atol``
    (scaled by ``max(1, ||Q||)``).
    """
    t = float(t)
    if not t >= 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    A, Q = model.A, model.Q
    if t == 0:
        return np.zeros_like(Q)
    nodes, weights = leggauss(order)
    panels = max(2, int(math.ceil(t * np.linalg.norm(A, 2))))
    target = atol * max(1.0, np.linalg.norm(Q, 2))
    prev = _panel_integral(A, Q, t, panels, nodes, weights)
    while panels < max_panels:
        panels *= 2
        cur = _panel_integral(A, Q, t, panels, nodes, weights)
        if np.max(np.abs(cur - prev)) <= target:
            return (cur + cur.T) / 2
        prev = cur
    raise NumericalError(f"Q_t quadrature did not converge at t={t}")


@dataclass(frozen=True)
class GaussianMeasure:
    """Centered Gaussian measure on ``R^n``."""

    covariance: np.ndarray
    inverse: np.ndarray = field(init=False, repr=False)
    logdet: float = field(init=False)
    cholesky: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        C = _check_spd(self.covariance, "covariance")
        L = np.linalg.cholesky(C)
        object.__setattr__(self, "covariance", C)
        object.__setattr__(self, "cholesky", L)
        object.__setattr__(self, "inverse", np.linalg.inv(C))
        object.__setattr__(self, "logdet", float(2 * np.sum(np.log(np.diag(L)))))

    @property
    def dim(self):
        return self.covariance.shape[0]

    def density(self, x):
        x = np.atleast_2d(x)
        quad = np.einsum("ki,ij,kj->k", x, self.inverse, x)
        return np.exp(-0.5 * quad - 0.5 * self.logdet - 0.5 * self.dim * math.log(2 * math.pi))

    def sample(self, count, seed, name="gaussian", index=0):
        return gaussian_sample(self, count, seed, name=name, index=index)


def gaussian_sample(measure, count, seed, name="gaussian", index=0):
    """Draw ``count`` points from ``measure``; rows are samples.

    Deterministic in ``(seed, name, index)``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = substream(seed, name, index)
    z = rng.standard_normal((int(count), measure.dim))
    return z @ measure.cholesky.T


def _as_star(theta2star):
    if isinstance(theta2star, SectorAngle):
        return theta2star.starred
    return float(theta2star)


def theta_r_star(theta2star, r):
    """Sectoriality angle of the OU generator on ``L^r``.

    ``arctan( sqrt((r-2)^2 + r^2 tan^2 theta2*) / (2 sqrt(r-1)) )``.
    """
    r = float(r)
    if not r > 1:
        raise ValueError(f"r must exceed 1, got {r}")
    t2 = math.tan(_as_star(theta2star))
    return SectorAngle(math.atan(math.sqrt((r - 2) ** 2 + r * r * t2 * t2) / (2 * math.sqrt(r - 1))), star=True)


def delta_contraction(r, theta, theta2star):
    """``Delta(r, theta) = sin(theta_r - theta) / sin(theta_r)``, in ``[0, 1]``."""
    th_r = theta_r_star(theta2star, r).unstarred
    theta = float(theta)
    if theta < 0 or theta > th_r * (1 + 1e-15):
        raise SectorError(f"theta={theta:.6g} outside [0, theta_r={th_r:.6g}]")
    return max(0.0, math.sin(th_r - theta)) / math.sin(th_r)


def angle_comparison(theta2star, r):
    """Compare ``theta_r*`` with the interpolation angle ``theta2* + theta2 |1 - 2/r|``.

    Returns ``(theta_r*, interpolation_angle, theta_r* < interpolation_angle)``.
    """
    t2s = _as_star(theta2star)
    sharp = theta_r_star(t2s, r).value
    interp = t2s + (math.pi / 2 - t2s) * abs(1 - 2 / float(r))
    return sharp, interp, sharp < interp


class AngleSet:
    """All sector angles derived from ``theta2*``."""

    def __init__(self, theta2star):
        self.theta2star = _as_star(theta2star)

    def theta_r_star(self, r):
        return theta_r_star(self.theta2star, r).value

    def theta_r(self, r):
        return math.pi / 2 - self.theta_r_star(r)

    @staticmethod
    def phi_r(r):
        return math.acos(abs(1 - 2 / r))

    @staticmethod
    def phi_r_star(r):
        return math.atan(abs(r - 2) / (2 * math.sqrt(r - 1)))

    def delta(self, r, theta):
        return delta_contraction(r, theta, self.theta2star)

    def table(self, rs):
        return [
            {"r": float(r), "theta_r_star": self.theta_r_star(r), "theta_r": self.theta_r(r), "phi_r": self.phi_r(r)}
            for r in rs
        ]


@dataclass(frozen=True)
class OUModel:
    """Nondegenerate OU model; build with :func:`build_model`."""

    Q: np.ndarray
    A: np.ndarray
    Qinf: np.ndarray
    B: np.ndarray
    theta2star: SectorAngle
    label: str = ""

    @property
    def n(self):
        return self.Q.shape[0]

    @property
    def gap(self):
        """``min Re sigma(A)``."""
        return float(np.linalg.eigvals(self.A).real.min())

    @property
    def drift_eigenvalues(self):
        return np.linalg.eigvals(self.A)

    @property
    def angles(self):
        return AngleSet(self.theta2star)

    @property
    def invariant_measure(self):
        return GaussianMeasure(self.Qinf)

    def measure_at(self, t):
        return GaussianMeasure(covariance_at(self, t))

    def covariance_at(self, t):
        return covariance_at(self, t)

    def semigroup_matrix(self, t):
        """``S(t) = e^{-tA}``."""
        return expm(-float(t) * self.A)


def build_model(Q, A, label=""):
    """Construct an :class:`OUModel` and verify its invariants."""
    Q = _check_spd(Q)
    A = np.asarray(A, dtype=float)
    if A.shape != Q.shape:
        raise ModelError(f"Q has shape {Q.shape} but A has shape {A.shape}", invariant="shape")
    Qinf = solve_lyapunov(A, Q)
    qnorm = np.linalg.norm(Q, 2)
    resid = np.linalg.norm(A @ Qinf + Qinf @ A.T - Q, 2) / qnorm
    if resid > LYAPUNOV_RTOL:
        raise NumericalError(f"Lyapunov residual {resid:.3e} exceeds {LYAPUNOV_RTOL}")
    try:
        cho_factor(Qinf)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("invariant covariance is not positive definite") from exc
    B = Qinf @ A.T
    Bs, _ = linalg.sym_antisym(B)
    if np.max(np.abs(Bs - Q / 2)) > LYAPUNOV_RTOL * max(1.0, np.max(np.abs(Q))):
        raise NumericalError("symmetric part of B differs from Q/2")
    Qis = linalg.spd_inv_sqrt(Q)
    tan2 = np.linalg.norm(Qis @ (B - B.T) @ Qis, 2)
    return OUModel(Q=Q, A=A, Qinf=Qinf, B=B, theta2star=SectorAngle(math.atan(tan2), star=True), label=label)


def rotating_model(a=1.0):
    """``Q = I``, ``A = I + aJ`` on ``R^2`` with ``J = [[0, 1], [-1, 0]]``."""
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return build_model(np.eye(2), np.eye(2) + a * J, label=f"rotating(a={a:g})")


def random_model(n, rng, label=""):
    """A random nondegenerate model: SPD ``Q``, drift shifted into ``C_+``."""
    G = rng.standard_normal((n, n))
    Q = G @ G.T / n + 0.2 * np.eye(n)
    R = rng.standard_normal((n, n))
    shift = max(0.0, -np.linalg.eigvals(R).real.min()) + rng.uniform(0.2, 1.5)
    return build_model(Q, R + shift * np.eye(n), label=label)


def _matrix_field(doc, key, n):
    if key not in doc:
        raise ConfigError(f"model file is missing field {key!r}", field=key)
    try:
        M = np.asarray(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field {key!r} is not numeric", field=key) from exc
    if M.ndim == 1 and M.size == n * n:
        M = M.reshape(n, n)
    if M.shape != (n, n):
        raise ConfigError(f"field {key!r} must hold {n}x{n} entries (row-major)", field=key)
    return M


def parse_model(doc):
    """Build a model from a mapping with keys ``n``, ``Q``, ``A`` and optional ``label``.

    Structural problems raise :class:`ConfigError`; mathematical preconditions
    (symmetry, positive definiteness, drift spectrum) raise :class:`ModelError`.
    """
    if not isinstance(doc, dict):
        raise ConfigError("model document must be a mapping")
    unknown = set(doc) - {"n", "Q", "A", "label"}
    if unknown:
        raise ConfigError(f"unknown model keys: {sorted(unknown)}", field=sorted(unknown)[0])
    if "n" not in doc:
        raise ConfigError("model file is missing field 'n'", field="n")
    n = doc["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError("field 'n' must be a positive integer", field="n")
    Q = _matrix_field(doc, "Q", n)
    A = _matrix_field(doc, "A", n)
    return build_model(Q, A, label=str(doc.get("label", "")))


def load_model(path):
    """Read a model file (YAML or JSON)."""
    import yaml

    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}", field="model") from exc
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse model file {path}: {exc}", field="model") from exc
    return parse_model(doc)
