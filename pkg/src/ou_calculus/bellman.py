"""The two-branch Nazarov-Treil Bellman function on R^2 x R^2.

Points are real arrays of shape ``(..., 4)`` holding ``(zeta1, zeta2, eta1,
eta2)``; complex pairs ``(zeta, eta)`` can be packed with :func:`pack`.  For
``p >= 2``, ``q = p/(p-1)`` and ``0 < delta < 1``::

    Q(zeta, eta) = |zeta|^p + |eta|^q + delta * |zeta|^2 |eta|^(2-q)             if |zeta|^p <= |eta|^q
                 = |zeta|^p + |eta|^q + delta * (2/p |zeta|^p + (2/q - 1)|eta|^q)  otherwise

It is C^1 everywhere and C^2 off ``{eta = 0} U {|zeta|^p = |eta|^q}``.
"""
from dataclasses import dataclass
import math

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import SingularSetError
from .linalg import direction_gram

__all__ = [
    "BellmanParams",
    "FormPoint",
    "PowerFunction",
    "TensorPower",
    "INTERIOR_P",
    "INTERIOR_Q",
    "BOUNDARY",
    "ETA_ZERO",
    "BOUNDARY_BAND",
    "pack",
    "region",
    "bellman_eval",
    "bellman_real_grad",
    "bellman_grad",
    "branch_gradients",
    "estimate_margins",
    "bellman_hessian",
    "hessian_with_mask",
    "bump_rule",
    "mollified_form",
]

INTERIOR_P = "interior_p"
INTERIOR_Q = "interior_q"
BOUNDARY = "boundary"
ETA_ZERO = "eta_zero"
_TAGS = np.array([INTERIOR_P, INTERIOR_Q, BOUNDARY, ETA_ZERO])

# relative half-width of the band around |zeta|^p = |eta|^q treated as singular
BOUNDARY_BAND = 1e-9


@dataclass(frozen=True)
class BellmanParams:
    p: float
    delta: float

    def __post_init__(self):
        p, d = float(self.p), float(self.delta)
        if not p >= 2 or not math.isfinite(p):
            raise ValueError(f"p must be >= 2, got {p}")
        if not 0 < d < 1:
            raise ValueError(f"delta must lie in (0, 1), got {d}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "delta", d)

    @property
    def q(self):
        return self.p / (self.p - 1)

    def __call__(self, v):
        return bellman_eval(self, v)

    def hessian(self, v):
        return bellman_hessian(self, v)

    def hessian_with_mask(self, v):
        return hessian_with_mask(self, v)


def pack(zeta, eta):
    """Pack complex ``zeta``, ``eta`` (any broadcastable shape) into ``(..., 4)``."""
    zeta, eta = np.broadcast_arrays(np.asarray(zeta, dtype=complex), np.asarray(eta, dtype=complex))
    return np.stack([zeta.real, zeta.imag, eta.real, eta.imag], axis=-1)


def _split(v):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 4:
        raise ValueError(f"points must have trailing dimension 4, got {v.shape}")
    zeta, eta = v[..., :2], v[..., 2:]
    return zeta, eta, np.hypot(zeta[..., 0], zeta[..., 1]), np.hypot(eta[..., 0], eta[..., 1])


def _region_codes(params, nz, ne):
    zp, eq = nz**params.p, ne**params.q
    band = BOUNDARY_BAND * np.maximum(np.maximum(zp, eq), 1e-300)
    code = np.where(zp > eq, 0, 1)
    code = np.where(np.abs(zp - eq) <= band, 2, code)
    return np.where(ne == 0, 3, code)


def region(params, v):
    """Region tag(s): interior_p, interior_q, boundary or eta_zero."""
    _, _, nz, ne = _split(v)
    tags = _TAGS[_region_codes(params, nz, ne)]
    return str(tags) if tags.ndim == 0 else tags


@dataclass(frozen=True)
class FormPoint:
    """A base point with its region tag."""

    v: np.ndarray
    tag: str

    @classmethod
    def at(cls, params, v):
        v = np.asarray(v, dtype=float).reshape(4)
        return cls(v, region(params, v))

    @property
    def singular(self):
        return self.tag in (BOUNDARY, ETA_ZERO)


def bellman_eval(params, v):
    """Value of the Bellman function; total and nonnegative."""
    _, _, nz, ne = _split(v)
    p, q, d = params.p, params.q, params.delta
    zp, eq = nz**p, ne**q
    low = zp <= eq
    with np.errstate(divide="ignore", invalid="ignore"):
        q_branch = nz**2 * np.where(ne > 0, ne ** (2 - q), 0.0)
    p_branch = (2 / p) * zp + (2 / q - 1) * eq
    return zp + eq + d * np.where(low, q_branch, p_branch)


def bellman_real_grad(params, v):
    """Real gradient ``(d/dzeta1, d/dzeta2, d/deta1, d/deta2)``."""
    zeta, eta, nz, ne = _split(v)
    p, q, d = params.p, params.q, params.delta
    low = (nz**p <= ne**q)[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        zp2 = np.where(nz > 0, nz ** (p - 2), 1.0 if p == 2 else 0.0)[..., None]
        eq2 = np.where(ne > 0, ne ** (q - 2), 0.0)[..., None]
        e2q = np.where(ne > 0, ne ** (2 - q), 0.0)[..., None]
        emq = np.where(ne > 0, ne ** (-q), 0.0)[..., None]
    nz2 = (nz**2)[..., None]
    gz_low = (p * zp2 + 2 * d * e2q) * zeta
    ge_low = (q * eq2 + d * (2 - q) * nz2 * emq) * eta
    gz_high = (p + 2 * d) * zp2 * zeta
    ge_high = (q + d * (2 - q)) * eq2 * eta
    gz = np.where(low, gz_low, gz_high)
    ge = np.where(low, ge_low, ge_high)
    return np.concatenate([gz, ge], axis=-1)


def bellman_grad(params, v):
    """Wirtinger derivatives ``(d_zeta Q, d_eta Q)``, ``d_zeta = (d_1 - i d_2)/2``."""
    g = bellman_real_grad(params, v)
    return 0.5 * (g[..., 0] - 1j * g[..., 1]), 0.5 * (g[..., 2] - 1j * g[..., 3])


def branch_gradients(params, v):
    """Real gradients of the ``p`` and ``q`` branch formulas, each extended to all ``v``.

    On the branch boundary both must agree (the function is C^1 there).
    """
    zeta, eta, nz, ne = _split(v)
    p, q, d = params.p, params.q, params.delta
    zp2 = (nz ** (p - 2))[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        eq2 = (ne ** (q - 2))[..., None]
        e2q = (ne ** (2 - q))[..., None]
        emq = (ne ** (-q))[..., None]
    nz2 = (nz**2)[..., None]
    grad_q = np.concatenate([(p * zp2 + 2 * d * e2q) * zeta, (q * eq2 + d * (2 - q) * nz2 * emq) * eta], axis=-1)
    grad_p = np.concatenate([(p + 2 * d) * zp2 * zeta, (q + d * (2 - q)) * eq2 * eta], axis=-1)
    return grad_p, grad_q


def estimate_margins(params, v):
    """Margins and scales of the value and derivative bounds.

    Returns a dict ``name -> (margin, scale)`` for

    * ``value``: ``0 <= Q <= (1 + delta)(|zeta|^p + |eta|^q)`` (worse side),
    * ``d_zeta``: ``2|d_zeta Q| <= (p + 2 delta) max(|zeta|^(p-1), |eta|)``,
    * ``d_eta``: ``2|d_eta Q| <= (q + (2 - q) delta) |eta|^(q-1)``.
    """
    _, _, nz, ne = _split(v)
    p, q, d = params.p, params.q, params.delta
    val = bellman_eval(params, v)
    cap = (1 + d) * (nz**p + ne**q)
    value = (np.minimum(val, cap - val), np.abs(val) + cap)
    gz, ge = bellman_grad(params, v)
    bz = (p + 2 * d) * np.maximum(nz ** (p - 1), ne)
    be = (q + (2 - q) * d) * ne ** (q - 1)
    return {
        "value": value,
        "d_zeta": (bz - 2 * np.abs(gz), bz + 2 * np.abs(gz)),
        "d_eta": (be - 2 * np.abs(ge), be + 2 * np.abs(ge)),
    }


class PowerFunction:
    """``F_r(s) = |s|^r`` on ``R^2``."""

    def __init__(self, r):
        self.r = float(r)

    def __repr__(self):
        return f"PowerFunction({self.r:g})"

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.hypot(s[..., 0], s[..., 1]) ** self.r

    def singular(self, s):
        s = np.asarray(s, dtype=float)
        if self.r >= 2:
            return np.zeros(s.shape[:-1], dtype=bool)
        return np.hypot(s[..., 0], s[..., 1]) == 0

    def hessian(self, s):
        """``r|s|^{r-2} I + r(r-2)|s|^{r-4} s s^T``; ``inf`` at 0 when ``r < 2``."""
        s = np.asarray(s, dtype=float)
        r = self.r
        ns = np.hypot(s[..., 0], s[..., 1])
        pos = ns > 0
        safe = np.where(pos, ns, 1.0)
        u = s / safe[..., None]
        u = np.where(pos[..., None], u, 0.0)
        if r > 2:
            mag = np.where(pos, safe ** (r - 2), 0.0)
        elif r == 2:
            mag = np.ones_like(ns)
        else:
            mag = np.where(pos, safe ** (r - 2), np.inf)
        eye = np.eye(2)
        core = r * eye + r * (r - 2) * u[..., :, None] * u[..., None, :]
        with np.errstate(invalid="ignore"):
            return mag[..., None, None] * core


class TensorPower:
    """``(F_2 (x) F_{2-r})(zeta, eta) = |zeta|^2 |eta|^{2-r}`` on ``R^4``, ``1 < r < 2``."""

    def __init__(self, r):
        self.r = float(r)

    def __repr__(self):
        return f"TensorPower({self.r:g})"

    def __call__(self, v):
        _, _, nz, ne = _split(v)
        return nz**2 * ne ** (2 - self.r)

    def singular(self, v):
        _, _, _, ne = _split(v)
        return ne == 0

    def hessian(self, v):
        zeta, eta, nz, ne = _split(v)
        r = self.r
        with np.errstate(divide="ignore", invalid="ignore"):
            H = np.zeros(np.shape(v)[:-1] + (4, 4))
            H[..., :2, :2] = 2 * (ne ** (2 - r))[..., None, None] * np.eye(2)
            H[..., 2:, 2:] = (nz**2)[..., None, None] * PowerFunction(2 - r).hessian(eta)
            mixed = 2 * (2 - r) * (ne ** (-r))[..., None, None] * zeta[..., :, None] * eta[..., None, :]
        H[..., :2, 2:] = mixed
        H[..., 2:, :2] = np.swapaxes(mixed, -1, -2)
        return H


def hessian_with_mask(params, v):
    """Hessian of the Bellman function and the mask of singular points.

    Singular points (boundary band or ``eta = 0``) get a zero Hessian.
    """
    v = np.asarray(v, dtype=float)
    zeta, eta, nz, ne = _split(v)
    code = _region_codes(params, nz, ne)
    singular = code >= 2
    # keep the arithmetic finite at masked points
    safe_eta = np.where(singular[..., None], np.array([1.0, 0.0]), eta)
    vs = np.concatenate([zeta, safe_eta], axis=-1)
    p, q, d = params.p, params.q, params.delta
    Fp, Fq = PowerFunction(p), PowerFunction(q)
    Hz, He = Fp.hessian(zeta), Fq.hessian(safe_eta)
    H = np.zeros(v.shape[:-1] + (4, 4))
    hp = code == 0
    cz = np.where(hp, 1 + 2 * d / p, 1.0)[..., None, None]
    ce = np.where(hp, 1 + d * (1 - 2 / p), 1.0)[..., None, None]
    H[..., :2, :2] = cz * Hz
    H[..., 2:, 2:] = ce * He
    if q < 2:
        T = TensorPower(q).hessian(vs)
        H = H + np.where((code == 1)[..., None, None], d * T, 0.0)
    else:
        # p = q = 2: F_2 (x) F_0 has Hessian diag(2I, 0)
        H[..., :2, :2] += np.where((code == 1)[..., None, None], 2 * d * np.eye(2), 0.0)
    H = np.where(singular[..., None, None], 0.0, H)
    return H, singular


def bellman_hessian(params, v):
    """Pointwise Hessian, a symmetric ``(..., 4, 4)`` array.

    Raises
    ------
    SingularSetError
        If any point lies in the boundary band or has ``eta = 0``.
    """
    H, singular = hessian_with_mask(params, v)
    if np.any(singular):
        raise SingularSetError("Bellman Hessian requested on the singular set")
    return H


def _bump(t):
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def bump_rule(eps, points=8):
    """Tensor Gauss-Legendre rule for the mollifier on ``[-eps, eps]^4``.

    The mollifier is ``prod_i phi(x_i/eps)`` with ``phi(t) = exp(-1/(1-t^2))``,
    normalized so the discrete weights sum to one.  An even point count keeps
    the nodes off the centre, so a base point on ``eta = 0`` never lands a
    node on the singular set.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x, w = leggauss(points)
    w1 = w * _bump(x)
    w1 = w1 / w1.sum()
    grids = np.meshgrid(*([x] * 4), indexing="ij")
    nodes = eps * np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.einsum("i,j,k,l->ijkl", w1, w1, w1, w1).ravel()
    return nodes, weights


def mollified_form(params, C, v, omega, eps, points=8):
    """Hessian form of the mollified Bellman function, pair ``(C, C*)``.

    ``sum_k w_k H_Q[v - v'_k; omega]`` over the bump rule; nodes on the
    singular set are dropped.  ``omega`` has shape ``(4, n)`` with rows
    ``alpha1, alpha2, beta1, beta2``.
    """
    C = np.asarray(C)
    K = direction_gram([C, np.conj(C).T], omega)
    nodes, weights = bump_rule(eps, points)
    H, singular = hessian_with_mask(params, np.asarray(v, dtype=float) - nodes)
    vals = np.einsum("kab,ab->k", H, K)
    return float(np.sum(np.where(singular, 0.0, weights * vals)))
