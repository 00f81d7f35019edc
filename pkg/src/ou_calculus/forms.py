"""Doubled Hessian forms and their certified lower bounds.

For ``Psi: R^2 -> R``, a complex ``n x n`` matrix ``D`` and ``xi = (xi1, xi2)``
with ``xi_i in R^n``::

    H^D_Psi[s; xi] = <(Hess(Psi; s) (x) I_n) xi, M(D) xi>

and for ``Phi: R^4 -> R`` the paired form ``H^{(D,E)}_Phi[v; omega]`` uses
``M(D) (+) M(E)`` on ``omega = (alpha1, alpha2, beta1, beta2)``.  Directions
are stored as arrays of shape ``(..., 2, n)`` and ``(..., 4, n)``.

The ``verify_*`` functions sample inputs from a fixed, seeded mixture (see
:func:`sample_base_points` and :func:`sample_directions`) and report the
worst normalized margin of each inequality.
"""
from dataclasses import dataclass, field, asdict
import math

import numpy as np

from . import linalg
from .bellman import (
    BellmanParams,
    branch_gradients,
    estimate_margins,
    PowerFunction,
    TensorPower,
    hessian_with_mask,
    mollified_form,
)
from .errors import SectorError
from .oumodel import AngleSet, delta_contraction
from .rng import substream

__all__ = [
    "hessian_form",
    "hessian_form_pair",
    "hessian_form_kron",
    "power_form_closed",
    "MarginReport",
    "ConvexityCertificate",
    "sample_base_points",
    "sample_bellman_points",
    "sample_directions",
    "normalized_margin",
    "verify_bellman_estimates",
    "verify_boundary_c1",
    "verify_power_sector",
    "delta_max",
    "choose_delta",
    "verify_main_convexity",
    "verify_convexity_chain",
    "verify_mollified_convexity",
    "rotations",
]

TOL = 1e-9
_EPS = np.finfo(float).eps


def _hessians(psi, points):
    if isinstance(psi, BellmanParams):
        H, singular = hessian_with_mask(psi, points)
        return H, singular
    H = psi.hessian(points)
    return H, psi.singular(points)


def hessian_form(psi, D, s, xi, return_scale=False):
    """``H^D_Psi[s; xi]`` for one or many base points.

    Parameters
    ----------
    psi : PowerFunction or any object with ``hessian(s) -> (..., 2, 2)``
    D : (n, n) complex array
    s : (..., 2) array
    xi : (..., 2, n) array
    return_scale : bool
        Also return ``sum_ab |Hess_ab| |K|_ab``, a bound on the magnitude of
        the summed terms (used to set rounding floors).
    """
    s = np.asarray(s, dtype=float)
    H = psi.hessian(s)
    if hasattr(psi, "singular") and np.any(psi.singular(s)):
        raise _singular()
    K = linalg.direction_gram([D], xi)
    val = np.einsum("...ab,...ab->...", H, K)
    if return_scale:
        Kabs = linalg.direction_gram_abs([D], xi)
        return val, np.einsum("...ab,...ab->...", np.abs(H), Kabs)
    return val


def _singular():
    from .errors import SingularSetError

    return SingularSetError("base point lies on the singular set of the function")


def hessian_form_pair(phi, D, E, v, omega, return_scale=False):
    """``H^{(D,E)}_Phi[v; omega]``; ``phi`` is a :class:`BellmanParams`, :class:`TensorPower`, ..."""
    v = np.asarray(v, dtype=float)
    H, singular = _hessians(phi, v)
    if np.any(singular):
        raise _singular()
    K = linalg.direction_gram([D, E], omega)
    val = np.einsum("...ab,...ab->...", H, K)
    if return_scale:
        Kabs = linalg.direction_gram_abs([D, E], omega)
        return val, np.einsum("...ab,...ab->...", np.abs(H), Kabs)
    return val


def hessian_form_kron(hess, blocks, omega):
    """Literal ``<(Hess (x) I) omega, (M(D_1) (+) ...) omega>`` for one point.

    Independent of :func:`linalg.direction_gram`; used as a cross-check.
    """
    omega = np.asarray(omega, dtype=float)
    n = omega.shape[-1]
    big = np.kron(np.asarray(hess), np.eye(n))
    W = np.zeros((omega.shape[0] * n,) * 2)
    for j, D in enumerate(blocks):
        sl = slice(2 * j * n, (2 * j + 2) * n)
        W[sl, sl] = linalg.doubling(D)
    w = omega.reshape(-1)
    return float((big @ w) @ (W @ w))


def power_form_closed(B, r, z, xi):
    """Closed forms of ``(H^B_{F_r}, H^{iB}_{F_r})`` at ``s = (Re z, Im z)``.

    With ``x = Re(conj(z) xi)``, ``y = Im(conj(z) xi)``::

        H^B  =  r |z|^{r-4} (<B_s y, y> + (r-1) <B_s x, x>)
        H^iB = -r |z|^{r-4} <((r-2) B_s + r B_a) y, x>

    ``B`` must be real; ``z`` is complex ``(...)``, ``xi`` complex ``(..., n)``.
    """
    B = linalg.as_square(B, "B")
    if np.iscomplexobj(B) and np.any(np.imag(B)):
        raise ValueError("closed forms need a real B")
    B = np.real(B)
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("z must be nonzero")
    Bs, Ba = (B + B.T) / 2, (B - B.T) / 2
    w = np.conj(z)[..., None] * np.asarray(xi, dtype=complex)
    x, y = w.real, w.imag
    pre = r * np.abs(z) ** (r - 4)
    first = pre * (np.einsum("...i,ij,...j->...", y, Bs, y) + (r - 1) * np.einsum("...i,ij,...j->...", x, Bs, x))
    T = (r - 2) * Bs + r * Ba
    second = -pre * np.einsum("...i,ij,...j->...", x, T, y)
    return first, second


# ---------------------------------------------------------------------------
# sampling


def _unit2(rng, count):
    phi = rng.uniform(0, 2 * np.pi, count)
    return np.stack([np.cos(phi), np.sin(phi)], axis=-1)


def _radii(rng, count, lo=1e-3, hi=1e3):
    """Mixture: log-uniform on [lo, hi], chi(2), and clipped Cauchy."""
    kind = rng.integers(0, 3, count)
    logu = np.exp(rng.uniform(np.log(lo), np.log(hi), count))
    chi = np.hypot(rng.standard_normal(count), rng.standard_normal(count))
    cauchy = np.clip(np.abs(rng.standard_cauchy(count)), lo, hi)
    return np.choose(kind, [logu, chi, cauchy])


def sample_base_points(rng, count):
    """Points of ``R^2 \\ {0}`` with heavy-tailed radii."""
    return _radii(rng, count)[:, None] * _unit2(rng, count)


def sample_directions(rng, count, n, rows):
    """Direction tuples of shape ``(count, rows, n)``.

    Each row is Gaussian with a per-row scale, log-uniform on
    ``[1e-2, 1e2]``, and a per-entry log-normal factor, so rows of very
    different size and strongly anisotropic rows both occur.  One sample in
    ten gets one row set to zero.
    """
    g = rng.standard_normal((count, rows, n))
    row_scale = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), (count, rows, 1)))
    entry = np.exp(0.75 * rng.standard_normal((count, rows, n)))
    out = g * row_scale * entry
    kill = rng.random(count) < 0.1
    which = rng.integers(0, rows, count)
    out[kill, which[kill], :] = 0.0
    return out


def sample_bellman_points(rng, count, p):
    """Points of ``R^4`` exercising both branches, the boundary and tiny ``|eta|``.

    Mixture of four equally likely kinds:

    * independent ``|zeta|``, ``|eta|`` with heavy-tailed radii;
    * near the branch boundary: ``|zeta|^p = |eta|^q exp(+-10^u)``,
      ``u ~ U[-7, -1]`` (outside the singular band);
    * tiny ``|eta|`` (log-uniform on ``[1e-8, 1e-3]``);
    * deep in the ``q`` branch: ``|zeta|^p = |eta|^q * U[1e-6, 1]``.
    """
    q = p / (p - 1)
    kind = rng.integers(0, 4, count)
    ne = _radii(rng, count)
    nz = _radii(rng, count)
    u = 10.0 ** rng.uniform(-7, -1, count) * rng.choice([-1.0, 1.0], count)
    near = (ne**q * np.exp(u)) ** (1 / p)
    tiny = np.exp(rng.uniform(np.log(1e-8), np.log(1e-3), count))
    deep = (ne**q * np.exp(rng.uniform(np.log(1e-6), 0, count))) ** (1 / p)
    nz = np.choose(kind, [nz, near, nz, deep])
    ne = np.where(kind == 2, tiny, ne)
    return np.concatenate([nz[:, None] * _unit2(rng, count), ne[:, None] * _unit2(rng, count)], axis=-1)


# ---------------------------------------------------------------------------
# reports


def normalized_margin(margin, scale, term_sum, tol=TOL):
    """``margin / (scale + floor)``.

    ``floor = 64 eps term_sum / tol`` is the machine floor: the scale below
    which a relative tolerance ``tol`` would be finer than the rounding
    accumulated while summing the form's terms.
    """
    floor = 64 * _EPS * np.asarray(term_sum) / tol + np.finfo(float).tiny
    return np.asarray(margin) / (np.asarray(scale) + floor)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


@dataclass
class MarginReport:
    """Worst normalized margin of one inequality over a sample."""

    name: str
    anchor: str
    count: int
    worst: float
    tolerance: float = TOL
    witness: dict = field(default_factory=dict)
    note: str = ""

    @property
    def passed(self):
        return bool(self.worst >= -self.tolerance)

    def to_dict(self):
        d = asdict(self)
        d["witness"] = {k: _jsonable(v) for k, v in self.witness.items()}
        d["passed"] = self.passed
        return d


def _worst(name, anchor, normed, witness_arrays, note=""):
    normed = np.asarray(normed, dtype=float).ravel()
    if normed.size == 0:
        return MarginReport(name, anchor, 0, float("inf"), note=note or "no admissible samples")
    k = int(np.argmin(normed))
    witness = {key: np.asarray(val)[k] for key, val in witness_arrays.items()}
    return MarginReport(name, anchor, int(normed.size), float(normed[k]), witness=witness, note=note)


def verify_bellman_estimates(params, samples, seed, chunk=250_000):
    """Worst normalized margins of the value and first-derivative bounds."""
    worst = {}
    done, part = 0, 0
    while done < samples:
        m = min(chunk, samples - done)
        v = sample_bellman_points(substream(seed, f"estimates:{params.p}:{params.delta}", part), m, params.p)
        for key, (margin, scale) in estimate_margins(params, v).items():
            normed = margin / (scale + np.finfo(float).tiny)
            k = int(np.argmin(normed))
            if key not in worst or normed[k] < worst[key][0]:
                worst[key] = (float(normed[k]), v[k])
        done += m
        part += 1
    return [
        MarginReport(f"bellman_{key}[p={params.p:g}, delta={params.delta:g}]", "bellman-estimates", int(samples), w, witness={"v": x})
        for key, (w, x) in worst.items()
    ]


def verify_boundary_c1(params, points, seed, tol=1e-8):
    """Largest relative gap between the two branch gradients on ``|zeta|^p = |eta|^q``."""
    rng = substream(seed, f"boundary:{params.p}", 0)
    ne = _radii(rng, points)
    nz = ne ** (params.q / params.p)
    v = np.concatenate([nz[:, None] * _unit2(rng, points), ne[:, None] * _unit2(rng, points)], axis=-1)
    gp, gq = branch_gradients(params, v)
    gap = np.linalg.norm(gp - gq, axis=-1) / (np.linalg.norm(gp, axis=-1) + np.linalg.norm(gq, axis=-1))
    k = int(np.argmax(gap))
    return MarginReport(
        f"boundary_c1[p={params.p:g}, delta={params.delta:g}]",
        "bellman-c1-boundary",
        int(points),
        float(-gap[k]),
        tolerance=tol,
        witness={"v": v[k]},
    )


def rotations(B, theta):
    """The four matrices ``e^{+-i theta} B`` and ``e^{+-i theta} B*``."""
    B = np.asarray(B, dtype=complex)
    Bh = np.conj(B).T
    e = np.exp(1j * theta)
    return {"e+B": e * B, "e-B": np.conj(e) * B, "e+B*": e * Bh, "e-B*": np.conj(e) * Bh}


def verify_power_sector(B, r, samples, seed, name="power_sector"):
    """Check ``|H^{iB}_{F_r}| <= cot(theta_r) H^B_{F_r}`` for ``B`` and ``B*``.

    The margin ``cot(theta_r) H^B - |H^{iB}|`` is normalized by
    ``cot(theta_r) |H^B| + |H^{iB}|`` plus the machine floor.  Returns one
    :class:`MarginReport` per matrix.
    """
    B = np.asarray(B)
    th = linalg.numerical_range_angle(B)
    theta_r = AngleSet(th).theta_r(r)
    cot = 1.0 / math.tan(theta_r)
    n = B.shape[0]
    F = PowerFunction(r)
    reports = []
    for label, M in (("B", B), ("B*", np.conj(B).T)):
        rng = substream(seed, f"{name}:{label}:{r}", 0)
        s = sample_base_points(rng, samples)
        xi = sample_directions(rng, samples, n, 2)
        hb, sb = hessian_form(F, M, s, xi, return_scale=True)
        hi, si = hessian_form(F, 1j * M, s, xi, return_scale=True)
        margin = cot * hb - np.abs(hi)
        normed = normalized_margin(margin, cot * np.abs(hb) + np.abs(hi), cot * sb + si)
        reports.append(
            _worst(
                f"{name}[{label}, r={r:g}]",
                "power-sector",
                normed,
                {"s": s, "xi": xi, "H_B": hb, "H_iB": hi},
            )
        )
    return reports


# ---------------------------------------------------------------------------
# delta / a0 construction


def _delta_ingredients(p, theta2star, theta):
    p = float(p)
    if p < 2:
        raise ValueError("p must be >= 2")
    q = p / (p - 1)
    angles = AngleSet(theta2star)
    theta_p = angles.theta_r(p)
    if not 0 <= theta < theta_p:
        raise SectorError(f"theta={theta:.6g} must lie in [0, theta_p={theta_p:.6g})")
    c = 1 + math.tan(angles.theta2star)
    d2 = delta_contraction(2, theta, angles.theta2star)
    dq = delta_contraction(q, theta, angles.theta2star)
    return q, c, d2, dq


def delta_max(p, theta2star, theta):
    """Supremum of ``delta`` keeping the ``2 x 2`` convexity matrix positive definite.

    The matrix is ``[[d D2, 2 d c (q-2)], [2 d c (q-2), (q Dq - 2 d c)(q-1)/2]]``
    with ``c = 1 + tan(theta2*)``, ``D2 = Delta(2, theta)``, ``Dq = Delta(q, theta)``.
    Its determinant is positive iff
    ``d < D2 q Dq (q-1) / (2 (D2 c (q-1) + 4 c^2 (q-2)^2))``.
    """
    q, c, d2, dq = _delta_ingredients(p, theta2star, theta)
    return d2 * q * dq * (q - 1) / (2 * (d2 * c * (q - 1) + 4 * c * c * (q - 2) ** 2))


def convexity_matrix(p, theta2star, theta, delta):
    q, c, d2, dq = _delta_ingredients(p, theta2star, theta)
    off = 2 * delta * c * (q - 2)
    return np.array([[delta * d2, off], [off, (q * dq - 2 * delta * c) * (q - 1) / 2]])


def a0_constant(p, theta2star, theta, delta):
    """``a0 = sqrt(2 delta q (q-1)) Delta(q, theta)``."""
    q, _, _, dq = _delta_ingredients(p, theta2star, theta)
    return math.sqrt(2 * delta * q * (q - 1)) * dq


def choose_delta(p, theta2star, theta, fraction=0.9, cap=0.99):
    """Pick ``delta = min(fraction * delta_max, cap)`` and the matching ``a0``."""
    delta = min(fraction * delta_max(p, theta2star, theta), cap)
    return delta, a0_constant(p, theta2star, theta, delta)


@dataclass
class ConvexityCertificate:
    p: float
    theta2star: float
    theta: float
    delta: float
    a0: float
    samples: int
    worst_margin: float
    worst_witness: dict
    variants: dict
    tolerance: float = TOL

    @property
    def verdict(self):
        return bool(self.worst_margin >= -self.tolerance)

    def a0_recomputed(self):
        q = self.p / (self.p - 1)
        return math.sqrt(2 * self.delta * q * (q - 1)) * delta_contraction(q, self.theta, self.theta2star)

    def to_dict(self):
        d = asdict(self)
        d["worst_witness"] = {k: _jsonable(v) for k, v in self.worst_witness.items()}
        d["verdict"] = self.verdict
        return d


def _sb_norm(S, rows):
    """``||S (rows[0] + i rows[1])||`` for a batch of row pairs."""
    return np.sqrt(np.sum((rows[..., 0, :] @ S.T) ** 2 + (rows[..., 1, :] @ S.T) ** 2, axis=-1))


def verify_main_convexity(B, p, theta, samples, seed, delta=None, a0=None, chunk=50_000):
    """Sample-certify ``H^{(C,C*)}_Q[v; omega] >= a0 ||S alpha~|| ||S beta~||``.

    ``S = B_s^{1/2}``; ``C`` runs over :func:`rotations`.  The margin is
    normalized by ``a0 ||S alpha~|| ||S beta~||`` plus the machine floor.
    Points inside the singular band are dropped.  Passing ``a0`` replaces
    the constructed constant (to probe how sharp it is).
    """
    B = np.asarray(B)
    th2 = linalg.numerical_range_angle(B).starred
    if delta is None:
        delta, a0_built = choose_delta(p, th2, theta)
    else:
        a0_built = a0_constant(p, th2, theta, delta)
    a0 = a0_built if a0 is None else float(a0)
    params = BellmanParams(p, delta)
    Bs, _ = linalg.sym_antisym(B)
    S = linalg.spd_sqrt(np.real(Bs))
    n = B.shape[0]
    worst = math.inf
    witness = {}
    variants = {}
    for label, C in rotations(B, theta).items():
        blocks = [C, np.conj(C).T]
        vworst, vwit = math.inf, {}
        done, part = 0, 0
        while done < samples:
            m = min(chunk, samples - done)
            rng = substream(seed, f"convexity:{label}", part)
            v = sample_bellman_points(rng, m, p)
            omega = sample_directions(rng, m, n, 4)
            H, singular = hessian_with_mask(params, v)
            keep = ~singular
            v, omega, H = v[keep], omega[keep], H[keep]
            K = linalg.direction_gram(blocks, omega)
            Kabs = linalg.direction_gram_abs(blocks, omega)
            form = np.einsum("kab,kab->k", H, K)
            terms = np.einsum("kab,kab->k", np.abs(H), Kabs)
            bound = a0 * _sb_norm(S, omega[:, :2]) * _sb_norm(S, omega[:, 2:])
            normed = normalized_margin(form - bound, bound, terms)
            if normed.size:
                k = int(np.argmin(normed))
                if normed[k] < vworst:
                    vworst = float(normed[k])
                    vwit = {"v": v[k], "omega": omega[k], "form": form[k], "bound": bound[k]}
            done += m
            part += 1
        variants[label] = vworst
        if vworst < worst:
            worst, witness = vworst, dict(vwit, variant=label)
    return ConvexityCertificate(
        p=float(p),
        theta2star=th2,
        theta=float(theta),
        delta=delta,
        a0=a0,
        samples=int(samples),
        worst_margin=worst,
        worst_witness=witness,
        variants=variants,
    )


def verify_convexity_chain(B, p, theta, samples, seed):
    """Pointwise checks of every intermediate inequality behind the convexity bound.

    Power functions are tested at ``r = p`` and ``r = q``; the ``F_{2-r}``
    statements at ``r = q`` (only meaningful when ``q < 2``).  Returns a list
    of :class:`MarginReport`.
    """
    B = np.asarray(B)
    n = B.shape[0]
    th2 = linalg.numerical_range_angle(B).starred
    angles = AngleSet(th2)
    c = 1 + math.tan(th2)
    Bs, _ = linalg.sym_antisym(B)
    S = linalg.spd_sqrt(np.real(Bs))
    q = p / (p - 1)
    reports = []
    mats = {"B": B, "B*": np.conj(B).T}
    rs = [p] if q == p else [p, q]

    for r in rs:
        F = PowerFunction(r)
        theta_r = angles.theta_r(r)
        rng = substream(seed, f"chain:{r}", 0)
        s = sample_base_points(rng, samples)
        xi = sample_directions(rng, samples, n, 2)
        thetas = rng.uniform(0, np.pi / 2, samples)
        ns = np.hypot(s[:, 0], s[:, 1])
        sxi2 = _sb_norm(S, xi) ** 2
        for label, M in mats.items():
            hb, sb = hessian_form(F, M, s, xi, return_scale=True)
            hi, si = hessian_form(F, 1j * M, s, xi, return_scale=True)
            # domination over theta in [0, pi/2]
            dom = (np.cos(thetas) - np.sin(thetas) / math.tan(theta_r)) * hb
            for sign in (1, -1):
                hrot = np.cos(thetas) * hb + sign * np.sin(thetas) * hi
                m = hrot - dom
                normed = normalized_margin(m, np.abs(hrot) + np.abs(dom), sb + si)
                reports.append(
                    _worst(f"domination[{label}, r={r:g}, {'+' if sign > 0 else '-'}]", "rotation-domination", normed, {"s": s, "xi": xi, "theta": thetas})
                )
            # lower bound of the Hessian form
            lower = min(1.0, r - 1) * r * ns ** (r - 2) * sxi2
            normed = normalized_margin(hb - lower, lower, sb)
            reports.append(_worst(f"H_Fr_lower[{label}, r={r:g}]", "power-hessian-lower", normed, {"s": s, "xi": xi}))
        # every rotation variant, theta in [0, theta_r]
        th_c = min(theta, theta_r)
        for label, C in rotations(B, th_c).items():
            hc, sc = hessian_form(F, C, s, xi, return_scale=True)
            lower = min(1.0, r - 1) * r * delta_contraction(r, th_c, th2) * ns ** (r - 2) * sxi2
            normed = normalized_margin(hc - lower, lower, sc)
            reports.append(_worst(f"H_Fr_rotated[{label}, r={r:g}]", "power-hessian-rotated", normed, {"s": s, "xi": xi}))

    if q < 2:
        r = q
        rng = substream(seed, "chain:F2-r", 0)
        s = sample_base_points(rng, samples)
        xi = sample_directions(rng, samples, n, 2)
        ns = np.hypot(s[:, 0], s[:, 1])
        # identity for a generic complex D
        D = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        lhs, sl = hessian_form(PowerFunction(2 - r), D, s, xi, return_scale=True)
        zt = xi[:, 0, :] + 1j * xi[:, 1, :]
        re_dxx = np.real(np.sum((zt @ D.T) * np.conj(zt), axis=-1))
        hr, sr = hessian_form(PowerFunction(r), D, s, xi, return_scale=True)
        rhs = -2 * (r - 1) * ns ** (-r) * re_dxx + ns ** (2 - 2 * r) * hr
        err = -np.abs(lhs - rhs)
        scale = np.abs(lhs) + np.abs(rhs)
        reports.append(
            MarginReport(
                f"F2-r_identity[r={r:g}]",
                "negative-power-identity",
                samples,
                float(np.min(err / (scale + sl + sr + np.finfo(float).tiny))),
                tolerance=1e-10,
            )
        )
        th_c = min(theta, angles.theta_r(r))
        sxi2 = _sb_norm(S, xi) ** 2
        for label, C in rotations(B, th_c).items():
            h, sh = hessian_form(PowerFunction(2 - r), C, s, xi, return_scale=True)
            lower = -2 * (r - 1) * c * ns ** (-r) * sxi2
            normed = normalized_margin(h - lower, np.abs(lower), sh)
            reports.append(_worst(f"F2-r_lower[{label}, r={r:g}]", "negative-power-lower", normed, {"s": s, "xi": xi}))

        # tensor expansion and the three-term lower bound
        rng = substream(seed, "chain:tensor", 0)
        v = sample_bellman_points(rng, samples, p)
        v = v[np.hypot(v[:, 2], v[:, 3]) > 0]
        omega = sample_directions(rng, v.shape[0], n, 4)
        zeta, eta = v[:, :2], v[:, 2:]
        nz, ne = np.hypot(zeta[:, 0], zeta[:, 1]), np.hypot(eta[:, 0], eta[:, 1])
        alpha, beta = omega[:, :2], omega[:, 2:]
        T = TensorPower(r)
        D = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        E = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        lhs, sl = hessian_form_pair(T, D, E, v, omega, return_scale=True)
        rhs = _tensor_expansion(r, D, E, zeta, eta, alpha, beta)
        err = -np.abs(lhs - rhs)
        reports.append(
            MarginReport(
                f"F2xF2-r_expansion[r={r:g}]",
                "tensor-expansion",
                int(v.shape[0]),
                float(np.min(err / (sl + np.abs(rhs) + np.finfo(float).tiny))),
                tolerance=1e-10,
            )
        )
        inside = nz ** (r / (r - 1)) < ne**r
        vv, oo = v[inside], omega[inside]
        nzi, nei = nz[inside], ne[inside]
        sa, sbeta = _sb_norm(S, oo[:, :2]), _sb_norm(S, oo[:, 2:])
        th_c = min(theta, angles.theta_r(r))
        for label, C in rotations(B, th_c).items():
            h, sh = hessian_form_pair(T, C, np.conj(C).T, vv, oo, return_scale=True)
            lower = (
                2 * delta_contraction(2, th_c, th2) * nei ** (2 - r) * sa**2
                - 2 * (r - 1) * c * nei ** (r - 2) * sbeta**2
                - 4 * (2 - r) * c * sa * sbeta
            )
            normed = normalized_margin(h - lower, np.abs(lower), sh)
            reports.append(
                _worst(f"F2xF2-r_lower[{label}, r={r:g}]", "tensor-lower", normed, {"v": vv, "omega": oo})
            )
    return reports


def _tensor_expansion(r, D, E, zeta, eta, alpha, beta):
    """Four-term expansion of ``H^{(D,E)}_{F_2 (x) F_{2-r}}``."""
    nz2 = np.sum(zeta**2, axis=-1)
    ne = np.hypot(eta[:, 0], eta[:, 1])
    h_d = hessian_form(PowerFunction(2), D, zeta, alpha)
    h_e = hessian_form(PowerFunction(2 - r), E, eta, beta)
    MD = linalg.doubling(D)
    ME = linalg.doubling(E)
    eb = eta[:, 0, None] * beta[:, 0] + eta[:, 1, None] * beta[:, 1]  # eta . beta in R^n
    za = zeta[:, 0, None] * alpha[:, 0] + zeta[:, 1, None] * alpha[:, 1]
    left = np.concatenate([zeta[:, 0, None] * eb, zeta[:, 1, None] * eb], axis=-1)
    right = np.concatenate([eta[:, 0, None] * za, eta[:, 1, None] * za], axis=-1)
    a_flat = alpha.reshape(alpha.shape[0], -1)
    b_flat = beta.reshape(beta.shape[0], -1)
    t3 = np.sum(left * (a_flat @ MD.T), axis=-1)
    t4 = np.sum(right * (b_flat @ ME.T), axis=-1)
    return ne ** (2 - r) * h_d + nz2 * h_e + 2 * (2 - r) * ne ** (-r) * (t3 + t4)


def verify_mollified_convexity(B, p, theta, points, seed, eps=1e-2, atol=1e-6, delta=None):
    """Mollified form at points of the singular set against ``a0 ||S alpha~|| ||S beta~||``.

    Half of the points have ``eta = 0``, half lie on ``|zeta|^p = |eta|^q``;
    radii are log-uniform on ``[0.1, 10]`` and each point uses one of the
    four rotated matrices in turn.  The margin is absolute, compared with
    ``-atol``.
    """
    B = np.asarray(B)
    n = B.shape[0]
    th2 = linalg.numerical_range_angle(B).starred
    if delta is None:
        delta, a0 = choose_delta(p, th2, theta)
    else:
        a0 = a0_constant(p, th2, theta, delta)
    params = BellmanParams(p, delta)
    S = linalg.spd_sqrt(np.real(linalg.sym_antisym(B)[0]))
    rng = substream(seed, f"mollified:{p}", 0)
    ne = np.exp(rng.uniform(np.log(0.1), np.log(10), points))
    on_zero = np.arange(points) % 2 == 0
    nz = np.where(on_zero, ne, ne ** (params.q / p))
    ne = np.where(on_zero, 0.0, ne)
    v = np.concatenate([nz[:, None] * _unit2(rng, points), ne[:, None] * _unit2(rng, points)], axis=-1)
    omega = rng.standard_normal((points, 4, n))
    Cs = list(rotations(B, theta).values())
    vals = np.array([mollified_form(params, Cs[k % 4], v[k], omega[k], eps) for k in range(points)])
    bound = a0 * _sb_norm(S, omega[:, :2]) * _sb_norm(S, omega[:, 2:])
    margin = vals - bound
    k = int(np.argmin(margin))
    return MarginReport(
        f"mollified[p={p:g}, theta={theta:.4g}]",
        "mollified-convexity",
        int(points),
        float(margin[k]),
        tolerance=atol,
        witness={"v": v[k], "omega": omega[k], "form": vals[k], "bound": bound[k]},
    )
