"""Holomorphic multipliers ``m(M)(I - P)`` by resolvent contour quadrature."""
from dataclasses import dataclass, field
import math

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..errors import NumericalError, SectorError

__all__ = [
    "Multiplier",
    "constant",
    "rational",
    "imaginary_power",
    "exp_sector",
    "product",
    "Tabulated",
    "from_config",
    "SectorContour",
    "spectral_angle",
    "multiplier_apply",
    "multiplier_eig",
    "sector_sup",
    "contour_samples",
    "default_contour",
    "CROUZEIX_DELYON",
]

CROUZEIX_DELYON = 2 + 2 / math.sqrt(3)


@dataclass(frozen=True)
class Multiplier:
    """A named holomorphic function on a sector about the positive axis."""

    name: str
    func: object = field(repr=False, compare=False)

    def __call__(self, z):
        return self.func(np.asarray(z, dtype=complex))


def constant(c=1.0):
    return Multiplier(f"constant({c:g})", lambda z: np.full_like(z, complex(c)))


def rational(a, b):
    """``z^a / (1 + z)^b``, principal branches."""
    return Multiplier(f"rational({a:g},{b:g})", lambda z: z**a / (1 + z) ** b)


def imaginary_power(s):
    """``z^{is} = exp(i s log z)``; ``|z^{is}| = e^{-s arg z}``."""
    return Multiplier(f"imaginary_power({s:g})", lambda z: np.exp(1j * s * np.log(z)))


def exp_sector(c):
    return Multiplier(f"exp_sector({c:g})", lambda z: np.exp(-c * z))


def product(*ms):
    def f(z):
        out = np.ones_like(z)
        for m in ms:
            out = out * m(z)
        return out

    return Multiplier("*".join(m.name for m in ms), f)


_BUILTINS = {"constant": constant, "rational": rational, "imaginary_power": imaginary_power, "exp_sector": exp_sector}


def from_config(entry):
    """Build a multiplier from ``{"name": ..., "args": [...]}`` or a list of those (product)."""
    if isinstance(entry, (list, tuple)):
        return product(*(from_config(s) for s in entry))
    try:
        make = _BUILTINS[entry["name"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"unknown multiplier {entry!r}; choose from {sorted(_BUILTINS)}") from exc
    return make(*entry.get("args", []))


@dataclass(frozen=True)
class Tabulated:
    """Samples ``m(z_k)`` at the vertices of a closed polygon, counterclockwise.

    Integrated with the trapezoid rule along the polygon edges.  Its sup norm
    is only known on the samples, so :meth:`sup_estimate` is an estimate.
    """

    z: np.ndarray
    values: np.ndarray

    def sup_estimate(self):
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class SectorContour:
    """Boundary of ``{r_min <= |z| <= r_max, |arg z| <= phi}``, counterclockwise."""

    phi: float
    r_min: float
    r_max: float

    def pieces(self):
        """Four parametrizations ``t in [-1, 1] -> (z, dz/dt)``."""
        phi, a, b = self.phi, self.r_min, self.r_max
        e = np.exp(1j * phi)
        mid, half = (a + b) / 2, (b - a) / 2

        def outer(t):
            ang = phi * t
            return b * np.exp(1j * ang), 1j * phi * b * np.exp(1j * ang)

        def upper(t):  # r_max -> r_min along angle +phi
            return (mid - half * t) * e, -half * e * np.ones_like(t)

        def inner(t):  # +phi -> -phi at r_min
            ang = -phi * t
            return a * np.exp(1j * ang), -1j * phi * a * np.exp(1j * ang)

        def lower(t):  # r_min -> r_max along angle -phi
            return (mid + half * t) * np.conj(e), half * np.conj(e) * np.ones_like(t)

        return [outer, upper, inner, lower]

    def nodes(self, panels, order=16):
        """Quadrature nodes ``z`` and complex weights ``w`` (``dz`` included)."""
        x, wx = leggauss(order)
        edges = np.linspace(-1, 1, panels + 1)
        h = np.diff(edges) / 2
        t = (edges[:-1, None] + h[:, None] * (x[None, :] + 1)).ravel()
        wt = (h[:, None] * wx[None, :]).ravel()
        zs, ws = [], []
        for piece in self.pieces():
            z, dz = piece(t)
            zs.append(z)
            ws.append(wt * dz)
        return np.concatenate(zs), np.concatenate(ws)

    def distance_to(self, lam):
        """Smallest distance from points ``lam`` to the contour."""
        lam = np.asarray(lam, dtype=complex)
        r, ang = np.abs(lam), np.abs(np.angle(lam))
        d = []
        for rad in (self.r_min, self.r_max):
            on_arc = ang <= self.phi
            d.append(np.where(on_arc, np.abs(r - rad), np.abs(lam - rad * np.exp(1j * self.phi * np.sign(lam.imag)))))
        for sgn in (1, -1):
            e = np.exp(1j * sgn * self.phi)
            s = np.clip(np.real(lam * np.conj(e)), self.r_min, self.r_max)
            d.append(np.abs(lam - s * e))
        return float(np.min(d))


def _nonzero_spectrum(op):
    lam = op.eigenvalues()
    k = int(np.argmin(np.abs(lam)))
    return np.delete(lam, k)


def spectral_angle(op):
    """``max |arg lambda|`` over the eigenvalues of ``M`` on mean-zero polynomials."""
    return float(np.max(np.abs(np.angle(_nonzero_spectrum(op)))))


def default_contour(op, theta_m):
    lam = _nonzero_spectrum(op)
    omega = float(np.max(np.abs(np.angle(lam))))
    if not theta_m > omega:
        raise SectorError(f"theta_m={theta_m:.6g} must exceed the spectral angle {omega:.6g}")
    return SectorContour(phi=(omega + theta_m) / 2, r_min=0.5 * np.min(np.abs(lam)), r_max=2 * np.max(np.abs(lam)))


def _contour_sum(M, z, w, mvals, chunk=512):
    n = M.shape[0]
    X = np.zeros((n, n), dtype=complex)
    eye = np.eye(n)
    for k in range(0, len(z), chunk):
        sl = slice(k, k + chunk)
        R = np.linalg.solve(z[sl, None, None] * eye - M, np.broadcast_to(eye, (len(z[sl]), n, n)))
        X += np.einsum("k,kij->ij", w[sl] * mvals[sl], R)
    return X / (2j * math.pi)


def multiplier_apply(op, m, theta_m, contour=None, tol=1e-8, fail_tol=1e-6, max_panels=256, return_info=False):
    """``m(M)(I - P)`` by ``(1/2 pi i) oint m(z) (zI - M)^{-1} dz``.

    The contour (default: an annular sector of half-angle halfway between
    the spectral angle and ``theta_m``) encloses every nonzero eigenvalue and
    excludes 0.  Composite Gauss-Legendre panels are doubled until two
    successive results agree to ``tol`` (relative); if they still differ by
    more than ``fail_tol`` at ``max_panels`` a :class:`NumericalError` is raised.

    ``m`` may be a :class:`Multiplier` or a :class:`Tabulated` polygon.
    """
    M = np.asarray(op.M)
    lam = _nonzero_spectrum(op)
    if isinstance(m, Tabulated):
        z = np.asarray(m.z, dtype=complex)
        if np.min(np.abs(z[:, None] - np.append(lam, 0)[None, :])) < 1e-12 * np.max(np.abs(lam)):
            raise SectorError("tabulated contour passes through the spectrum")
        zc = np.append(z, z[0])
        mc = np.append(m.values, m.values[0])
        dz = np.diff(zc)
        w = np.zeros(len(zc), dtype=complex)
        w[:-1] += dz / 2
        w[1:] += dz / 2
        X = _contour_sum(M, zc, w, mc)
        return (X, {"panels": None, "change": None}) if return_info else X

    contour = contour or default_contour(op, theta_m)
    if contour.distance_to(np.append(lam, 0)) < 1e-10 * max(1.0, contour.r_max):
        raise SectorError("contour passes through the spectrum; move it")
    panels, prev, change = 4, None, math.inf
    while panels <= max_panels:
        z, w = contour.nodes(panels)
        X = _contour_sum(M, z, w, m(z))
        if prev is not None:
            change = np.linalg.norm(X - prev) / max(1.0, np.linalg.norm(X))
            if change < tol:
                break
        prev = X
        panels *= 2
    else:
        if change > fail_tol:
            raise NumericalError(f"contour quadrature did not converge: successive change {change:.2e}")
    info = {"panels": panels, "change": float(change), "contour": contour}
    return (X, info) if return_info else X


def multiplier_eig(op, m, cond_max=1e6):
    """``V diag(m(lambda)) V^{-1}`` with the null eigenvalue dropped; ``None`` if ``cond(V) >= cond_max``."""
    lam, V = np.linalg.eig(op.M)
    if np.linalg.cond(V) >= cond_max:
        return None
    k = int(np.argmin(np.abs(lam)))
    vals = np.zeros(len(lam), dtype=complex)
    keep = np.arange(len(lam)) != k
    vals[keep] = m(lam[keep])
    return (V * vals) @ np.linalg.inv(V)


def sector_sup(m, theta, points=4001, r_range=(1e-8, 1e8)):
    """``max |m|`` on the rays ``arg z = +-theta`` (log-spaced radii)."""
    r = np.geomspace(*r_range, points)
    vals = [np.max(np.abs(m(r * np.exp(1j * s * theta)))) for s in (1, -1)]
    return float(max(vals))


def contour_samples(op, m, theta_m, count=2000):
    """Vertices of the default contour with ``m`` sampled there: a ready :class:`Tabulated`."""
    c = default_contour(op, theta_m)
    t = np.linspace(-1, 1, count // 4, endpoint=False)
    z = np.concatenate([piece(t)[0] for piece in c.pieces()])
    return Tabulated(z=z, values=m(z))
