"""Complexified matrix primitives.

Matrices are plain numpy arrays.  Complex ``n x n`` matrices act on
``C^n`` with the inner product ``<z, w> = sum z_j conj(w_j)``.  A real
``2n``-vector ``a = (a1, a2)`` is identified with ``a1 + i a2``; the doubling
map below is written for that layout.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import ModelError

__all__ = [
    "SectorAngle",
    "as_square",
    "inner",
    "sym_antisym",
    "doubling",
    "is_doubled",
    "lift",
    "unlift",
    "doubled_pairing",
    "spd_sqrt",
    "spd_inv_sqrt",
    "numerical_range_angle",
    "sector_constant",
    "direction_gram",
    "direction_gram_abs",
]

# strict accretivity threshold, relative to ||B||
ACCRETIVE_RTOL = 1e-12


@dataclass(frozen=True)
class SectorAngle:
    """An angle in ``[0, pi)`` tagged with whether it is a starred angle.

    The star convention is ``theta* = pi/2 - theta``; :meth:`swap` applies it
    and is an involution.
    """

    value: float
    star: bool = False

    def __post_init__(self):
        v = float(self.value)
        if not (0.0 <= v < math.pi) or not math.isfinite(v):
            raise ValueError(f"sector angle must lie in [0, pi), got {v!r}")
        object.__setattr__(self, "value", v)

    def swap(self):
        return SectorAngle(math.pi / 2 - self.value, not self.star)

    @property
    def starred(self):
        """The starred angle, whichever form is stored."""
        return self.value if self.star else math.pi / 2 - self.value

    @property
    def unstarred(self):
        return math.pi / 2 - self.value if self.star else self.value

    def __float__(self):
        return self.value


def as_square(T, name="matrix"):
    """Validate and return ``T`` as a finite square 2-d array."""
    T = np.asarray(T)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError(f"{name} must be square, got shape {T.shape}")
    if not np.all(np.isfinite(T)):
        raise ValueError(f"{name} has non-finite entries")
    return T


def inner(z, w):
    """``<z, w> = sum z_j conj(w_j)`` over the last axis."""
    return np.sum(np.asarray(z) * np.conj(w), axis=-1)


def sym_antisym(T):
    """Return ``(T_s, T_a) = ((T + T*)/2, (T - T*)/2)``."""
    T = as_square(T)
    Th = np.conj(T).T
    return (T + Th) / 2, (T - Th) / 2


def doubling(D):
    """Real ``2n x 2n`` matrix ``[[Re D, -Im D], [Im D, Re D]]``."""
    D = as_square(D)
    re, im = np.real(D), np.imag(D)
    return np.block([[re, -im], [im, re]])


def is_doubled(M, atol=0.0):
    """Check the block pattern of a doubled matrix entrywise."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
        return False
    n = M.shape[0] // 2
    a, b, c, d = M[:n, :n], M[:n, n:], M[n:, :n], M[n:, n:]
    return np.allclose(a, d, rtol=0, atol=atol) and np.allclose(b, -c, rtol=0, atol=atol)


def lift(a):
    """Real ``(..., 2n)`` array to complex ``(..., n)`` via ``a1 + i a2``."""
    a = np.asarray(a)
    n = a.shape[-1] // 2
    return a[..., :n] + 1j * a[..., n:]


def unlift(z):
    """Inverse of :func:`lift`."""
    z = np.asarray(z)
    return np.concatenate([np.real(z), np.imag(z)], axis=-1)


def doubled_pairing(D, a, b):
    """``<M(D) a, b>`` for real ``2n``-vectors ``a`` and ``b``.

    Equal to ``Re <D a~, b~>`` with ``a~ = a1 + i a2``.
    """
    D = as_square(D)
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    n = D.shape[0]
    if a.shape[-1] != 2 * n or b.shape[-1] != 2 * n:
        raise ValueError(f"vectors must have length {2 * n}, got {a.shape[-1]} and {b.shape[-1]}")
    return np.sum((a @ doubling(D).T) * b, axis=-1)


def _sym_eigh(M, name):
    M = as_square(M, name)
    if np.iscomplexobj(M) and np.any(np.imag(M)):
        raise ValueError(f"{name} must be real")
    M = np.real(M).astype(float)
    scale = max(np.max(np.abs(M)), np.finfo(float).tiny)
    if np.max(np.abs(M - M.T)) > 1e-12 * scale:
        raise ModelError(f"{name} is not symmetric", invariant="symmetric")
    return np.linalg.eigh((M + M.T) / 2), scale


def spd_sqrt(M, tol=1e-12):
    """Symmetric square root of a symmetric positive semidefinite matrix.

    Eigenvalues below ``-tol * max|M|`` mean the input is not PSD and raise
    :class:`ModelError`; smaller negative round-off is clipped to zero.
    """
    (w, V), scale = _sym_eigh(M, "M")
    if w[0] < -tol * scale:
        raise ModelError(f"matrix is not positive semidefinite: eigenvalue {w[0]:.3e}", invariant="spd")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


def spd_inv_sqrt(M):
    (w, V), _ = _sym_eigh(M, "M")
    if w[0] <= 0:
        raise ModelError(f"matrix is not positive definite: eigenvalue {w[0]:.3e}", invariant="spd")
    return (V / np.sqrt(w)) @ V.T


def _normalized_skew(B):
    B = as_square(B, "B")
    Bs, Ba = sym_antisym(B)
    w, V = np.linalg.eigh(Bs)
    bound = ACCRETIVE_RTOL * np.linalg.norm(B, 2)
    if w[0] <= bound:
        raise ModelError(
            f"B is not strictly accretive: smallest eigenvalue of B_s is {w[0]:.3e}", invariant="accretive"
        )
    Bs_isqrt = (V / np.sqrt(w)) @ np.conj(V).T
    return Bs_isqrt @ Ba @ Bs_isqrt


def numerical_range_angle(B):
    """Half-angle of the smallest closed sector containing ``W(B)``.

    ``tan(theta) = ||B_s^{-1/2} B_a B_s^{-1/2}||``; the operator is
    skew-Hermitian, so the norm is the largest modulus of its (imaginary)
    eigenvalues.  Returned as a starred :class:`SectorAngle`.
    """
    K = _normalized_skew(B)
    # i K is Hermitian
    lam = np.linalg.eigvalsh(1j * K)
    tan = float(np.max(np.abs(lam)))
    return SectorAngle(math.atan(tan), star=True)


def sector_constant(B):
    """``1 + tan(theta2*)``, the constant of the generalized Cauchy-Schwarz bound

    ``|<B z, w>| <= (1 + tan theta2*) ||B_s^{1/2} z|| ||B_s^{1/2} w||``.
    """
    return 1.0 + math.tan(numerical_range_angle(B).value)


def direction_gram(blocks, omega):
    """Pairing matrix for Hessian forms.

    ``omega`` has shape ``(..., 2k, n)``: ``k`` pairs of real ``n``-vectors.
    ``blocks`` holds ``k`` complex ``n x n`` matrices; pair ``j`` is acted on
    by the doubling of ``blocks[j]``.  Returns ``K`` with
    ``K[a, b] = <omega_b, (W omega)_a>``, ``W = M(D_1) + ... + M(D_k)``
    (direct sum), so that ``<(Hess (x) I) omega, W omega> = sum_ab Hess_ab K_ab``.
    """
    omega = np.asarray(omega, dtype=float)
    k = len(blocks)
    if omega.shape[-2] != 2 * k:
        raise ValueError(f"omega must have {2 * k} rows, got {omega.shape[-2]}")
    parts = []
    for j, D in enumerate(blocks):
        D = as_square(D)
        if D.shape[0] != omega.shape[-1]:
            raise ValueError(f"matrix of size {D.shape[0]} does not act on vectors of length {omega.shape[-1]}")
        x1, x2 = omega[..., 2 * j, :], omega[..., 2 * j + 1, :]
        re, im = np.real(D), np.imag(D)
        parts.append(x1 @ re.T - x2 @ im.T)
        parts.append(x1 @ im.T + x2 @ re.T)
    W = np.stack(parts, axis=-2)
    return np.einsum("...ai,...bi->...ab", W, omega)


def direction_gram_abs(blocks, omega):
    """Entrywise bound ``sum_i |omega_b,i| |(W omega)_a,i|`` used as a rounding scale."""
    omega = np.asarray(omega, dtype=float)
    parts = []
    for j, D in enumerate(blocks):
        x1, x2 = np.abs(omega[..., 2 * j, :]), np.abs(omega[..., 2 * j + 1, :])
        re, im = np.abs(np.real(D)), np.abs(np.imag(D))
        parts.append(x1 @ re.T + x2 @ im.T)
        parts.append(x1 @ im.T + x2 @ re.T)
    W = np.stack(parts, axis=-2)
    return np.einsum("...ai,...bi->...ab", W, np.abs(omega))
