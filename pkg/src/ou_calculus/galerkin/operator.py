"""The OU operator on polynomials: matrices, semigroups and oracles.

Coefficient vectors are columns: ``M @ c`` holds the coefficients of ``L f``
when ``c`` holds those of ``f``.  Inner products are ``<f, g> = c_g^H G c_f``.
"""
from dataclasses import dataclass
from itertools import product
import math

import numpy as np
from scipy.linalg import expm
from scipy.optimize import linear_sum_assignment

from .. import linalg
from ..oumodel import build_model, gaussian_sample
from ..rng import substream
from .basis import build_basis, multi_indices, random_polynomial

__all__ = [
    "GalerkinOperator",
    "ou_matrix",
    "ou_matrix_from_drift",
    "spectrum_from_drift",
    "spectrum_distance",
    "semigroup_apply",
    "mehler_mc",
    "weighted_norm",
    "weighted_matrix",
    "mean_zero_block",
    "sector_angle_sweep",
    "lr_norm_lower",
    "NormProbe",
]


@dataclass(frozen=True, eq=False)
class GalerkinOperator:
    basis: object
    M: np.ndarray
    Mstar: np.ndarray
    P: np.ndarray
    model: object

    @property
    def dim(self):
        return self.basis.dim

    def eigenvalues(self):
        return np.linalg.eigvals(self.M)

    def gap(self):
        """Smallest modulus among the nonzero eigenvalues."""
        lam = np.abs(self.eigenvalues())
        return float(np.sort(lam)[1])


def _generator_matrix(basis, Q, A):
    """Columns: coefficients of ``L x^alpha`` for ``L = -1/2 tr(Q D^2) + <Ax, grad>``."""
    n, dim = basis.n, basis.dim
    M = np.zeros((dim, dim))
    for k, a in enumerate(basis.alphas):
        for i, j in product(range(n), repeat=2):
            # second derivatives lower the degree by two
            c = a[i] * (a[j] - (i == j))
            if c and Q[i, j]:
                b = list(a)
                b[i] -= 1
                b[j] -= 1
                M[basis.index(b), k] -= 0.5 * Q[i, j] * c
            # (Ax)_i d_i x^alpha = sum_j A_ij a_i x^(alpha - e_i + e_j)
            if a[i] and A[i, j]:
                b = list(a)
                b[i] -= 1
                b[j] += 1
                M[basis.index(b), k] += A[i, j] * a[i]
    return M


def ou_matrix(model, basis=None, N=8):
    """Matrix of ``L`` on polynomials of degree ``<= N`` and its ``L^2`` adjoint.

    ``Mstar = G^{-1} M^T G``; ``P = e_0 G[0, :]`` maps ``f`` to its mean.
    """
    if basis is None:
        basis = build_basis(model, N)
    M = _generator_matrix(basis, model.Q, model.A)
    G = basis.G
    Mstar = np.linalg.solve(G, M.T @ G)
    P = np.zeros_like(G)
    P[0] = G[0]
    return GalerkinOperator(basis=basis, M=M, Mstar=Mstar, P=P, model=model)


def ou_matrix_from_drift(model, basis):
    """Adjoint built as an OU operator: same ``Q``, drift ``Qinf A^T Qinf^{-1}``."""
    A_adj = model.Qinf @ model.A.T @ np.linalg.inv(model.Qinf)
    adj = build_model(model.Q, A_adj, label=f"{model.label} adjoint")
    return _generator_matrix(basis, adj.Q, adj.A)


def spectrum_from_drift(model, N):
    """Multiset ``{<alpha, lambda(A)> : |alpha| <= N}``."""
    lam = np.linalg.eigvals(model.A)
    return np.array([np.dot(a, lam) for a in multi_indices(model.n, N)])


def spectrum_distance(a, b):
    """Largest gap under the best one-to-one matching of two multisets."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("multisets differ in size")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def semigroup_apply(op, tau, f, adjoint=False):
    """``exp(-tau M) f`` (or with ``Mstar``); ``tau`` complex with ``Re tau >= 0``."""
    tau = complex(tau)
    if tau.real < 0:
        raise ValueError(f"Re tau must be >= 0, got {tau}")
    M = op.Mstar if adjoint else op.M
    f = np.asarray(f)
    if tau == 0:
        return f.astype(complex)
    return expm(-tau * M) @ f


def mehler_mc(op, t, f, x, samples, seed, index=0):
    """Monte-Carlo ``E[f(e^{-tA} x + y)]``, ``y ~ N(0, Q_t)``.

    Returns ``(mean, standard_error)``; the error is that of the complex
    mean, ``sqrt(E|f - mean|^2 / samples)``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    model = op.model
    x = np.asarray(x, dtype=float)
    y = gaussian_sample(model.measure_at(t), samples, seed, name="mehler", index=index)
    vals = op.basis.evaluate(f, model.semigroup_matrix(t) @ x + y)
    mean = vals.mean()
    err = math.sqrt(np.mean(np.abs(vals - mean) ** 2) / samples)
    return complex(mean), err


def weighted_matrix(op, X):
    """``G^{1/2} X G^{-1/2}``: ``X`` seen as an operator on ``L^2`` coordinates."""
    S = linalg.spd_sqrt(op.basis.G)
    return S @ X @ np.linalg.inv(S)


def weighted_norm(op, X):
    """Operator norm of ``X`` in the ``G``-weighted inner product."""
    return float(np.linalg.norm(weighted_matrix(op, X), 2))


def mean_zero_block(op, X=None):
    """``X`` (default ``M``) compressed to the mean-zero subspace, in orthonormal coordinates."""
    X = op.M if X is None else X
    T = weighted_matrix(op, X)
    S = linalg.spd_sqrt(op.basis.G)
    # columns spanning G^{1/2} range(I - P)
    R = S @ (np.eye(op.dim) - op.P)
    U, sv, _ = np.linalg.svd(R)
    Y = U[:, : op.dim - 1]
    return np.conj(Y).T @ T @ Y


def sector_angle_sweep(T, tol=1e-13):
    """Half-angle of the smallest sector about ``R_+`` containing ``W(T)``.

    Bisection on ``psi`` with the test: the Hermitian parts of
    ``e^{+-i(pi/2 - psi)} T`` are positive semidefinite.
    """
    T = np.asarray(T, dtype=complex)

    def contained(psi):
        for sgn in (1, -1):
            R = np.exp(sgn * 1j * (math.pi / 2 - psi)) * T
            if np.linalg.eigvalsh((R + np.conj(R).T) / 2)[0] < -1e-14 * np.linalg.norm(T, 2):
                return False
        return True

    lo, hi = 0.0, math.pi / 2
    if not contained(hi):
        return math.pi / 2
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if contained(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class NormProbe:
    ratio: float
    stderr: float
    trial: int
    coefficients: np.ndarray


def _lr_norm(vals, r):
    a = np.abs(vals) ** r
    m = a.mean()
    norm = m ** (1 / r)
    # delta method for m^(1/r)
    err = norm / (r * m) * a.std(ddof=1) / math.sqrt(a.size) if m > 0 else 0.0
    return norm, err


def lr_norm_lower(op, T, r, trials, samples, seed, mean_zero=True):
    """Empirical lower bound for ``||T||_{L^r -> L^r}`` over random polynomials.

    Each trial draws ``f``, evaluates ``f`` and ``T f`` on a common
    Monte-Carlo sample of the invariant measure and takes the norm ratio.
    Returns the best :class:`NormProbe`; its ``stderr`` propagates both
    Monte-Carlo errors.
    """
    if not r > 1:
        raise ValueError("r must exceed 1")
    x = gaussian_sample(op.model.invariant_measure, samples, seed, name="lr_norm")
    V = op.basis.monomials(x)
    rng = substream(seed, "lr_norm:coeffs", 0)
    best = None
    for k in range(trials):
        c = random_polynomial(op.basis, rng, mean_zero=mean_zero)
        nf, ef = _lr_norm(V @ c, r)
        nt, et = _lr_norm(V @ (T @ c), r)
        ratio = nt / nf
        err = ratio * math.hypot(ef / nf, et / nt if nt else 0.0)
        if best is None or ratio > best.ratio:
            best = NormProbe(float(ratio), float(err), k, c)
    return best
