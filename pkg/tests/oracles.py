"""Independent reference computations used as test oracles.

Nothing here calls the routine it is meant to check.
"""
import math
from itertools import permutations

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov
from scipy.integrate import quad


def lyapunov(A, Q):
    """``A X + X A^T = Q`` by the Bartels-Stewart solver in scipy."""
    return solve_continuous_lyapunov(np.asarray(A, float), np.asarray(Q, float))


def covariance_closed(A, Qinf, t):
    """``Q_t = Qinf - e^{-tA} Qinf e^{-tA^T}``."""
    S = expm(-t * np.asarray(A))
    return Qinf - S @ Qinf @ S.T


def sector_half_angle(T, grid=20001):
    """Half-angle of the sector containing ``W(T)`` via the support function.

    For each direction ``phi`` the extreme point of ``W(T)`` is read off the top
    eigenvector of the Hermitian part of ``e^{-i phi} T``; the largest
    ``|arg|`` of those boundary points is returned.
    """
    T = np.asarray(T, dtype=complex)
    worst = 0.0
    for phi in np.linspace(-math.pi, math.pi, grid):
        R = np.exp(-1j * phi) * T
        _, V = np.linalg.eigh((R + R.conj().T) / 2)
        x = V[:, -1]
        z = np.conj(x) @ T @ x
        worst = max(worst, abs(math.atan2(z.imag, z.real)))
    return worst


def sin_theta_r_via_phi(theta2star, r):
    """``sin phi_r sin theta_2`` with ``phi_r = arccos|1 - 2/r|``."""
    phi = math.acos(abs(1 - 2 / r))
    return math.sin(phi) * math.cos(theta2star)


def gaussian_moment_1d(var, k):
    """``E[x^k]`` for ``N(0, var)`` by numerical integration."""
    f = lambda x: x**k * math.exp(-x * x / (2 * var)) / math.sqrt(2 * math.pi * var)
    return quad(f, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13)[0]


def wick_moment(cov, gamma):
    """``E[x^gamma]`` as a sum over perfect matchings of the index multiset."""
    idx = [i for i, g in enumerate(gamma) for _ in range(g)]
    if len(idx) % 2:
        return 0.0
    if not idx:
        return 1.0

    def pairings(items):
        if not items:
            yield []
            return
        a = items[0]
        for k in range(1, len(items)):
            rest = items[1:k] + items[k + 1 :]
            for p in pairings(rest):
                yield [(a, items[k])] + p

    return sum(math.prod(cov[i, j] for i, j in p) for p in pairings(idx))


def fd_hessian(f, x, h=1e-4):
    """Central second differences of a scalar function of a real vector."""
    x = np.asarray(x, float)
    n = x.size
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            e_i, e_j = np.eye(n)[i] * h, np.eye(n)[j] * h
            H[i, j] = (f(x + e_i + e_j) - f(x + e_i - e_j) - f(x - e_i + e_j) + f(x - e_i - e_j)) / (4 * h * h)
    return H


def fd_grad(f, x, h=1e-6):
    x = np.asarray(x, float)
    return np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(x.size)])


def literal_form(hess, D, xi):
    """``<(Hess (x) I) xi, M(D) xi>`` with ``xi`` flattened as ``(xi1, xi2)``."""
    xi = np.asarray(xi, float)
    n = xi.shape[-1]
    D = np.asarray(D, dtype=complex)
    MD = np.block([[D.real, -D.imag], [D.imag, D.real]])
    w = xi.reshape(-1)
    return float((np.kron(hess, np.eye(n)) @ w) @ (MD @ w))
