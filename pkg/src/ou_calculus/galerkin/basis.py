"""Monomial bases, Gaussian moments and polynomial evaluation."""
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from ..errors import NumericalError

GRAM_COND_MAX = 1e12


def multi_indices(n, N):
    """All ``alpha`` in ``N^n`` with ``|alpha| <= N``, graded then lexicographic (descending)."""
    out = []
    for d in range(N + 1):
        level = set()
        for combo in combinations_with_replacement(range(n), d):
            a = [0] * n
            for i in combo:
                a[i] += 1
            level.add(tuple(a))
        out.extend(sorted(level, reverse=True))
    return out


def gaussian_moments(cov):
    """Return ``moment(gamma)``: ``E[x^gamma]`` for ``x ~ N(0, cov)``.

    Isserlis recursion ``E[x_i x^g] = sum_j cov_ij g_j E[x^(g - e_j)]``,
    memoized, so the pairing sum is never enumerated explicitly.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]

    @lru_cache(maxsize=None)
    def moment(gamma):
        total = sum(gamma)
        if total == 0:
            return 1.0
        if total % 2:
            return 0.0
        i = next(k for k, g in enumerate(gamma) if g)
        rest = list(gamma)
        rest[i] -= 1
        acc = 0.0
        for j in range(n):
            if rest[j] and cov[i, j] != 0.0:
                lower = rest.copy()
                lower[j] -= 1
                acc += cov[i, j] * rest[j] * moment(tuple(lower))
        return acc

    return moment


@dataclass(frozen=True, eq=False)
class PolyBasis:
    """Monomials ``x^alpha``, ``|alpha| <= N``, with their Gram matrix under ``N(0, cov)``."""

    n: int
    N: int
    alphas: tuple
    G: np.ndarray
    cov: np.ndarray
    model: object = None

    @property
    def dim(self):
        return len(self.alphas)

    @property
    def degrees(self):
        return np.array([sum(a) for a in self.alphas])

    def index(self, alpha):
        return self._lookup[tuple(alpha)]

    @property
    def _lookup(self):
        lk = self.__dict__.get("_lk")
        if lk is None:
            lk = {a: k for k, a in enumerate(self.alphas)}
            object.__setattr__(self, "_lk", lk)
        return lk

    def monomials(self, x):
        """Matrix ``V[k, j] = x_k^alpha_j`` for points ``x`` of shape ``(k, n)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        powers = x[:, :, None] ** np.arange(self.N + 1)[None, None, :]
        A = np.array(self.alphas)
        V = np.ones((x.shape[0], self.dim))
        for i in range(self.n):
            V *= powers[:, i, A[:, i]]
        return V

    def evaluate(self, c, x):
        """Values of ``sum_j c_j x^alpha_j`` at points ``x``."""
        return self.monomials(x) @ np.asarray(c)

    def mean(self, c):
        """``E[f]`` under the basis measure (first Gram row)."""
        return self.G[0] @ np.asarray(c)

    def inner(self, cf, cg):
        """``E[f conj(g)]``."""
        return np.conj(cg) @ self.G @ cf

    def norm(self, c):
        return float(np.sqrt(max(np.real(self.inner(c, c)), 0.0)))

    def coefficients(self, terms):
        """Coefficient vector from a ``{alpha: coefficient}`` mapping."""
        c = np.zeros(self.dim, dtype=complex if any(np.iscomplexobj(v) for v in terms.values()) else float)
        for a, v in terms.items():
            c[self.index(a)] += v
        return c

    def derivative_matrix(self, i):
        """``D`` with ``D c`` the coefficients of ``d/dx_i`` of the polynomial ``c``."""
        D = np.zeros((self.dim, self.dim))
        for k, a in enumerate(self.alphas):
            if a[i]:
                b = list(a)
                b[i] -= 1
                D[self.index(b), k] = a[i]
        return D


def build_basis(model, N, cond_max=GRAM_COND_MAX):
    """Monomial basis of degree ``<= N`` with Gram matrix under the invariant measure.

    ``model`` is an :class:`~ou_calculus.oumodel.OUModel` or a covariance
    matrix.  Raises :class:`NumericalError` when the Gram condition number
    exceeds ``cond_max``.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"degree cap must be a positive integer, got {N!r}")
    N = int(N)
    cov = np.asarray(getattr(model, "Qinf", model), dtype=float)
    n = cov.shape[0]
    alphas = tuple(multi_indices(n, N))
    moment = gaussian_moments(cov)
    dim = len(alphas)
    G = np.empty((dim, dim))
    for j, a in enumerate(alphas):
        for k in range(j, dim):
            G[j, k] = G[k, j] = moment(tuple(x + y for x, y in zip(a, alphas[k])))
    basis = PolyBasis(n=n, N=N, alphas=alphas, G=G, cov=cov, model=model if hasattr(model, "Qinf") else None)
    cond = float(np.linalg.cond(G))
    if not np.isfinite(cond) or cond > cond_max:
        raise NumericalError(f"Gram matrix condition number {cond:.3e} exceeds {cond_max:.0e}; lower the degree cap N")
    return basis


def random_polynomial(basis, rng, mean_zero=False, complex_=True, decay=0.7):
    """Random coefficients, damped by degree and normalized in ``L^2``."""
    deg = basis.degrees
    c = rng.standard_normal(basis.dim)
    if complex_:
        c = c + 1j * rng.standard_normal(basis.dim)
    c = c * decay**deg / np.sqrt(np.diag(basis.G))
    if mean_zero:
        c[0] -= basis.mean(c)
    return c / basis.norm(c)
