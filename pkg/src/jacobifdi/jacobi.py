"""Classical and orthonormal Jacobi polynomials on [-1, 1].

The orthonormal members are taken with respect to the weighted inner product

    <f, g> = int_{-1}^{1} f(tau) g(tau) (1 - tau)^alpha (1 + tau)^beta dtau,

so ``eval_orthonormal(n, tau) = eval_classical(n, tau) / sqrt(norm_constant(n))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial
from scipy.linalg import eigh_tridiagonal

MAX_SUPPORTED_DEGREE = 16


@dataclass(frozen=True)
class JacobiBasis:
    """Jacobi family with exponents ``alpha``, ``beta`` up to ``max_degree``.

    Parameters
    ----------
    alpha, beta : float
        Exponents of the weight ``(1 - tau)**alpha * (1 + tau)**beta``.
        Both must be > -1.
    max_degree : int
        Highest polynomial degree served by this basis.
    """

    alpha: float
    beta: float
    max_degree: int = MAX_SUPPORTED_DEGREE

    def __post_init__(self):
        if not (self.alpha > -1 and self.beta > -1):
            raise ValueError(
                f"alpha and beta must be > -1, got alpha={self.alpha}, beta={self.beta}"
            )
        if not (0 <= int(self.max_degree) <= MAX_SUPPORTED_DEGREE):
            raise ValueError(
                f"max_degree must be in [0, {MAX_SUPPORTED_DEGREE}], got {self.max_degree}"
            )

    def _check_degree(self, n):
        if not (0 <= n <= self.max_degree) or int(n) != n:
            raise ValueError(f"degree {n} outside [0, {self.max_degree}]")

    @staticmethod
    def _check_tau(tau):
        tau = np.asarray(tau, dtype=float)
        if np.any(np.abs(tau) > 1.0):
            raise ValueError("tau must lie in [-1, 1]")
        return tau

    def _recurrence(self, n):
        """Coefficients (a, b, c) of P_n = ((a*tau + b) P_{n-1} - c P_{n-2}), n >= 2."""
        al, be = self.alpha, self.beta
        s = 2 * n + al + be
        den = 2 * n * (n + al + be) * (s - 2)
        a = (s - 1) * s * (s - 2) / den
        b = (s - 1) * (al * al - be * be) / den
        c = 2 * (n + al - 1) * (n + be - 1) * s / den
        return a, b, c

    def eval_classical(self, n, tau):
        """Classical Jacobi polynomial ``P_n(tau)`` with ``P_n(1) = binom(n + alpha, n)``."""
        self._check_degree(n)
        tau = self._check_tau(tau)
        al, be = self.alpha, self.beta
        p_prev = np.ones_like(tau)
        if n == 0:
            return p_prev if p_prev.ndim else float(p_prev)
        p = (al + 1) + (al + be + 2) * (tau - 1) / 2
        for k in range(2, n + 1):
            a, b, c = self._recurrence(k)
            p_prev, p = p, (a * tau + b) * p - c * p_prev
        return p if p.ndim else float(p)

    def norm_constant(self, n):
        """Squared weighted norm ``h_n`` of the classical degree-``n`` member."""
        self._check_degree(n)
        al, be = self.alpha, self.beta
        if n == 0:
            log_h = (
                (al + be + 1) * math.log(2)
                + math.lgamma(al + 1)
                + math.lgamma(be + 1)
                - math.lgamma(al + be + 2)
            )
            return math.exp(log_h)
        log_h = (
            (al + be + 1) * math.log(2)
            - math.log(2 * n + al + be + 1)
            + math.lgamma(n + al + 1)
            + math.lgamma(n + be + 1)
            - math.lgamma(n + al + be + 1)
            - math.lgamma(n + 1)
        )
        return math.exp(log_h)

    def eval_orthonormal(self, n, tau):
        return self.eval_classical(n, tau) / math.sqrt(self.norm_constant(n))

    def weight(self, tau):
        """Jacobi weight, zero outside [-1, 1]."""
        tau = np.asarray(tau, dtype=float)
        inside = np.abs(tau) <= 1.0
        t = np.where(inside, tau, 0.0)
        w = np.where(inside, (1.0 - t) ** self.alpha * (1.0 + t) ** self.beta, 0.0)
        return w if w.ndim else float(w)

    def zeros(self, n):
        """Ascending roots of the degree-``n`` member (Golub-Welsch)."""
        if n < 1:
            raise ValueError("degree-0 Jacobi polynomial has no zeros")
        self._check_degree(n)
        al, be = self.alpha, self.beta
        k = np.arange(n, dtype=float)
        s = 2 * k + al + be
        with np.errstate(invalid="ignore", divide="ignore"):
            diag = (be**2 - al**2) / (s * (s + 2))
        if abs(al + be) < 1e-14:
            diag[0] = (be - al) / (al + be + 2)
        j = np.arange(1, n, dtype=float)
        sj = 2 * j + al + be
        off = np.sqrt(
            4 * j * (j + al) * (j + be) * (j + al + be) / (sj**2 * (sj + 1) * (sj - 1))
        )
        return eigh_tridiagonal(diag, off, eigvals_only=True)

    @cached_property
    def _orthonormal_polys(self):
        polys = [Polynomial([1.0])]
        if self.max_degree >= 1:
            al, be = self.alpha, self.beta
            polys.append(Polynomial([(al + 1) - (al + be + 2) / 2, (al + be + 2) / 2]))
        tau = Polynomial([0.0, 1.0])
        for k in range(2, self.max_degree + 1):
            a, b, c = self._recurrence(k)
            polys.append((a * tau + b) * polys[-1] - c * polys[-2])
        return tuple(p / math.sqrt(self.norm_constant(i)) for i, p in enumerate(polys))

    def orthonormal_poly(self, n):
        """Power-series form of the orthonormal degree-``n`` member."""
        self._check_degree(n)
        return self._orthonormal_polys[n]
