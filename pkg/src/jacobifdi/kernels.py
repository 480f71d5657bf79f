"""Sliding-window polynomial approximation kernels and their FIR realization.

A kernel lives on the lag axis ``tau_bar in [0, T]`` (``tau_bar = 0`` is the
newest sample). On the normalized axis ``tau = 1 - 2 tau_bar / T`` it is a
polynomial times the Jacobi weight, so every kernel of this module has the
form ``(2/T) * p(tau) * w(tau)`` before differentiation.

Four kernel kinds are provided:

``plain``
    Delayed least-squares approximation, ``x(t - t_d)``.
``derivative``
    ``k``-th derivative of the delayed approximation, with the derivative
    moved onto the kernel by repeated integration by parts.
``coefficient``
    Expansion coefficient ``c_i = <x, phi_i>`` of the window contents.
``modified``
    Approximation of ``phi_i * x^(k)``, used to expand products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from .jacobi import JacobiBasis

KINDS = ("plain", "derivative", "coefficient", "modified")

_GL_NODES, _GL_WEIGHTS = leggauss(16)


class WindowNotReady(RuntimeError):
    """Raised when a filter is applied to a window that is still warming up."""


@dataclass(frozen=True)
class WindowSpec:
    """Sampled window of ``L`` samples spaced ``Ts`` apart, evaluated ``t_d`` in the past."""

    Ts: float
    L: int
    t_d: float = 0.0

    def __post_init__(self):
        if not self.Ts > 0:
            raise ValueError(f"Ts must be positive, got {self.Ts}")
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"L must be a positive integer, got {self.L}")
        if not (0.0 <= self.t_d <= self.T):
            raise ValueError(f"t_d={self.t_d} outside [0, T={self.T}]")

    @property
    def T(self):
        return self.L * self.Ts

    @classmethod
    def from_length(cls, T, Ts, t_d=0.0):
        L = round(T / Ts)
        if L < 1 or not math.isclose(L * Ts, T, rel_tol=1e-9):
            raise ValueError(f"T={T} is not an integer multiple of Ts={Ts}")
        return cls(Ts=Ts, L=L, t_d=t_d)


def default_delay(basis, N, T):
    """Delay placing the evaluation point on the largest zero of ``P_{N+1}``.

    For ``alpha = beta = 3`` and ``N = 1`` this is ``T / 3``.
    """
    z = basis.zeros(N + 1)[-1]
    return T * (1.0 - z) / 2.0


def _falling(a, j):
    out = 1.0
    for m in range(j):
        out *= a - m
    return out


@dataclass(frozen=True)
class KernelSpec:
    """Continuous kernel description.

    ``index`` is the polynomial index ``i`` for the coefficient and modified
    kinds; ``deriv`` the derivative order ``k`` transferred onto the kernel.
    """

    basis: JacobiBasis
    N: int
    window: WindowSpec
    kind: str = "plain"
    index: int = 0
    deriv: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if self.N < 0 or int(self.N) != self.N:
            raise ValueError(f"approximation order must be a nonnegative integer, got {self.N}")
        if self.deriv < 0 or self.index < 0:
            raise ValueError("index and derivative order must be nonnegative")
        if self.kind == "plain" and self.deriv:
            raise ValueError("plain kernels carry no derivative; use kind='derivative'")
        if self.kind == "derivative" and self.deriv < 1:
            raise ValueError("derivative kernels need deriv >= 1")
        if self.kind == "coefficient" and self.window.t_d != 0.0:
            object.__setattr__(self, "window", WindowSpec(self.window.Ts, self.window.L, 0.0))
        if self.deriv >= 1 and not (self.basis.alpha >= self.deriv and self.basis.beta >= self.deriv):
            raise ValueError(
                f"compact support requires alpha, beta >= k: got alpha={self.basis.alpha}, "
                f"beta={self.basis.beta}, k={self.deriv}"
            )
        top = self.index + (self.N if self.kind == "modified" else 0)
        if max(self.N, self.index) > self.basis.max_degree or top > 2 * self.basis.max_degree:
            raise ValueError("polynomial degree exceeds the basis max_degree")

    # Convenience constructors -------------------------------------------------
    @classmethod
    def plain(cls, basis, N, window):
        return cls(basis, N, window, "plain")

    @classmethod
    def derivative(cls, basis, N, window, k):
        return cls(basis, N, window, "derivative", deriv=k)

    @classmethod
    def coefficient(cls, basis, window, i, k=0):
        return cls(basis, i, window, "coefficient", index=i, deriv=k)

    @classmethod
    def modified(cls, basis, N, window, i, k=0):
        return cls(basis, N, window, "modified", index=i, deriv=k)

    # --------------------------------------------------------------------------
    @property
    def tau_delay(self):
        """Evaluation point on the normalized axis."""
        return 1.0 - 2.0 * self.window.t_d / self.window.T

    def reproducing_poly(self):
        """``R_N(tau) = sum_i phi_i(tau) phi_i(tau_d)`` as a power series."""
        b, td = self.basis, self.tau_delay
        out = Polynomial([0.0])
        for i in range(self.N + 1):
            out = out + b.orthonormal_poly(i) * float(b.eval_orthonormal(i, td))
        return out

    def kernel_poly(self):
        """Polynomial factor ``p`` of ``p(tau) * w(tau)`` before differentiation."""
        if self.kind in ("plain", "derivative"):
            return self.reproducing_poly()
        if self.kind == "coefficient":
            return self.basis.orthonormal_poly(self.index)
        return self.basis.orthonormal_poly(self.index) * self.reproducing_poly()


@dataclass(frozen=True)
class _KernelEvaluator:
    spec: KernelSpec
    poly_derivs: tuple = field(init=False)

    def __post_init__(self):
        p = self.spec.kernel_poly()
        object.__setattr__(
            self, "poly_derivs", tuple(p.deriv(m) if m else p for m in range(self.spec.deriv + 1))
        )

    def weight_deriv(self, m, tau):
        """``m``-th derivative of ``(1 - tau)^alpha (1 + tau)^beta`` on [-1, 1]."""
        al, be = self.spec.basis.alpha, self.spec.basis.beta
        one_m, one_p = 1.0 - tau, 1.0 + tau
        total = np.zeros_like(tau)
        for j in range(m + 1):
            total = total + (
                math.comb(m, j)
                * (-1) ** j
                * _falling(al, j)
                * _falling(be, m - j)
                * one_m ** (al - j)
                * one_p ** (be - m + j)
            )
        return total

    def normalized(self, tau):
        """``(p w)^(k)`` at ``tau`` in [-1, 1], by the Leibniz rule."""
        k = self.spec.deriv
        out = np.zeros_like(tau)
        for m in range(k + 1):
            out = out + math.comb(k, m) * self.poly_derivs[k - m](tau) * self.weight_deriv(m, tau)
        return out

    def __call__(self, tau_bar):
        T = self.spec.window.T
        k = self.spec.deriv
        tau = np.clip(1.0 - 2.0 * tau_bar / T, -1.0, 1.0)
        return (-1) ** k * (2.0 / T) ** (k + 1) * self.normalized(tau)


def kernel_value(spec, tau_bar):
    """Kernel of ``spec`` at lag ``tau_bar`` (seconds into the past)."""
    tau_bar = np.asarray(tau_bar, dtype=float)
    T = spec.window.T
    if np.any(tau_bar < 0) or np.any(tau_bar > T * (1 + 1e-12)):
        raise ValueError(f"tau_bar outside [0, T={T}]")
    val = _KernelEvaluator(spec)(tau_bar)
    return val if val.ndim else float(val)


def continuous_apply(spec, x, t):
    """Continuum operator ``int_0^T x(t - s) g(s) ds`` by adaptive quadrature.

    ``x`` is a scalar callable. Serves as a reference for the sampled filters.
    """
    g = _KernelEvaluator(spec)
    T = spec.window.T

    def integrand(s):
        return x(t - s) * float(g(np.float64(s)))

    # absolute tolerance relative to the integrand size, since the kernel
    # lobes cancel and the result may be far smaller than its parts
    scale = T * max(abs(integrand(s)) for s in np.linspace(0.0, T, 65))
    val, _ = quad(integrand, 0.0, T, epsabs=1e-13 * max(scale, 1e-300), epsrel=1e-12, limit=200)
    return val


@dataclass(frozen=True, eq=False)
class FirFilter:
    """Precomputed tap weights; ``weights[j]`` multiplies the sample ``j`` steps back."""

    weights: np.ndarray
    spec: KernelSpec

    @property
    def L(self):
        return self.weights.shape[0]

    def apply(self, window):
        return apply(self, window)


def fir_weights(spec):
    """Discretize ``spec`` into ``L`` taps.

    Tap ``j`` is the kernel integral over ``[j Ts, (j+1) Ts]`` by 16-point
    Gauss-Legendre quadrature and is paired with the sample ``x[k - j]``.
    """
    Ts, L = spec.window.Ts, spec.window.L
    g = _KernelEvaluator(spec)
    starts = np.arange(L, dtype=float)[:, None] * Ts
    nodes = starts + 0.5 * Ts * (_GL_NODES[None, :] + 1.0)
    w = (g(nodes) * (0.5 * Ts * _GL_WEIGHTS[None, :])).sum(axis=1)
    w.setflags(write=False)
    return FirFilter(weights=w, spec=spec)


class SignalWindow:
    """Most recent ``L`` samples of a channel, newest first.

    ``shape`` allows vector-valued samples; filters then act channel-wise.
    """

    def __init__(self, L, shape=()):
        self.L = int(L)
        self.buffer = np.zeros((self.L, *shape))
        self.count = 0

    @property
    def ready(self):
        return self.count >= self.L

    def push(self, x):
        self.buffer[1:] = self.buffer[:-1]
        self.buffer[0] = x
        self.count += 1
        return self

    def values(self):
        """Samples ``x[k], x[k-1], ...`` currently held (newest first)."""
        return self.buffer[: min(self.count, self.L)]


def apply(filt, window):
    """Weighted sum ``sum_j w[j] x[k - j]`` over a full window."""
    if filt.L != window.L:
        raise ValueError(f"filter length {filt.L} != window length {window.L}")
    if not window.ready:
        raise WindowNotReady(f"window holds {window.count} of {window.L} samples")
    return np.tensordot(filt.weights, window.buffer, axes=1)


def approximate_product(coeff_filters, modified_filters, window_a, window_b):
    """Approximation of ``x_a * x_b`` as ``sum_i c_i{x_a} * modified_i{x_b}``."""
    if len(coeff_filters) != len(modified_filters):
        raise ValueError(
            f"{len(coeff_filters)} coefficient filters vs {len(modified_filters)} modified filters"
        )
    return sum(apply(c, window_a) * apply(m, window_b) for c, m in zip(coeff_filters, modified_filters))
