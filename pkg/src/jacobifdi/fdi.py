"""Residual generation, fault identification and detection.

The exact (continuous-signal) maps work on ``q, qd, qdd, u`` at one instant.
The streaming estimators only see sampled ``q`` and ``u``; every derivative of
``q`` is moved onto an FIR kernel, and products of a configuration-dependent
matrix with ``qdd`` or ``u`` are expanded as

    P{A x} = sum_j c_j{A} * P~_j{x},

where ``c_j{A}`` are the window's Jacobi coefficients of ``A`` and ``P~_j`` is
the modified kernel carrying the derivative of ``x``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import RankError, left_annihilator, matrix_rank, pseudoinverse
from .jacobi import JacobiBasis
from .kernels import KernelSpec, SignalWindow, WindowSpec, default_delay, fir_weights


def residual_raw(model, q, qd, qdd, u):
    """``M qdd + C qd + G - u``, equal to ``F f + D d`` on exact signals."""
    return model.M(q) @ qdd + model.C(q, qd) @ qd + model.G(q) - np.asarray(u, dtype=float)


def residual_decoupled(model, q, qd, qdd, u):
    """Raw residual with the disturbance directions projected out."""
    return left_annihilator(model.D(q, qd)) @ residual_raw(model, q, qd, qdd, u)


def decoupled_fault_matrix(model, q, qd):
    """``D_perp F`` together with ``D_perp``."""
    Dp = left_annihilator(model.D(q, qd))
    return Dp @ model.F(q, qd), Dp


def fault_gain(model, q, qd):
    """``K = (D_perp F)^+ D_perp``; requires ``rank(D_perp F) = n_f``."""
    DpF, Dp = decoupled_fault_matrix(model, q, qd)
    try:
        return pseudoinverse(DpF) @ Dp
    except RankError as exc:
        raise RankError(
            f"rank(D_perp F) = {matrix_rank(DpF)} < n_f = {model.n_f}; "
            "use fault_identify_partial with a selector matrix"
        ) from exc


def fault_identify_exact(model, q, qd, qdd, u):
    return fault_gain(model, q, qd) @ residual_raw(model, q, qd, qdd, u)


def fault_identify_partial(model, q, qd, qdd, u, selector):
    """Identifiable combination ``T f`` with ``T = selector @ D_perp F``.

    Works when ``D_perp F`` is rank deficient; the unobservable part of ``f``
    (its component in the right null space of ``D_perp F``) drops out.
    """
    DpF, Dp = decoupled_fault_matrix(model, q, qd)
    selector = np.atleast_2d(np.asarray(selector, dtype=float))
    r = matrix_rank(DpF)
    if selector.shape[0] != r or matrix_rank(selector @ DpF) != r:
        raise RankError(
            f"selector must have {r} rows and rank(selector @ D_perp F) = {r}"
        )
    return selector @ DpF @ np.linalg.pinv(DpF, rcond=1e-10) @ Dp @ residual_raw(model, q, qd, qdd, u)


def check_detectability(model, states):
    """Indices of fault columns with ``D_perp F_i = 0`` at some state.

    ``states`` is an iterable of ``(q, qd)`` pairs; an empty result means every
    fault direction survives the disturbance projection on that grid.
    """
    bad = set()
    for q, qd in states:
        DpF, _ = decoupled_fault_matrix(model, q, qd)
        scale = max(np.linalg.norm(model.F(q, qd)), 1.0)
        for i in range(model.n_f):
            if np.linalg.norm(DpF[:, i]) <= 1e-10 * scale:
                bad.add(i)
    return sorted(bad)


@dataclass(frozen=True)
class ResidualConfig:
    """Kernel and detection settings shared by the streaming estimators.

    ``t_d=None`` selects the zero of ``P_{N+1}`` (``T/3`` for the defaults).
    ``held_input`` declares ``u`` zero-order held between samples; each input
    sample is then taken as the mean of the left and right limits at the
    sampling instant, matching how the position taps see the resulting jumps
    in acceleration.
    """

    alpha: float = 3.0
    beta: float = 3.0
    N: int = 1
    N_star: int = 2
    Ts: float = 0.005
    L: int = 20
    t_d: Optional[float] = None
    threshold: object = 1.0
    hold: int = 3
    held_input: bool = True

    def __post_init__(self):
        if self.N < 0 or self.N_star < 0:
            raise ValueError("approximation orders must be nonnegative")
        if not np.all(np.asarray(self.threshold, dtype=float) > 0):
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if self.hold < 1:
            raise ValueError("hold must be at least one sample")

    @property
    def basis(self):
        return JacobiBasis(self.alpha, self.beta)

    @property
    def T(self):
        return self.L * self.Ts

    @property
    def delay(self):
        return default_delay(self.basis, self.N, self.T) if self.t_d is None else self.t_d

    @property
    def window(self):
        return WindowSpec(self.Ts, self.L, self.delay)


class _AlgebraicEstimator:
    """Streaming ``P{gain (M qdd + C qd + G - u)}`` from sampled ``q`` and ``u``.

    ``gain(q, qd)`` returns the ``m x n`` matrix premultiplying the raw
    residual. The ``qdd`` and ``u`` products are expanded with coefficient /
    modified filter pairs; the Coriolis term is evaluated on the delayed
    estimates; the gravity term is filtered as a whole.
    """

    def __init__(self, model, config, gain, m):
        if min(config.alpha, config.beta) < 2:
            raise ValueError("second derivatives are moved onto kernels: alpha, beta >= 2 required")
        self.model, self.config, self.gain, self.m = model, config, gain, m
        basis, win, N = config.basis, config.window, config.N
        n = model.n
        self.plain = fir_weights(KernelSpec.plain(basis, N, win))
        self.deriv1 = fir_weights(KernelSpec.derivative(basis, N, win, 1))
        self.coeff = [fir_weights(KernelSpec.coefficient(basis, win, j)) for j in range(config.N_star + 1)]
        self.mod2 = [fir_weights(KernelSpec.modified(basis, N, win, j, 2)) for j in range(config.N_star + 1)]
        self.mod0 = [fir_weights(KernelSpec.modified(basis, N, win, j, 0)) for j in range(config.N_star + 1)]
        self._Wc = np.stack([f.weights for f in self.coeff])
        self._W2 = np.stack([f.weights for f in self.mod2])
        self._W0 = np.stack([f.weights for f in self.mod0])
        L = config.L
        self.q_win = SignalWindow(L, (n,))
        self.u_win = SignalWindow(L, (n,))
        self.gm_win = SignalWindow(L, (m, n))   # gain(q, qd_hat) M(q)
        self.g_win = SignalWindow(L, (m, n))    # gain(q, qd_hat)
        self.gg_win = SignalWindow(L, (m,))     # gain(q, qd_hat) G(q)
        self._q_prev = None
        self._u_prev = None

    @property
    def delay(self):
        return self.config.delay

    def update(self, q, u):
        """Consume one sample; return the estimate or ``None`` while warming up."""
        q = np.asarray(q, dtype=float)
        u = np.asarray(u, dtype=float)
        model, Ts = self.model, self.config.Ts
        self.q_win.push(q)
        if self.config.held_input:
            u_prev = u if self._u_prev is None else self._u_prev
            self._u_prev = u
            u = 0.5 * (u + u_prev)
        self.u_win.push(u)
        if self.q_win.ready:
            qd_factor = self.deriv1.weights @ self.q_win.buffer
        elif self._q_prev is not None:
            # backward difference until the differentiator window fills
            qd_factor = (q - self._q_prev) / Ts
        else:
            qd_factor = np.zeros_like(q)
        self._q_prev = q
        K = self.gain(q, qd_factor)
        self.gm_win.push(K @ model.M(q))
        self.g_win.push(K)
        self.gg_win.push(K @ model.G(q))
        if not self.q_win.ready:
            return None

        q_hat = self.plain.weights @ self.q_win.buffer
        qd_hat = qd_factor
        c_gm = np.tensordot(self._Wc, self.gm_win.buffer, axes=1)     # (J, m, n)
        c_g = np.tensordot(self._Wc, self.g_win.buffer, axes=1)       # (J, m, n)
        qdd_terms = self._W2 @ self.q_win.buffer                      # (J, n)
        u_terms = self._W0 @ self.u_win.buffer                        # (J, n)
        inertial = np.einsum("jmn,jn->m", c_gm, qdd_terms)
        coriolis = self.gain(q_hat, qd_hat) @ model.C(q_hat, qd_hat) @ qd_hat
        gravity = self.plain.weights @ self.gg_win.buffer
        inputs = np.einsum("jmn,jn->m", c_g, u_terms)
        return inertial + coriolis + gravity - inputs


class FaultEstimator(_AlgebraicEstimator):
    """Streaming fault estimate ``f_hat`` delayed by ``t_d``."""

    def __init__(self, model, config):
        super().__init__(model, config, lambda q, qd: fault_gain(model, q, qd), model.n_f)


class ResidualEstimator(_AlgebraicEstimator):
    """Streaming disturbance-decoupled residual ``D_perp (M qdd + C qd + G - u)``."""

    def __init__(self, model, config):
        super().__init__(
            model, config, lambda q, qd: left_annihilator(model.D(q, qd)), model.n
        )


def make_fault_estimator(model, config):
    return FaultEstimator(model, config)


def make_residual_estimator(model, config):
    return ResidualEstimator(model, config)


@dataclass
class DetectionDecision:
    flags: np.ndarray
    onsets: list
    estimate: Optional[np.ndarray] = None


@dataclass
class Detector:
    """Per-channel threshold with hold; a flag latches once raised.

    ``threshold`` is a scalar or one value per channel.
    A channel fires on the ``hold``-th consecutive sample with
    ``|x| > threshold``; its onset is the time of the first sample of that run.
    """

    threshold: object
    hold: int = 3
    _run: Optional[np.ndarray] = field(default=None, repr=False)
    _start: Optional[list] = field(default=None, repr=False)
    flags: Optional[np.ndarray] = field(default=None, repr=False)
    onsets: Optional[list] = field(default=None, repr=False)

    def update(self, t, estimate):
        if estimate is None:
            if self._run is not None:
                self._run[:] = 0
            return DetectionDecision(
                flags=np.zeros(0, bool) if self.flags is None else self.flags.copy(),
                onsets=[] if self.onsets is None else list(self.onsets),
                estimate=None,
            )
        x = np.atleast_1d(np.asarray(estimate, dtype=float))
        if self._run is None:
            self._run = np.zeros(x.size, int)
            self._start = [None] * x.size
            self.flags = np.zeros(x.size, bool)
            self.onsets = [None] * x.size
        thr = np.broadcast_to(np.asarray(self.threshold, dtype=float), x.shape)
        for i, xi in enumerate(x):
            if abs(xi) > thr[i]:
                if self._run[i] == 0:
                    self._start[i] = t
                self._run[i] += 1
                if self._run[i] >= self.hold and not self.flags[i]:
                    self.flags[i] = True
                    self.onsets[i] = self._start[i]
            else:
                self._run[i] = 0
        return DetectionDecision(flags=self.flags.copy(), onsets=list(self.onsets), estimate=x)


def detect(times, estimates, threshold, hold=3):
    """Run a :class:`Detector` over a whole stream; ``None``/NaN entries mean "no output"."""
    det = Detector(threshold, hold)
    out = []
    for t, est in zip(times, estimates):
        if est is not None and np.all(np.isnan(est)):
            est = None
        out.append(det.update(t, est))
    return out
