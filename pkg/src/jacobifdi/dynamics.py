"""Rigid manipulator models ``M q'' + C q' + G = u + F f + D d`` and the
linear-algebra helpers used to decouple disturbances.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

RANK_RTOL = 1e-10
COND_LIMIT = 1e12


class RankError(np.linalg.LinAlgError):
    """A matrix lacks the rank an operation requires."""


@dataclass(frozen=True)
class MechanicalModel:
    """Callable bundle of the model matrices.

    ``M(q)``, ``C(q, qd)``, ``G(q)``, ``F(q, qd)`` and ``D(q, qd)`` return
    arrays of shapes ``(n, n)``, ``(n, n)``, ``(n,)``, ``(n, n_f)`` and
    ``(n, n_d)``.
    """

    n: int
    n_f: int
    n_d: int
    M: Callable
    C: Callable
    G: Callable
    F: Callable
    D: Callable


@dataclass(frozen=True)
class RobotState:
    q: np.ndarray
    qd: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        qd = np.asarray(self.qd, dtype=float)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qd))):
            raise ValueError("robot state has non-finite entries")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qd", qd)


@dataclass(frozen=True)
class ScaraParams:
    """SCARA masses [kg], inertias [kg m^2], lengths [m] and gravity [m/s^2]."""

    m1: float = 10.0
    m2: float = 5.0
    m3: float = 2.35
    J1: float = 0.088
    J2: float = 0.0315
    J3: float = 0.005
    l1: float = 0.325
    l1s: float = 0.1625
    l2: float = 0.275
    l2s: float = 0.1375
    g: float = 9.81

    def __post_init__(self):
        for name, val in vars(self).items():
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"SCARA parameter {name} must be positive, got {val}")

    @property
    def theta1(self):
        return (
            self.J1 + self.J2 + self.J3
            + self.l1**2 * self.m2 + self.l1**2 * self.m3 + self.l2**2 * self.m3
            + self.l1s**2 * self.m1 + self.l2s**2 * self.m2
        )

    @property
    def theta2(self):
        return self.l1 * self.l2 * self.m3 + self.l1 * self.l2s * self.m2

    @property
    def theta3(self):
        return self.m3 * self.l2**2 + self.m2 * self.l2s**2 + self.J2 + self.J3


def scara_model(params=None):
    """Two revolute joints and a vertical prismatic joint.

    Faults act as torques on joints 1 and 2; the disturbance is a TCP force
    entering through ``D(q)``.
    """
    p = params or ScaraParams()
    th1, th2, th3 = p.theta1, p.theta2, p.theta3
    m3, g, l1, l2 = p.m3, p.g, p.l1, p.l2

    def M(q):
        c2 = np.cos(q[1])
        off = th3 + th2 * c2
        return np.array([[th1 + 2 * th2 * c2, off, 0.0], [off, th3, 0.0], [0.0, 0.0, m3]])

    def C(q, qd):
        s2 = th2 * np.sin(q[1])
        return np.array(
            [[-qd[1] * s2, -(qd[0] + qd[1]) * s2, 0.0], [qd[0] * s2, 0.0, 0.0], [0.0, 0.0, 0.0]]
        )

    def G(q):
        return np.array([0.0, 0.0, m3 * g])

    F_const = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])

    def F(q, qd):
        return F_const

    def D(q, qd):
        c12 = l2 * np.cos(q[0] + q[1])
        return np.array([[c12 + l1 * np.cos(q[0])], [c12], [1.0]])

    return MechanicalModel(n=3, n_f=2, n_d=1, M=M, C=C, G=G, F=F, D=D)


def pseudoinverse(A):
    """``(A^T A)^{-1} A^T`` for a full-column-rank ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    s = np.linalg.svd(A, compute_uv=False)
    if A.shape[1] > A.shape[0] or s[-1] == 0 or s[0] / s[-1] > COND_LIMIT:
        raise RankError(f"matrix of shape {A.shape} is not of full column rank (singular values {s})")
    return np.linalg.solve(A.T @ A, A.T)


def left_annihilator(D):
    """Orthogonal projector ``I - D D^+`` onto the complement of ``range(D)``."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    return np.eye(D.shape[0]) - D @ pseudoinverse(D)


def right_annihilator(A):
    """Orthonormal basis of ``null(A)`` as columns; zero columns when ``A`` has full column rank."""
    return sla.null_space(np.atleast_2d(np.asarray(A, dtype=float)), rcond=RANK_RTOL)


def matrix_rank(A):
    return np.linalg.matrix_rank(A, tol=RANK_RTOL * np.linalg.norm(A, 2)) if np.any(A) else 0


def forward_dynamics(model, state, u, f=None, d=None):
    """Joint accelerations from ``M q'' = u + F f + D d - C qd - G``."""
    q, qd = state.q, state.qd
    rhs = np.asarray(u, dtype=float) - model.C(q, qd) @ qd - model.G(q)
    if f is not None:
        rhs = rhs + model.F(q, qd) @ np.atleast_1d(f)
    if d is not None:
        rhs = rhs + model.D(q, qd) @ np.atleast_1d(d)
    M = model.M(q)
    try:
        factor = sla.cho_factor(M)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"mass matrix not positive definite at q={q}: eigenvalues {np.linalg.eigvalsh(M)}"
        ) from exc
    return sla.cho_solve(factor, rhs)


def kinetic_energy(model, state):
    return 0.5 * state.qd @ model.M(state.q) @ state.qd
