"""Closed-loop SCARA pick-and-place simulation with faults, a TCP disturbance
and sensor/actuator noise, feeding the streaming fault estimator.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .dynamics import RobotState, ScaraParams, forward_dynamics, scara_model
from .fdi import ResidualConfig, make_fault_estimator

CHANNELS = (
    "t", "y1", "y2", "y3", "y1s", "y2s", "y3s", "u1", "u2", "u3",
    "noise_y1", "noise_y2", "noise_y3", "noise_u1", "noise_u2", "noise_u3",
    "d", "f1", "f2", "fest1", "fest2",
)

DEFAULT_WAYPOINTS = (
    (0.0, (0.15, 0.0, 0.40)),
    (1.6, (0.40, 0.70, 0.15)),
    (3.2, (0.25, 0.35, 0.45)),
    (4.6, (0.15, 0.0, 0.40)),
)


class SimulationDiverged(RuntimeError):
    pass


class QuadraticSpline:
    """Rest-to-rest piecewise-quadratic reference through timed waypoints.

    Each segment accelerates uniformly for its first half and decelerates for
    the second half, so position and velocity are continuous, acceleration is
    piecewise constant and the reference stops at every waypoint.
    """

    def __init__(self, waypoints):
        if len(waypoints) < 2:
            raise ValueError("at least two waypoints are required")
        self.times = np.array([float(t) for t, _ in waypoints])
        self.points = np.array([np.asarray(p, dtype=float) for _, p in waypoints])
        if np.any(np.diff(self.times) <= 0):
            raise ValueError(f"waypoint times must be strictly increasing, got {self.times}")

    def __call__(self, t):
        """Reference ``(q_s, qd_s, qdd_s)`` at time ``t``."""
        times, pts = self.times, self.points
        n = pts.shape[1]
        if t <= times[0]:
            return pts[0].copy(), np.zeros(n), np.zeros(n)
        if t >= times[-1]:
            return pts[-1].copy(), np.zeros(n), np.zeros(n)
        i = int(np.searchsorted(times, t, side="right")) - 1
        dur = times[i + 1] - times[i]
        delta = pts[i + 1] - pts[i]
        acc = 4.0 * delta / dur**2
        s = t - times[i]
        if s < dur / 2:
            return pts[i] + 0.5 * acc * s**2, acc * s, acc
        r = dur - s
        return pts[i + 1] - 0.5 * acc * r**2, acc * r, -acc


def generate_trajectory(waypoints):
    return QuadraticSpline(waypoints)


def pole_placement_gains(lam):
    """``(k_p, k_d, k_i)`` for the characteristic polynomial ``(s - lam)^3``."""
    return 3 * lam**2, -3 * lam, -(lam**3)


def controller_step(model, q, qd, reference, integral, gains, Ts):
    """Computed-torque feedforward plus PI-state feedback.

    Returns ``(u, integral_next)``; the integral of the tracking error is
    advanced by explicit Euler after ``u`` is formed.
    """
    q_s, qd_s, qdd_s = reference
    kp, kd, ki = gains
    e = q_s - q
    ed = qd_s - qd
    v = qdd_s + kp * e + kd * ed + ki * integral
    u = model.M(q_s) @ v + model.C(q_s, qd_s) @ qd_s + model.G(q_s)
    return u, integral + Ts * e


def disturbance_signal(t, onset=0.5, offset=10.0, amplitude=2.0, omega=2.0):
    """TCP force: a right-continuous step at ``onset`` to ``offset + amplitude sin(omega t)``."""
    return offset + amplitude * np.sin(omega * t) if t >= onset else 0.0


@dataclass(frozen=True)
class FaultSchedule:
    times: tuple = (1.0, 3.0)
    amplitudes: tuple = (10.0, 10.0)

    def __call__(self, t):
        return np.array([a if t >= tf else 0.0 for tf, a in zip(self.times, self.amplitudes)])


def fault_signal(schedule, t):
    return schedule(t)


@dataclass(frozen=True)
class Scenario:
    params: ScaraParams = field(default_factory=ScaraParams)
    waypoints: tuple = DEFAULT_WAYPOINTS
    lam: float = -10.0
    Ts: float = 0.005
    L: int = 20
    alpha: float = 3.0
    beta: float = 3.0
    N: int = 1
    N_star: int = 2
    t_d: Optional[float] = None
    fault_times: tuple = (1.0, 3.0)
    fault_amplitudes: tuple = (10.0, 10.0)
    faults: bool = True
    disturbance: bool = True
    disturbance_onset: float = 0.5
    disturbance_offset: float = 10.0
    disturbance_amplitude: float = 2.0
    disturbance_omega: float = 2.0
    sigma_y: tuple = (5e-5, 5e-5, 5e-5)
    sigma_u: tuple = (0.4, 0.4, 0.4)
    noise: bool = True
    seed: int = 0
    duration: float = 5.0
    substeps: int = 10
    threshold: tuple = (3.5, 1.35)
    hold: int = 3

    def __post_init__(self):
        if not self.Ts > 0:
            raise ValueError(f"Ts must be positive, got {self.Ts}")
        if self.duration < self.waypoints[-1][0]:
            raise ValueError("duration ends before the last waypoint")
        if any(s < 0 for s in (*self.sigma_y, *self.sigma_u)) or any(a < 0 for a in self.fault_amplitudes):
            raise ValueError("noise and fault amplitudes must be nonnegative")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")

    @property
    def n_samples(self):
        return int(round(self.duration / self.Ts))

    @property
    def config(self):
        return ResidualConfig(
            alpha=self.alpha, beta=self.beta, N=self.N, N_star=self.N_star,
            Ts=self.Ts, L=self.L, t_d=self.t_d, threshold=self.threshold, hold=self.hold,
        )

    @property
    def delay(self):
        return self.config.delay

    def fault_schedule(self):
        amps = self.fault_amplitudes if self.faults else tuple(0.0 for _ in self.fault_amplitudes)
        return FaultSchedule(tuple(self.fault_times), tuple(amps))

    def disturbance_at(self, t):
        if not self.disturbance:
            return 0.0
        return disturbance_signal(
            t, self.disturbance_onset, self.disturbance_offset,
            self.disturbance_amplitude, self.disturbance_omega,
        )

    def quiet(self, noise=False, faults=False, disturbance=False):
        """Copy with the selected effects switched off (``True`` keeps them)."""
        return replace(self, noise=self.noise and noise, faults=self.faults and faults,
                       disturbance=self.disturbance and disturbance)


@dataclass
class RunRecord:
    """Uniformly sampled channels (see :data:`CHANNELS`) plus exact plant data.

    ``exact`` holds the noise-free plant states ``q``, ``qd``, ``qdd`` and the
    applied torque ``u_applied`` at the sample instants.
    """

    channels: dict
    exact: dict

    def __getitem__(self, name):
        return self.channels[name]

    def __len__(self):
        return len(self.channels["t"])

    def table(self):
        return np.column_stack([self.channels[c] for c in CHANNELS])


def _rk4_interval(model, q, qd, u, f, dist, t0, h, substeps, eps):
    x = np.concatenate([q, qd])
    n = q.size
    # stage times are kept strictly inside the interval so that an event on
    # either sample instant acts from the start of its own interval only
    lo, hi = t0 + eps, t0 + h * substeps - eps

    def rhs(t, x):
        st = RobotState(x[:n], x[n:])
        return np.concatenate([x[n:], forward_dynamics(model, st, u, f, dist(min(max(t, lo), hi)))])

    t = t0
    for _ in range(substeps):
        k1 = rhs(t, x)
        k2 = rhs(t + h / 2, x + h / 2 * k1)
        k3 = rhs(t + h / 2, x + h / 2 * k2)
        k4 = rhs(t + h, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return x[:n], x[n:]


def run_scenario(scenario, estimator=True, fault=None, disturbance=None):
    """Simulate ``scenario`` and return its :class:`RunRecord`.

    Control, noise and estimation run at ``Ts`` with zero-order hold; the plant
    is integrated by RK4 with ``substeps`` steps per sample. ``fault`` and
    ``disturbance`` optionally replace the scenario's schedules with callables
    of time (the fault is still sampled at ``Ts`` and held).
    """
    model = scara_model(scenario.params)
    K, Ts, n = scenario.n_samples, scenario.Ts, model.n
    traj = QuadraticSpline(scenario.waypoints)
    gains = pole_placement_gains(scenario.lam)
    faults = scenario.fault_schedule() if fault is None else fault
    est = make_fault_estimator(model, scenario.config) if estimator else None

    rng = np.random.default_rng(scenario.seed)
    noise_y = rng.normal(0.0, 1.0, (K, n)) * np.asarray(scenario.sigma_y)
    noise_u = rng.normal(0.0, 1.0, (K, n)) * np.asarray(scenario.sigma_u)
    if not scenario.noise:
        noise_y[:] = 0.0
        noise_u[:] = 0.0

    # Sample-aligned events (fault steps, disturbance onset) are resolved on
    # the integer sample grid so that floating-point time never flips them.
    eps = 1e-9 * Ts

    def dist(t):
        return disturbance(t) if disturbance is not None else scenario.disturbance_at(t)

    q, _, _ = traj(0.0)
    qd = np.zeros(n)
    integral = np.zeros(n)
    y_prev = None
    out = {c: np.empty(K) for c in CHANNELS}
    exact = {k: np.empty((K, n)) for k in ("q", "qd", "qdd", "u_applied")}

    for k in range(K):
        t = k * Ts
        y = q + noise_y[k]
        yd = np.zeros(n) if y_prev is None else (y - y_prev) / Ts
        y_prev = y
        ref = traj(t)
        u, integral = controller_step(model, y, yd, ref, integral, gains, Ts)
        u_applied = u + noise_u[k]
        f = np.atleast_1d(faults(t + eps))
        d_now = dist(t + eps)

        exact["q"][k], exact["qd"][k], exact["u_applied"][k] = q, qd, u_applied
        exact["qdd"][k] = forward_dynamics(model, RobotState(q, qd), u_applied, f, d_now)

        fest = est.update(y, u_applied) if est is not None else None
        row = out
        row["t"][k] = t
        for i in range(n):
            row[f"y{i + 1}"][k] = y[i]
            row[f"y{i + 1}s"][k] = ref[0][i]
            row[f"u{i + 1}"][k] = u[i]
            row[f"noise_y{i + 1}"][k] = noise_y[k, i]
            row[f"noise_u{i + 1}"][k] = noise_u[k, i]
        row["d"][k] = d_now
        row["f1"][k], row["f2"][k] = f[0], f[1]
        if fest is None:
            row["fest1"][k] = row["fest2"][k] = np.nan
        else:
            row["fest1"][k], row["fest2"][k] = fest[0], fest[1]

        try:
            with np.errstate(over="raise", invalid="raise"):
                q, qd = _rk4_interval(
                    model, q, qd, u_applied, f, dist, t, Ts / scenario.substeps, scenario.substeps, eps
                )
        except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
            raise SimulationDiverged(f"integration failed after t={t:.6g} s: {exc}") from exc
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qd))):
            raise SimulationDiverged(f"non-finite plant state after t={t + Ts:.6g} s: q={q}, qd={qd}")

    return RunRecord(channels=out, exact=exact)
