"""Multi-force pendulum simulation with a fixed-step RK4 integrator.

The pendulum carries gravity, a torsional spring, linear damping, a periodic
external drive and quadratic air resistance:

    m l^2 theta'' + b theta' + k theta + m g l sin(theta)
        = T0 cos(omega_ext t) + c theta'^2

Everything here is pure 64-bit float arithmetic over value inputs, so the
functions are safe to call from multiple threads and a given input always
produces a bit-identical trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Column order of Trajectory.torques and of the trajectory CSV torque block.
TORQUE_COLUMNS = ("gravity", "spring", "damping", "external", "air")

# |theta| or |omega| beyond this aborts the integration as divergent.
BLOWUP_LIMIT = 1e6


class IntegrationError(RuntimeError):
    """A single RK4 step produced a non-finite intermediate value."""

    def __init__(self, t: float):
        super().__init__(f"non-finite intermediate in RK4 step starting at t={t!r}")
        self.t = t


class BlowUpError(RuntimeError):
    """The simulated state exceeded the divergence guard."""

    def __init__(self, step: int, t: float):
        super().__init__(
            f"state exceeded |value| > {BLOWUP_LIMIT:g} at step {step} (t={t:.6g})"
        )
        self.step = step
        self.t = t


@dataclass(frozen=True)
class PendulumParams:
    """Physical constants of the pendulum.

    Defaults are the reference simulation setup used throughout this
    package: a 1 kg bob on a 1 m rod, light damping and torsion, a 0.3 N m
    drive at 1 rad/s, and a small quadratic air-resistance term.
    """

    m: float = 1.0           # bob mass (kg)
    l: float = 1.0           # rod length (m)
    b: float = 0.05          # damping coefficient (kg m^2/s)
    k: float = 0.5           # torsional spring constant (N m/rad)
    g: float = 9.81          # gravity (m/s^2)
    T0: float = 0.3          # external torque amplitude (N m)
    omega_ext: float = 1.0   # external torque angular frequency (rad/s)
    c: float = 0.02          # quadratic air-resistance coefficient (kg m^2/rad^2)

    def __post_init__(self):
        vals = (self.m, self.l, self.b, self.k, self.g, self.T0, self.omega_ext, self.c)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("pendulum parameters must all be finite")
        if self.m <= 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        if self.l <= 0:
            raise ValueError(f"rod length must be positive, got {self.l}")


@dataclass(frozen=True)
class PendulumState:
    """Instantaneous (theta, omega) state in rad and rad/s."""

    theta: float
    omega: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.omega)):
            raise ValueError(f"state must be finite, got {self.theta}, {self.omega}")


@dataclass(frozen=True)
class TorqueBreakdown:
    """Per-term torques (N m), signs as they appear on the acceleration side.

    The five components sum to m l^2 * domega/dt, i.e. every term of the
    equation of motion except inertia moved to the right-hand side.
    """

    gravity: float
    spring: float
    damping: float
    external: float
    air: float

    def total(self) -> float:
        return self.gravity + self.spring + self.damping + self.external + self.air

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.gravity, self.spring, self.damping, self.external, self.air]
        )


@dataclass
class Trajectory:
    """Uniformly sampled simulation output.

    torques has one row per sample with columns ordered as TORQUE_COLUMNS.
    """

    t: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    torques: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        if not (len(self.theta) == len(self.omega) == self.torques.shape[0] == n):
            raise ValueError("trajectory arrays must share the sample count")

    @property
    def n_samples(self) -> int:
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


def pendulum_rhs(
    t: float, state: PendulumState, p: PendulumParams
) -> tuple[float, float]:
    """Right-hand side of the first-order system: (dtheta/dt, domega/dt)."""
    if not math.isfinite(t):
        raise ValueError(f"time must be finite, got {t}")
    theta, omega = state.theta, state.omega
    inertia = p.m * p.l * p.l
    domega = (
        -p.b * omega
        - p.k * theta
        - p.m * p.g * p.l * math.sin(theta)
        + p.T0 * math.cos(p.omega_ext * t)
        + p.c * omega * omega
    ) / inertia
    return omega, domega


def torque_components(
    t: float, state: PendulumState, p: PendulumParams
) -> TorqueBreakdown:
    """Split the net torque at (t, state) into its five physical terms."""
    if not math.isfinite(t):
        raise ValueError(f"time must be finite, got {t}")
    theta, omega = state.theta, state.omega
    return TorqueBreakdown(
        gravity=-p.m * p.g * p.l * math.sin(theta),
        spring=-p.k * theta,
        damping=-p.b * omega,
        external=p.T0 * math.cos(p.omega_ext * t),
        air=p.c * omega * omega,
    )


def rk4_step(
    state: PendulumState, t: float, dt: float, p: PendulumParams
) -> PendulumState:
    """Advance one classical RK4 step of size dt from time t."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    th, om = state.theta, state.omega

    def rhs(ti, thi, omi):
        if not (math.isfinite(thi) and math.isfinite(omi)):
            raise IntegrationError(t)
        return pendulum_rhs(ti, PendulumState(thi, omi), p)

    k1t, k1o = rhs(t, th, om)
    k2t, k2o = rhs(t + dt / 2, th + dt * k1t / 2, om + dt * k1o / 2)
    k3t, k3o = rhs(t + dt / 2, th + dt * k2t / 2, om + dt * k2o / 2)
    k4t, k4o = rhs(t + dt, th + dt * k3t, om + dt * k3o)

    theta = th + dt * (k1t + 2 * k2t + 2 * k3t + k4t) / 6
    omega = om + dt * (k1o + 2 * k2o + 2 * k3o + k4o) / 6
    if not (math.isfinite(theta) and math.isfinite(omega)):
        raise IntegrationError(t)
    return PendulumState(theta, omega)


def simulate(
    p: PendulumParams, init: PendulumState, t_end: float, dt: float
) -> Trajectory:
    """Integrate from t=0 to t_end with fixed step dt.

    t_end must be an integer multiple of dt (to 1e-9 relative); the result
    has n_steps + 1 samples including the initial condition, with per-term
    torques evaluated at every sample.
    """
    if t_end <= 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    ratio = t_end / dt
    n_steps = round(ratio)
    if n_steps < 1 or abs(ratio - n_steps) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"t_end={t_end} is not an integer multiple of dt={dt}")

    n = n_steps + 1
    t = np.arange(n) * dt
    theta = np.empty(n)
    omega = np.empty(n)
    torques = np.empty((n, len(TORQUE_COLUMNS)))

    state = init
    theta[0], omega[0] = state.theta, state.omega
    torques[0] = torque_components(0.0, state, p).as_array()
    for i in range(n_steps):
        state = rk4_step(state, i * dt, dt, p)
        if abs(state.theta) > BLOWUP_LIMIT or abs(state.omega) > BLOWUP_LIMIT:
            raise BlowUpError(step=i + 1, t=(i + 1) * dt)
        theta[i + 1], omega[i + 1] = state.theta, state.omega
        torques[i + 1] = torque_components((i + 1) * dt, state, p).as_array()

    return Trajectory(t=t, theta=theta, omega=omega, torques=torques)
