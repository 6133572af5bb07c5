"""Physics-informed training for the pendulum and the harmonic oscillator.

The network (a smooth Dense+Tanh stack mapping one scalar to one scalar) is
trained on L_total = L_data + L_phys, where L_phys is the mean squared
residual of the governing equation evaluated at collocation points. The
residual needs exact first and second input derivatives, which come from the
Dual2 forward-mode path; parameter gradients of the residual loss are then
obtained by hand-written reverse passes through the (value, d1, d2) triple.

The quantum problem carries a trainable energy E and, because its residual
alone is minimized by psi == 0, an itemized normalization penalty
(sum psi^2 dx - 1)^2. The data/physics split is logged per epoch so the two
can be monitored individually; with both terms weighted 1:1 the total loss
tends to flatten after the initial drop rather than keep descending, which
is expected behavior here, not a bug.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import nn
from .models import ConfigError, TrainConfig, TrainingError
from .pendulum import PendulumParams, Trajectory

PENDULUM_LOG_COLUMNS = ("epoch", "data_loss", "phys_loss", "penalty", "total")
QUANTUM_LOG_COLUMNS = PENDULUM_LOG_COLUMNS + ("energy",)


@dataclass(frozen=True)
class PinnLossReport:
    """Itemized loss snapshot; total is always the exact sum of the parts."""

    epoch: int
    data_loss: float
    phys_loss: float
    penalty: float
    total: float
    energy: float | None = None

    def __post_init__(self):
        parts = self.data_loss + self.phys_loss + self.penalty
        if not math.isclose(self.total, parts, rel_tol=1e-12, abs_tol=1e-15):
            raise ValueError(f"total {self.total!r} != itemized sum {parts!r}")


@dataclass
class PendulumPinnProblem:
    """Fit theta(t): data misfit on simulated samples plus the equation
    residual m l^2 th'' + b th' + k th + m g l sin th - T0 cos(w t) - c th'^2
    at collocation times."""

    net: nn.Network
    params: PendulumParams
    data_t: np.ndarray
    data_theta: np.ndarray
    collocation_t: np.ndarray

    def __post_init__(self):
        self.data_t = np.asarray(self.data_t, dtype=np.float64)
        self.data_theta = np.asarray(self.data_theta, dtype=np.float64)
        self.collocation_t = np.asarray(self.collocation_t, dtype=np.float64)
        if self.data_t.size == 0 or self.data_t.shape != self.data_theta.shape:
            raise ConfigError("data_t and data_theta must be matching nonempty arrays")
        if self.collocation_t.size == 0:
            raise ConfigError("collocation set is empty")
        lo, hi = self.data_t.min(), self.data_t.max()
        if self.collocation_t.min() < lo - 1e-12 or self.collocation_t.max() > hi + 1e-12:
            raise ConfigError(
                f"collocation points must lie inside the data domain [{lo}, {hi}]")


@dataclass
class QuantumPinnProblem:
    """Fit psi(x) for -0.5 psi'' + 0.5 x^2 psi = E psi with trainable E.

    The potential is fixed to the harmonic 0.5 x^2 (m = omega = 1); the
    collocation grid must be uniform (the penalty integrates psi^2 with its
    spacing) and symmetric about 0.
    """

    net: nn.Network
    collocation_x: np.ndarray
    energy: float = 0.51

    def __post_init__(self):
        self.collocation_x = np.asarray(self.collocation_x, dtype=np.float64)
        x = self.collocation_x
        if x.size < 2:
            raise ConfigError("need at least two collocation points")
        steps = np.diff(x)
        if not np.all(steps > 0):
            raise ConfigError("collocation points must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ConfigError("collocation grid must be uniform")
        if not np.allclose(x, -x[::-1], rtol=0.0, atol=1e-9 * max(1.0, abs(x[-1]))):
            raise ConfigError("collocation grid must be symmetric about 0")
        if not math.isfinite(self.energy):
            raise ConfigError("energy must be finite")

    @property
    def dx(self) -> float:
        return float(self.collocation_x[1] - self.collocation_x[0])


def make_pendulum_problem(net: nn.Network, params: PendulumParams,
                          traj: Trajectory, n_collocation: int = 300) -> PendulumPinnProblem:
    if n_collocation < 1:
        raise ConfigError("n_collocation must be positive")
    colloc = np.linspace(traj.t[0], traj.t[-1], n_collocation)
    return PendulumPinnProblem(net=net, params=params, data_t=traj.t.copy(),
                               data_theta=traj.theta.copy(), collocation_t=colloc)


def make_quantum_problem(net: nn.Network, energy: float = 0.51,
                         x_max: float = 5.0, n_collocation: int = 201) -> QuantumPinnProblem:
    if n_collocation < 2:
        raise ConfigError("need at least two collocation points")
    colloc = np.linspace(-x_max, x_max, n_collocation)
    return QuantumPinnProblem(net=net, collocation_x=colloc, energy=energy)


def pendulum_residual(net: nn.Network, t, p: PendulumParams):
    """Equation-of-motion residual at time(s) t for the network's theta(t)."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    y, y1, y2 = nn.input_derivatives(net, t_arr)
    r = (p.m * p.l**2 * y2 + p.b * y1 + p.k * y + p.m * p.g * p.l * np.sin(y)
         - p.T0 * np.cos(p.omega_ext * t_arr) - p.c * y1 * y1)
    if np.isscalar(t) or np.asarray(t).ndim == 0:
        return float(r[0])
    return r


def quantum_residual(net: nn.Network, energy: float, x):
    """-0.5 psi'' + 0.5 x^2 psi - E psi at point(s) x."""
    x_arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y, _, y2 = nn.input_derivatives(net, x_arr)
    r = -0.5 * y2 + (0.5 * x_arr * x_arr - energy) * y
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(r[0])
    return r


def _pendulum_pass(problem: PendulumPinnProblem, with_grads: bool):
    net = problem.net
    p = problem.params
    pred = net.forward(problem.data_t[:, None])
    diff = pred - problem.data_theta[:, None]
    data_loss = float(np.mean(diff * diff))

    t_col = problem.collocation_t[:, None]
    out = net.dual2_forward(nn.Dual2.variable(t_col))
    y, y1, y2 = out.val, out.d1, out.d2
    r = (p.m * p.l**2 * y2 + p.b * y1 + p.k * y + p.m * p.g * p.l * np.sin(y)
         - p.T0 * np.cos(p.omega_ext * t_col) - p.c * y1 * y1)
    phys_loss = float(np.mean(r * r))

    if with_grads:
        net.zero_grads()
        net.backward(2.0 * diff / diff.size)
        c = 2.0 * r / r.size
        net.dual2_backward(
            c * (p.k + p.m * p.g * p.l * np.cos(y)),
            c * (p.b - 2.0 * p.c * y1),
            c * (p.m * p.l**2),
        )
    return data_loss, phys_loss


def _quantum_pass(problem: QuantumPinnProblem, energy: float, with_grads: bool):
    net = problem.net
    x = problem.collocation_x[:, None]
    out = net.dual2_forward(nn.Dual2.variable(x))
    y, y2 = out.val, out.d2
    v_minus_e = 0.5 * x * x - energy
    r = -0.5 * y2 + v_minus_e * y
    phys_loss = float(np.mean(r * r))
    dxs = problem.dx
    norm = float(np.sum(y * y)) * dxs
    penalty = (norm - 1.0) ** 2

    grad_e = 0.0
    if with_grads:
        net.zero_grads()
        c = 2.0 * r / r.size
        gval = c * v_minus_e + 4.0 * (norm - 1.0) * dxs * y
        net.dual2_backward(gval, np.zeros_like(y), -0.5 * c)
        grad_e = float(np.sum(c * (-y)))
    return phys_loss, penalty, grad_e


def pinn_loss(problem, epoch: int = 0) -> PinnLossReport:
    """Itemized loss at the problem's current parameters (no gradients)."""
    if isinstance(problem, PendulumPinnProblem):
        data_loss, phys_loss = _pendulum_pass(problem, with_grads=False)
        return PinnLossReport(epoch, data_loss, phys_loss, 0.0,
                              data_loss + phys_loss)
    if isinstance(problem, QuantumPinnProblem):
        phys_loss, penalty, _ = _quantum_pass(problem, problem.energy, with_grads=False)
        return PinnLossReport(epoch, 0.0, phys_loss, penalty,
                              phys_loss + penalty, energy=problem.energy)
    raise ConfigError(f"unknown problem type {type(problem).__name__}")


def train_pinn(problem, cfg: TrainConfig, log_every: int = 100):
    """Full-batch Adam on the itemized physics loss.

    Logs a PinnLossReport at epoch 0 and every log_every epochs, each
    evaluated before that epoch's update. Early stopping and batching do not
    apply; cfg contributes lr and max_epochs. Returns (net, reports).
    """
    if log_every < 1:
        raise ConfigError(f"log_every must be >= 1, got {log_every}")
    is_quantum = isinstance(problem, QuantumPinnProblem)
    if not is_quantum and not isinstance(problem, PendulumPinnProblem):
        raise ConfigError(f"unknown problem type {type(problem).__name__}")

    net = problem.net
    params = list(net.params())
    if is_quantum:
        e_param = np.array([float(problem.energy)])
        params.append(e_param)
    opt = nn.Adam(params, cfg.lr)

    reports: list = []
    for epoch in range(cfg.max_epochs):
        try:
            if is_quantum:
                energy = float(e_param[0])
                phys_loss, penalty, grad_e = _quantum_pass(problem, energy, True)
                data_loss = 0.0
                total = phys_loss + penalty
                grads = list(net.grads()) + [np.array([grad_e])]
            else:
                data_loss, phys_loss = _pendulum_pass(problem, True)
                penalty = 0.0
                total = data_loss + phys_loss
                grads = list(net.grads())
        except nn.NumericsError as exc:
            last = reports[-1] if reports else None
            raise TrainingError(
                f"non-finite loss at epoch {epoch}; last finite report: {last}") from exc
        if not math.isfinite(total):
            last = reports[-1] if reports else None
            raise TrainingError(
                f"non-finite loss at epoch {epoch}; last finite report: {last}")
        if epoch % log_every == 0:
            reports.append(PinnLossReport(
                epoch, data_loss, phys_loss, penalty, total,
                energy=float(e_param[0]) if is_quantum else None))
        opt.step(grads)

    if is_quantum:
        problem.energy = float(e_param[0])
    return net, reports
