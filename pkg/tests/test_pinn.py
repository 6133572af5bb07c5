import math

import numpy as np
import pytest

from oscml import nn
from oscml.models import ConfigError, NetworkSpec, TrainConfig, TrainingError, build
from oscml.pendulum import PendulumParams, PendulumState, simulate
from oscml.pinn import (
    PENDULUM_LOG_COLUMNS,
    PendulumPinnProblem,
    PinnLossReport,
    QUANTUM_LOG_COLUMNS,
    QuantumPinnProblem,
    make_pendulum_problem,
    make_quantum_problem,
    pendulum_residual,
    pinn_loss,
    quantum_residual,
    train_pinn,
)

PARAMS = PendulumParams()


def zero_net():
    net = build(NetworkSpec(kind="pinn_mlp", in_dim=1, hidden=(4,)), seed=0)
    for p in net.params():
        p[:] = 0.0
    return net


def small_net(seed=0, hidden=(8, 8)):
    return build(NetworkSpec(kind="pinn_mlp", in_dim=1, hidden=hidden), seed=seed)


class _GaussLayer(nn.Layer):
    """Analytic exp(-x^2/2) unit used as a known-derivative oracle."""

    name = "gauss"

    def forward(self, x):
        return np.exp(-0.5 * x * x)

    def backward(self, gy):  # pragma: no cover - not exercised
        raise NotImplementedError

    def dual2_forward(self, d):
        return (d * d * (-0.5)).exp()


def gauss_net():
    return nn.Network([_GaussLayer()])


def short_problem(seed=0, n_col=15):
    traj = simulate(PARAMS, PendulumState(0.1, 0.0), 2.0, 0.1)
    return make_pendulum_problem(small_net(seed), PARAMS, traj, n_collocation=n_col)


class TestReport:
    def test_total_must_be_itemized_sum(self):
        PinnLossReport(0, 1.0, 2.0, 0.5, 3.5)
        with pytest.raises(ValueError):
            PinnLossReport(0, 1.0, 2.0, 0.5, 3.4)

    def test_log_column_names(self):
        assert PENDULUM_LOG_COLUMNS == ("epoch", "data_loss", "phys_loss",
                                        "penalty", "total")
        assert QUANTUM_LOG_COLUMNS[-1] == "energy"


class TestProblemValidation:
    def test_pendulum_collocation_must_stay_in_data_domain(self):
        traj = simulate(PARAMS, PendulumState(0.1, 0.0), 1.0, 0.1)
        with pytest.raises(ConfigError, match="domain"):
            PendulumPinnProblem(net=zero_net(), params=PARAMS, data_t=traj.t,
                                data_theta=traj.theta,
                                collocation_t=np.array([0.5, 1.5]))

    def test_pendulum_data_shape_mismatch(self):
        with pytest.raises(ConfigError):
            PendulumPinnProblem(net=zero_net(), params=PARAMS,
                                data_t=np.array([0.0, 1.0]),
                                data_theta=np.array([0.1]),
                                collocation_t=np.array([0.5]))

    def test_quantum_grid_must_be_uniform(self):
        with pytest.raises(ConfigError, match="uniform"):
            QuantumPinnProblem(net=zero_net(),
                               collocation_x=np.array([-1.0, -0.4, 0.4, 1.0]))

    def test_quantum_grid_must_be_symmetric(self):
        with pytest.raises(ConfigError, match="symmetric"):
            QuantumPinnProblem(net=zero_net(),
                               collocation_x=np.array([-0.5, 0.0, 0.5, 1.0]))

    def test_quantum_grid_must_increase(self):
        with pytest.raises(ConfigError):
            QuantumPinnProblem(net=zero_net(),
                               collocation_x=np.array([1.0, 0.0, -1.0]))

    def test_quantum_needs_two_points(self):
        with pytest.raises(ConfigError):
            QuantumPinnProblem(net=zero_net(), collocation_x=np.array([0.0]))

    def test_factories(self):
        traj = simulate(PARAMS, PendulumState(0.1, 0.0), 2.0, 0.1)
        prob = make_pendulum_problem(zero_net(), PARAMS, traj, n_collocation=12)
        assert prob.collocation_t[0] == traj.t[0]
        assert prob.collocation_t[-1] == pytest.approx(traj.t[-1], abs=1e-12)
        assert len(prob.collocation_t) == 12

        qprob = make_quantum_problem(zero_net())
        assert qprob.energy == 0.51
        assert len(qprob.collocation_x) == 201
        assert qprob.dx == pytest.approx(0.05, abs=1e-15)
        with pytest.raises(ConfigError):
            make_pendulum_problem(zero_net(), PARAMS, traj, n_collocation=0)


class TestResiduals:
    def test_zero_network_without_drive_satisfies_equation(self):
        p = PendulumParams(T0=0.0)
        r = pendulum_residual(zero_net(), np.linspace(0, 5, 11), p)
        assert np.array_equal(r, np.zeros(11))

    def test_zero_network_exposes_drive_term(self):
        ts = np.linspace(0.0, 6.0, 13)
        r = pendulum_residual(zero_net(), ts, PARAMS)
        assert np.allclose(r, -0.3 * np.cos(ts), rtol=0, atol=1e-15)
        scalar = pendulum_residual(zero_net(), 0.0, PARAMS)
        assert isinstance(scalar, float)
        assert scalar == pytest.approx(-0.3, abs=1e-15)

    def test_gaussian_is_harmonic_ground_state(self):
        # -0.5 y'' + 0.5 x^2 y = 0.5 y exactly, so the residual at E=0.5
        # vanishes and at E=0.6 equals -0.1 exp(-x^2/2)
        net = gauss_net()
        for x0 in (0.0, 1.0, -1.7):
            assert quantum_residual(net, 0.5, x0) == pytest.approx(0.0, abs=1e-14)
            expect = -0.1 * math.exp(-0.5 * x0 * x0)
            assert quantum_residual(net, 0.6, x0) == pytest.approx(expect, abs=1e-14)

    def test_quantum_residual_array_form(self):
        xs = np.linspace(-2, 2, 9)
        r = quantum_residual(gauss_net(), 0.6, xs)
        assert np.allclose(r, -0.1 * np.exp(-0.5 * xs * xs), atol=1e-14)


class TestLoss:
    def test_pendulum_composition(self):
        rep = pinn_loss(short_problem(), epoch=3)
        assert rep.epoch == 3
        assert rep.penalty == 0.0
        assert rep.energy is None
        assert rep.total == rep.data_loss + rep.phys_loss
        assert rep.data_loss > 0 and rep.phys_loss > 0

    def test_quantum_composition_against_gaussian(self):
        prob = make_quantum_problem(gauss_net(), energy=0.51, x_max=6.0,
                                    n_collocation=601)
        rep = pinn_loss(prob)
        y = np.exp(-0.5 * prob.collocation_x**2)
        norm = float(np.sum(y * y)) * prob.dx  # ~ sqrt(pi)
        assert rep.data_loss == 0.0
        assert rep.energy == 0.51
        assert rep.penalty == pytest.approx((norm - 1.0) ** 2, rel=1e-12)
        # residual is (0.5 - E) y pointwise
        assert rep.phys_loss == pytest.approx(0.01**2 * float(np.mean(y * y)),
                                              rel=1e-9)
        assert norm == pytest.approx(math.sqrt(math.pi), abs=1e-10)

    def test_unknown_problem_type(self):
        with pytest.raises(ConfigError):
            pinn_loss(object())


class TestGradients:
    def test_pendulum_parameter_gradients_match_fd(self):
        from oscml.pinn import _pendulum_pass

        prob = short_problem(seed=3)
        net = prob.net
        _pendulum_pass(prob, with_grads=True)
        analytic = [g.copy() for g in net.grads()]

        eps = 1e-6
        worst = 0.0
        fd_scale = 1.0
        for p, a in zip(net.params(), analytic):
            flat, af = p.reshape(-1), a.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                lp = pinn_loss(prob).total
                flat[i] = orig - eps
                lm = pinn_loss(prob).total
                flat[i] = orig
                fd = (lp - lm) / (2 * eps)
                worst = max(worst, abs(af[i] - fd))
                fd_scale = max(fd_scale, abs(fd))
        assert worst / fd_scale < 1e-5

    def test_quantum_parameter_and_energy_gradients_match_fd(self):
        from oscml.pinn import _quantum_pass

        net = small_net(seed=9, hidden=(6, 6))
        prob = make_quantum_problem(net, energy=0.55, x_max=3.0, n_collocation=31)
        _, _, grad_e = _quantum_pass(prob, prob.energy, with_grads=True)
        analytic = [g.copy() for g in net.grads()]

        eps = 1e-6
        worst, fd_scale = 0.0, 1.0
        for p, a in zip(net.params(), analytic):
            flat, af = p.reshape(-1), a.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                lp = pinn_loss(prob).total
                flat[i] = orig - eps
                lm = pinn_loss(prob).total
                flat[i] = orig
                fd = (lp - lm) / (2 * eps)
                worst = max(worst, abs(af[i] - fd))
                fd_scale = max(fd_scale, abs(fd))
        assert worst / fd_scale < 1e-5

        base = prob.energy
        prob.energy = base + eps
        lp = pinn_loss(prob).total
        prob.energy = base - eps
        lm = pinn_loss(prob).total
        prob.energy = base
        fd_e = (lp - lm) / (2 * eps)
        assert abs(grad_e - fd_e) / max(1.0, abs(fd_e)) < 1e-6


class TestTrainPinn:
    def test_logging_cadence(self):
        prob = short_problem(seed=1)
        _, reports = train_pinn(prob, TrainConfig(lr=1e-3, max_epochs=50, seed=0),
                                log_every=10)
        assert [r.epoch for r in reports] == [0, 10, 20, 30, 40]

    def test_epoch0_report_is_pre_update(self):
        prob_a = short_problem(seed=2)
        baseline = pinn_loss(prob_a)
        prob_b = short_problem(seed=2)
        _, reports = train_pinn(prob_b, TrainConfig(lr=1e-2, max_epochs=5, seed=0),
                                log_every=5)
        assert reports[0].total == baseline.total
        assert reports[0].epoch == 0

    def test_pendulum_loss_decreases(self):
        prob = short_problem(seed=4)
        _, reports = train_pinn(prob, TrainConfig(lr=1e-2, max_epochs=120, seed=0),
                                log_every=40)
        assert reports[-1].total < reports[0].total

    def test_quantum_energy_is_trainable_and_synced(self):
        net = small_net(seed=5, hidden=(8,))
        prob = make_quantum_problem(net, energy=0.51, x_max=3.0, n_collocation=41)
        _, reports = train_pinn(prob, TrainConfig(lr=1e-2, max_epochs=60, seed=0),
                                log_every=20)
        assert reports[0].energy == 0.51
        assert prob.energy != 0.51
        assert reports[-1].energy != 0.51
        assert all(math.isfinite(r.energy) for r in reports)

    def test_deterministic(self):
        outs = []
        for _ in range(2):
            prob = short_problem(seed=6)
            _, reports = train_pinn(prob, TrainConfig(lr=1e-3, max_epochs=30, seed=0),
                                    log_every=10)
            outs.append([(r.epoch, r.total) for r in reports])
        assert outs[0] == outs[1]

    def test_nonfinite_data_aborts_with_last_report(self):
        traj = simulate(PARAMS, PendulumState(0.1, 0.0), 1.0, 0.1)
        theta = traj.theta.copy()
        theta[3] = math.inf
        prob = PendulumPinnProblem(net=small_net(), params=PARAMS, data_t=traj.t,
                                   data_theta=theta,
                                   collocation_t=np.linspace(0, 1, 5))
        with np.errstate(all="ignore"), pytest.raises(TrainingError):
            train_pinn(prob, TrainConfig(lr=1e-3, max_epochs=5, seed=0))

    def test_log_every_validated(self):
        with pytest.raises(ConfigError):
            train_pinn(short_problem(), TrainConfig(lr=1e-3, max_epochs=5, seed=0),
                       log_every=0)
