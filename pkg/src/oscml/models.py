"""Concrete regression models and the supervised training/evaluation harness.

Three surrogate architectures are provided: a dense network that maps
per-sample pendulum features to the angle, and CNN / LSTM models that map a
discretized potential (length-500 sequence) to the ground-state energy. A
fourth kind, a small tanh MLP, is the smooth scalar->scalar network used for
physics-informed training.

Feature caveat: the pendulum feature row includes same-timestep omega and
torques, from which the angle is partially recoverable algebraically
(spring torque = -k theta). The regression task is therefore easy by
construction; it is kept in this form deliberately, and results should be
read with that leakage in mind.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import nn
from .pendulum import Trajectory, TORQUE_COLUMNS
from .quantum import QuantumDataset


class ConfigError(ValueError):
    """Invalid configuration value or unusable dataset."""


class TrainingError(RuntimeError):
    """Training aborted (non-finite loss)."""


class DegenerateMetricsError(ValueError):
    """R^2 is undefined because the targets are constant."""


NETWORK_KINDS = ("pendulum_ann", "quantum_cnn", "quantum_lstm", "pinn_mlp")

# fixed feature order for the pendulum regression task
PENDULUM_FEATURES = ("t", "omega") + TORQUE_COLUMNS


@dataclass(frozen=True)
class NetworkSpec:
    """Declarative architecture description, resolvable by build()."""

    kind: str
    in_dim: int = 1                     # feature count (dense) or channels (conv/lstm)
    hidden: tuple = (64, 64, 32)        # dense widths before the scalar head
    filters: tuple = (16, 32)           # conv stack
    kernel_widths: tuple = (7, 5)
    head: int = 32                      # dense width after conv/lstm
    units: int = 64                     # lstm state size

    def __post_init__(self):
        if self.kind not in NETWORK_KINDS:
            raise ConfigError(
                f"unknown network kind {self.kind!r}; expected one of {NETWORK_KINDS}")
        if self.in_dim < 1:
            raise ConfigError(f"in_dim must be positive, got {self.in_dim}")
        if self.kind == "quantum_cnn" and len(self.filters) != len(self.kernel_widths):
            raise ConfigError("filters and kernel_widths must pair up")

    @classmethod
    def pendulum_ann(cls):
        return cls(kind="pendulum_ann", in_dim=len(PENDULUM_FEATURES), hidden=(64, 64, 32))

    @classmethod
    def quantum_cnn(cls):
        return cls(kind="quantum_cnn", in_dim=1)

    @classmethod
    def quantum_lstm(cls):
        return cls(kind="quantum_lstm", in_dim=1)

    @classmethod
    def pinn_mlp(cls):
        return cls(kind="pinn_mlp", in_dim=1, hidden=(32, 32))


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    max_epochs: int = 500
    batch_size: int = 32
    early_stop_patience: int = 25
    early_stop_min_delta: float = 1e-6
    seed: int = 0
    loss: str = "mse"

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.early_stop_patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.early_stop_patience}")
        if self.early_stop_min_delta < 0:
            raise ConfigError("min_delta must be nonnegative")
        if self.loss != "mse":
            raise ConfigError(f"only MSE loss is supported, got {self.loss!r}")


@dataclass
class History:
    train_loss: list
    val_loss: list
    stopped_epoch: int

    def __post_init__(self):
        if len(self.train_loss) != len(self.val_loss):
            raise ValueError("history columns must have equal length")
        if self.stopped_epoch != len(self.train_loss):
            raise ValueError("stopped_epoch must equal the number of recorded epochs")


@dataclass(frozen=True)
class Metrics:
    mae: float
    r_squared: float

    def __post_init__(self):
        if self.mae < 0:
            raise ValueError("mae must be nonnegative")
        if self.r_squared > 1 + 1e-12:
            raise ValueError("r_squared cannot exceed 1")


@dataclass(frozen=True)
class SupervisedSet:
    """Feature matrix (rows, features) with targets (rows, outputs)."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.targets.ndim != 2:
            raise ConfigError("inputs and targets must be 2-D arrays")
        if len(self.inputs) != len(self.targets):
            raise ConfigError("inputs and targets must have the same row count")
        if len(self.inputs) == 0:
            raise ConfigError("supervised set is empty")

    @property
    def n_rows(self) -> int:
        return len(self.inputs)


@dataclass(frozen=True)
class Standardizer:
    """Per-column z-scoring, fit on the training split only.

    With shared_input_stats all feature columns use one global mean/std;
    used for the potential curves so their shape is preserved.
    """

    input_mean: np.ndarray
    input_std: np.ndarray
    target_mean: np.ndarray
    target_std: np.ndarray
    shared_input_stats: bool = False

    def apply_inputs(self, X: np.ndarray) -> np.ndarray:
        return (X - self.input_mean) / self.input_std

    def apply_targets(self, y: np.ndarray) -> np.ndarray:
        return (y - self.target_mean) / self.target_std

    def inverse_apply(self, y_std: np.ndarray) -> np.ndarray:
        """Map standardized targets back to the original scale."""
        return y_std * self.target_std + self.target_mean

    def apply(self, sset: SupervisedSet) -> SupervisedSet:
        return SupervisedSet(self.apply_inputs(sset.inputs),
                             self.apply_targets(sset.targets))


def fit_standardizer(train_inputs: np.ndarray, train_targets: np.ndarray,
                     shared_input_stats: bool = False) -> Standardizer:
    X = np.asarray(train_inputs, dtype=np.float64)
    y = np.asarray(train_targets, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 2 or len(X) != len(y) or len(X) == 0:
        raise ConfigError("standardizer needs a nonempty 2-D training split")
    if shared_input_stats:
        mu = float(X.mean())
        sd = float(X.std())
        if sd <= 0:
            raise ConfigError("all feature values identical; cannot standardize")
        in_mean = np.full(X.shape[1], mu)
        in_std = np.full(X.shape[1], sd)
    else:
        in_mean = X.mean(axis=0)
        in_std = X.std(axis=0)
        dead = np.flatnonzero(in_std <= 0)
        if dead.size:
            raise ConfigError(f"feature column {int(dead[0])} has zero variance")
    t_mean = y.mean(axis=0)
    t_std = y.std(axis=0)
    dead = np.flatnonzero(t_std <= 0)
    if dead.size:
        raise ConfigError(f"target column {int(dead[0])} has zero variance")
    return Standardizer(in_mean, in_std, t_mean, t_std, shared_input_stats)


def build(spec: NetworkSpec, seed: int) -> nn.Network:
    """Materialize a NetworkSpec into an initialized Network."""
    rng = np.random.default_rng(seed)
    layers = []
    if spec.kind in ("pendulum_ann", "pinn_mlp"):
        act = nn.ReLU if spec.kind == "pendulum_ann" else nn.Tanh
        prev = spec.in_dim
        for width in spec.hidden:
            layers.append(nn.Dense(prev, width, rng))
            layers.append(act())
            prev = width
        layers.append(nn.Dense(prev, 1, rng))
        layout = "flat"
    elif spec.kind == "quantum_cnn":
        prev_ch = spec.in_dim
        for n_filt, width in zip(spec.filters, spec.kernel_widths):
            layers.append(nn.Conv1D(prev_ch, n_filt, width, rng, padding="same"))
            layers.append(nn.ReLU())
            prev_ch = n_filt
        layers.append(nn.GlobalAvgPool1D())
        layers.append(nn.Dense(prev_ch, spec.head, rng))
        layers.append(nn.ReLU())
        layers.append(nn.Dense(spec.head, 1, rng))
        layout = "sequence"
    elif spec.kind == "quantum_lstm":
        layers.append(nn.LSTM(spec.in_dim, spec.units, rng))
        layers.append(nn.Dense(spec.units, spec.head, rng))
        layers.append(nn.ReLU())
        layers.append(nn.Dense(spec.head, 1, rng))
        layout = "sequence"
    else:  # unreachable: NetworkSpec validates kind
        raise ConfigError(f"unknown network kind {spec.kind!r}")
    descriptor = {"kind": spec.kind, "layout": layout, "seed": int(seed),
                  "spec": asdict(spec)}
    return nn.Network(layers, descriptor=descriptor)


def _shape_for_net(net: nn.Network, X: np.ndarray) -> np.ndarray:
    """Feature matrices feed dense stacks directly; sequence models read
    each row as a single-channel series."""
    if net.descriptor.get("layout") == "sequence":
        return X[:, :, None]
    return X


def predict(net: nn.Network, X: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Forward pass in chunks (bounds LSTM cache memory)."""
    outs = []
    shaped = _shape_for_net(net, X)
    for start in range(0, len(shaped), chunk):
        outs.append(net.forward(shaped[start : start + chunk]))
    return np.concatenate(outs, axis=0)


def _mse(pred: np.ndarray, target: np.ndarray) -> float:
    d = pred - target
    return float(np.mean(d * d))


def train(net: nn.Network, train_set: SupervisedSet, val_set: SupervisedSet,
          cfg: TrainConfig) -> tuple:
    """Mini-batch Adam on MSE with early stopping on validation loss.

    Expects standardized splits. Keeps the parameters from the epoch with
    the best validation loss and restores them before returning, so the
    result is never worse on validation than anything seen during training.
    Returns (net, History).
    """
    rng = np.random.default_rng(cfg.seed)
    opt = nn.Adam(net.params(), cfg.lr)
    X = train_set.inputs
    y = train_set.targets
    n = len(X)

    best_val = np.inf
    best_params = [p.copy() for p in net.params()]
    wait = 0
    train_losses: list = []
    val_losses: list = []

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        try:
            for start in range(0, n, cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                xb = _shape_for_net(net, X[idx])
                tb = y[idx]
                pred = net.forward(xb)
                diff = pred - tb
                loss = float(np.mean(diff * diff))
                epoch_loss += loss * len(idx)
                net.zero_grads()
                net.backward(2.0 * diff / diff.size)
                opt.step(net.grads())
            val_loss = _mse(predict(net, val_set.inputs), val_set.targets)
        except nn.NumericsError as exc:
            raise TrainingError(f"non-finite values at epoch {epoch}: {exc}") from exc
        epoch_loss /= n
        if not (np.isfinite(epoch_loss) and np.isfinite(val_loss)):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        train_losses.append(epoch_loss)
        val_losses.append(val_loss)

        if val_loss < best_val - cfg.early_stop_min_delta:
            best_val = val_loss
            best_params = [p.copy() for p in net.params()]
            wait = 0
        else:
            wait += 1
            if wait >= cfg.early_stop_patience:
                break

    for p, bp in zip(net.params(), best_params):
        p[...] = bp
    return net, History(train_losses, val_losses, stopped_epoch=len(train_losses))


def evaluate(net: nn.Network, test_set: SupervisedSet,
             standardizer: Standardizer) -> Metrics:
    """MAE and R^2 on the original target scale.

    test_set holds raw (unstandardized) rows; inputs are standardized for
    the forward pass and predictions inverse-transformed before scoring.
    """
    preds = standardizer.inverse_apply(
        predict(net, standardizer.apply_inputs(test_set.inputs)))
    truth = test_set.targets
    mae = float(np.mean(np.abs(preds - truth)))
    ss_res = float(np.sum((truth - preds) ** 2))
    ss_tot = float(np.sum((truth - truth.mean(axis=0)) ** 2))
    if ss_tot == 0.0:
        raise DegenerateMetricsError("targets are constant; R^2 is undefined")
    return Metrics(mae=mae, r_squared=1.0 - ss_res / ss_tot)


def make_pendulum_features(traj: Trajectory) -> SupervisedSet:
    """One row per trajectory sample; columns (t, omega, gravity, spring,
    damping, external, air torque), target theta."""
    if traj.n_samples == 0:
        raise ConfigError("trajectory is empty")
    inputs = np.column_stack([traj.t, traj.omega, traj.torques])
    targets = traj.theta[:, None].copy()
    return SupervisedSet(inputs, targets)


def make_quantum_features(ds: QuantumDataset) -> SupervisedSet:
    """Potential curve as features, ground-state energy as target."""
    if ds.n_rows == 0:
        raise ConfigError("quantum dataset is empty")
    return SupervisedSet(ds.potentials.copy(), ds.energies[:, :1].copy())
