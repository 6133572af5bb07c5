"""Minimal neural-network substrate on 64-bit numpy arrays.

Everything here is written out by hand: layer forward passes, reverse-mode
backward passes for parameter gradients, Adam, and a second-order
forward-mode number (Dual2) used to take exact first and second derivatives
of a network with respect to its scalar input. No autograd framework is
involved, which keeps every gradient checkable against finite differences.

Conventions:
  - batch is always the leading axis; single samples are promoted by the
    functional wrappers (dense_forward, ...) and squeezed back,
  - parameters and activations are float64,
  - any non-finite value produced by a layer raises NumericsError naming
    the layer instead of propagating silently.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "Tensor",
    "Dual2",
    "BuildError",
    "CapabilityError",
    "NumericsError",
    "StateError",
    "Layer",
    "Dense",
    "ReLU",
    "Tanh",
    "Conv1D",
    "GlobalAvgPool1D",
    "LSTM",
    "Network",
    "dense_forward",
    "conv1d_forward",
    "lstm_forward",
    "backward",
    "AdamState",
    "adam_step",
    "Adam",
    "input_derivatives",
]


class BuildError(ValueError):
    """Shape or configuration problem while assembling or feeding a network."""


class CapabilityError(TypeError):
    """Layer cannot provide the requested derivative path."""


class NumericsError(ArithmeticError):
    """A layer produced NaN or Inf."""


class StateError(RuntimeError):
    """Backward requested without a recorded forward pass."""


def _check_finite(arr: np.ndarray, where: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericsError(f"non-finite values in {where}")
    return arr


class Tensor:
    """Shaped container of 64-bit floats; entries validated finite."""

    __slots__ = ("array",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        _check_finite(arr, "Tensor")
        self.array = arr

    @classmethod
    def from_flat(cls, shape, flat):
        flat = np.asarray(flat, dtype=np.float64)
        n = int(np.prod(shape)) if len(shape) else 1
        if flat.ndim != 1 or flat.size != n:
            raise BuildError(f"flat data of length {flat.size} does not fill shape {tuple(shape)}")
        return cls(flat.reshape(shape))

    @property
    def shape(self) -> tuple:
        return self.array.shape

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view of the entries."""
        return self.array.reshape(-1)

    def __repr__(self):
        return f"Tensor(shape={self.shape})"


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[np.logical_not(pos)])
    out[np.logical_not(pos)] = ez / (1.0 + ez)
    return out


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


# ---------------------------------------------------------------------------
# Dual2: (value, d/dx, d2/dx2) with respect to one scalar input.
# Components may be numpy arrays, which vectorizes the derivative transport
# over a batch of scalar inputs.
# ---------------------------------------------------------------------------

class Dual2:
    """Second-order forward-mode number: value, first and second derivative."""

    __slots__ = ("val", "d1", "d2")

    def __init__(self, val, d1=0.0, d2=0.0):
        self.val = val
        self.d1 = d1
        self.d2 = d2

    @classmethod
    def variable(cls, x):
        """Seed x as the differentiation variable (d1 = 1, d2 = 0)."""
        x = np.asarray(x, dtype=np.float64)
        return cls(x, np.ones_like(x), np.zeros_like(x))

    def __add__(self, other):
        if isinstance(other, Dual2):
            return Dual2(self.val + other.val, self.d1 + other.d1, self.d2 + other.d2)
        return Dual2(self.val + other, self.d1, self.d2)

    __radd__ = __add__

    def __neg__(self):
        return Dual2(-self.val, -self.d1, -self.d2)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Dual2) else Dual2(-np.asarray(other, dtype=np.float64)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Dual2):
            return Dual2(
                self.val * other.val,
                self.d1 * other.val + self.val * other.d1,
                self.d2 * other.val + 2.0 * self.d1 * other.d1 + self.val * other.d2,
            )
        return Dual2(self.val * other, self.d1 * other, self.d2 * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual2):
            return self * other._reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def _reciprocal(self):
        inv = 1.0 / self.val
        # u(f) = 1/f: u' = -1/f^2, u'' = 2/f^3
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def _chain(self, u, du, ddu):
        """Compose an elementwise u(f) given u, u'(f), u''(f)."""
        return Dual2(u, du * self.d1, ddu * self.d1 * self.d1 + du * self.d2)

    def sin(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(c, -s, -c)

    def tanh(self):
        t = np.tanh(self.val)
        s = 1.0 - t * t
        return self._chain(t, s, -2.0 * t * s)

    def exp(self):
        e = np.exp(self.val)
        return self._chain(e, e, e)

    def __repr__(self):
        return f"Dual2({self.val!r}, d1={self.d1!r}, d2={self.d2!r})"


def dual_sin(d):
    return d.sin() if isinstance(d, Dual2) else np.sin(d)


def dual_cos(d):
    return d.cos() if isinstance(d, Dual2) else np.cos(d)


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------

class Layer:
    """Base layer: forward caches what backward needs; backward accumulates
    parameter gradients (callers zero them between steps) and returns the
    input gradient."""

    name = "layer"

    def params(self) -> list:
        return []

    def grads(self) -> list:
        return []

    def zero_grads(self) -> None:
        for g in self.grads():
            g[...] = 0.0

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, gy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # Second-order forward-mode path; only Dense and Tanh support it, which
    # restricts exact-input-derivative networks to smooth stacks.
    def dual2_forward(self, d: Dual2) -> Dual2:
        raise CapabilityError(f"{type(self).__name__} has no second-derivative path")

    def dual2_backward(self, gval, gd1, gd2):
        raise CapabilityError(f"{type(self).__name__} has no second-derivative path")


class Dense(Layer):
    """Affine map y = x W^T + b with W (out, in)."""

    name = "dense"

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        if in_dim < 1 or out_dim < 1:
            raise BuildError(f"dense dims must be positive, got {in_dim}->{out_dim}")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.W = _glorot(rng, (out_dim, in_dim), in_dim, out_dim)
        self.b = np.zeros(out_dim)
        self.gW = np.zeros_like(self.W)
        self.gb = np.zeros_like(self.b)
        self._x = None
        self._dual_cache = None

    def params(self):
        return [self.W, self.b]

    def grads(self):
        return [self.gW, self.gb]

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise BuildError(f"dense expected (batch, {self.in_dim}), got {x.shape}")
        self._x = x
        return x @ self.W.T + self.b

    def backward(self, gy):
        if self._x is None:
            raise StateError("dense backward before forward")
        x = self._x
        self.gW += gy.T @ x
        self.gb += gy.sum(axis=0)
        return gy @ self.W

    def dual2_forward(self, d):
        if d.val.ndim != 2 or d.val.shape[1] != self.in_dim:
            raise BuildError(f"dense expected (batch, {self.in_dim}), got {d.val.shape}")
        self._dual_cache = d
        wt = self.W.T
        return Dual2(d.val @ wt + self.b, d.d1 @ wt, d.d2 @ wt)

    def dual2_backward(self, gval, gd1, gd2):
        if self._dual_cache is None:
            raise StateError("dense dual2 backward before forward")
        d = self._dual_cache
        self.gW += gval.T @ d.val + gd1.T @ d.d1 + gd2.T @ d.d2
        self.gb += gval.sum(axis=0)
        return gval @ self.W, gd1 @ self.W, gd2 @ self.W


class ReLU(Layer):
    name = "relu"

    def __init__(self):
        self._mask = None

    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, gy):
        if self._mask is None:
            raise StateError("relu backward before forward")
        return np.where(self._mask, gy, 0.0)


class Tanh(Layer):
    name = "tanh"

    def __init__(self):
        self._y = None
        self._dual_cache = None

    def forward(self, x):
        self._y = np.tanh(x)
        return self._y

    def backward(self, gy):
        if self._y is None:
            raise StateError("tanh backward before forward")
        return gy * (1.0 - self._y * self._y)

    def dual2_forward(self, d):
        z = np.tanh(d.val)
        s = 1.0 - z * z
        out = Dual2(z, s * d.d1, s * d.d2 - 2.0 * z * s * d.d1 * d.d1)
        self._dual_cache = (d, z, s)
        return out

    def dual2_backward(self, gval, gd1, gd2):
        if self._dual_cache is None:
            raise StateError("tanh dual2 backward before forward")
        d, z, s = self._dual_cache
        a1, a2 = d.d1, d.d2
        # partials of (z, z1, z2) with respect to (a, a1, a2); z1 = s a1,
        # z2 = s a2 - 2 z s a1^2, and ds/da = -2 z s.
        ga = (
            gval * s
            + gd1 * (-2.0 * z * s * a1)
            + gd2 * (-2.0 * z * s * a2 - 2.0 * s * (s - 2.0 * z * z) * a1 * a1)
        )
        ga1 = gd1 * s + gd2 * (-4.0 * z * s * a1)
        ga2 = gd2 * s
        return ga, ga1, ga2


class Conv1D(Layer):
    """1-D cross-correlation: input (batch, length, channels) ->
    (batch, length', filters) with kernels (filters, channels, width)."""

    name = "conv1d"

    def __init__(self, in_channels: int, filters: int, width: int,
                 rng: np.random.Generator, padding: str = "same"):
        if padding not in ("same", "valid"):
            raise BuildError(f"padding must be 'same' or 'valid', got {padding!r}")
        if width < 1 or filters < 1 or in_channels < 1:
            raise BuildError("conv1d dimensions must be positive")
        self.in_channels = in_channels
        self.filters = filters
        self.width = width
        self.padding = padding
        fan_in = in_channels * width
        fan_out = filters * width
        self.kernels = _glorot(rng, (filters, in_channels, width), fan_in, fan_out)
        self.b = np.zeros(filters)
        self.gk = np.zeros_like(self.kernels)
        self.gb = np.zeros_like(self.b)
        self._xp = None
        self._in_len = None

    def params(self):
        return [self.kernels, self.b]

    def grads(self):
        return [self.gk, self.gb]

    def _pad(self):
        if self.padding == "same":
            left = (self.width - 1) // 2
            return left, self.width - 1 - left
        return 0, 0

    def forward(self, x):
        if x.ndim != 3 or x.shape[2] != self.in_channels:
            raise BuildError(
                f"conv1d expected (batch, length, {self.in_channels}), got {x.shape}")
        if self.width > x.shape[1]:
            raise BuildError(
                f"kernel width {self.width} exceeds input length {x.shape[1]}")
        left, right = self._pad()
        xp = np.pad(x, ((0, 0), (left, right), (0, 0))) if left or right else x
        self._xp = xp
        self._in_len = x.shape[1]
        win = np.lib.stride_tricks.sliding_window_view(xp, self.width, axis=1)
        return np.einsum("blcw,fcw->blf", win, self.kernels, optimize=True) + self.b

    def backward(self, gy):
        if self._xp is None:
            raise StateError("conv1d backward before forward")
        xp = self._xp
        out_len = gy.shape[1]
        win = np.lib.stride_tricks.sliding_window_view(xp, self.width, axis=1)
        self.gb += gy.sum(axis=(0, 1))
        self.gk += np.einsum("blcw,blf->fcw", win, gy, optimize=True)
        spread = np.einsum("blf,fcw->blcw", gy, self.kernels, optimize=True)
        gxp = np.zeros_like(xp)
        for j in range(self.width):
            gxp[:, j : j + out_len, :] += spread[:, :, :, j]
        left, _ = self._pad()
        return gxp[:, left : left + self._in_len, :]


class GlobalAvgPool1D(Layer):
    """Mean over the length axis: (batch, length, channels) -> (batch, channels)."""

    name = "gap1d"

    def __init__(self):
        self._len = None

    def forward(self, x):
        if x.ndim != 3:
            raise BuildError(f"pool expected (batch, length, channels), got {x.shape}")
        self._len = x.shape[1]
        return x.mean(axis=1)

    def backward(self, gy):
        if self._len is None:
            raise StateError("pool backward before forward")
        return np.repeat(gy[:, None, :], self._len, axis=1) / self._len


class LSTM(Layer):
    """Single LSTM layer returning the last hidden state.

    Input (batch, steps, channels) -> (batch, units). Standard cell: sigmoid
    input/forget/output gates, tanh candidate and output squash, zero initial
    state. Gate parameters are stored fused for speed as Wx (channels, 4U),
    Wh (units, 4U), b (4U,) with column blocks ordered [input, forget,
    candidate, output]; the per-gate views are Wx[:, g*U:(g+1)*U].
    """

    name = "lstm"

    GATE_ORDER = ("input", "forget", "candidate", "output")

    def __init__(self, in_channels: int, units: int, rng: np.random.Generator):
        if in_channels < 1 or units < 1:
            raise BuildError("lstm dimensions must be positive")
        self.in_channels = in_channels
        self.units = units
        blocks_x = [_glorot(rng, (in_channels, units), in_channels, units) for _ in range(4)]
        blocks_h = [_glorot(rng, (units, units), units, units) for _ in range(4)]
        self.Wx = np.concatenate(blocks_x, axis=1)
        self.Wh = np.concatenate(blocks_h, axis=1)
        self.b = np.zeros(4 * units)
        self.b[units : 2 * units] = 1.0  # forget-gate bias opens the cell early
        self.gWx = np.zeros_like(self.Wx)
        self.gWh = np.zeros_like(self.Wh)
        self.gb = np.zeros_like(self.b)
        self._cache = None

    def params(self):
        return [self.Wx, self.Wh, self.b]

    def grads(self):
        return [self.gWx, self.gWh, self.gb]

    def forward(self, x):
        if x.ndim != 3 or x.shape[2] != self.in_channels:
            raise BuildError(
                f"lstm expected (batch, steps, {self.in_channels}), got {x.shape}")
        B, T, _ = x.shape
        U = self.units
        xz = x.reshape(B * T, self.in_channels) @ self.Wx
        xz = xz.reshape(B, T, 4 * U)
        h = np.zeros((B, U))
        c = np.zeros((B, U))
        Hprev = np.empty((B, T, U))
        Cprev = np.empty((B, T, U))
        gates = np.empty((B, T, 4 * U))
        tanh_c = np.empty((B, T, U))
        for t in range(T):
            Hprev[:, t] = h
            Cprev[:, t] = c
            z = xz[:, t] + h @ self.Wh + self.b
            i = _sigmoid(z[:, :U])
            f = _sigmoid(z[:, U : 2 * U])
            g = np.tanh(z[:, 2 * U : 3 * U])
            o = _sigmoid(z[:, 3 * U :])
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            gates[:, t, :U] = i
            gates[:, t, U : 2 * U] = f
            gates[:, t, 2 * U : 3 * U] = g
            gates[:, t, 3 * U :] = o
            tanh_c[:, t] = tc
        self._cache = (x, Hprev, Cprev, gates, tanh_c)
        return h

    def backward(self, gy):
        if self._cache is None:
            raise StateError("lstm backward before forward")
        x, Hprev, Cprev, gates, tanh_c = self._cache
        B, T, _ = x.shape
        U = self.units
        dZ = np.empty((B, T, 4 * U))
        dh = gy
        dc = np.zeros((B, U))
        for t in range(T - 1, -1, -1):
            i = gates[:, t, :U]
            f = gates[:, t, U : 2 * U]
            g = gates[:, t, 2 * U : 3 * U]
            o = gates[:, t, 3 * U :]
            tc = tanh_c[:, t]
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc * tc)
            di = dc * g
            dg = dc * i
            df = dc * Cprev[:, t]
            dc = dc * f
            dZ[:, t, :U] = di * i * (1.0 - i)
            dZ[:, t, U : 2 * U] = df * f * (1.0 - f)
            dZ[:, t, 2 * U : 3 * U] = dg * (1.0 - g * g)
            dZ[:, t, 3 * U :] = do * o * (1.0 - o)
            dh = dZ[:, t] @ self.Wh.T
        flat_dZ = dZ.reshape(B * T, 4 * U)
        self.gWx += x.reshape(B * T, self.in_channels).T @ flat_dZ
        self.gWh += Hprev.reshape(B * T, U).T @ flat_dZ
        self.gb += flat_dZ.sum(axis=0)
        return (flat_dZ @ self.Wx.T).reshape(B, T, self.in_channels)


# ---------------------------------------------------------------------------
# Network container
# ---------------------------------------------------------------------------

class Network:
    """Ordered layer stack with shared forward/backward plumbing.

    Mutable while training (caches, gradients, optimizer state live on the
    layers); once training finishes the instance is only read, so it can be
    shared across threads for inference.
    """

    def __init__(self, layers, descriptor: dict | None = None):
        self.layers = list(layers)
        self.descriptor = dict(descriptor) if descriptor else {}
        self._forward_done = False

    def params(self) -> list:
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def grads(self) -> list:
        out = []
        for layer in self.layers:
            out.extend(layer.grads())
        return out

    def zero_grads(self) -> None:
        for layer in self.layers:
            layer.zero_grads()

    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def forward(self, x: np.ndarray) -> np.ndarray:
        out = np.asarray(x, dtype=np.float64)
        _check_finite(out, "network input")
        for idx, layer in enumerate(self.layers):
            out = layer.forward(out)
            _check_finite(out, f"layer {idx} ({layer.name}) output")
        self._forward_done = True
        return out

    # alias used by evaluation-only call sites
    predict = forward

    def backward(self, gy: np.ndarray) -> None:
        if not self._forward_done:
            raise StateError("backward requested before any forward pass")
        g = np.asarray(gy, dtype=np.float64)
        for idx in range(len(self.layers) - 1, -1, -1):
            g = self.layers[idx].backward(g)
            _check_finite(g, f"layer {idx} ({self.layers[idx].name}) gradient")

    def dual2_forward(self, d: Dual2) -> Dual2:
        for idx, layer in enumerate(self.layers):
            d = layer.dual2_forward(d)
            _check_finite(d.val, f"layer {idx} ({layer.name}) value")
            _check_finite(d.d1, f"layer {idx} ({layer.name}) d1")
            _check_finite(d.d2, f"layer {idx} ({layer.name}) d2")
        self._forward_done = True
        return d

    def dual2_backward(self, gval, gd1, gd2) -> None:
        if not self._forward_done:
            raise StateError("backward requested before any forward pass")
        for idx in range(len(self.layers) - 1, -1, -1):
            gval, gd1, gd2 = self.layers[idx].dual2_backward(gval, gd1, gd2)


def _promote(x, want_ndim: int):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == want_ndim - 1:
        return x[None, ...], True
    if x.ndim == want_ndim:
        return x, False
    raise BuildError(f"expected {want_ndim - 1}- or {want_ndim}-dimensional input, got shape {x.shape}")


def dense_forward(x, layer: Dense) -> np.ndarray:
    xb, squeezed = _promote(x, 2)
    y = layer.forward(xb)
    return y[0] if squeezed else y


def conv1d_forward(x, layer: Conv1D) -> np.ndarray:
    xb, squeezed = _promote(x, 3)
    y = layer.forward(xb)
    return y[0] if squeezed else y


def lstm_forward(x_seq, layer: LSTM) -> np.ndarray:
    xb, squeezed = _promote(x_seq, 3)
    y = layer.forward(xb)
    return y[0] if squeezed else y


def backward(model: Network, loss_grad: np.ndarray) -> list:
    """Reverse pass through a network; returns the parameter gradients
    (one array per parameter, matching model.params() order)."""
    model.zero_grads()
    model.backward(loss_grad)
    return model.grads()


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

class AdamState:
    """First/second moment accumulators plus the step counter."""

    def __init__(self, params):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0


def adam_step(params, grads, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    """One bias-corrected Adam update, in place on params."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise BuildError("params, grads and state must align")
    state.t += 1
    t = state.t
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise BuildError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return state


class Adam:
    """Stateful wrapper around adam_step bound to one parameter list."""

    def __init__(self, params, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState(self.params)

    def step(self, grads) -> None:
        adam_step(self.params, list(grads), self.state, self.lr,
                  self.beta1, self.beta2, self.eps)


# ---------------------------------------------------------------------------
# Exact input derivatives
# ---------------------------------------------------------------------------

def input_derivatives(net: Network, x) -> tuple:
    """Value, dy/dx, d2y/dx2 of a scalar->scalar network at x.

    x may be a scalar or a 1-D array of evaluation points; derivatives are
    exact (nested forward-mode), not finite differences. Raises
    CapabilityError if any layer lacks the second-derivative path.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if xs.ndim != 1:
        raise BuildError(f"input_derivatives expects scalars, got shape {xs.shape}")
    d = Dual2.variable(xs[:, None])
    out = net.dual2_forward(d)
    if out.val.shape[1] != 1:
        raise BuildError(f"network output must be scalar, got width {out.val.shape[1]}")
    y, d1, d2 = out.val[:, 0], out.d1[:, 0], out.d2[:, 0]
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(y[0]), float(d1[0]), float(d2[0])
    return y, d1, d2
