"""Persistence: CSV tables, JSON checkpoints, splits, and run configs.

All formats are plain text so artifacts can be diffed and checked by eye:

  - numeric tables are CSV with a leading block of '# key = value' metadata
    lines; every artifact written by a run embeds the seed and a hash of the
    resolved configuration that produced it,
  - floats are serialized with 17 significant digits, which round-trips
    binary64 exactly,
  - checkpoints are JSON holding the architecture descriptor, per-parameter
    shapes, flat parameter values, and optional preprocessing state,
  - run configuration files are flat 'key = value' documents; unknown keys
    are rejected so typos fail loudly.

Writers assume exclusive access to the target path; readers never mutate.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import models
from .models import ConfigError, History, Standardizer, SupervisedSet
from .pendulum import TORQUE_COLUMNS, Trajectory
from .pinn import PinnLossReport
from .quantum import QuantumDataset


class FormatError(ValueError):
    """Malformed CSV/config content; message carries file and line."""


class CheckpointError(ValueError):
    """Checkpoint unreadable or incompatible with the requested network."""


TRAJECTORY_COLUMNS = ("t", "theta", "omega") + TORQUE_COLUMNS

# keys that name filesystem locations; excluded from config hashing so the
# same experiment rerun into a different directory yields identical bytes
PATH_KEYS = frozenset({"out", "outdir", "data", "checkpoint", "config"})


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# generic CSV table with '#' metadata block
# ---------------------------------------------------------------------------

def _write_table(path, columns, rows, meta: dict) -> None:
    lines = [f"# {key} = {meta[key]}" for key in sorted(meta)]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt_float(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _read_table(path, expected_columns=None):
    """Returns (values (R, C), columns, meta). Strict: exact header when
    expected_columns is given, rectangular numeric body."""
    path = Path(path)
    meta: dict = {}
    columns = None
    body: list = []
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    for line_no, line in enumerate(text.splitlines(), start=1):
        if line.startswith("#"):
            stripped = line[1:].strip()
            if stripped:
                key, sep, value = stripped.partition("=")
                if not sep:
                    raise FormatError(f"{path}:{line_no}: malformed metadata line")
                meta[key.strip()] = value.strip()
            continue
        if columns is None:
            columns = tuple(line.split(","))
            continue
        body.append((line_no, line))
    if columns is None:
        raise FormatError(f"{path}: empty file, no header row")
    if expected_columns is not None and columns != tuple(expected_columns):
        missing = [c for c in expected_columns if c not in columns]
        extra = [c for c in columns if c not in expected_columns]
        raise FormatError(
            f"{path}: header mismatch; missing {missing}, unexpected {extra}")
    values = np.empty((len(body), len(columns)))
    for i, (line_no, line) in enumerate(body):
        fields = line.split(",")
        if len(fields) != len(columns):
            raise FormatError(
                f"{path}:{line_no}: expected {len(columns)} fields, got {len(fields)}")
        try:
            values[i] = [float(f) for f in fields]
        except ValueError as exc:
            raise FormatError(f"{path}:{line_no}: {exc}") from exc
    return values, columns, meta


def _require_meta(meta: dict, keys, path) -> None:
    missing = [k for k in keys if k not in meta]
    if missing:
        raise FormatError(f"{path}: metadata missing keys {missing}")


# ---------------------------------------------------------------------------
# trajectory
# ---------------------------------------------------------------------------

def write_trajectory(traj: Trajectory, path, seed: int, config_hash: str,
                     extra_meta: dict | None = None) -> None:
    meta = {"seed": seed, "config_hash": config_hash, **(extra_meta or {})}
    rows = np.column_stack([traj.t, traj.theta, traj.omega, traj.torques])
    _write_table(path, TRAJECTORY_COLUMNS, rows, meta)


def read_trajectory(path):
    values, _, meta = _read_table(path, TRAJECTORY_COLUMNS)
    if len(values) == 0:
        raise FormatError(f"{path}: trajectory has no samples")
    traj = Trajectory(t=values[:, 0], theta=values[:, 1], omega=values[:, 2],
                      torques=values[:, 3:8])
    return traj, meta


# ---------------------------------------------------------------------------
# quantum dataset
# ---------------------------------------------------------------------------

def quantum_columns(k: int, n_points: int) -> tuple:
    return ("lambda",) + tuple(f"E{i}" for i in range(k)) \
        + tuple(f"V{j}" for j in range(n_points))


def write_quantum_dataset(ds: QuantumDataset, path, seed: int, config_hash: str,
                          extra_meta: dict | None = None) -> None:
    meta = {
        "seed": seed,
        "config_hash": config_hash,
        "x_max": fmt_float(ds.x_max),
        "n_points": ds.n_points,
        "m": fmt_float(ds.m),
        "omega": fmt_float(ds.omega),
        "hbar": fmt_float(ds.hbar),
        **(extra_meta or {}),
    }
    rows = np.column_stack([ds.lambdas, ds.energies, ds.potentials])
    _write_table(path, quantum_columns(ds.k, ds.n_points), rows, meta)


def read_quantum_dataset(path):
    values, columns, meta = _read_table(path)
    k = sum(1 for c in columns if c.startswith("E") and c[1:].isdigit())
    n_points = sum(1 for c in columns if c.startswith("V") and c[1:].isdigit())
    if columns != quantum_columns(k, n_points):
        raise FormatError(f"{path}: header is not lambda,E0..,V0.. in order")
    if len(values) == 0:
        raise FormatError(f"{path}: dataset has no rows")
    _require_meta(meta, ("x_max", "n_points", "m", "omega", "hbar"), path)
    if int(meta["n_points"]) != n_points:
        raise FormatError(
            f"{path}: metadata n_points {meta['n_points']} != {n_points} V columns")
    ds = QuantumDataset(
        lambdas=values[:, 0],
        energies=values[:, 1 : 1 + k],
        potentials=values[:, 1 + k :],
        x_max=float(meta["x_max"]),
        n_points=n_points,
        m=float(meta["m"]),
        omega=float(meta["omega"]),
        hbar=float(meta["hbar"]),
    )
    return ds, meta


# ---------------------------------------------------------------------------
# history and PINN logs
# ---------------------------------------------------------------------------

HISTORY_COLUMNS = ("epoch", "train_loss", "val_loss")


def write_history(hist: History, path, seed: int, config_hash: str) -> None:
    rows = [(e + 1, tr, vl) for e, (tr, vl)
            in enumerate(zip(hist.train_loss, hist.val_loss))]
    _write_table(path, HISTORY_COLUMNS, rows,
                 {"seed": seed, "config_hash": config_hash})


def read_history(path):
    values, _, meta = _read_table(path, HISTORY_COLUMNS)
    epochs = values[:, 0]
    if len(values) and not np.array_equal(epochs, np.arange(1, len(values) + 1)):
        raise FormatError(f"{path}: epoch column must run 1..{len(values)}")
    hist = History(train_loss=values[:, 1].tolist(), val_loss=values[:, 2].tolist(),
                   stopped_epoch=len(values))
    return hist, meta


def write_pinn_log(reports, path, seed: int, config_hash: str) -> None:
    if not reports:
        raise ConfigError("no PINN reports to write")
    with_energy = reports[0].energy is not None
    columns = ("epoch", "data_loss", "phys_loss", "penalty", "total")
    if with_energy:
        columns = columns + ("energy",)
    rows = []
    for r in reports:
        if (r.energy is not None) != with_energy:
            raise ConfigError("mixed report kinds in one PINN log")
        row = [r.epoch, r.data_loss, r.phys_loss, r.penalty, r.total]
        if with_energy:
            row.append(r.energy)
        rows.append(row)
    _write_table(path, columns, rows, {"seed": seed, "config_hash": config_hash})


def read_pinn_log(path):
    values, columns, meta = _read_table(path)
    base = ("epoch", "data_loss", "phys_loss", "penalty", "total")
    if columns == base:
        with_energy = False
    elif columns == base + ("energy",):
        with_energy = True
    else:
        raise FormatError(f"{path}: unexpected PINN log header {columns}")
    reports = []
    for row in values:
        reports.append(PinnLossReport(
            epoch=int(row[0]), data_loss=row[1], phys_loss=row[2],
            penalty=row[3], total=row[4],
            energy=row[5] if with_energy else None))
    return reports, meta


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def write_metrics(values: dict, path, seed: int, config_hash: str) -> None:
    """Flat 'name = value' metric file with the usual metadata block."""
    lines = [f"# config_hash = {config_hash}", f"# seed = {seed}"]
    for key in sorted(values):
        v = values[key]
        lines.append(f"{key} = {fmt_float(v) if isinstance(v, float) else v}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_metrics(path):
    path = Path(path)
    meta: dict = {}
    out: dict = {}
    for line_no, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"{path}:{line_no}: expected 'name = value'")
        out[key.strip()] = float(value.strip())
    if not out:
        raise FormatError(f"{path}: no metric entries")
    return out, meta


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------

def split_indices(n: int, fractions, seed: int):
    """Seeded permutation, then contiguous slices sized by the fractions."""
    fracs = tuple(float(f) for f in fractions)
    if len(fracs) != 3 or any(f <= 0 for f in fracs):
        raise ConfigError(f"need three positive fractions, got {fracs}")
    if abs(sum(fracs) - 1.0) > 1e-9:
        raise ConfigError(f"fractions must sum to 1, got {sum(fracs)!r}")
    n_train = int(math.floor(fracs[0] * n))
    n_val = int(math.floor(fracs[1] * n))
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise ConfigError(f"split of {n} rows by {fracs} leaves an empty part")
    perm = np.random.default_rng(seed).permutation(n)
    return (perm[:n_train], perm[n_train : n_train + n_val],
            perm[n_train + n_val :])


def split(sset: SupervisedSet, fractions, seed: int):
    idx_tr, idx_va, idx_te = split_indices(sset.n_rows, fractions, seed)
    pick = lambda idx: SupervisedSet(sset.inputs[idx].copy(), sset.targets[idx].copy())
    return pick(idx_tr), pick(idx_va), pick(idx_te)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_FORMAT = "oscml-checkpoint-1"


def standardizer_to_doc(st: Standardizer) -> dict:
    return {
        "input_mean": st.input_mean.tolist(),
        "input_std": st.input_std.tolist(),
        "target_mean": st.target_mean.tolist(),
        "target_std": st.target_std.tolist(),
        "shared_input_stats": bool(st.shared_input_stats),
    }


def standardizer_from_doc(doc: dict) -> Standardizer:
    return Standardizer(
        input_mean=np.asarray(doc["input_mean"], dtype=np.float64),
        input_std=np.asarray(doc["input_std"], dtype=np.float64),
        target_mean=np.asarray(doc["target_mean"], dtype=np.float64),
        target_std=np.asarray(doc["target_std"], dtype=np.float64),
        shared_input_stats=bool(doc["shared_input_stats"]),
    )


def save_checkpoint(net, path, seed: int, config_hash: str,
                    optimizer: dict | None = None,
                    preprocess: dict | None = None,
                    extra: dict | None = None) -> None:
    """JSON checkpoint; parameter floats round-trip bit-exactly."""
    if not net.descriptor:
        raise CheckpointError("network has no architecture descriptor to save")
    doc = {
        "format": CHECKPOINT_FORMAT,
        "descriptor": net.descriptor,
        "param_shapes": [list(p.shape) for p in net.params()],
        "params": [p.reshape(-1).tolist() for p in net.params()],
        "optimizer": optimizer or {},
        "preprocess": preprocess or {},
        "meta": {"seed": seed, "config_hash": config_hash, **(extra or {})},
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path, expected_spec: models.NetworkSpec | None = None):
    """Rebuild the saved network; returns (net, document).

    Fails without partial effects on truncated/corrupt files, and refuses
    checkpoints whose architecture differs from expected_spec when given.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable checkpoint ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: not a {CHECKPOINT_FORMAT} document")
    for key in ("descriptor", "param_shapes", "params"):
        if key not in doc:
            raise CheckpointError(f"{path}: checkpoint missing {key!r}")
    desc = doc["descriptor"]
    spec_fields = dict(desc["spec"])
    for key in ("hidden", "filters", "kernel_widths"):
        if key in spec_fields and isinstance(spec_fields[key], list):
            spec_fields[key] = tuple(spec_fields[key])
    spec = models.NetworkSpec(**spec_fields)
    if expected_spec is not None and spec != expected_spec:
        raise CheckpointError(
            f"{path}: checkpoint holds {spec.kind!r} architecture {spec}, "
            f"expected {expected_spec}")
    net = models.build(spec, seed=int(desc["seed"]))
    params = net.params()
    found = [tuple(s) for s in doc["param_shapes"]]
    expect = [p.shape for p in params]
    if found != expect:
        raise CheckpointError(
            f"{path}: parameter shapes {found} do not match architecture {expect}")
    if len(doc["params"]) != len(params):
        raise CheckpointError(f"{path}: wrong number of parameter arrays")
    for p, flat in zip(params, doc["params"]):
        arr = np.asarray(flat, dtype=np.float64)
        if arr.size != p.size:
            raise CheckpointError(
                f"{path}: parameter of size {arr.size} does not fill shape {p.shape}")
        p[...] = arr.reshape(p.shape)
    return net, doc


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration of one training run."""

    system: str
    model: str
    lr: float = 1e-3
    max_epochs: int = 500
    batch_size: int = 32
    early_stop_patience: int = 25
    early_stop_min_delta: float = 1e-6
    seed: int = 0
    train_frac: float = 0.70
    val_frac: float = 0.15
    test_frac: float = 0.15
    data: str = ""
    outdir: str = ""

    def __post_init__(self):
        if self.system not in ("pendulum", "quantum"):
            raise ConfigError(f"system must be pendulum or quantum, got {self.system!r}")
        total = self.train_frac + self.val_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must sum to 1, got {total!r}")

    @property
    def fractions(self) -> tuple:
        return (self.train_frac, self.val_frac, self.test_frac)

    def to_train_config(self) -> models.TrainConfig:
        return models.TrainConfig(
            lr=self.lr, max_epochs=self.max_epochs, batch_size=self.batch_size,
            early_stop_patience=self.early_stop_patience,
            early_stop_min_delta=self.early_stop_min_delta, seed=self.seed)


def read_kv_file(path) -> dict:
    """Flat 'key = value' document; '#' comments and blank lines allowed."""
    path = Path(path)
    out: dict = {}
    for line_no, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise FormatError(f"{path}:{line_no}: expected 'key = value'")
        key = key.strip()
        if key in out:
            raise FormatError(f"{path}:{line_no}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def write_kv_file(path, mapping: dict) -> None:
    lines = []
    for key in sorted(mapping):
        v = mapping[key]
        lines.append(f"{key} = {fmt_float(v) if isinstance(v, float) else v}")
    Path(path).write_text("\n".join(lines) + "\n")


def coerce_config(raw: dict, schema: dict, source: str = "config") -> dict:
    """Validate raw string values against {key: type}; unknown keys error."""
    out: dict = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(
                f"{source}: unknown key {key!r}; known keys: {sorted(schema)}")
        kind = schema[key]
        try:
            if kind is bool:
                if str(value).lower() in ("true", "1", "yes"):
                    out[key] = True
                elif str(value).lower() in ("false", "0", "no"):
                    out[key] = False
                else:
                    raise ValueError(f"not a boolean: {value!r}")
            else:
                out[key] = kind(value)
        except ValueError as exc:
            raise ConfigError(f"{source}: bad value for {key!r}: {exc}") from exc
    return out


def config_hash(mapping: dict) -> str:
    """Stable short hash of the semantic (non-path) config entries."""
    canon = "\n".join(
        f"{k} = {fmt_float(v) if isinstance(v, float) else v}"
        for k, v in sorted(mapping.items()) if k not in PATH_KEYS)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]
