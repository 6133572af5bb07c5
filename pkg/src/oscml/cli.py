"""Command-line front end.

Subcommands cover the full pipeline: ground-truth generation
(simulate-pendulum, gen-quantum), supervised training and scoring (train,
evaluate), physics-informed training (pinn-train), tidy CSV emission for
figures (plot-data), and one-shot seeded experiment pipelines (reproduce).

Every run resolves its configuration as defaults <- config file <- flags,
persists the resolved result next to its outputs, and stamps all written
artifacts with the seed and a hash of the semantic config. Relative output
paths are placed under $OSCML_OUT when that variable is set. Exit status is
0 only if every output was written.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dataio, models, pinn
from . import pendulum as pend
from . import quantum as quant
from .models import ConfigError
from .nn import BuildError, NumericsError

_SIM_SCHEMA = {
    "m": float, "l": float, "b": float, "k": float, "g": float,
    "T0": float, "omega_ext": float, "c": float,
    "theta0": float, "omega0": float, "t_end": float, "dt": float,
    "seed": int,
}

_SIM_DEFAULTS = {
    "m": 1.0, "l": 1.0, "b": 0.05, "k": 0.5, "g": 9.81,
    "T0": 0.3, "omega_ext": 1.0, "c": 0.02,
    "theta0": 0.1, "omega0": 0.0, "t_end": 30.0, "dt": 0.01,
    "seed": 0,
}

_GEN_SCHEMA = {
    "lambdas": int, "lambda_max": float, "n": int, "xmax": float,
    "k": int, "seed": int,
}

_GEN_DEFAULTS = {
    "lambdas": 500, "lambda_max": 1.0, "n": 500, "xmax": 5.0, "k": 5, "seed": 0,
}

_TRAIN_SCHEMA = {
    "model": str, "lr": float, "max_epochs": int, "batch_size": int,
    "early_stop_patience": int, "early_stop_min_delta": float, "seed": int,
    "train_frac": float, "val_frac": float, "test_frac": float,
}

_PINN_SCHEMA = {
    "system": str, "lr": float, "epochs": int, "log_every": int, "seed": int,
    "collocation": int, "energy_init": float,
}

PLOT_KINDS = (
    "pendulum-sim",
    "pendulum-ann-pred",
    "pendulum-pinn-pred",
    "quantum-scatter",
    "quantum-potential",
    "quantum-pinn-wavefunction",
)

EXPERIMENTS = (
    "pendulum-ann",
    "pendulum-pinn",
    "quantum-cnn",
    "quantum-lstm",
    "quantum-pinn",
)

_PRODUCER = {
    "data:pendulum": "oscml simulate-pendulum",
    "data:quantum": "oscml gen-quantum",
    "checkpoint:model": "oscml train",
    "checkpoint:pinn": "oscml pinn-train",
}


def _rooted(path_str: str) -> Path:
    """Relative output paths land under $OSCML_OUT when set."""
    p = Path(path_str)
    root = os.environ.get("OSCML_OUT")
    if root and not p.is_absolute():
        return Path(root) / p
    return p


def _resolve(defaults: dict, schema: dict, config_path, overrides: dict) -> dict:
    resolved = dict(defaults)
    if config_path:
        raw = dataio.read_kv_file(config_path)
        resolved.update(dataio.coerce_config(raw, schema, source=str(config_path)))
    for key, value in overrides.items():
        if value is not None:
            resolved[key] = value
    return resolved


def _config_sidecar(out: Path) -> Path:
    return out.with_name(out.stem + ".config.txt")


def _require_file(path, role: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(
            f"{p} not found; produce it with `{_PRODUCER.get(role, 'oscml')}`")
    return p


# ---------------------------------------------------------------------------
# pipeline stages (shared between subcommands and reproduce)
# ---------------------------------------------------------------------------

def run_simulate(resolved: dict, out: Path) -> Path:
    params = pend.PendulumParams(
        m=resolved["m"], l=resolved["l"], b=resolved["b"], k=resolved["k"],
        g=resolved["g"], T0=resolved["T0"], omega_ext=resolved["omega_ext"],
        c=resolved["c"])
    init = pend.PendulumState(resolved["theta0"], resolved["omega0"])
    traj = pend.simulate(params, init, resolved["t_end"], resolved["dt"])
    out.parent.mkdir(parents=True, exist_ok=True)
    chash = dataio.config_hash(resolved)
    dataio.write_trajectory(traj, out, seed=resolved["seed"], config_hash=chash)
    dataio.write_kv_file(_config_sidecar(out), {**resolved, "out": str(out)})
    print(f"wrote {out} ({traj.n_samples} samples)")
    return out


def run_gen_quantum(resolved: dict, out: Path) -> Path:
    if resolved["lambdas"] < 1:
        raise ConfigError(f"need at least one lambda, got {resolved['lambdas']}")
    grid = quant.make_grid(resolved["xmax"], resolved["n"])
    rng = np.random.default_rng(resolved["seed"])
    lams = np.sort(rng.uniform(0.0, resolved["lambda_max"], resolved["lambdas"]))
    ds = quant.gen_quantum_dataset(quant.PotentialSpec(), lams, grid, resolved["k"])
    out.parent.mkdir(parents=True, exist_ok=True)
    chash = dataio.config_hash(resolved)
    dataio.write_quantum_dataset(ds, out, seed=resolved["seed"], config_hash=chash)
    dataio.write_kv_file(_config_sidecar(out), {**resolved, "out": str(out)})
    print(f"wrote {out} ({ds.n_rows} rows, k={ds.k}, n_points={ds.n_points})")
    return out


def _load_features(model_kind: str, data_path: Path):
    """Returns (SupervisedSet, shared_input_stats, feature_tag)."""
    if model_kind == "pendulum_ann":
        traj, _ = dataio.read_trajectory(
            _require_file(data_path, "data:pendulum"))
        return models.make_pendulum_features(traj), False, "pendulum"
    ds, _ = dataio.read_quantum_dataset(_require_file(data_path, "data:quantum"))
    return models.make_quantum_features(ds), True, "quantum"


def run_train(resolved: dict, data_path: Path, outdir: Path) -> Path:
    kind = resolved["model"]
    if kind not in ("pendulum_ann", "quantum_cnn", "quantum_lstm"):
        raise ConfigError(
            f"model must be pendulum_ann, quantum_cnn or quantum_lstm, got {kind!r}")
    sset, shared, feature_tag = _load_features(kind, data_path)
    fractions = (resolved["train_frac"], resolved["val_frac"], resolved["test_frac"])
    seed = resolved["seed"]
    tr, va, _ = dataio.split(sset, fractions, seed)
    st = models.fit_standardizer(tr.inputs, tr.targets, shared_input_stats=shared)
    spec = getattr(models.NetworkSpec, kind)()
    net = models.build(spec, seed=seed)
    cfg = models.TrainConfig(
        lr=resolved["lr"], max_epochs=resolved["max_epochs"],
        batch_size=resolved["batch_size"],
        early_stop_patience=resolved["early_stop_patience"],
        early_stop_min_delta=resolved["early_stop_min_delta"], seed=seed)
    net, hist = models.train(net, st.apply(tr), st.apply(va), cfg)

    outdir.mkdir(parents=True, exist_ok=True)
    chash = dataio.config_hash(resolved)
    ckpt = outdir / "checkpoint.json"
    dataio.save_checkpoint(
        net, ckpt, seed=seed, config_hash=chash,
        optimizer={"name": "adam", "lr": cfg.lr},
        preprocess={
            "standardizer": dataio.standardizer_to_doc(st),
            "features": feature_tag,
            "fractions": list(fractions),
            "split_seed": seed,
        })
    dataio.write_history(hist, outdir / "history.csv", seed=seed, config_hash=chash)
    dataio.write_kv_file(outdir / "config.txt",
                         {**resolved, "data": str(data_path), "outdir": str(outdir)})
    print(f"trained {kind} for {hist.stopped_epoch} epochs; "
          f"final val loss {hist.val_loss[-1]:.3e}; wrote {ckpt}")
    return ckpt


def run_evaluate(ckpt_path: Path, data_path: Path, out: Path,
                 also_json: bool = False) -> dict:
    net, doc = dataio.load_checkpoint(_require_file(ckpt_path, "checkpoint:model"))
    pre = doc.get("preprocess") or {}
    for key in ("standardizer", "features", "fractions", "split_seed"):
        if key not in pre:
            raise dataio.CheckpointError(
                f"{ckpt_path}: checkpoint lacks preprocessing state ({key})")
    st = dataio.standardizer_from_doc(pre["standardizer"])
    kind = net.descriptor["kind"]
    sset, _, feature_tag = _load_features(
        "pendulum_ann" if pre["features"] == "pendulum" else kind, data_path)
    if feature_tag != pre["features"]:
        raise ConfigError(
            f"checkpoint was trained on {pre['features']} features, data is {feature_tag}")
    _, _, idx_te = dataio.split_indices(sset.n_rows, pre["fractions"], pre["split_seed"])
    test = models.SupervisedSet(sset.inputs[idx_te], sset.targets[idx_te])
    metrics = models.evaluate(net, test, st)
    values = {"mae": metrics.mae, "r_squared": metrics.r_squared,
              "n_test": float(len(idx_te))}
    meta = doc.get("meta") or {}
    out.parent.mkdir(parents=True, exist_ok=True)
    dataio.write_metrics(values, out, seed=meta.get("seed", 0),
                         config_hash=meta.get("config_hash", ""))
    if also_json:
        out.with_suffix(".json").write_text(json.dumps(values, sort_keys=True))
    print(f"MAE = {metrics.mae:.6e}  R^2 = {metrics.r_squared:.6f}  -> {out}")
    return values


def run_pinn(resolved: dict, data_path, outdir: Path) -> Path:
    system = resolved["system"]
    if system not in ("pendulum", "quantum"):
        raise ConfigError(f"system must be pendulum or quantum, got {system!r}")
    seed = resolved["seed"]
    net = models.build(models.NetworkSpec.pinn_mlp(), seed=seed)
    cfg = models.TrainConfig(lr=resolved["lr"], max_epochs=resolved["epochs"],
                             seed=seed)
    extra: dict = {}
    if system == "pendulum":
        if data_path is None:
            raise ConfigError("pendulum pinn-train needs --data (a trajectory CSV)")
        traj, _ = dataio.read_trajectory(_require_file(data_path, "data:pendulum"))
        problem = pinn.make_pendulum_problem(
            net, pend.PendulumParams(), traj, n_collocation=resolved["collocation"])
    else:
        problem = pinn.make_quantum_problem(
            net, energy=resolved["energy_init"], x_max=5.0,
            n_collocation=resolved["collocation"])
    net, reports = pinn.train_pinn(problem, cfg, log_every=resolved["log_every"])
    final = pinn.pinn_loss(problem, epoch=resolved["epochs"])

    outdir.mkdir(parents=True, exist_ok=True)
    chash = dataio.config_hash(resolved)
    dataio.write_pinn_log(reports, outdir / "pinn_log.csv", seed=seed,
                          config_hash=chash)
    if system == "quantum":
        extra = {"energy": problem.energy, "x_max": 5.0,
                 "n_collocation": resolved["collocation"]}
    ckpt = outdir / "checkpoint.json"
    dataio.save_checkpoint(net, ckpt, seed=seed, config_hash=chash,
                           optimizer={"name": "adam", "lr": cfg.lr}, extra=extra)
    values = {"final_data_loss": final.data_loss, "final_phys_loss": final.phys_loss,
              "final_penalty": final.penalty, "final_total": final.total}
    if system == "quantum":
        values["final_energy"] = problem.energy
    dataio.write_metrics(values, outdir / "metrics.txt", seed=seed, config_hash=chash)
    data_entry = {} if data_path is None else {"data": str(data_path)}
    dataio.write_kv_file(outdir / "config.txt",
                         {**resolved, **data_entry, "outdir": str(outdir)})
    print(f"pinn {system}: total {reports[0].total:.4f} -> {final.total:.4f} "
          f"over {resolved['epochs']} epochs; wrote {outdir}")
    return ckpt


def run_plot(kind: str, out: Path, data_path=None, ckpt_path=None, row: int = 0) -> Path:
    if kind not in PLOT_KINDS:
        raise ConfigError(f"unknown plot kind {kind!r}; valid kinds: {', '.join(PLOT_KINDS)}")
    out.parent.mkdir(parents=True, exist_ok=True)

    def need_data(role):
        if data_path is None:
            raise ConfigError(f"plot kind {kind} needs --data")
        return _require_file(data_path, role)

    def need_ckpt(role):
        if ckpt_path is None:
            raise ConfigError(f"plot kind {kind} needs --checkpoint")
        return _require_file(ckpt_path, role)

    if kind == "pendulum-sim":
        traj, meta = dataio.read_trajectory(need_data("data:pendulum"))
        rows = np.column_stack([traj.t, traj.theta, traj.omega])
        dataio._write_table(out, ("t", "theta", "omega"), rows, meta)
    elif kind == "pendulum-ann-pred":
        traj, meta = dataio.read_trajectory(need_data("data:pendulum"))
        net, doc = dataio.load_checkpoint(need_ckpt("checkpoint:model"))
        st = dataio.standardizer_from_doc(doc["preprocess"]["standardizer"])
        sset = models.make_pendulum_features(traj)
        preds = st.inverse_apply(models.predict(net, st.apply_inputs(sset.inputs)))
        rows = np.column_stack([traj.t, traj.theta, preds[:, 0]])
        dataio._write_table(out, ("t", "theta_true", "theta_pred"), rows,
                            doc.get("meta") or {})
    elif kind == "pendulum-pinn-pred":
        traj, meta = dataio.read_trajectory(need_data("data:pendulum"))
        net, doc = dataio.load_checkpoint(need_ckpt("checkpoint:pinn"))
        preds = net.forward(traj.t[:, None])[:, 0]
        rows = np.column_stack([traj.t, traj.theta, preds])
        dataio._write_table(out, ("t", "theta_true", "theta_pinn"), rows,
                            doc.get("meta") or {})
    elif kind == "quantum-scatter":
        ds, meta = dataio.read_quantum_dataset(need_data("data:quantum"))
        net, doc = dataio.load_checkpoint(need_ckpt("checkpoint:model"))
        pre = doc["preprocess"]
        st = dataio.standardizer_from_doc(pre["standardizer"])
        sset = models.make_quantum_features(ds)
        _, _, idx_te = dataio.split_indices(sset.n_rows, pre["fractions"],
                                            pre["split_seed"])
        preds = st.inverse_apply(
            models.predict(net, st.apply_inputs(sset.inputs[idx_te])))
        rows = np.column_stack([sset.targets[idx_te][:, 0], preds[:, 0]])
        dataio._write_table(out, ("E_true", "E_pred"), rows, doc.get("meta") or {})
    elif kind == "quantum-potential":
        ds, meta = dataio.read_quantum_dataset(need_data("data:quantum"))
        if not 0 <= row < ds.n_rows:
            raise ConfigError(f"--row must be in [0, {ds.n_rows - 1}], got {row}")
        x = np.linspace(-ds.x_max, ds.x_max, ds.n_points)
        rows = np.column_stack([x, ds.potentials[row]])
        dataio._write_table(out, ("x", "V"), rows,
                            {**meta, "lambda": dataio.fmt_float(ds.lambdas[row])})
    else:  # quantum-pinn-wavefunction
        net, doc = dataio.load_checkpoint(need_ckpt("checkpoint:pinn"))
        meta = doc.get("meta") or {}
        if "x_max" not in meta or "n_collocation" not in meta:
            raise ConfigError(
                f"{ckpt_path} is not a quantum PINN checkpoint; "
                f"produce one with `{_PRODUCER['checkpoint:pinn']} --system quantum`")
        x = np.linspace(-float(meta["x_max"]), float(meta["x_max"]),
                        int(meta["n_collocation"]))
        psi = net.forward(x[:, None])[:, 0]
        dx = x[1] - x[0]
        norm = np.sqrt(np.sum(psi * psi) * dx)
        # normalization-before-plotting is ambiguous upstream, so emit both
        psi_norm = psi / norm if norm > 0 else psi
        exact = np.exp(-x * x / 2.0) / np.pi**0.25
        rows = np.column_stack([x, psi, psi_norm, exact])
        dataio._write_table(out, ("x", "psi_raw", "psi_normalized", "psi_exact"),
                            rows, meta)
    print(f"wrote {out}")
    return out


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    overrides = {k: getattr(args, k) for k in _SIM_SCHEMA}
    resolved = _resolve(_SIM_DEFAULTS, _SIM_SCHEMA, args.config, overrides)
    run_simulate(resolved, _rooted(args.out))
    return 0


def cmd_gen_quantum(args) -> int:
    overrides = {k: getattr(args, k) for k in _GEN_SCHEMA}
    resolved = _resolve(_GEN_DEFAULTS, _GEN_SCHEMA, args.config, overrides)
    run_gen_quantum(resolved, _rooted(args.out))
    return 0


def _train_defaults(model: str) -> dict:
    return {
        "model": model,
        # the sequence regressor trains with the smaller published rate
        "lr": 1e-4 if model == "quantum_lstm" else 1e-3,
        "max_epochs": 500, "batch_size": 32,
        "early_stop_patience": 25, "early_stop_min_delta": 1e-6,
        "seed": 42, "train_frac": 0.70, "val_frac": 0.15, "test_frac": 0.15,
    }


def cmd_train(args) -> int:
    overrides = {k: getattr(args, k) for k in _TRAIN_SCHEMA}
    model = args.model or (dataio.coerce_config(
        dataio.read_kv_file(args.config), _TRAIN_SCHEMA).get("model")
        if args.config else None)
    if model is None:
        raise ConfigError("train needs --model (or a config file with model=...)")
    resolved = _resolve(_train_defaults(model), _TRAIN_SCHEMA, args.config, overrides)
    run_train(resolved, Path(args.data), _rooted(args.outdir))
    return 0


def cmd_evaluate(args) -> int:
    run_evaluate(Path(args.checkpoint), Path(args.data), _rooted(args.out),
                 also_json=args.json)
    return 0


def cmd_pinn_train(args) -> int:
    overrides = {k: getattr(args, k) for k in _PINN_SCHEMA}
    system = args.system or "pendulum"
    defaults = {
        "system": system, "lr": 1e-3, "epochs": 1000, "log_every": 100,
        "seed": 42, "collocation": 300 if system == "pendulum" else 201,
        "energy_init": 0.51,
    }
    resolved = _resolve(defaults, _PINN_SCHEMA, args.config, overrides)
    data = Path(args.data) if args.data else None
    run_pinn(resolved, data, _rooted(args.outdir))
    return 0


def cmd_plot(args) -> int:
    run_plot(args.kind, _rooted(args.out),
             data_path=Path(args.data) if args.data else None,
             ckpt_path=Path(args.checkpoint) if args.checkpoint else None,
             row=args.row)
    return 0


def cmd_reproduce(args) -> int:
    name = args.experiment
    if name not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {name!r}; valid names: {', '.join(EXPERIMENTS)}")
    outdir = _rooted(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    seed = args.seed

    def stage(label, fn, *fargs, **fkwargs):
        try:
            return fn(*fargs, **fkwargs)
        except Exception as exc:
            raise RuntimeError(f"stage {label!r} failed: {exc}") from exc

    if name in ("pendulum-ann", "pendulum-pinn"):
        sim = {**_SIM_DEFAULTS, "dt": args.dt, "seed": seed}
        traj_csv = stage("simulate", run_simulate, sim, outdir / "trajectory.csv")
        if name == "pendulum-ann":
            train_cfg = {**_train_defaults("pendulum_ann"), "seed": seed,
                         "max_epochs": args.max_epochs}
            ckpt = stage("train", run_train, train_cfg, traj_csv, outdir)
            stage("evaluate", run_evaluate, ckpt, traj_csv, outdir / "metrics.txt")
            stage("plot", run_plot, "pendulum-ann-pred", outdir / "pred.csv",
                  data_path=traj_csv, ckpt_path=ckpt)
        else:
            pinn_cfg = {"system": "pendulum", "lr": 1e-3, "epochs": args.epochs,
                        "log_every": 100, "seed": seed, "collocation": 300,
                        "energy_init": 0.51}
            ckpt = stage("pinn-train", run_pinn, pinn_cfg, traj_csv, outdir)
            stage("plot", run_plot, "pendulum-pinn-pred", outdir / "pred.csv",
                  data_path=traj_csv, ckpt_path=ckpt)
    elif name in ("quantum-cnn", "quantum-lstm"):
        gen = {**_GEN_DEFAULTS, "lambdas": args.n_lambdas, "n": args.n_points,
               "seed": seed}
        data_csv = stage("gen-quantum", run_gen_quantum, gen, outdir / "dataset.csv")
        model = "quantum_cnn" if name == "quantum-cnn" else "quantum_lstm"
        train_cfg = {**_train_defaults(model), "seed": seed,
                     "max_epochs": args.max_epochs}
        ckpt = stage("train", run_train, train_cfg, data_csv, outdir)
        stage("evaluate", run_evaluate, ckpt, data_csv, outdir / "metrics.txt")
        stage("plot", run_plot, "quantum-scatter", outdir / "scatter.csv",
              data_path=data_csv, ckpt_path=ckpt)
    else:  # quantum-pinn
        pinn_cfg = {"system": "quantum", "lr": 1e-3, "epochs": args.epochs,
                    "log_every": 100, "seed": seed, "collocation": 201,
                    "energy_init": 0.51}
        ckpt = stage("pinn-train", run_pinn, pinn_cfg, None, outdir)
        stage("plot", run_plot, "quantum-pinn-wavefunction",
              outdir / "wavefunction.csv", ckpt_path=ckpt)
    print(f"experiment {name} complete in {outdir}")
    return 0


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscml",
        description="Pendulum/oscillator data generation, surrogate models, "
                    "and physics-informed training.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-pendulum", help="integrate the pendulum and write a trajectory CSV")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    for key, kind in _SIM_SCHEMA.items():
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=kind, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-quantum", help="solve the eigenproblem over a lambda sweep and write a dataset CSV")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    for key, kind in _GEN_SCHEMA.items():
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=kind, default=None)
    p.set_defaults(func=cmd_gen_quantum)

    p = sub.add_parser("train", help="train a supervised surrogate model")
    p.add_argument("--config", default=None)
    p.add_argument("--model", default=None,
                   choices=("pendulum_ann", "quantum_cnn", "quantum_lstm"))
    p.add_argument("--data", required=True)
    p.add_argument("--outdir", required=True)
    for key, kind in _TRAIN_SCHEMA.items():
        if key == "model":
            continue
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=kind, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a trained model on its held-out test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true",
                   help="also write the metrics as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pinn-train", help="physics-informed training")
    p.add_argument("--config", default=None)
    p.add_argument("--system", default=None, choices=("pendulum", "quantum"))
    p.add_argument("--data", default=None)
    p.add_argument("--outdir", required=True)
    for key, kind in _PINN_SCHEMA.items():
        if key == "system":
            continue
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=kind, default=None)
    p.set_defaults(func=cmd_pinn_train)

    p = sub.add_parser("plot-data", help="emit a tidy CSV backing one figure")
    p.add_argument("--kind", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--data", default=None)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--row", type=int, default=0)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("reproduce", help="run one full experiment pipeline with pinned seeds")
    p.add_argument("--experiment", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--max-epochs", dest="max_epochs", type=int, default=500,
                   help="supervised epoch cap")
    p.add_argument("--epochs", type=int, default=1000, help="PINN epoch count")
    p.add_argument("--n-lambdas", dest="n_lambdas", type=int, default=500)
    p.add_argument("--n-points", dest="n_points", type=int, default=500)
    p.add_argument("--dt", type=float, default=0.01)
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, dataio.FormatError, dataio.CheckpointError, BuildError,
            NumericsError, models.TrainingError, models.DegenerateMetricsError,
            quant.EigensolverError, pend.IntegrationError, pend.BlowUpError,
            ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
