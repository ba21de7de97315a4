"""Experiment configuration, orchestration and output files.

A run writes, per seed, ``metrics_<seed>.csv`` (one row per global
iteration) and ``ledger_<seed>.csv`` (one row per uplink transmission, with
the full-precision noise variance and slack factors needed to replay the
privacy accountant), plus ``summary.json`` and ``curves.svg`` for the whole
campaign.
"""
from __future__ import annotations

import configparser
import csv
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import power
from .bound import BoundConstants, BoundInapplicable, TraceEstimator, eval_bound, eval_constants
from .channel import power_from_snr
from .data import gen_synthetic, load_table, partition_table, train_test_split
from .errors import ConfigError, InvariantViolation
from .model import Algorithm, LocalHyper, init_model, mlp_shapes
from .privacy import epsilon_from_sum, replay
from .protocol import LambdaSchedule, ProtocolSettings, RoundMetrics, Trainer
from .svg import emit_svg

OUTPUT_ENV = "OTADP_OUTPUT_DIR"
CSV_HEADER = ("iter", "transmitted", "train_loss", "test_acc", "eps_bound", "eps_max_client",
              "jammer_var", "avg_tx_power", "wall_ms")

DEFAULT_CONFIG = """
[experiment]
algorithm = upcycled
rounds = 40
seeds = 0
workers = 1
output_dir = runs/default
timing = false

[data]
preset = desk
clients = 10
classes = 10
feat_dim = 64
hidden = 32
mode = label_shard
shards_per_client = 5
min_samples = 100
max_samples = 300
test_frac = 0.2
table =

[model]
activation = relu
bias = true

[local]
lr = 0.05
momentum = 0.5
epochs = 5
batch_size = 32
mu = 0.1
tau = 1.0

[channel]
snr_db = 1.0
sigma_c = 1.0
noise = on
power =
alpha_u = dynamic
server_rescale = tau_only

[privacy]
delta = 1e-5
eps_target = none
jammer = auto
jammer_margin = 1.0

[schedule]
lambda = 1:0.15, 26:0.4, 51:0.9, 76:1.9

[bound]
enabled = true
L = estimate
B = estimate
rho = 1.0
q = estimate
G = estimate
"""

PRESETS = {
    "desk": {"feat_dim": 64, "hidden": 32, "classes": 10},
    "paper_mlp": {"feat_dim": 784, "hidden": 196, "classes": 10},
}


@dataclass
class ExperimentConfig:
    algorithm: Algorithm = Algorithm.UPCYCLED
    rounds: int = 40
    seeds: tuple[int, ...] = (0,)
    workers: int = 1
    output_dir: str = "runs/default"
    timing: bool = False
    clients: int = 10
    classes: int = 10
    feat_dim: int = 64
    hidden: int = 32
    data_mode: str = "label_shard"
    shards_per_client: int = 5
    n_range: tuple[int, int] = (100, 300)
    test_frac: float = 0.2
    table: str | None = None
    activation: str = "relu"
    bias: bool = True
    hyper: LocalHyper = field(default_factory=lambda: LocalHyper(local_epochs=5))
    snr_db: float = 1.0
    sigma_c: float = 1.0
    channel_noise: bool = True
    power: float | None = None
    alpha_u: float | None = None
    server_rescale: str = "tau_only"
    delta: float = 1e-5
    eps_target: float | None = None
    jammer_mode: str = "auto"
    jammer_margin: float = 1.0
    schedule: LambdaSchedule = field(default_factory=LambdaSchedule)
    bound_enabled: bool = True
    bound_constants: dict = field(default_factory=lambda: {
        "L": "estimate", "B": "estimate", "rho": 1.0, "q": "estimate", "G": "estimate"})

    def settings(self, seed: int) -> ProtocolSettings:
        return ProtocolSettings(
            algorithm=self.algorithm, rounds=self.rounds, hyper=self.hyper, schedule=self.schedule,
            sigma_c=self.sigma_c, channel_noise=self.channel_noise, delta=self.delta,
            eps_target=self.eps_target, jammer_mode=self.jammer_mode,
            jammer_margin=self.jammer_margin, alpha_u=self.alpha_u,
            server_rescale=self.server_rescale, workers=self.workers, seed=seed, timing=self.timing)


def _bool(v: str) -> bool:
    v = v.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _opt_float(v: str) -> float | None:
    v = v.strip().lower()
    return None if v in ("", "none", "inf", "off") else float(v)


def _lambda(v: str) -> LambdaSchedule:
    bps = []
    for item in v.split(","):
        m, val = item.split(":")
        bps.append((int(m), float(val)))
    return LambdaSchedule(tuple(bps))


def parse_config(text: str | None = None, overrides: Iterable[str] = ()) -> ExperimentConfig:
    """Parse INI-style ``key = value`` text (sections as in ``DEFAULT_CONFIG``).

    ``overrides`` are ``section.key=value`` strings applied last.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string(DEFAULT_CONFIG)
    if text:
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
    for ov in overrides:
        key, sep, value = ov.partition("=")
        section, dot, option = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override must look like section.key=value, got {ov!r}")
        if not cp.has_section(section) or option not in cp[section]:
            raise ConfigError(f"unknown config key {key.strip()!r}")
        cp[section][option] = value.strip()
    known = configparser.ConfigParser()
    known.optionxform = str
    known.read_string(DEFAULT_CONFIG)
    for section in cp.sections():
        if not known.has_section(section):
            raise ConfigError(f"unknown config section [{section}]")
        for option in cp[section]:
            if option not in known[section]:
                raise ConfigError(f"unknown config key {section}.{option}")
    try:
        return _build(cp)
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def _build(cp: configparser.ConfigParser) -> ExperimentConfig:
    ex, da, mo, lo, ch, pr, sc, bo = (cp[s] for s in (
        "experiment", "data", "model", "local", "channel", "privacy", "schedule", "bound"))
    algorithm = Algorithm(ex["algorithm"].strip().lower())
    preset = PRESETS.get(da["preset"].strip())
    if preset is None:
        raise ConfigError(f"unknown data preset {da['preset']!r}")
    dims = {k: int(da[k]) if da[k].strip() else preset[k] for k in preset}
    if da["preset"].strip() != "desk":
        dims = dict(preset)
    mu = float(lo["mu"])
    if algorithm is Algorithm.FEDAVG:
        mu = 0.0
    hyper = LocalHyper(lr=float(lo["lr"]), momentum=float(lo["momentum"]),
                       local_epochs=int(lo["epochs"]), batch_size=int(lo["batch_size"]),
                       mu=mu, tau=float(lo["tau"]))
    alpha_u = ch["alpha_u"].strip().lower()
    bound = {}
    for k in ("L", "B", "rho", "q", "G"):
        v = bo[k].strip().lower()
        bound[k] = "estimate" if v == "estimate" else float(v)
    if bound["rho"] == "estimate":
        raise ConfigError("rho cannot be estimated; give a number")
    cfg = ExperimentConfig(
        algorithm=algorithm,
        rounds=int(ex["rounds"]),
        seeds=tuple(int(s) for s in ex["seeds"].split(",") if s.strip()),
        workers=int(ex["workers"]),
        output_dir=ex["output_dir"].strip(),
        timing=_bool(ex["timing"]),
        clients=int(da["clients"]),
        classes=dims["classes"],
        feat_dim=dims["feat_dim"],
        hidden=dims["hidden"],
        data_mode=da["mode"].strip(),
        shards_per_client=int(da["shards_per_client"]),
        n_range=(int(da["min_samples"]), int(da["max_samples"])),
        test_frac=float(da["test_frac"]),
        table=da["table"].strip() or None,
        activation=mo["activation"].strip(),
        bias=_bool(mo["bias"]),
        hyper=hyper,
        snr_db=float(ch["snr_db"]),
        sigma_c=float(ch["sigma_c"]),
        channel_noise=_bool(ch["noise"]),
        power=_opt_float(ch["power"]),
        alpha_u=None if alpha_u == "dynamic" else float(alpha_u),
        server_rescale=ch["server_rescale"].strip(),
        delta=float(pr["delta"]),
        eps_target=_opt_float(pr["eps_target"]),
        jammer_mode=pr["jammer"].strip(),
        jammer_margin=float(pr["jammer_margin"]),
        schedule=_lambda(sc["lambda"]),
        bound_enabled=_bool(bo["enabled"]),
        bound_constants=bound,
    )
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    if not cfg.seeds:
        raise ConfigError("at least one seed is required")
    if cfg.rounds < 1:
        raise ConfigError("rounds must be >= 1")
    if cfg.sigma_c == 0 and cfg.power is None:
        raise ConfigError("sigma_c = 0 leaves the SNR-derived power cap at zero; set channel.power")
    if cfg.power is not None and not cfg.power > 0:
        raise ConfigError("channel.power must be positive")
    if cfg.algorithm is Algorithm.UPCYCLED and cfg.hyper.mu == 0:
        raise ConfigError("upcycled needs mu > 0 for its even-step extrapolation to do anything")
    # raises ConfigError for inconsistent privacy settings
    cfg.settings(cfg.seeds[0])


def load_config(path: str | Path, overrides: Iterable[str] = ()) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, overrides)


def build_trainer(cfg: ExperimentConfig, seed: int, observer=None, keep_trace: bool = False) -> Trainer:
    if cfg.table:
        feats, labels = load_table(cfg.table)
        if feats.shape[1] != cfg.feat_dim:
            raise ConfigError(f"table has {feats.shape[1]} features, config expects {cfg.feat_dim}")
        records = partition_table(feats, labels, cfg.clients, cfg.data_mode, cfg.shards_per_client,
                                  cfg.n_range, seed)
    else:
        records = gen_synthetic(cfg.clients, cfg.n_range, cfg.feat_dim, cfg.classes, cfg.data_mode,
                                cfg.shards_per_client, seed)
    clients, test = train_test_split(records, cfg.test_frac, seed)
    model = init_model(mlp_shapes(cfg.feat_dim, cfg.hidden, cfg.classes), seed, cfg.bias, cfg.activation)
    cap = cfg.power if cfg.power is not None else power_from_snr(cfg.snr_db, model.d, cfg.sigma_c)
    for c in clients:
        c.power = cap
    return Trainer(model, clients, test, cfg.settings(seed), keep_trace=keep_trace, observer=observer)


def _g9(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.9g}"


def emit_csv(metrics: Sequence[RoundMetrics], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in metrics:
            w.writerow([r.iteration, int(r.transmitted), _g9(r.train_loss), _g9(r.test_acc),
                        _g9(r.eps_bound), _g9(r.eps_max_client), _g9(r.jammer_var),
                        _g9(r.avg_tx_power), r.wall_ms])
    return path


def read_metrics_csv(path: str | Path) -> list[RoundMetrics]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [RoundMetrics(iteration=int(r["iter"]), transmitted=bool(int(r["transmitted"])),
                         train_loss=float(r["train_loss"]), test_acc=float(r["test_acc"]),
                         eps_bound=float(r["eps_bound"]), eps_max_client=float(r["eps_max_client"]),
                         jammer_var=float(r["jammer_var"]), avg_tx_power=float(r["avg_tx_power"]),
                         wall_ms=int(r["wall_ms"])) for r in rows]


def emit_ledger_csv(trainer: Trainer, path: str | Path) -> Path:
    """Per-transmission noise history at full (round-trip) precision."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "sigma_sq", "d_total", "delta", "alpha_u", "alpha_cj"]
                   + [f"s_{c.id}" for c in trainer.clients])
        for dg in trainer.diagnostics:
            w.writerow([dg.iteration, repr(dg.sigma_sq), trainer.D_total, repr(trainer.settings.delta),
                        repr(dg.alpha_u), repr(dg.alpha_cj)] + [repr(float(s)) for s in dg.s])
    return path


def replay_ledger_csv(path: str | Path) -> list[tuple[int, float, float]]:
    """Recompute ``(iter, eps_bound, eps_max_client)`` after each recorded round."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return []
    s_cols = [k for k in rows[0] if k.startswith("s_")]
    D_total, delta = int(rows[0]["d_total"]), float(rows[0]["delta"])
    ledgers = replay([float(r["sigma_sq"]) for r in rows],
                     [[float(r[k]) for k in s_cols] for r in rows], D_total, delta)
    return [(int(r["iter"]), epsilon_from_sum(lg.bound_sum, D_total, delta),
             epsilon_from_sum(float(lg.client_sums.max()), D_total, delta))
            for r, lg in zip(rows, ledgers)]


def check_invariants(trainer: Trainer, metrics: Sequence[RoundMetrics]) -> None:
    for a, b in zip(metrics, metrics[1:]):
        if b.eps_bound < a.eps_bound or b.eps_max_client < a.eps_max_client:
            raise InvariantViolation(f"epsilon decreased at iteration {b.iteration}")
        if not b.transmitted and (b.eps_bound != a.eps_bound or b.eps_max_client != a.eps_max_client):
            raise InvariantViolation(f"epsilon moved on non-transmitting iteration {b.iteration}")
    for dg in trainer.diagnostics:
        if np.any(dg.s < 1):
            raise InvariantViolation(f"s_i < 1 in round {dg.m}")
        if np.any(dg.tx_power_ratio > 1 + 1e-9):
            raise InvariantViolation(f"power cap exceeded in round {dg.m}")
    st = trainer.settings
    if st.private and st.eps_target is not None and st.jammer_mode != "off" and metrics:
        if metrics[-1].eps_bound > st.eps_target * (1 + 1e-6):
            raise InvariantViolation(
                f"final epsilon {metrics[-1].eps_bound:.6g} exceeds target {st.eps_target}")


def bound_report(cfg: ExperimentConfig, trainer: Trainer, est: TraceEstimator) -> dict:
    if cfg.algorithm is not Algorithm.UPCYCLED:
        return {"applicable": False, "reason": "bound is stated for upcycled iterations"}
    if not trainer.diagnostics:
        return {"applicable": False, "reason": "no transmissions"}
    given = cfg.bound_constants
    values = {k: (getattr(est, k) if given[k] == "estimate" else given[k]) for k in ("L", "B", "q", "G")}
    values["rho"] = given["rho"]
    heuristic = [k for k in ("L", "B", "q", "G") if given[k] == "estimate"]
    values = {k: max(v, 1e-12) if k in ("L", "B") else v for k, v in values.items()}
    alpha_u = min(dg.alpha_u for dg in trainer.diagnostics)
    sigma_c = cfg.sigma_c if cfg.channel_noise else 0.0
    c = BoundConstants(L=values["L"], B=values["B"], rho=values["rho"], q=values["q"],
                       G=values["G"], kappa=est.kappa, mu=cfg.hyper.mu, tau=cfg.hyper.tau,
                       d=trainer.w.d, sigma_c=sigma_c, alpha_u=alpha_u,
                       lambda_schedule=cfg.schedule,
                       jammer_terms=[(dg.jammer_gain, dg.alpha_cj) for dg in trainer.diagnostics])
    p = [cl.p for cl in trainer.clients]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundInapplicable)
        terms = [eval_constants(c, dg.m, dg.s, p)[1:5] for dg in trainer.diagnostics]
        rhs = eval_bound(c, est.f0, len(terms), terms)
    report = {"applicable": c.C1 > 0, "C1": c.C1, "C6": c.C6, "rhs": None if math.isnan(rhs) else rhs,
              "constants": {**values, "alpha_u": alpha_u, "kappa": [float(k) for k in est.kappa]},
              "heuristic_constants": heuristic, "f0_minus_fstar": est.f0,
              "mean_terms": {f"C{k + 2}": float(np.mean([t[k] for t in terms])) for k in range(4)}}
    if c.C1 <= 0:
        report["warning"] = "C1 <= 0: convergence bound hypothesis fails; value not reported"
    return report


def run_seed(cfg: ExperimentConfig, seed: int, out: Path | None = None) -> tuple[Trainer, list[RoundMetrics], dict]:
    est = TraceEstimator() if cfg.bound_enabled else None
    trainer = build_trainer(cfg, seed, observer=est)
    metrics = trainer.run()
    check_invariants(trainer, metrics)
    bound = bound_report(cfg, trainer, est) if est is not None else {"applicable": False,
                                                                      "reason": "disabled"}
    if out is not None:
        emit_csv(metrics, out / f"metrics_{seed}.csv")
        emit_ledger_csv(trainer, out / f"ledger_{seed}.csv")
    return trainer, metrics, bound


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def run_experiment(cfg: ExperimentConfig, output_dir: str | Path | None = None) -> dict:
    """Run every seed, write all artifacts and return the summary dict."""
    out = Path(output_dir or os.environ.get(OUTPUT_ENV) or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_seed, series, warns = {}, {}, []
    for seed in cfg.seeds:
        trainer, metrics, bound = run_seed(cfg, seed, out)
        series[f"seed {seed}"] = metrics
        if bound.get("warning"):
            warns.append(f"seed {seed}: {bound['warning']}")
        last = metrics[-1]
        per_seed[str(seed)] = {
            "final_test_acc": last.test_acc, "final_train_loss": last.train_loss,
            "eps_bound": last.eps_bound, "eps_max_client": last.eps_max_client,
            "transmissions": trainer.transmissions, "d": trainer.w.d, "D_total": trainer.D_total,
            "jammer_active_rounds": sum(dg.alpha_cj > 0 for dg in trainer.diagnostics),
            "bound": bound}
    accs = [v["final_test_acc"] for v in per_seed.values()]
    summary = {
        "algorithm": cfg.algorithm.value, "rounds": cfg.rounds, "iterations": cfg.settings(0).iterations,
        "seeds": list(cfg.seeds), "delta": cfg.delta, "eps_target": cfg.eps_target,
        "jammer_mode": cfg.jammer_mode, "jammer_margin": cfg.jammer_margin,
        "final_test_acc_mean": float(np.mean(accs)),
        "final_test_acc_std": float(np.std(accs, ddof=1)) if len(accs) > 1 else 0.0,
        "per_seed": per_seed, "warnings": warns}
    (out / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    emit_svg(series, out / "curves.svg")
    return summary


def jammer_design_report(eps: float, delta: float, rounds: int, data_size: int, alpha_u: float,
                         h_cj: float, sigma_c: float, margin: float = 1.0) -> dict:
    a = power.compute_a(eps, delta)
    need = power.required_noise_variance(eps, delta, rounds, data_size)
    alpha_cj = margin * power.design_jammer(eps, delta, rounds, data_size, alpha_u, h_cj, sigma_c)
    sigma_sq = (alpha_cj * h_cj / alpha_u) ** 2 + sigma_c ** 2 / alpha_u ** 2
    eps_achieved = epsilon_from_sum(rounds / sigma_sq, data_size, delta) if sigma_sq > 0 else math.inf
    return {"a": a, "required_variance": need, "channel_variance": sigma_c ** 2 / alpha_u ** 2,
            "jammer_needed": power.jammer_needed(rounds, data_size, a, sigma_c, alpha_u, delta),
            "alpha_cj": alpha_cj, "effective_variance": sigma_sq, "eps_achieved": eps_achieved}
