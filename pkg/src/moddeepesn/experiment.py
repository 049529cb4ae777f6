"""Experiment configuration and the train/evaluate pipeline behind the CLI."""

from __future__ import annotations

import configparser
import contextlib
import csv
import dataclasses
import io
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from .data import ForecastSplit, TimeSeries, gen_mackey_glass, load_csv_series, make_split
from .errors import ConfigError, DataError, ModDeepEsnError
from .initialization import XAVIER, EsnModel, InitSpec, build_model, is_xavier
from .ip import IpConfig, pretrain
from .metrics import CSV_COLUMNS, EvalReport, mape, nrmse, rmse
from .numerics import RngStream
from .readout import predict, train_readout
from .reservoir import run
from .topology import TopologyKind, build_connectivity

MACKEY_GLASS = "mackey-glass"

_SCALE_KEYS = {"rho_hat", "sigma_in", "sigma_l"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment configuration.

    Attribute names are the config keys with ``.`` replaced by ``_``
    (``ip.eta`` is stored as ``ip_eta``).
    """

    dataset: str = MACKEY_GLASS
    csv_column: str = "Temp"
    mg_tau: float = 17.0
    mg_dt: float = 1.0
    mg_a: float = 0.2
    mg_b: float = 0.1
    mg_p: float = 10.0
    mg_x0: float = 1.2
    mg_transient: int = 1000
    train_len: int = 8000
    test_len: int = 2000
    horizon: int = 84
    washout: int = 100
    normalize: bool = True
    topology: str = "wide:3"
    sweep_topologies: str = "wide:3,layered:3,crisscross:2,wide+layered:3x2"
    n_r: int = 256
    rho_hat: object = XAVIER
    sigma_in: object = 0.1
    sigma_l: object = XAVIER
    s_in: float = 0.1
    s_hat_l: float = 0.1
    s_l: float = 0.7
    alpha: float = 0.6
    beta: float = 2e-8
    ip_enabled: bool = False
    # chosen by validation error on the training tail; larger steps break the echo state property
    ip_eta: float = 3e-6
    ip_mu: float = 0.0
    ip_sigma: float = 0.05
    ip_epochs: int = 3
    runs: int = 10
    seed: int = 0
    output: str = "-"
    format: str = "csv"

    def __post_init__(self):
        # constructing the typed configs is the validation
        self.topology_kind
        self.init_spec
        self.ip_config
        for name in self.sweep_topologies.split(","):
            TopologyKind.parse(name)
        for name in ("train_len", "test_len", "runs", "n_r"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("horizon", "washout", "mg_transient"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.beta < 0:
            raise ConfigError("beta must be >= 0")
        if self.format not in ("csv", "text"):
            raise ConfigError(f"format must be csv or text, got {self.format!r}")

    @property
    def topology_kind(self) -> TopologyKind:
        return TopologyKind.parse(self.topology)

    @property
    def init_spec(self) -> InitSpec:
        return InitSpec(
            rho_hat=self.rho_hat,
            sigma_in=self.sigma_in,
            sigma_l=self.sigma_l,
            s_in=self.s_in,
            s_hat_l=self.s_hat_l,
            s_l=self.s_l,
            alpha=self.alpha,
        )

    @property
    def ip_config(self) -> IpConfig:
        return IpConfig(eta=self.ip_eta, mu=self.ip_mu, sigma=self.ip_sigma, epochs=self.ip_epochs)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        """Serialise as ``key = value`` lines readable by :func:`parse_config`."""
        lines = []
        for f in dataclasses.fields(self):
            lines.append(f"{config_key(f.name)} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


PRESETS: Dict[str, Dict[str, object]] = {
    # Mackey-Glass, 84 steps ahead
    "mackey-glass": {},
    # Melbourne daily minimum temperature, 1 step ahead; needs `dataset = <csv path>`
    "temperature": {
        "dataset": "daily-min-temperatures.csv",
        "csv_column": "Temp",
        "train_len": 2919,
        "test_len": 730,
        "horizon": 1,
        "washout": 30,
        "topology": "wide+layered:2x2",
        "sweep_topologies": "wide:2,layered:2,crisscross:2,wide+layered:2x2",
        "n_r": 1024,
        "beta": 7e-4,
        "alpha": 1.0,
        "rho_hat": XAVIER,
        "sigma_in": 0.4,
        "sigma_l": XAVIER,
        "s_in": 0.6,
        "s_hat_l": 0.3,
        "s_l": 0.6,
    },
}


def config_key(attr: str) -> str:
    for prefix in ("mg_", "ip_"):
        if attr.startswith(prefix):
            return prefix[:-1] + "." + attr[len(prefix) :]
    return attr


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
# accepted spellings: the documented key (``ip.eta``) and the attribute name (``ip_eta``)
_KEYS = {**{name: name for name in _FIELDS}, **{config_key(name): name for name in _FIELDS}}


def _attr_name(key: str) -> str:
    return _KEYS.get(key.strip(), "")


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _coerce(attr: str, value):
    default = _FIELDS[attr].default
    if attr in _SCALE_KEYS:
        if is_xavier(value):
            return XAVIER
        return _number(attr, value, float)
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in ("1", "true", "yes", "on", "y"):
            return True
        if text in ("0", "false", "no", "off", "n"):
            return False
        raise ConfigError(f"{config_key(attr)}: expected a boolean, got {value!r}")
    if isinstance(default, int):
        return _number(attr, value, int)
    if isinstance(default, float):
        return _number(attr, value, float)
    return str(value).strip()


def _number(attr, value, kind):
    try:
        if kind is int:
            as_float = float(value)
            if not as_float.is_integer():
                raise ValueError
            return int(as_float)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{config_key(attr)}: expected {kind.__name__}, got {value!r}") from None


def read_config_file(path) -> Dict[str, str]:
    """Read flat ``key = value`` lines (``#`` comments allowed)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no such config file: {path}")
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if len(parser.sections()) != 1:
        raise ConfigError(f"{path}: sections are not supported; use flat keys")
    return dict(parser["config"])


def parse_config(
    path=None, overrides: Optional[Dict[str, object]] = None, preset: Optional[str] = None
) -> ExperimentConfig:
    """Merge defaults, an optional preset, a config file and explicit overrides (in that order)."""
    values: Dict[str, object] = {}
    layers = []
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        layers.append(PRESETS[preset])
    if path is not None:
        layers.append(read_config_file(path))
    if overrides:
        layers.append(overrides)
    for layer in layers:
        for key, value in layer.items():
            attr = _attr_name(key)
            if attr not in _FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            values[attr] = _coerce(attr, value)
    return ExperimentConfig(**values)


@contextlib.contextmanager
def stage(name: str):
    """Tag library errors raised inside the block with the pipeline stage."""
    try:
        yield
    except ModDeepEsnError as exc:
        if not getattr(exc, "stage", None):
            exc.stage = name
        raise


def load_series(cfg: ExperimentConfig) -> TimeSeries:
    if cfg.dataset == MACKEY_GLASS:
        return gen_mackey_glass(
            n=cfg.train_len + cfg.test_len + cfg.horizon,
            tau=cfg.mg_tau,
            dt=cfg.mg_dt,
            a=cfg.mg_a,
            b=cfg.mg_b,
            p=cfg.mg_p,
            x0=cfg.mg_x0,
            transient=cfg.mg_transient,
        )
    return load_csv_series(cfg.dataset, cfg.csv_column)


def prepare_split(cfg: ExperimentConfig, series: Optional[TimeSeries] = None) -> ForecastSplit:
    with stage("data"):
        if series is None:
            series = load_series(cfg)
        return make_split(
            series, cfg.train_len, cfg.test_len, cfg.horizon, cfg.washout, cfg.normalize
        )


def score(u, u_hat) -> Dict[str, float]:
    """All three metrics; MAPE becomes NaN (with a warning) when a target is zero."""
    result = {"rmse": rmse(u, u_hat), "nrmse": nrmse(u, u_hat)}
    try:
        result["mape"] = mape(u, u_hat)
    except DataError as exc:
        warnings.warn(f"mape skipped: {exc}", RuntimeWarning, stacklevel=2)
        result["mape"] = math.nan
    return result


def fit_and_evaluate(
    model: EsnModel,
    train_in,
    train_target,
    test_in,
    test_target,
    beta: float,
    washout: int,
    to_original: Callable = np.asarray,
) -> Dict[str, float]:
    """Train the readout on the training segment and score the test segment.

    Both segments start from the zero state and drop their first ``washout``
    steps. Metrics are computed after ``to_original`` undoes normalisation.
    """
    with stage("harvest training states"):
        states = run(model, train_in, washout)
    with stage("train readout"):
        weights = train_readout(states, _targets(train_target)[:, washout:], beta)
    with stage("harvest test states"):
        test_states = run(model, test_in, washout)
    with stage("evaluate"):
        pred = predict(weights, test_states)
        truth = _targets(test_target)[:, washout:]
        return score(to_original(truth.T), to_original(pred.T))


def _targets(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values[None, :] if values.ndim == 1 else values.T


def build(cfg: ExperimentConfig, n_u: int, stream: RngStream) -> EsnModel:
    with stage("build model"):
        return build_model(build_connectivity(cfg.topology_kind), n_u, cfg.n_r, cfg.init_spec, stream)


def evaluate_run(cfg: ExperimentConfig, split: ForecastSplit, index: int) -> Dict[str, float]:
    """One repetition; randomness comes only from the stream labelled ``run/<index>``."""
    stream = RngStream(cfg.seed).child("run", index)
    n_u = 1 if np.ndim(split.train_in) == 1 else split.train_in.shape[1]
    model = build(cfg, n_u, stream.child("init"))
    if cfg.ip_enabled:
        with stage("ip pre-training"):
            model = pretrain(model, split.train_in, cfg.ip_config)
    return fit_and_evaluate(
        model,
        split.train_in,
        split.train_target,
        split.test_in,
        split.test_target,
        cfg.beta,
        split.washout,
        split.to_original,
    )


def run_experiment(
    cfg: ExperimentConfig,
    split: Optional[ForecastSplit] = None,
    map_fn: Callable = map,
) -> EvalReport:
    """Average the metrics of ``cfg.runs`` independently seeded repetitions."""
    if split is None:
        split = prepare_split(cfg)
    per_run = list(map_fn(lambda i: evaluate_run(cfg, split, i), range(cfg.runs)))
    kind = cfg.topology_kind
    return EvalReport.from_runs(
        topology=kind,
        n_l=kind.n_layers,
        n_r=cfg.n_r,
        ip=cfg.ip_enabled,
        per_run=per_run,
        n_steps=len(split.test_in) - split.washout,
    )


def sweep(cfg: ExperimentConfig, split: Optional[ForecastSplit] = None) -> List[EvalReport]:
    """Every topology in ``cfg.sweep_topologies`` with IP off and on, sharing one config."""
    if split is None:
        split = prepare_split(cfg)
    reports = []
    for ip_enabled in (False, True):
        for topo in cfg.sweep_topologies.split(","):
            reports.append(run_experiment(cfg.replace(topology=topo.strip(), ip_enabled=ip_enabled), split))
    return reports


def config_for_genome(cfg: ExperimentConfig, genome) -> ExperimentConfig:
    """Overlay the hyperparameters encoded in ``genome`` onto ``cfg``."""
    from .evolve import decode

    kind, spec, n_r, beta, ip_enabled = decode(genome)
    return cfg.replace(
        topology=str(kind),
        n_r=n_r,
        beta=beta,
        ip_enabled=ip_enabled,
        rho_hat=spec.rho_hat,
        sigma_in=spec.sigma_in,
        sigma_l=spec.sigma_l,
        s_in=spec.s_in,
        s_hat_l=spec.s_hat_l,
        s_l=spec.s_l,
        alpha=spec.alpha,
    )


class GenomeFitness:
    """Validation RMSE of a genome, averaged over a few seeds.

    The last ``val_fraction`` of the training segment is held out, so the test
    segment is never seen during the search. Models that fail to build or
    diverge score ``inf``.
    """

    def __init__(self, cfg: ExperimentConfig, split: ForecastSplit, seeds: int = 3, val_fraction: float = 0.2):
        self.cfg = cfg
        self.split = split
        self.seeds = seeds
        n_train = len(split.train_in)
        self.cut = n_train - int(round(n_train * val_fraction))
        if min(self.cut, n_train - self.cut) <= split.washout:
            raise DataError("training segment too short for a validation tail")

    def __call__(self, genome) -> float:
        sp, cut = self.split, self.cut
        n_u = 1 if np.ndim(sp.train_in) == 1 else sp.train_in.shape[1]
        # seeds depend on the genome itself, never on its position in the population
        key = json.dumps(genome, sort_keys=True, default=str)
        try:
            cfg = config_for_genome(self.cfg, genome)
            errors = []
            for i in range(self.seeds):
                model = build(cfg, n_u, RngStream(cfg.seed).child("fitness", key, i))
                if cfg.ip_enabled:
                    model = pretrain(model, sp.train_in[:cut], cfg.ip_config)
                result = fit_and_evaluate(
                    model,
                    sp.train_in[:cut],
                    sp.train_target[:cut],
                    sp.train_in[cut:],
                    sp.train_target[cut:],
                    cfg.beta,
                    sp.washout,
                    sp.to_original,
                )
                errors.append(result["rmse"])
            value = float(np.mean(errors))
        except (ModDeepEsnError, FloatingPointError, np.linalg.LinAlgError):
            return math.inf
        return value if math.isfinite(value) else math.inf


def reports_to_csv(reports: Iterable[EvalReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for report in reports:
        writer.writerow(report.csv_row())
    return buf.getvalue()


def reports_to_text(reports: Iterable[EvalReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"


def emit_report(reports: Iterable[EvalReport], fmt: str = "csv", path="-") -> str:
    """Write reports as CSV (metrics x1e3) or structured JSON text; ``"-"`` means return only."""
    reports = list(reports)
    if fmt == "csv":
        text = reports_to_csv(reports)
    elif fmt == "text":
        text = reports_to_text(reports)
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    if path not in (None, "-"):
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot write report to {path}: {exc}") from None
    return text


def read_report_csv(text: str) -> List[Dict[str, object]]:
    rows = list(csv.DictReader(io.StringIO(text)))
    for row in rows:
        for key in ("rmse_e3", "nrmse_e3", "mape_e3"):
            row[key] = float(row[key])
        row["n_l"] = int(row["n_l"])
        row["n_r"] = int(row["n_r"])
    return rows
