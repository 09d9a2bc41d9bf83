"""Scenario configuration, the simulation loop, metrics and detection.

A scenario advances simulated time window by window: packets are applied in
timestamp order (with idle expiry interleaved), then each observation period
ends with expire -> observe -> strategy hook. Everything downstream of the
config (including its seed) is deterministic, so metrics CSVs are
byte-identical across runs.
"""

from __future__ import annotations

import csv
import io
import math
import os
import random
from dataclasses import dataclass, field, replace
from typing import NamedTuple

from . import qlearning, svm
from .control import (
    ControlConfig,
    DataController,
    PolicyDirective,
    QdataController,
    directives_csv,
)
from .flow_table import FlowTable, PacketOutcome
from .match_schemes import FMS_ID, MMOS_ID, catalog
from .qlearning import OnlineAgent, QTable, SwitchTrainingEnv
from .svm import SvmModel, Verdict
from .traffic import (
    BENIGN,
    Host,
    TrafficSpec,
    make_topology,
    merge_streams,
)

MMOS = "MMOS"
FMS = "FMS"
DATA = "DATA"
QDATA = "QDATA"
STRATEGIES = (MMOS, FMS, DATA, QDATA)

METRICS_HEADER = "t_ms,f,delta_f,packet_in,rejected,scheme_changes,mean_theta,reward,svm_verdict"
DETECTION_HEADER = "dr,ac,fa,fitness"


class ConfigError(Exception):
    """Invalid scenario configuration; the message names the field."""


class MetricsRow(NamedTuple):
    t_ms: int
    f: int
    delta_f: int
    packet_in: int
    rejected: int
    scheme_changes: int
    mean_theta: float
    reward: float
    svm_verdict: str  # GOOD | DEGRADED | N/A


@dataclass
class DetectionOutcome:
    dr: float
    ac: float
    fa: float
    dr_defined: bool = True
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    duration_s: float
    observation_period_s: float = 10.0
    f_cap: int = 300
    idle_timeout_s: float = 10.0
    strategy: str = FMS
    epsilon: float = 0.0
    traffic: tuple[TrafficSpec, ...] = ()
    hosts: tuple[Host, ...] = make_topology()
    q_table_path: str | None = None
    svm_model_path: str | None = None
    seed: int = 0
    alpha: float = 0.1
    gamma: float = 0.9
    z: float = 2.0
    detector_threshold: float | None = None
    online_updates: bool = True

    def validate(self) -> None:
        if self.duration_s <= 0:
            raise ConfigError("duration_s must be positive")
        if self.observation_period_s <= 0:
            raise ConfigError("observation_period_s must be positive")
        dur_ms = int(round(self.duration_s * 1000))
        period_ms = int(round(self.observation_period_s * 1000))
        if period_ms == 0 or dur_ms % period_ms != 0:
            raise ConfigError("duration_s must be a multiple of observation_period_s")
        if self.f_cap <= 0:
            raise ConfigError("f_cap must be positive")
        if self.idle_timeout_s <= 0:
            raise ConfigError("idle_timeout_s must be positive")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must lie in [0, 1)")
        if self.z < 1.0:
            raise ConfigError("z must be >= 1.0")
        if not self.hosts:
            raise ConfigError("hosts must be non-empty")

    @property
    def period_ms(self) -> int:
        return int(round(self.observation_period_s * 1000))

    @property
    def n_windows(self) -> int:
        return int(round(self.duration_s * 1000)) // self.period_ms


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    rows: list[MetricsRow]
    directives: list[PolicyDirective]
    detection: DetectionOutcome | None
    window_census: list[dict[str, int]]
    window_n_ip: list[int]
    attack_truth: list[bool]
    installs: list[int] = field(default_factory=list)
    expired: list[int] = field(default_factory=list)
    deleted: list[int] = field(default_factory=list)
    threshold: float | None = None

    def metrics_csv(self) -> str:
        lines = [METRICS_HEADER]
        for r in self.rows:
            lines.append(f"{r.t_ms},{r.f},{r.delta_f},{r.packet_in},{r.rejected},"
                         f"{r.scheme_changes},{r.mean_theta:.6f},{r.reward:.6f},"
                         f"{r.svm_verdict}")
        return "\n".join(lines) + "\n"

    def directives_csv(self) -> str:
        return directives_csv(self.directives)


def _mean_theta(table: FlowTable) -> float:
    if table.f == 0:
        return 0.0
    cat = catalog()
    return sum(cat[e.scheme_id].theta for e in table.entries.values()) / table.f


def _resolve_traffic(cfg: ScenarioConfig) -> list[TrafficSpec]:
    specs = []
    for i, spec in enumerate(cfg.traffic):
        if spec.seed is None:
            spec = replace(spec, seed=cfg.seed * 7919 + 100_003 * i)
        specs.append(spec)
    return specs


def _load_qdata_inputs(cfg: ScenarioConfig, q_table, svm_model):
    if svm_model is None:
        if cfg.svm_model_path is None:
            raise ConfigError(f"svm_model_path is required for strategy {cfg.strategy}")
        if not os.path.exists(cfg.svm_model_path):
            raise ConfigError(f"svm_model_path does not exist: {cfg.svm_model_path}")
        svm_model = svm.load_model(cfg.svm_model_path)
    if cfg.strategy == QDATA and q_table is None:
        if cfg.q_table_path is None:
            raise ConfigError("q_table_path is required for strategy QDATA")
        if not os.path.exists(cfg.q_table_path):
            raise ConfigError(f"q_table_path does not exist: {cfg.q_table_path}")
        q_table = qlearning.load_qtable(cfg.q_table_path)
    return q_table, svm_model


def run_scenario(cfg: ScenarioConfig, q_table: QTable | None = None,
                 svm_model: SvmModel | None = None) -> ScenarioResult:
    """Execute a scenario and collect per-window metrics.

    ``q_table``/``svm_model`` override the config's file paths, which lets
    callers pass freshly trained objects without touching disk. The QDATA
    strategy runs on a copy of the table so online updates never leak
    between runs.
    """
    cfg.validate()
    specs = _resolve_traffic(cfg)

    default_scheme = MMOS_ID if cfg.strategy == MMOS else FMS_ID
    table = FlowTable(cfg.f_cap, int(round(cfg.idle_timeout_s * 1000)), default_scheme)
    ctl_cfg = ControlConfig(cfg.f_cap, cfg.idle_timeout_s, cfg.z)

    controller = None
    if cfg.strategy in (DATA, QDATA):
        q_table, svm_model = _load_qdata_inputs(cfg, q_table, svm_model)
        if cfg.strategy == DATA:
            controller = DataController(svm_model, ctl_cfg, cfg.observation_period_s)
        else:
            agent = OnlineAgent(q_table.copy(), cfg.f_cap, epsilon=cfg.epsilon,
                                online_updates=cfg.online_updates,
                                rng=random.Random(cfg.seed ^ 0x5EED))
            controller = QdataController(svm_model, agent, ctl_cfg,
                                         cfg.observation_period_s)

    rows: list[MetricsRow] = []
    directives: list[PolicyDirective] = []
    window_census: list[dict[str, int]] = []
    window_n_ip: list[int] = []
    installs_w: list[int] = []
    expired_w: list[int] = []
    deleted_w: list[int] = []
    prev_totals = (0, 0, 0)

    period_ms = cfg.period_ms
    for w in range(cfg.n_windows):
        t0 = w * period_ms
        t1 = t0 + period_ms
        packet_in = rejected = 0
        for ts, pkt in merge_streams(specs, (t0, t1)):
            table.expire(ts)
            outcome = table.process_packet(pkt, ts)
            if outcome is not PacketOutcome.HIT:
                packet_in += 1
                if outcome is PacketOutcome.MISS_REJECTED:
                    rejected += 1
        table.expire(t1)
        if table.f > cfg.f_cap:
            raise RuntimeError("capacity invariant violated")

        obs = table.observe(t1)
        census, n_ip = table.dst_flow_census()
        window_census.append(dict(census))
        window_n_ip.append(n_ip)
        totals = (table.installed_total, table.expired_total, table.deleted_total)
        installs_w.append(totals[0] - prev_totals[0])
        expired_w.append(totals[1] - prev_totals[1])
        deleted_w.append(totals[2] - prev_totals[2])
        prev_totals = totals

        mean_theta = _mean_theta(table)
        reward_v = 0.0 if obs.f in (0, cfg.f_cap) else mean_theta

        step_directives = controller.step(obs, table, t1) if controller else []
        directives.extend(step_directives)
        verdict = getattr(controller, "last_verdict", None)
        verdict_s = verdict.value if isinstance(verdict, Verdict) else "N/A"
        changes = sum(1 for d in step_directives if d.changed)

        rows.append(MetricsRow(t1, obs.f, obs.delta_f, packet_in, rejected,
                               changes, mean_theta, reward_v, verdict_s))

    truth = attack_window_labels(cfg, specs)
    detection = None
    threshold = cfg.detector_threshold
    if any(truth) or threshold is not None:
        if threshold is None:
            twin = replace(cfg, traffic=tuple(s for s in specs if s.kind == BENIGN))
            twin_result = run_scenario(twin, q_table=q_table, svm_model=svm_model)
            threshold = calibrate_threshold(twin_result)
        detection = baseline_detector(window_census, truth, threshold)

    return ScenarioResult(cfg, rows, directives, detection, window_census,
                          window_n_ip, truth, installs_w, expired_w, deleted_w,
                          threshold)


def attack_window_labels(cfg: ScenarioConfig, specs=None) -> list[bool]:
    """True for every observation window that overlaps an attack stream."""
    if specs is None:
        specs = cfg.traffic
    period_ms = cfg.period_ms
    labels = []
    for w in range(cfg.n_windows):
        t0, t1 = w * period_ms, (w + 1) * period_ms
        labels.append(any(s.kind != BENIGN and s.start_ms < t1 and s.end_ms > t0
                          for s in specs))
    return labels


def baseline_detector(window_stats, attack_truth, threshold: float) -> DetectionOutcome:
    """Flag windows where any destination accumulates too many distinct
    flow signatures.

    Signatures come from installed entries, so MAC-aggregated destinations
    contribute a single signature and stay invisible regardless of load.
    """
    if len(window_stats) != len(attack_truth):
        raise ValueError("window_stats and attack_truth lengths differ")
    tp = fp = tn = fn = 0
    for census, attacked in zip(window_stats, attack_truth):
        flagged = max(census.values(), default=0) > threshold
        if attacked and flagged:
            tp += 1
        elif attacked:
            fn += 1
        elif flagged:
            fp += 1
        else:
            tn += 1
    n = len(attack_truth)
    attacks = tp + fn
    benign = fp + tn
    dr_defined = attacks > 0
    dr = tp / attacks if attacks else 0.0
    ac = (tp + tn) / n if n else 0.0
    fa = fp / benign if benign else 0.0
    return DetectionOutcome(dr, ac, fa, dr_defined, tp, fp, tn, fn)


def calibrate_threshold(benign_result: ScenarioResult, warmup_windows: int = 2,
                        factor: float = 3.0) -> float:
    """Detector threshold from a benign run of the same scenario.

    Warm-up windows are skipped because the initial full-matching transient
    would inflate the benign peak by an order of magnitude.
    """
    peak = 0
    for census in benign_result.window_census[warmup_windows:]:
        if census:
            peak = max(peak, max(census.values()))
    return factor * max(peak, 1)


def fitness(out: DetectionOutcome, weights=(1 / 3, 1 / 3, 1 / 3)) -> float:
    """Weighted detection score; false alarms decay exponentially."""
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    w_dr, w_ac, w_fa = weights
    return w_dr * out.dr + w_ac * out.ac + w_fa * math.exp(-out.fa)


def detection_csv(out: DetectionOutcome, weights=(1 / 3, 1 / 3, 1 / 3)) -> str:
    value = fitness(out, weights)
    return (DETECTION_HEADER + "\n"
            f"{out.dr:.6f},{out.ac:.6f},{out.fa:.6f},{value:.6f}\n")


# ---------------------------------------------------------------------------
# scenario builders

def desk_scenario(strategy: str, rate: float = 30.0, seed: int = 1,
                  duration_s: float = 500.0, targets=("S1",),
                  attack_kind: str | None = None, attack_rate: float = 15.0,
                  attack_start_s: float = 100.0, attack_end_s: float | None = None,
                  attack_targets=None,
                  f_cap: int = 300, idle_timeout_s: float = 10.0,
                  observation_period_s: float = 10.0,
                  **overrides) -> ScenarioConfig:
    """Desk-scale profile: a 10x shrink of the reference deployment that
    preserves the rate * idle_timeout vs. capacity ratio (loads 10/20/30
    new flows per second against a 300-entry table).

    Benign traffic flows from every host toward ``targets`` (server names);
    ``attack_kind`` overlays one attack stream, by default aimed at the
    first benign target from 100 s until the end of the run.
    """
    hosts = overrides.pop("hosts", make_topology())
    clients = tuple(h for h in hosts if h.role == "HOST")
    by_name = {h.name: h for h in hosts}

    def resolve(names):
        try:
            return tuple(by_name[name] for name in names)
        except KeyError as exc:
            raise ConfigError(f"unknown target host {exc.args[0]!r}") from exc

    traffic = [TrafficSpec(BENIGN, rate, 0.0, duration_s, resolve(targets), clients)]
    if attack_kind is not None:
        end = duration_s if attack_end_s is None else attack_end_s
        victims = resolve(attack_targets) if attack_targets else resolve(targets[:1])
        traffic.append(TrafficSpec(attack_kind, attack_rate, attack_start_s, end,
                                   victims, clients,
                                   refresh_s=idle_timeout_s - 1.0))
    return ScenarioConfig(duration_s=duration_s,
                          observation_period_s=observation_period_s,
                          f_cap=f_cap, idle_timeout_s=idle_timeout_s,
                          strategy=strategy, traffic=tuple(traffic),
                          hosts=hosts, seed=seed, **overrides)


def default_svm_rates(f_cap: int, idle_timeout_s: float) -> list[float]:
    """Benign-rate sweep spanning clearly-safe through just-overloaded."""
    sustainable = f_cap / idle_timeout_s
    fractions = (0.27, 0.4, 0.53, 0.67, 0.8, 0.93, 1.0, 1.07, 1.14)
    return [round(sustainable * x, 3) for x in fractions]


def collect_svm_samples(cfg: ScenarioConfig, rates=None,
                        duration_s: float = 300.0,
                        horizon_s: float | None = None) -> list[svm.LabeledSample]:
    """Labeled (f, delta_f) samples from full-matching runs across loads."""
    if rates is None:
        rates = default_svm_rates(cfg.f_cap, cfg.idle_timeout_s)
    servers = tuple(h.name for h in cfg.hosts if h.role == "SERVER")
    samples: list[svm.LabeledSample] = []
    for i, rate in enumerate(rates):
        sub = desk_scenario(FMS, rate=rate, seed=cfg.seed * 31 + i,
                            duration_s=duration_s, targets=servers,
                            f_cap=cfg.f_cap, idle_timeout_s=cfg.idle_timeout_s,
                            observation_period_s=cfg.observation_period_s,
                            hosts=cfg.hosts)
        samples.extend(svm.label_harness(sub, horizon_s))
    return samples


def train_default_svm(cfg: ScenarioConfig, rates=None, duration_s: float = 300.0,
                      horizon_s: float | None = None, c: float = 100.0,
                      epochs: int = 300) -> SvmModel:
    # the safe/doomed gap is narrow next to the feature spread, so the
    # default regularization (c=1) underfits here
    samples = collect_svm_samples(cfg, rates, duration_s, horizon_s)
    return svm.train(samples, c=c, epochs=epochs, seed=cfg.seed)


def build_training_env(cfg: ScenarioConfig, seed: int | None = None,
                       **env_overrides) -> SwitchTrainingEnv:
    """Training environment matching a scenario's switch parameters."""
    return SwitchTrainingEnv(f_cap=cfg.f_cap, idle_timeout_s=cfg.idle_timeout_s,
                             period_s=cfg.observation_period_s, hosts=cfg.hosts,
                             seed=cfg.seed if seed is None else seed,
                             **env_overrides)


# ---------------------------------------------------------------------------
# config files (TOML, flat top-level keys plus [[traffic]] tables)

_KNOWN_KEYS = {
    "duration_s", "observation_period_s", "f_cap", "idle_timeout_s",
    "strategy", "epsilon", "seed", "alpha", "gamma", "z",
    "num_hosts", "num_servers", "q_table_path", "svm_model_path",
    "detector_threshold", "online_updates", "traffic",
    "train_episodes", "train_steps", "train_epsilon", "train_seed",
    "train_alpha", "train_gamma",
    "train_rate_lo", "train_rate_hi", "train_flood_prob",
    "svm_rates", "svm_duration_s", "svm_horizon_s",
}

_TRAFFIC_KEYS = {"kind", "rate", "start_s", "end_s", "targets", "sources",
                 "seed", "scan_ports", "refresh_s"}


def read_raw_config(path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    if not os.path.exists(path):
        raise ConfigError(f"config file does not exist: {path}")
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config parse error: {exc}") from exc
    for key in raw:
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config key: {key}")
    return raw


def load_config(path) -> ScenarioConfig:
    """Parse a scenario config file; paths resolve relative to the file."""
    raw = read_raw_config(path)
    base = os.path.dirname(os.path.abspath(path))

    hosts = make_topology(int(raw.get("num_hosts", 5)), int(raw.get("num_servers", 3)))
    by_name = {h.name: h for h in hosts}
    clients = tuple(h for h in hosts if h.role == "HOST")
    servers = tuple(h for h in hosts if h.role == "SERVER")

    def resolve(names, fallback, which, idx):
        if not names:
            return fallback
        try:
            return tuple(by_name[n] for n in names)
        except KeyError as exc:
            raise ConfigError(f"traffic[{idx}].{which}: unknown host {exc.args[0]!r}") from exc

    specs = []
    for i, entry in enumerate(raw.get("traffic", [])):
        unknown = set(entry) - _TRAFFIC_KEYS
        if unknown:
            raise ConfigError(f"traffic[{i}]: unknown key {sorted(unknown)[0]!r}")
        for req in ("kind", "rate", "start_s", "end_s"):
            if req not in entry:
                raise ConfigError(f"traffic[{i}].{req} is required")
        try:
            specs.append(TrafficSpec(
                kind=entry["kind"],
                rate=float(entry["rate"]),
                start_s=float(entry["start_s"]),
                end_s=float(entry["end_s"]),
                targets=resolve(entry.get("targets"), servers, "targets", i),
                sources=resolve(entry.get("sources"), clients, "sources", i),
                seed=entry.get("seed"),
                scan_ports=int(entry.get("scan_ports", 1024)),
                refresh_s=float(entry.get("refresh_s", 9.0)),
            ))
        except ValueError as exc:
            raise ConfigError(f"traffic[{i}]: {exc}") from exc

    def path_of(key):
        value = raw.get(key)
        if value is None:
            return None
        return value if os.path.isabs(value) else os.path.join(base, value)

    if "duration_s" not in raw:
        raise ConfigError("duration_s is required")

    cfg = ScenarioConfig(
        duration_s=float(raw["duration_s"]),
        observation_period_s=float(raw.get("observation_period_s", 10.0)),
        f_cap=int(raw.get("f_cap", 300)),
        idle_timeout_s=float(raw.get("idle_timeout_s", 10.0)),
        strategy=str(raw.get("strategy", FMS)),
        epsilon=float(raw.get("epsilon", 0.0)),
        traffic=tuple(specs),
        hosts=hosts,
        q_table_path=path_of("q_table_path"),
        svm_model_path=path_of("svm_model_path"),
        seed=int(raw.get("seed", 0)),
        alpha=float(raw.get("alpha", 0.1)),
        gamma=float(raw.get("gamma", 0.9)),
        z=float(raw.get("z", 2.0)),
        detector_threshold=(float(raw["detector_threshold"])
                            if "detector_threshold" in raw else None),
        online_updates=bool(raw.get("online_updates", True)),
    )
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# report

def summarize_metrics_csv(path) -> dict:
    """Recompute the headline numbers of one metrics CSV."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise ValueError(f"empty metrics file: {path}")
    n = len(rows)
    period_s = None
    if n >= 1:
        t_last = int(rows[-1]["t_ms"])
        period_s = t_last / n / 1000.0
    mean_f = sum(int(r["f"]) for r in rows) / n
    total_pkt_in = sum(int(r["packet_in"]) for r in rows)
    total_rejected = sum(int(r["rejected"]) for r in rows)
    total_changes = sum(int(r["scheme_changes"]) for r in rows)
    mean_theta = sum(float(r["mean_theta"]) for r in rows) / n
    return {
        "path": str(path),
        "windows": n,
        "mean_f": mean_f,
        "packet_in_rate": total_pkt_in / (n * period_s) if period_s else 0.0,
        "rejected_total": total_rejected,
        "scheme_changes": total_changes,
        "mean_theta": mean_theta,
    }


def report_table(paths) -> str:
    cols = ("path", "windows", "mean_f", "packet_in_rate", "rejected_total",
            "scheme_changes", "mean_theta")
    out = io.StringIO()
    out.write(",".join(cols) + "\n")
    for p in paths:
        s = summarize_metrics_csv(p)
        out.write(f"{s['path']},{s['windows']},{s['mean_f']:.2f},"
                  f"{s['packet_in_rate']:.4f},{s['rejected_total']},"
                  f"{s['scheme_changes']},{s['mean_theta']:.4f}\n")
    return out.getvalue()
