"""Per-period control workflow for the simulated switch.

On every observation exactly one branch runs: a full table triggers the
overflow guard (forced MAC-only aggregation when the unique-IP-pair count
signals saturation, otherwise a policy-table action), while below capacity
the SVM verdict gates either restoration checks for aggregated hosts or a
policy-table action on rising entry counts.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

from .flow_table import FlowTable, Observation
from .match_schemes import FMS_ID, MMOS_ID, catalog
from .qlearning import OnlineAgent
from .svm import Verdict

logger = logging.getLogger(__name__)


class Origin(enum.Enum):
    OVERFLOW = "OVERFLOW"
    QPOLICY = "QPOLICY"
    MMOS_RESTORE = "MMOS_RESTORE"


@dataclass(frozen=True)
class PolicyDirective:
    """One applied scheme assignment, kept for the directive log."""

    t_ms: int
    dst_host: str
    old_scheme_id: int
    target_scheme_id: int
    origin: Origin

    @property
    def changed(self) -> bool:
        return self.old_scheme_id != self.target_scheme_id


@dataclass(frozen=True)
class ControlConfig:
    f_cap: int
    idle_timeout_s: float
    z: float = 2.0  # average entries contributed per unique IP pair

    def __post_init__(self):
        if self.z < 1.0:
            raise ValueError("z must be >= 1.0")
        if self.f_cap <= 0:
            raise ValueError("f_cap must be positive")


def select_critical_hosts(census, f: int, svm) -> list[str]:
    """Pick the destinations whose flows must be aggregated first.

    Walks the census in descending entry-count order, hypothetically
    collapsing each taken host to a single MAC-only entry, until the SVM
    accepts the remaining load. The SVM sees (f_remaining, deletion count).
    Equal counts break ties by ascending host identifier. If even full
    aggregation never satisfies the SVM, all hosts are returned and the
    shortfall is logged.
    """
    if not census:
        return []
    order = sorted(census, key=lambda item: (-item[1], item[0]))
    counts = [c for _, c in order]
    suffix = [0] * (len(counts) + 1)
    for i in range(len(counts) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + counts[i]
    hosts: list[str] = []
    for i, (host, _) in enumerate(order):
        hosts.append(host)
        # one MAC-only entry per aggregated destination remains installed
        f_remaining = len(hosts) + suffix[i + 1]
        delta = f - f_remaining
        if svm.decide(f_remaining, delta) is Verdict.GOOD:
            return hosts
    logger.warning("insufficient aggregation: SVM rejects even full MAC-only "
                   "collapse (f=%d, hosts=%d)", f, len(hosts))
    return hosts


def select_fms_candidates(mmos_stats, f: int, cfg: ControlConfig) -> list[str]:
    """MAC-aggregated hosts for which full matching is feasible again.

    Worst case, every packet toward a host installs a fresh entry that
    lives one idle timeout, so a host is admitted only while
    idle_timeout * packet_rate + f stays below capacity. f is deliberately
    not incremented between checks, which can over-admit when several hosts
    pass at once.
    """
    hosts = []
    for host, pkt_rate in mmos_stats:
        f_extra = cfg.idle_timeout_s * pkt_rate
        if f_extra + f < cfg.f_cap:
            hosts.append(host)
    return hosts


class _PacketRateMonitor:
    """Per-destination packet rates over the last observation period."""

    def __init__(self, period_s: float):
        self._period_s = period_s
        self._prev: dict[str, int] = {}

    def rates(self, table: FlowTable) -> dict[str, float]:
        totals = dict(table.dst_pkt_totals)
        out = {dst: (count - self._prev.get(dst, 0)) / self._period_s
               for dst, count in totals.items()}
        self._prev = totals
        return out


class QdataController:
    """Full workflow: overflow guard, SVM gate, policy table, restoration."""

    def __init__(self, svm_model, agent: OnlineAgent, cfg: ControlConfig,
                 period_s: float):
        self.svm = svm_model
        self.agent = agent
        self.cfg = cfg
        self._monitor = _PacketRateMonitor(period_s)
        self.last_verdict: Verdict | None = None

    def step(self, obs: Observation, table: FlowTable, now: int) -> list[PolicyDirective]:
        """Run one observation period's control decision; returns what was applied."""
        rates = self._monitor.rates(table)
        self.agent.complete_update(obs, table)
        self.last_verdict = None
        census, n_ip = table.dst_flow_census()

        if obs.f >= self.cfg.f_cap:
            hosts = select_critical_hosts(census, obs.f, self.svm)
            if n_ip >= self.cfg.f_cap / self.cfg.z:
                return self._force_mmos(hosts, table, now)
            return self._apply_policy(obs, hosts, table, now)

        verdict = self.svm.decide(obs.f, obs.delta_f)
        self.last_verdict = verdict
        if verdict is Verdict.GOOD:
            mmos_hosts = sorted(d for d, sid in table.per_dst_scheme.items()
                                if sid == MMOS_ID)
            if not mmos_hosts:
                return []
            stats = [(d, rates.get(d, 0.0)) for d in mmos_hosts]
            restorable = select_fms_candidates(stats, obs.f, self.cfg)
            return self._restore_fms(restorable, table, now)
        if obs.delta_f > 0:
            hosts = select_critical_hosts(census, obs.f, self.svm)
            return self._apply_policy(obs, hosts, table, now)
        return []

    def _force_mmos(self, hosts, table: FlowTable, now: int) -> list[PolicyDirective]:
        mmos = catalog()[MMOS_ID]
        directives = []
        for h in hosts:
            old = table.scheme_for(h)
            table.change_scheme(h, mmos)
            directives.append(PolicyDirective(now, h, old, MMOS_ID, Origin.OVERFLOW))
        return directives

    def _apply_policy(self, obs: Observation, hosts, table: FlowTable,
                      now: int) -> list[PolicyDirective]:
        if not hosts:
            return []
        olds = {h: table.scheme_for(h) for h in hosts}
        action = self.agent.act_online(obs, hosts, table)
        return [PolicyDirective(now, h, olds[h], action, Origin.QPOLICY)
                for h in hosts]

    def _restore_fms(self, hosts, table: FlowTable, now: int) -> list[PolicyDirective]:
        fms = catalog()[FMS_ID]
        directives = []
        for h in hosts:
            old = table.scheme_for(h)
            table.change_scheme(h, fms)
            directives.append(PolicyDirective(now, h, old, FMS_ID, Origin.MMOS_RESTORE))
        return directives


class DataController:
    """Two-scheme baseline: collapse critical hosts to MAC-only matching on
    predicted degradation or a full table, restore full matching when the
    feasibility check passes."""

    def __init__(self, svm_model, cfg: ControlConfig, period_s: float):
        self.svm = svm_model
        self.cfg = cfg
        self._monitor = _PacketRateMonitor(period_s)
        self.last_verdict: Verdict | None = None

    def step(self, obs: Observation, table: FlowTable, now: int) -> list[PolicyDirective]:
        rates = self._monitor.rates(table)
        self.last_verdict = None
        census, _ = table.dst_flow_census()

        at_cap = obs.f >= self.cfg.f_cap
        if not at_cap:
            self.last_verdict = self.svm.decide(obs.f, obs.delta_f)

        if at_cap or self.last_verdict is Verdict.DEGRADED:
            mmos = catalog()[MMOS_ID]
            directives = []
            for h in select_critical_hosts(census, obs.f, self.svm):
                old = table.scheme_for(h)
                if old == MMOS_ID:
                    continue
                table.change_scheme(h, mmos)
                directives.append(PolicyDirective(now, h, old, MMOS_ID, Origin.OVERFLOW))
            return directives

        mmos_hosts = sorted(d for d, sid in table.per_dst_scheme.items()
                            if sid == MMOS_ID)
        if not mmos_hosts:
            return []
        stats = [(d, rates.get(d, 0.0)) for d in mmos_hosts]
        fms = catalog()[FMS_ID]
        directives = []
        for h in select_fms_candidates(stats, obs.f, self.cfg):
            old = table.scheme_for(h)
            table.change_scheme(h, fms)
            directives.append(PolicyDirective(now, h, old, FMS_ID, Origin.MMOS_RESTORE))
        return directives


DIRECTIVE_HEADER = "t_ms,dst_host,old_scheme,new_scheme,origin"


def directives_csv(directives) -> str:
    """Directive log as CSV (fixed column order)."""
    lines = [DIRECTIVE_HEADER]
    for d in directives:
        lines.append(f"{d.t_ms},{d.dst_host},{d.old_scheme_id},"
                     f"{d.target_scheme_id},{d.origin.value}")
    return "\n".join(lines) + "\n"
