import logging

from flowmatch.control import (
    ControlConfig,
    DataController,
    Origin,
    PolicyDirective,
    QdataController,
    directives_csv,
    select_critical_hosts,
    select_fms_candidates,
)
from flowmatch.flow_table import FlowTable
from flowmatch.match_schemes import FMS_ID, MMOS_ID, PacketKey, catalog
from flowmatch.qlearning import OnlineAgent, QTable
from flowmatch.svm import Verdict


class StubSvm:
    """Decision stub: GOOD iff f < good_below (delta ignored unless given)."""

    def __init__(self, good_below=None, fn=None):
        self._good_below = good_below
        self._fn = fn
        self.calls = []

    def decide(self, f, delta_f):
        self.calls.append((f, delta_f))
        if self._fn is not None:
            return Verdict.GOOD if self._fn(f, delta_f) else Verdict.DEGRADED
        return Verdict.GOOD if f < self._good_below else Verdict.DEGRADED


ALWAYS_GOOD = StubSvm(fn=lambda f, d: True)
CFG = ControlConfig(f_cap=300, idle_timeout_s=10.0, z=2.0)


def pkt(src=1, dst=1, sport=1000):
    return PacketKey(f"00:00:00:00:00:{src:02x}", f"00:00:00:00:01:{dst:02x}", 0,
                     f"10.0.0.{src}", f"10.0.1.{dst}", "TCP", sport, 80)


def table_with(counts, f_cap=300, spoofed=False):
    """Table holding counts[dst] full-matching entries per destination.

    With spoofed=True every entry carries a unique source IP, mimicking a
    spoofed flood (drives the unique-IP-pair count up to f)."""
    table = FlowTable(f_cap, 10_000)
    for dst, n in counts.items():
        for i in range(n):
            p = pkt(dst=dst, sport=1000 + i)
            if spoofed:
                p = p._replace(src_ip=f"198.51.{dst}.{i % 250}",
                               src_port=20_000 + i)
            table.process_packet(p, 0)
    return table


# ---------------------------------------------------------------------------
# critical-host selection (aggregation order)

def test_critical_hosts_hand_trace():
    census = [("h1", 50), ("h2", 30), ("h3", 20)]
    svm = StubSvm(good_below=60)
    hosts = select_critical_hosts(census, 100, svm)
    assert hosts == ["h1"]
    # one aggregate entry plus the untouched 30 + 20
    assert svm.calls == [(51, 49)]


def test_critical_hosts_appends_before_first_check():
    assert select_critical_hosts([("h1", 10)], 10, ALWAYS_GOOD) == ["h1"]


def test_critical_hosts_exhaustion_returns_all(caplog):
    census = [("h1", 50), ("h2", 30), ("h3", 20)]
    never_good = StubSvm(fn=lambda f, d: False)
    with caplog.at_level(logging.WARNING, logger="flowmatch.control"):
        hosts = select_critical_hosts(census, 100, never_good)
    assert hosts == ["h1", "h2", "h3"]
    assert any("insufficient aggregation" in r.message for r in caplog.records)


def test_critical_hosts_tie_break_ascending_id():
    census = [("hb", 30), ("ha", 30), ("hc", 50)]
    never_good = StubSvm(fn=lambda f, d: False)
    assert select_critical_hosts(census, 110, never_good) == ["hc", "ha", "hb"]


def test_critical_hosts_empty_census():
    assert select_critical_hosts([], 0, ALWAYS_GOOD) == []


def test_critical_hosts_multi_aggregate_keeps_one_entry_each():
    census = [("h1", 60), ("h2", 40)]
    svm = StubSvm(good_below=40)
    hosts = select_critical_hosts(census, 100, svm)
    # first prefix leaves 1 + 40 = 41 (not good), second leaves 2 + 0 = 2
    assert hosts == ["h1", "h2"]
    assert svm.calls == [(41, 59), (2, 98)]


# ---------------------------------------------------------------------------
# restoration feasibility

def test_fms_candidate_admitted():
    hosts = select_fms_candidates([("h1", 10.0)], 100, CFG)
    assert hosts == ["h1"]  # 10 s * 10/s = 100 extra, 200 < 300


def test_fms_candidate_rejected():
    assert select_fms_candidates([("h1", 30.0)], 100, CFG) == []  # 400 >= 300


def test_fms_candidates_do_not_accumulate_f():
    # both pass individually against the same f, by design
    hosts = select_fms_candidates([("h1", 12.0), ("h2", 12.0)], 100, CFG)
    assert hosts == ["h1", "h2"]


def test_fms_candidates_empty_stats():
    assert select_fms_candidates([], 0, CFG) == []


# ---------------------------------------------------------------------------
# full workflow

def make_controller(svm, q_bias=None, epsilon=0.0):
    q = QTable(alpha=0.5, gamma=0.5)
    if q_bias is not None:
        q.values[..., q_bias] = 1.0  # make q_bias the greedy action everywhere
    agent = OnlineAgent(q, CFG.f_cap, epsilon=epsilon)
    return QdataController(svm, agent, CFG, period_s=10.0)


def test_overflow_with_many_ip_pairs_forces_mac_only():
    table = table_with({1: 200, 2: 100}, spoofed=True)
    assert table.f == 300
    svm = StubSvm(good_below=150)
    ctl = make_controller(svm, q_bias=7)
    obs = table.observe(10_000)
    directives = ctl.step(obs, table, 10_000)
    assert directives and all(d.origin is Origin.OVERFLOW for d in directives)
    assert all(d.target_scheme_id == MMOS_ID for d in directives)
    for d in directives:
        assert table.per_dst_scheme[d.dst_host] == MMOS_ID
    assert ctl.last_verdict is None  # overflow branch bypasses the SVM gate


def test_overflow_with_few_ip_pairs_delegates_to_policy():
    # one source host: 300 entries but only 2 unique IP pairs < 300/z
    table = table_with({1: 200, 2: 100}, spoofed=False)
    svm = StubSvm(good_below=150)
    ctl = make_controller(svm, q_bias=7)
    obs = table.observe(10_000)
    directives = ctl.step(obs, table, 10_000)
    assert directives and all(d.origin is Origin.QPOLICY for d in directives)
    assert all(d.target_scheme_id == 7 for d in directives)
    assert all(table.per_dst_scheme[d.dst_host] == 7 for d in directives)


def test_good_without_aggregated_hosts_is_noop():
    table = table_with({1: 40})
    ctl = make_controller(ALWAYS_GOOD, q_bias=7)
    obs = table.observe(10_000)
    assert ctl.step(obs, table, 10_000) == []
    assert ctl.last_verdict is Verdict.GOOD


def test_good_restores_feasible_mac_only_hosts():
    table = table_with({1: 40})
    table.change_scheme("10.0.1.2", catalog()[MMOS_ID])
    ctl = make_controller(ALWAYS_GOOD, q_bias=7)
    obs = table.observe(10_000)
    directives = ctl.step(obs, table, 10_000)
    assert [d.origin for d in directives] == [Origin.MMOS_RESTORE]
    assert directives[0].dst_host == "10.0.1.2"
    assert table.per_dst_scheme["10.0.1.2"] == FMS_ID


def test_restore_only_targets_mac_only_hosts():
    table = table_with({1: 40})
    table.change_scheme("10.0.1.2", catalog()[MMOS_ID])
    table.change_scheme("10.0.1.3", catalog()[4])
    ctl = make_controller(ALWAYS_GOOD, q_bias=7)
    directives = ctl.step(table.observe(10_000), table, 10_000)
    assert {d.dst_host for d in directives} == {"10.0.1.2"}
    assert table.per_dst_scheme["10.0.1.3"] == 4


def test_restore_respects_feasibility():
    table = table_with({1: 200})
    table.change_scheme("10.0.1.2", catalog()[MMOS_ID])
    # drive packets so the aggregated host shows ~30 pkts/s over the period
    for i in range(300):
        table.process_packet(pkt(dst=2, sport=i), 5_000)
    ctl = make_controller(StubSvm(good_below=250), q_bias=7)
    directives = ctl.step(table.observe(10_000), table, 10_000)
    assert directives == []  # 10 s * 30/s + 201 >= 300


def test_degraded_rising_f_invokes_policy():
    table = table_with({1: 100})
    svm = StubSvm(good_below=50)
    ctl = make_controller(svm, q_bias=6)
    obs = table.observe(10_000)
    assert obs.delta_f > 0
    directives = ctl.step(obs, table, 10_000)
    assert directives and all(d.origin is Origin.QPOLICY for d in directives)
    assert ctl.last_verdict is Verdict.DEGRADED


def test_degraded_falling_f_takes_no_action():
    table = table_with({1: 100})
    table.observe(5_000)
    for key in list(table.entries)[:50]:
        table._remove(key, "10.0.1.1")  # simulate a mass expiry
    svm = StubSvm(good_below=10)
    ctl = make_controller(svm, q_bias=6)
    obs = table.observe(10_000)
    assert obs.delta_f < 0
    assert ctl.step(obs, table, 10_000) == []


def test_exactly_one_branch_per_step():
    table = table_with({1: 150, 2: 150}, spoofed=True)
    ctl = make_controller(StubSvm(good_below=100), q_bias=7)
    directives = ctl.step(table.observe(10_000), table, 10_000)
    assert len({d.origin for d in directives}) == 1


def test_directives_only_name_census_hosts():
    table = table_with({1: 150, 2: 150}, spoofed=True)
    ctl = make_controller(StubSvm(good_below=100), q_bias=7)
    directives = ctl.step(table.observe(10_000), table, 10_000)
    census_hosts = {"10.0.1.1", "10.0.1.2"}
    assert {d.dst_host for d in directives} <= census_hosts


# ---------------------------------------------------------------------------
# two-scheme baseline

def test_data_controller_aggregates_on_degraded():
    table = table_with({1: 150, 2: 100})
    ctl = DataController(StubSvm(good_below=100), CFG, period_s=10.0)
    directives = ctl.step(table.observe(10_000), table, 10_000)
    assert directives
    assert all(d.target_scheme_id == MMOS_ID for d in directives)
    assert all(d.origin is Origin.OVERFLOW for d in directives)


def test_data_controller_restores_on_good():
    table = table_with({1: 40})
    table.change_scheme("10.0.1.2", catalog()[MMOS_ID])
    ctl = DataController(ALWAYS_GOOD, CFG, period_s=10.0)
    directives = ctl.step(table.observe(10_000), table, 10_000)
    assert [d.target_scheme_id for d in directives] == [FMS_ID]


def test_data_controller_idle_when_good_and_clean():
    table = table_with({1: 40})
    ctl = DataController(ALWAYS_GOOD, CFG, period_s=10.0)
    assert ctl.step(table.observe(10_000), table, 10_000) == []


def test_directives_csv_format():
    d = PolicyDirective(10_000, "10.0.1.1", 8, 0, Origin.OVERFLOW)
    text = directives_csv([d])
    assert text.splitlines()[0] == "t_ms,dst_host,old_scheme,new_scheme,origin"
    assert text.splitlines()[1] == "10000,10.0.1.1,8,0,OVERFLOW"
