"""Tabular Q-learning over the binned (f, delta_f) state space.

The agent picks one of the 9 matching schemes per decision. Rewards equal
the mean enabled-field count over the table's entries, except a full table
earns zero, so granularity is rewarded only while the switch stays safe.
State binning keeps the table small enough to converge at realistic sample
counts; bin counts are configurable.
"""

from __future__ import annotations

import random

import numpy as np

from .flow_table import FlowTable, Observation
from .match_schemes import N_SCHEMES, catalog
from .traffic import BENIGN, SYN_FLOOD, Host, TrafficSpec, make_topology, merge_streams

DEFAULT_F_BINS = 30
DEFAULT_DF_BINS = 21


def bin_state(obs: Observation, f_cap: int,
              n_f_bins: int = DEFAULT_F_BINS,
              n_df_bins: int = DEFAULT_DF_BINS) -> tuple[int, int]:
    """Map an observation onto the (f_bin, df_bin) grid.

    Valid inputs satisfy 0 < f <= f_cap and |delta_f| <= f_cap.
    """
    f, df = obs.f, obs.delta_f
    if f <= 0 or f > f_cap:
        raise ValueError(f"state outside S_i: f={f} not in (0, {f_cap}]")
    if abs(df) > f_cap:
        raise ValueError(f"state outside S_i: delta_f={df} not in [-{f_cap}, {f_cap}]")
    f_bin = (f - 1) * n_f_bins // f_cap
    df_bin = (df + f_cap) * n_df_bins // (2 * f_cap + 1)
    return f_bin, df_bin


def reward(table: FlowTable) -> float:
    """Mean enabled-field count over all entries; zero on a full table."""
    f = table.f
    if f == 0:
        raise ValueError("reward undefined on empty table")
    if f == table.f_cap:
        return 0.0
    cat = catalog()
    return sum(cat[e.scheme_id].theta for e in table.entries.values()) / f


class QTable:
    """Dense state-action value table.

    ``state_shape`` is the grid of state indices; for the switch this is
    (f bins, delta-f bins) and a state is the tuple from bin_state. Small
    fixture MDPs can use a 1-D shape with integer states.
    """

    def __init__(self, state_shape=(DEFAULT_F_BINS, DEFAULT_DF_BINS),
                 n_actions: int = N_SCHEMES,
                 alpha: float = 0.1, gamma: float = 0.9):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0.0 <= gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        self.state_shape = tuple(state_shape)
        self.n_actions = n_actions
        self.alpha = alpha
        self.gamma = gamma
        self.values = np.zeros(self.state_shape + (n_actions,))
        self.training_curve: list[float] = []

    def best_action(self, s) -> int:
        # np.argmax picks the first maximum, i.e. the lowest action id
        return int(np.argmax(self.values[s]))

    def copy(self) -> "QTable":
        q = QTable(self.state_shape, self.n_actions, self.alpha, self.gamma)
        q.values = self.values.copy()
        q.training_curve = list(self.training_curve)
        return q


def select_action(q: QTable, s, epsilon: float, rng: random.Random) -> int:
    """Epsilon-greedy pick; greedy ties break toward the lowest action id."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if epsilon > 0.0 and rng.random() < epsilon:
        return rng.randrange(q.n_actions)
    return q.best_action(s)


def update(q: QTable, s, a: int, r: float, s_next) -> float:
    """One-step value update toward r + gamma * max_a' Q(s', a')."""
    row = q.values[s]
    target = r + q.gamma * float(np.max(q.values[s_next]))
    row[a] += q.alpha * (target - row[a])
    return float(row[a])


def train(env, episodes: int, steps_per_episode: int,
          alpha: float = 0.1, gamma: float = 0.9, epsilon: float = 0.8,
          seed: int = 0) -> QTable:
    """Learn a Q-table against a resettable environment.

    The environment exposes ``state_shape``, ``n_actions``, ``reset() -> s``
    and ``step(a) -> (s_next, r)``. The table starts at zero and each step
    applies the one-step update; per-episode cumulative reward is kept in
    ``training_curve``.
    """
    rng = random.Random(seed)
    q = QTable(env.state_shape, env.n_actions, alpha, gamma)
    for _ in range(episodes):
        s = env.reset()
        total = 0.0
        for _ in range(steps_per_episode):
            a = select_action(q, s, epsilon, rng)
            s_next, r = env.step(a)
            update(q, s, a, r, s_next)
            total += r
            s = s_next
        q.training_curve.append(total)
    return q


class OnlineAgent:
    """Deployment-side wrapper: act from the table, keep learning online.

    Each action leaves a pending (state, action) pair; the next observation
    closes it by computing the reward from the table and applying the
    one-step update. Online updates can be disabled for frozen evaluation.
    """

    def __init__(self, q: QTable, f_cap: int, epsilon: float = 0.0,
                 online_updates: bool = True, rng: random.Random | None = None):
        self.q = q
        self.f_cap = f_cap
        self.epsilon = epsilon
        self.online_updates = online_updates
        self.rng = rng if rng is not None else random.Random(0)
        self._pending: tuple[tuple[int, int], int] | None = None

    def act_online(self, obs: Observation, hosts, table: FlowTable) -> int:
        """Pick a scheme for the current state and apply it to every host."""
        if not hosts:
            raise ValueError("no target hosts")
        s = bin_state(obs, self.f_cap, *self.q.state_shape)
        a = select_action(self.q, s, self.epsilon, self.rng)
        scheme = catalog()[a]
        for h in hosts:
            table.change_scheme(h, scheme)
        self._pending = (s, a)
        return a

    def complete_update(self, obs: Observation, table: FlowTable) -> float | None:
        """Close the pending transition using the freshly observed state."""
        if self._pending is None:
            return None
        s, a = self._pending
        self._pending = None
        if not self.online_updates or obs.f <= 0:
            return None
        s_next = bin_state(obs, self.f_cap, *self.q.state_shape)
        r = reward(table)
        return update(self.q, s, a, r, s_next)


class SwitchTrainingEnv:
    """Simulated-switch environment for offline policy training.

    Each episode runs a fresh flow table under a randomized traffic draw:
    benign load at a rate sampled per episode (mostly concentrated on one
    server, sometimes spread) and, with some probability, a spoofed-source
    flood phase. One step applies the chosen scheme to every server and
    advances one observation period.
    """

    def __init__(self, f_cap: int = 300, idle_timeout_s: float = 10.0,
                 period_s: float = 10.0, hosts: tuple[Host, ...] | None = None,
                 rate_lo: float | None = None, rate_hi: float | None = None,
                 stress_prob: float = 0.5,
                 flood_prob: float = 0.35,
                 flood_rate_lo: float | None = None, flood_rate_hi: float | None = None,
                 steps_per_episode: int = 12, seed: int = 0,
                 n_f_bins: int = DEFAULT_F_BINS, n_df_bins: int = DEFAULT_DF_BINS):
        self.f_cap = f_cap
        self.idle_timeout_ms = int(idle_timeout_s * 1000)
        self.period_ms = int(period_s * 1000)
        self.hosts = hosts if hosts is not None else make_topology()
        self.servers = tuple(h for h in self.hosts if h.role == "SERVER")
        self.clients = tuple(h for h in self.hosts if h.role == "HOST")
        # rate ranges scale with the sustainable load f_cap / idle_timeout
        sustainable = f_cap / idle_timeout_s
        self.rate_lo = rate_lo if rate_lo is not None else 0.27 * sustainable
        self.rate_hi = rate_hi if rate_hi is not None else 1.17 * sustainable
        self.stress_lo = 0.83 * sustainable  # near-critical band gets extra visits
        self.stress_prob = stress_prob
        self.flood_prob = flood_prob
        self.flood_rate_lo = (flood_rate_lo if flood_rate_lo is not None
                              else 0.27 * sustainable)
        self.flood_rate_hi = (flood_rate_hi if flood_rate_hi is not None
                              else 0.67 * sustainable)
        self.steps_per_episode = steps_per_episode
        self.state_shape = (n_f_bins, n_df_bins)
        self.n_actions = N_SCHEMES
        self._rng = random.Random(seed)
        self._table: FlowTable | None = None
        self._specs: list[TrafficSpec] = []
        self._now = 0

    def reset(self) -> tuple[int, int]:
        rng = self._rng
        horizon_s = (self.steps_per_episode + 2) * self.period_ms / 1000
        if rng.random() < self.stress_prob:
            rate = rng.uniform(self.stress_lo, self.rate_hi)
        else:
            rate = rng.uniform(self.rate_lo, self.rate_hi)
        targets = ((self.servers[0],) if rng.random() < 0.7 else self.servers)
        self._specs = [TrafficSpec(BENIGN, rate, 0.0, horizon_s,
                                   targets, self.clients,
                                   seed=rng.getrandbits(31))]
        if rng.random() < self.flood_prob:
            flood_rate = rng.uniform(self.flood_rate_lo, self.flood_rate_hi)
            start = rng.randrange(2, max(3, self.steps_per_episode // 2)) * self.period_ms / 1000
            self._specs.append(TrafficSpec(SYN_FLOOD, flood_rate, start, horizon_s,
                                           (self.servers[0],), self.clients,
                                           seed=rng.getrandbits(31)))
        self._table = FlowTable(self.f_cap, self.idle_timeout_ms)
        self._now = 0
        obs = self._advance()
        return bin_state(obs, self.f_cap, *self.state_shape)

    def step(self, action: int) -> tuple[tuple[int, int], float]:
        scheme = catalog()[action]
        for server in self.servers:
            self._table.change_scheme(server.ip, scheme)
        obs = self._advance()
        r = reward(self._table) if obs.f > 0 else 0.0
        s = bin_state(obs, self.f_cap, *self.state_shape)
        return s, r

    def _advance(self) -> Observation:
        t0 = self._now
        t1 = t0 + self.period_ms
        table = self._table
        for ts, pkt in merge_streams(self._specs, (t0, t1)):
            table.expire(ts)
            table.process_packet(pkt, ts)
        table.expire(t1)
        self._now = t1
        return table.observe(t1)


QTABLE_CURVE_HEADER = "episode,cumulative_reward"


def training_curve_csv(q: QTable) -> str:
    lines = [QTABLE_CURVE_HEADER]
    for i, total in enumerate(q.training_curve):
        lines.append(f"{i},{total:.6f}")
    return "\n".join(lines) + "\n"


def save_qtable(q: QTable, path) -> None:
    """Persist a 2-D-state table: one header line, then the flat value grid."""
    if len(q.state_shape) != 2:
        raise ValueError("only (f_bin, df_bin) tables are persistable")
    with open(path, "w") as fh:
        fh.write(f"{q.state_shape[0]} {q.state_shape[1]} {q.n_actions} "
                 f"{q.alpha!r} {q.gamma!r}\n")
        for v in q.values.ravel():
            fh.write(repr(float(v)) + "\n")


def load_qtable(path) -> QTable:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 5:
            raise ValueError("malformed Q-table header")
        bf, bdf, na = int(header[0]), int(header[1]), int(header[2])
        alpha, gamma = float(header[3]), float(header[4])
        flat = np.array([float(line) for line in fh], dtype=float)
    if flat.size != bf * bdf * na:
        raise ValueError("Q-table size does not match its header")
    q = QTable((bf, bdf), na, alpha, gamma)
    q.values = flat.reshape(bf, bdf, na)
    return q
