"""Side-by-side strategy comparison across the three load levels.

Reproduces the qualitative trends: MAC-only matching holds almost no
entries (and sees almost nothing), full matching overflows at high load,
the two-scheme baseline collapses to MAC-only after the first overflow,
and the learned policy keeps a mid-granularity scheme with zero rejections.

Run demos 04 and 05 first to produce demo_artifacts/.
"""

import sys

from flowmatch.harness import DATA, FMS, MMOS, QDATA, desk_scenario, run_scenario
from flowmatch.qlearning import load_qtable
from flowmatch.svm import load_model

try:
    svm_model = load_model("demo_artifacts/desk_svm.txt")
    q_table = load_qtable("demo_artifacts/desk_q.txt")
except FileNotFoundError:
    sys.exit("run demos/04_train_overload_predictor.py and "
             "demos/05_train_policy_table.py first")

print(f"{'load':>6} {'strategy':>8} {'mean_f':>8} {'pkt_in/s':>9} "
      f"{'rejected':>9} {'changes':>8} {'mean_theta':>11}")
for rate, label in ((10.0, "low"), (20.0, "medium"), (30.0, "high")):
    for strategy in (MMOS, FMS, DATA, QDATA):
        cfg = desk_scenario(strategy, rate=rate, seed=1, duration_s=500.0)
        res = run_scenario(
            cfg,
            q_table=q_table if strategy == QDATA else None,
            svm_model=svm_model if strategy in (DATA, QDATA) else None)
        rows = res.rows
        mean_f = sum(r.f for r in rows) / len(rows)
        pkt_rate = sum(r.packet_in for r in rows) / cfg.duration_s
        rejected = sum(r.rejected for r in rows)
        changes = sum(r.scheme_changes for r in rows)
        theta = sum(r.mean_theta for r in rows) / len(rows)
        print(f"{label:>6} {strategy:>8} {mean_f:8.1f} {pkt_rate:9.3f} "
              f"{rejected:9d} {changes:8d} {theta:11.2f}")
    print()
