"""Train the scheme-selection policy on the simulated switch.

Episodes draw randomized benign loads (sometimes plus a spoofed flood) and
the learner picks one of the 9 schemes per observation period, rewarded by
the mean enabled-field count while the table stays below capacity. Takes
roughly 20 seconds; writes demo_artifacts/desk_q.txt.
"""

import os

import numpy as np

from flowmatch import Observation, bin_state
from flowmatch.qlearning import SwitchTrainingEnv, save_qtable, train, training_curve_csv

env = SwitchTrainingEnv(seed=11)
q = train(env, episodes=600, steps_per_episode=12,
          alpha=0.2, gamma=0.5, epsilon=0.8, seed=11)

curve = q.training_curve
print(f"trained {len(curve)} episodes; cumulative reward "
      f"first 5 {[round(c, 1) for c in curve[:5]]} "
      f"last 5 {[round(c, 1) for c in curve[-5:]]}")

print("\ngreedy scheme at near-capacity states (f, delta_f -> action):")
for f, df in [(300, 300), (250, 240), (150, 140)]:
    s = bin_state(Observation(f, df, 0), 300)
    row = q.values[s]
    print(f"  ({f:4d}, {df:4d}) -> scheme {int(np.argmax(row))}   "
          f"values={np.round(row, 1)}")

os.makedirs("demo_artifacts", exist_ok=True)
save_qtable(q, "demo_artifacts/desk_q.txt")
with open("demo_artifacts/training_curve.csv", "w") as fh:
    fh.write(training_curve_csv(q))
print("\nwrote demo_artifacts/desk_q.txt and demo_artifacts/training_curve.csv")
