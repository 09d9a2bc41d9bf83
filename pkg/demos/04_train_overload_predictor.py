"""Train the overload predictor from labeled full-matching runs.

Runs the switch under full matching across a sweep of load levels, labels
each (f, delta_f) observation by whether rejections follow within two
observation periods, and fits the linear separator. Writes the model to
demo_artifacts/desk_svm.txt for the later demos.
"""

import os

from flowmatch.harness import FMS, collect_svm_samples, desk_scenario
from flowmatch import svm

cfg = desk_scenario(FMS, seed=42)
samples = collect_svm_samples(cfg)
neg = sum(1 for s in samples if s.sign == -1)
print(f"collected {len(samples)} labeled observations "
      f"({neg} flagged as pre-overload)")

model = svm.train(samples, c=100.0, epochs=300)
print(f"model: w1={model.w1:.3f} w2={model.w2:.3f} b={model.b:.3f} "
      f"(normalized features)")

print("\ndecision probes:")
for f, df in [(50, 0), (150, 140), (250, 0), (290, 10), (300, 300)]:
    print(f"  (f={f:4d}, df={df:4d}) -> {model.decide(f, df).value}")

os.makedirs("demo_artifacts", exist_ok=True)
svm.save_model(model, "demo_artifacts/desk_svm.txt")
print("\nwrote demo_artifacts/desk_svm.txt")
