"""Linear 2-D SVM predicting switch forwarding degradation from (f, delta_f).

The classifier is a soft-margin separator trained by deterministic
full-batch subgradient descent on the primal hinge loss. Features are
normalized to zero mean and unit spread before training because the entry
count and its delta differ by orders of magnitude.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np


class Verdict(enum.Enum):
    GOOD = "GOOD"
    DEGRADED = "DEGRADED"


class LabeledSample(NamedTuple):
    f: int
    delta_f: int
    sign: int  # +1 the switch coped, -1 degradation followed


@dataclass(frozen=True)
class SvmModel:
    """Affine decision rule over normalized (f, delta_f)."""

    w1: float
    w2: float
    b: float
    mean_f: float
    mean_df: float
    spread_f: float
    spread_df: float

    def score(self, f: float, delta_f: float) -> float:
        zf = (f - self.mean_f) / self.spread_f
        zd = (delta_f - self.mean_df) / self.spread_df
        return self.w1 * zf + self.w2 * zd + self.b

    def decide(self, f: float, delta_f: float) -> Verdict:
        # ties (score exactly 0) count as GOOD: +1 means "can handle"
        return Verdict.GOOD if self.score(f, delta_f) >= 0.0 else Verdict.DEGRADED


def predict(model: SvmModel, obs) -> Verdict:
    """Classify an observation carrying .f and .delta_f."""
    return model.decide(obs.f, obs.delta_f)


def train(samples, c: float = 1.0, epochs: int = 200, seed: int = 0) -> SvmModel:
    """Fit the separator on labeled (f, delta_f, sign) samples.

    Minimizes mean hinge loss + (1/2C)||w||^2 with full-batch subgradient
    steps, so the result is identical on every run (the seed is accepted
    for interface symmetry with the other trainers but has no effect on
    this deterministic solver).

    Raises ValueError on a single-class training set.
    """
    del seed
    if c <= 0:
        raise ValueError("c must be positive")
    x = np.array([(s.f, s.delta_f) for s in samples], dtype=float)
    y = np.array([s.sign for s in samples], dtype=float)
    if len(x) == 0 or len(set(y)) < 2:
        raise ValueError("degenerate training set: need both +1 and -1 samples")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise ValueError("labels must be +1 or -1")

    mean = x.mean(axis=0)
    spread = x.std(axis=0)
    spread[spread < 1e-9] = 1.0
    z = (x - mean) / spread

    lam = 1.0 / c
    n = len(z)
    w = np.zeros(2)
    b = 0.0
    for t in range(1, epochs + 1):
        margins = y * (z @ w + b)
        violators = margins < 1.0
        grad_w = lam * w - (y[violators] @ z[violators]) / n
        grad_b = -float(y[violators].sum()) / n
        eta = 1.0 / (lam * t)
        w -= eta * grad_w
        b -= eta * grad_b
    return SvmModel(float(w[0]), float(w[1]), float(b),
                    float(mean[0]), float(mean[1]),
                    float(spread[0]), float(spread[1]))


def label_rows(rows, horizon_windows: int) -> list[LabeledSample]:
    """Label per-window metrics rows by looking ahead for rejections.

    A window's (f, delta_f) gets sign -1 when any rejection occurs in that
    window or within the next `horizon_windows` windows. Rows with f == 0
    fall outside the observable state space and are skipped.
    """
    if horizon_windows < 0:
        raise ValueError("horizon_windows must be >= 0")
    samples = []
    for i, row in enumerate(rows):
        if row.f <= 0:
            continue
        doomed = any(r.rejected > 0 for r in rows[i:i + horizon_windows + 1])
        samples.append(LabeledSample(row.f, row.delta_f, -1 if doomed else +1))
    return samples


def label_harness(cfg, horizon_s: float | None = None) -> list[LabeledSample]:
    """Run a scenario pinned to full matching and label its observations.

    The default look-ahead horizon is two observation periods, so states
    that precede an overload get flagged before it happens.
    """
    from .harness import run_scenario  # deferred: harness depends on this module

    cfg = replace(cfg, strategy="FMS")
    if horizon_s is None:
        horizon_s = 2 * cfg.observation_period_s
    horizon_windows = int(round(horizon_s / cfg.observation_period_s))
    result = run_scenario(cfg)
    return label_rows(result.rows, horizon_windows)


MODEL_FIELDS = ("w1", "w2", "b", "mean_f", "mean_df", "spread_f", "spread_df")


def save_model(model: SvmModel, path) -> None:
    """Persist a model as one line of numbers in fixed field order."""
    values = " ".join(repr(getattr(model, name)) for name in MODEL_FIELDS)
    with open(path, "w") as fh:
        fh.write(values + "\n")


def load_model(path) -> SvmModel:
    with open(path) as fh:
        parts = fh.read().split()
    if len(parts) != len(MODEL_FIELDS):
        raise ValueError(f"model file must hold {len(MODEL_FIELDS)} numbers")
    return SvmModel(*(float(p) for p in parts))
