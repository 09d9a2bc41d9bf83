import pytest

from flowmatch.harness import DATA, FMS, QDATA, desk_scenario, run_scenario, train_default_svm
from flowmatch.qlearning import SwitchTrainingEnv, train
from flowmatch.traffic import SYN_FLOOD

# fixed training recipe for the desk-profile artifacts; gamma is shortened
# relative to the online default because the switch settles within one
# observation period and long-horizon credit mixes unrelated load levels
DESK_SVM_SEED = 42
DESK_Q_SEED = 11
DESK_Q_RECIPE = dict(episodes=1200, steps_per_episode=12,
                     alpha=0.2, gamma=0.5, epsilon=0.8)


@pytest.fixture(scope="session")
def desk_svm():
    return train_default_svm(desk_scenario(FMS, seed=DESK_SVM_SEED))


@pytest.fixture(scope="session")
def desk_q():
    env = SwitchTrainingEnv(seed=DESK_Q_SEED)
    return train(env, seed=DESK_Q_SEED, **DESK_Q_RECIPE)


@pytest.fixture(scope="session")
def desk_runs(desk_svm, desk_q):
    """Memoized desk-profile scenario runs shared across acceptance checks."""
    cache = {}

    def get(strategy, seed, rate=30.0, attack=False):
        key = (strategy, seed, rate, attack)
        if key not in cache:
            extra = {}
            if attack:
                extra = dict(attack_kind=SYN_FLOOD, attack_rate=15.0,
                             attack_start_s=100.0)
            cfg = desk_scenario(strategy, rate=rate, seed=seed,
                                duration_s=500.0, **extra)
            cache[key] = run_scenario(
                cfg,
                q_table=desk_q if strategy == QDATA else None,
                svm_model=desk_svm if strategy in (QDATA, DATA) else None)
        return cache[key]

    return get
