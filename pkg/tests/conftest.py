from __future__ import annotations

import pytest

from mospoison.corpus import CorpusSpec, build_corpus
from mospoison.harness import config_from_dict, prepare, run_poisoned_arm

DEFAULT_SEED = 0


@pytest.fixture(scope="session")
def default_cfg(tmp_path_factory):
    """The headline default: 1000 clips, p=3%, packet loss, y_t=5."""
    out = tmp_path_factory.mktemp("default_run")
    return config_from_dict({"seed": DEFAULT_SEED, "output_dir": str(out)})


@pytest.fixture(scope="session")
def default_corpus():
    """Corpus matching the default config (built standalone for corpus tests)."""
    return build_corpus(CorpusSpec(n_clips=1000, seed=DEFAULT_SEED))


@pytest.fixture(scope="session")
def default_state(default_cfg):
    """Prepared pipeline: corpus, split, features, trained clean model."""
    return prepare(default_cfg)


@pytest.fixture(scope="session")
def default_arm(default_state, default_cfg):
    """The headline poisoning arm: p=3%, packet loss, y_t=5."""
    return run_poisoned_arm(
        default_state, default_cfg.poison_rate, default_cfg.target_label, default_cfg.trigger
    )


@pytest.fixture(scope="session")
def small_corpus():
    """40 short clips for trigger/poisoning unit tests."""
    return build_corpus(CorpusSpec(n_clips=40, duration_s=2.5, seed=11))
