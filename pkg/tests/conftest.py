import pytest

from vrr.agent import (TrainConfig, _level_stream, perception_warmup,
                       train_from_scratch)


@pytest.fixture(scope="session")
def sokoban_trained():
    """Converged 7x7 1-box table: (rules, run, pipeline)."""
    cfg = TrainConfig(kind="sokoban", size=7, n_boxes=1, seed=0, max_steps=8000)
    return train_from_scratch(cfg)


@pytest.fixture(scope="session")
def doorkey_trained():
    cfg = TrainConfig(kind="doorkey", size=6, seed=0, max_steps=12_000)
    return train_from_scratch(cfg)


@pytest.fixture(scope="session")
def doorkey_rotated_trained():
    cfg = TrainConfig(kind="doorkey", size=6, seed=0, max_steps=16_000,
                      rotations=(0, 90, 180, 270))
    return train_from_scratch(cfg)


@pytest.fixture(scope="session")
def sokoban_pipeline():
    cfg = TrainConfig(kind="sokoban", size=7, n_boxes=1, seed=0)
    return perception_warmup(_level_stream(cfg, "warm"), cfg.warmup_steps, 16, 0)


@pytest.fixture(scope="session")
def doorkey_pipeline():
    cfg = TrainConfig(kind="doorkey", size=6, seed=0)
    return perception_warmup(_level_stream(cfg, "warm"), cfg.warmup_steps, 16, 0)
