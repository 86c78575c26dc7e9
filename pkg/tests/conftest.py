"""Shared fixtures: cached synthetic surrogate datasets.

Generation is deterministic, so datasets are cached under
``~/.cache/uamas-tests`` (override with UAMAS_TEST_CACHE) to keep repeated
test runs fast.
"""

from __future__ import annotations

import os
from pathlib import Path

import pytest

from uamas.dataset import LABEL_FILE, CHANNELS, load_dataset
from uamas.synth import write_dataset


def _cache_dir() -> Path:
    return Path(os.environ.get("UAMAS_TEST_CACHE", "~/.cache/uamas-tests")).expanduser()


def synth_dataset(num_cycles: int, seed: int) -> Path:
    root = _cache_dir() / f"synth-{num_cycles}-{seed}"
    expected = [LABEL_FILE] + [f"{c.id}.txt" for c in CHANNELS]
    if not all((root / name).is_file() for name in expected):
        write_dataset(root, num_cycles, seed)
    return root


@pytest.fixture(scope="session")
def small_root() -> Path:
    """120-cycle surrogate used by unit and integration tests."""
    return synth_dataset(120, seed=7)


@pytest.fixture(scope="session")
def small_cycles(small_root):
    return load_dataset(small_root)


@pytest.fixture(scope="session")
def tiny_bundles(small_cycles):
    """Quickly trained model bundles for pipeline mechanics tests."""
    from uamas.dataset import Task
    from uamas.evaluation import train_full_model
    from uamas.features import extract_many
    from uamas.training import TrainConfig

    features = extract_many(small_cycles)
    return {
        task: train_full_model(
            small_cycles, task, TrainConfig(epochs=4, seed=13), features=features
        )
        for task in Task
    }
