"""Shared fixtures: config directory paths and a cached experiment runner."""

from __future__ import annotations

from pathlib import Path

import pytest

from coinstream.harness import ExperimentConfig, run_experiment

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "configs"


def load_shipped_config(name: str) -> ExperimentConfig:
    return ExperimentConfig.from_json(str(CONFIG_DIR / f"{name}.json"))


@pytest.fixture(scope="session")
def shipped_report():
    """Run a shipped config by file stem, once per test session."""
    cache = {}

    def run(name: str):
        if name not in cache:
            cache[name] = run_experiment(load_shipped_config(name), workers=1)
        return cache[name]

    return run
