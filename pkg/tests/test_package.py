"""Package surface: public exports resolve and carry a version."""

from __future__ import annotations

import coinstream


def test_all_exports_resolve():
    for name in coinstream.__all__:
        assert getattr(coinstream, name) is not None, name


def test_version_is_semver_like():
    major, minor, patch = coinstream.__version__.split(".")
    assert all(part.isdigit() for part in (major, minor, patch))


def test_key_entry_points_are_exported():
    for name in ("open_session", "run_game_of_coins", "run_federated",
                 "run_partition", "run_eps_best", "run_experiment",
                 "simulate_flex", "ChallengeSchedule", "ExperimentConfig"):
        assert name in coinstream.__all__
