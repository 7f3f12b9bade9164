"""Random-walk abstraction: exact laws, tail masses, and budget views."""

from __future__ import annotations

import csv
import math

import numpy as np
import pytest

from coinstream.errors import ConfigError
from coinstream.game_of_coins import RunResult
from coinstream.randwalk import (
    WalkTrace,
    budget_trace_as_walk,
    check_positive,
    classical_nonpositivity_frequency,
    default_kappa,
    eta_drift,
    positivity_frequency,
    simulate_classical,
    simulate_flex,
    tail_frequencies,
)


# ---------------------------------------------------------------------------
# deterministic structure


def test_classical_sure_walks():
    up = simulate_classical(5, p=1.0, seed=0)
    np.testing.assert_allclose(up.values, [0, 1, 2, 3, 4, 5])
    assert check_positive(up) == (True, None)

    down = simulate_classical(5, p=0.0, seed=0)
    np.testing.assert_allclose(down.values, [0, -1, -2, -3, -4, -5])
    assert check_positive(down) == (False, 1)
    assert len(down) == 6


def test_check_positive_zero_handling():
    trace = WalkTrace(np.array([0.0, 1.0, 0.0, 2.0]), "test")
    assert check_positive(trace) == (False, 2)
    assert check_positive(trace, allow_zero=True) == (True, None)
    dip = WalkTrace(np.array([0.0, 1.0, -0.5, 2.0]), "test")
    assert check_positive(dip, allow_zero=True) == (False, 2)


def test_parameter_validation():
    with pytest.raises(ConfigError):
        simulate_classical(10, p=1.5, seed=0)
    with pytest.raises(ConfigError):
        simulate_flex(10, kappa=0.0)
    with pytest.raises(ConfigError):
        simulate_flex(10, C=0.0)
    with pytest.raises(ConfigError):
        default_kappa(1.0)


def test_default_kappa_and_drift():
    assert default_kappa(0.1) == pytest.approx(1.0 / math.log(10.0))
    assert default_kappa(math.exp(-1.0)) == pytest.approx(1.0)
    # at j=1 the drift is exactly C ln(1/delta)
    assert eta_drift(1, C=32.0, delta=0.1) == pytest.approx(73.68276809535459)
    arr = eta_drift([1, 4, 9], C=2.0, delta=0.5)
    np.testing.assert_allclose(
        arr, [2 * math.log(2), math.log(8), 2 * math.log(18) / 3]
    )


def test_flex_walk_determinism_and_params():
    a = simulate_flex(100, delta=0.1, seed=42)
    b = simulate_flex(100, delta=0.1, seed=42)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.family == "flex"
    assert a.params["kappa"] == pytest.approx(default_kappa(0.1))
    c = simulate_flex(100, delta=0.1, seed=43)
    assert not np.array_equal(a.values, c.values)
    d = simulate_flex(100, kappa=2.5, seed=42)
    assert d.params["kappa"] == 2.5


def test_flex_steps_have_the_right_mean():
    # mean of step j is eta(j); average 4000 walks of length 5 per index
    acc = np.zeros(5)
    for seed in range(4000):
        acc += np.diff(simulate_flex(5, C=2.0, delta=0.1, seed=seed).values)
    acc /= 4000
    expect = eta_drift(np.arange(1, 6), C=2.0, delta=0.1)
    # step sd is kappa ~ 0.43, so 4000 walks give se ~ 0.007; allow 4 sigma
    np.testing.assert_allclose(acc, expect, atol=0.03)


def test_csv_round_trip(tmp_path):
    trace = simulate_flex(50, delta=0.2, seed=9)
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["i", "S_i"]
    assert len(rows) == 52
    values = np.array([float(r[1]) for r in rows[1:]])
    np.testing.assert_array_equal(values, trace.values)  # repr is lossless


# ---------------------------------------------------------------------------
# distributional checks


def test_tail_rows_match_the_exact_law():
    # centered step kappa - Exp(kappa): for t >= kappa the two-sided tail
    # is exactly exp(-1 - t/kappa) and always within the 2 exp(-t/kappa)
    # budget
    kappa = default_kappa(0.1)
    ts = (kappa, 3 * kappa, 5 * kappa)
    rows = tail_frequencies(kappa, ts, draws=100_000, seed=1)
    for (t, empirical, exact, bound), mult in zip(rows, (1, 3, 5)):
        assert exact == pytest.approx(math.exp(-1.0 - mult))
        assert bound == pytest.approx(2.0 * math.exp(-float(mult)))
        tol = 4.0 * math.sqrt(exact * (1 - exact) / 100_000)
        assert abs(empirical - exact) <= tol
        assert empirical <= bound


def test_tail_below_kappa_has_no_exact_form():
    kappa = 0.5
    (row,) = tail_frequencies(kappa, (0.25,), draws=1000, seed=0)
    assert row[2] is None
    assert row[3] == pytest.approx(2.0 * math.exp(-0.5))


def test_classical_nonpositivity_near_closed_form():
    # limit 2(1-p) = 0.2 at p=0.9; n=300 leaves only geometric crumbs above
    # it and 4000 seeds give se ~ 0.006, so 0.03 is over 4 sigma
    freq = classical_nonpositivity_frequency(300, 0.9, seeds=4000)
    assert abs(freq - 0.2) <= 0.03


def test_flex_positivity_is_overwhelming_at_large_C():
    # the acceptance run measures >= 1 - delta over 10^4 seeds; this spot
    # check uses 300 seeds where even 0.98 is far below the observed rate
    freq = positivity_frequency(400, delta=0.1, C=32.0, seeds=300)
    assert freq >= 0.98


# ---------------------------------------------------------------------------
# budget-walk view


def test_budget_walk_requires_a_game_result():
    bare = RunResult(chosen=0, total_tosses=0, peak_held=1, live_peak=1)
    with pytest.raises(ConfigError):
        budget_trace_as_walk(bare)


def test_budget_walk_of_unchallenged_king_is_flat():
    lone = RunResult(chosen=4, total_tosses=0, peak_held=1, live_peak=1,
                     budget_per_coin=80.0, budget_trace=())
    walk = budget_trace_as_walk(lone)
    np.testing.assert_array_equal(walk.values, [0.0])
    assert check_positive(walk, allow_zero=True) == (True, None)
    assert walk.params["king"] == 4
