"""Instance validation and the metered stream session."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coinstream.errors import (
    HandleLimitExceeded,
    InstanceError,
    ReleaseError,
    SampleAfterRelease,
)
from coinstream.oracle import CoinInstance, open_session


def coin_instance(values, **kwargs):
    kwargs.setdefault("order", tuple(range(len(values))))
    return CoinInstance(kind="bernoulli_coin", values=tuple(values), **kwargs)


# ---------------------------------------------------------------------------
# instance validation


def test_unknown_kind_rejected():
    with pytest.raises(InstanceError):
        CoinInstance(kind="coin", values=(0.5,), order=(0,))


def test_order_must_be_permutation():
    with pytest.raises(InstanceError):
        coin_instance([0.5, 0.6], order=(0, 0))
    with pytest.raises(InstanceError):
        coin_instance([0.5, 0.6], order=(0, 2))


def test_bias_domain():
    with pytest.raises(InstanceError):
        coin_instance([1.5])
    with pytest.raises(InstanceError):
        coin_instance([-0.1])
    coin_instance([0.0, 1.0])  # endpoints allowed


def test_gamma_only_for_noisy_order():
    with pytest.raises(InstanceError):
        coin_instance([0.5], gamma=0.25)
    with pytest.raises(InstanceError):
        CoinInstance(kind="noisy_order", values=(2.0, 1.0), order=(0, 1))
    with pytest.raises(InstanceError):
        CoinInstance(kind="noisy_order", values=(2.0, 1.0), order=(0, 1),
                     gamma=0.75)
    CoinInstance(kind="noisy_order", values=(2.0, 1.0), order=(0, 1),
                 gamma=0.5)


def test_noisy_order_ranks_distinct():
    with pytest.raises(InstanceError):
        CoinInstance(kind="noisy_order", values=(1.0, 1.0), order=(0, 1),
                     gamma=0.25)


def test_declared_gap_checked_against_separation():
    coin_instance([0.9, 0.6], gap=0.3)
    with pytest.raises(InstanceError):
        coin_instance([0.9, 0.8], gap=0.3)
    with pytest.raises(InstanceError):
        coin_instance([0.9, 0.6], gap=1.5)


def test_uniform_arm_support_must_fit():
    CoinInstance(kind="bounded_arm", values=(0.5,), order=(0,),
                 arms=(("uniform", 0.5),))
    with pytest.raises(InstanceError):
        CoinInstance(kind="bounded_arm", values=(0.9,), order=(0,),
                     arms=(("uniform", 0.2),))
    with pytest.raises(InstanceError):
        CoinInstance(kind="bernoulli_coin", values=(0.5,), order=(0,),
                     arms=(("bernoulli",),))


def test_top_set_and_best_value():
    inst = coin_instance([0.4, 0.9, 0.9, 0.1])
    assert inst.best_value() == 0.9
    assert inst.top_set(1) == {1}  # tie between 1 and 2 goes to lower index
    assert inst.top_set(2) == {1, 2}
    assert inst.top_set(3) == {0, 1, 2}


@pytest.mark.parametrize("kind,extra", [
    ("bernoulli_coin", {"gap": 0.3}),
    ("bounded_arm", {"arms": (("uniform", 0.1), ("bernoulli",))}),
    ("noisy_order", {"gamma": 0.25}),
])
def test_json_round_trip(tmp_path, kind, extra):
    values = (0.9, 0.6) if kind != "noisy_order" else (2.0, 1.0)
    inst = CoinInstance(kind=kind, values=values, order=(1, 0), **extra)
    data = inst.to_json()
    assert CoinInstance.from_json(data) == inst

    path = tmp_path / "inst.json"
    import json

    path.write_text(json.dumps(data))
    assert CoinInstance.from_json(str(path)) == inst


def test_from_json_requires_kind_keyed_values():
    with pytest.raises(InstanceError):
        CoinInstance.from_json({"kind": "bernoulli_coin", "means": [0.5]})
    inst = CoinInstance.from_json({"kind": "bounded_arm", "means": [0.5]})
    assert inst.values == (0.5,)
    assert inst.order == (0,)  # identity default


# ---------------------------------------------------------------------------
# session determinism and sampling statistics


def test_sessions_with_same_seed_are_identical():
    inst = coin_instance([0.3, 0.7, 0.5])
    a = open_session(inst, seed=42)
    b = open_session(inst, seed=42)
    for _ in range(3):
        ha = a.advance()
        hb = b.advance()
        assert ha.index == hb.index
        assert a.toss(ha, 100) == b.toss(hb, 100)
        assert a.toss_mean(ha, 1000) == b.toss_mean(hb, 1000)
    assert list(a.alg_rng.integers(100, size=5)) == list(
        b.alg_rng.integers(100, size=5))


def test_different_seeds_differ():
    inst = coin_instance([0.5])
    a = open_session(inst, seed=1)
    b = open_session(inst, seed=2)
    draws_a = a.toss(a.advance(), 1000)
    draws_b = b.toss(b.advance(), 1000)
    assert draws_a != draws_b


def test_deterministic_coins_shortcut():
    inst = coin_instance([0.0, 1.0])
    sess = open_session(inst, seed=0)
    zero = sess.advance()
    sess.hold(zero)
    one = sess.advance()
    assert sess.toss(zero, 50) == 0
    assert sess.toss(one, 50) == 50
    assert sess.toss_mean(zero, 10) == 0.0
    assert sess.toss_mean(one, 10) == 1.0


def test_toss_mean_statistics():
    # binomial sd at p=0.5, m=1e6 is 5e-4; 0.002 is 4 sigma
    inst = coin_instance([0.5])
    sess = open_session(inst, seed=7)
    mean = sess.toss_mean(sess.advance(), 1_000_000)
    assert abs(mean - 0.5) < 0.002


def test_compare_wins_statistics():
    # at gamma=0.25 the larger element wins w.p. 0.75; sd over 1e5
    # comparisons is 0.0014, so 0.005 is >3 sigma
    inst = CoinInstance(kind="noisy_order", values=(2.0, 1.0), order=(0, 1),
                        gamma=0.25)
    sess = open_session(inst, seed=3)
    big = sess.advance()
    sess.hold(big)
    small = sess.advance()
    m = 100_000
    assert abs(sess.compare_wins(big, small, m) / m - 0.75) < 0.005
    assert abs(sess.compare_wins(small, big, m) / m - 0.25) < 0.005


def test_compare_gamma_half_is_noiseless():
    inst = CoinInstance(kind="noisy_order", values=(2.0, 1.0), order=(0, 1),
                        gamma=0.5)
    sess = open_session(inst, seed=0)
    big = sess.advance()
    sess.hold(big)
    small = sess.advance()
    assert sess.compare_wins(big, small, 20) == 20
    assert sess.compare_wins(small, big, 20) == 0
    assert sess.compare_noisy(big, small) is big


def test_kind_sampling_mismatches_rejected():
    noisy = CoinInstance(kind="noisy_order", values=(2.0, 1.0), order=(0, 1),
                         gamma=0.25)
    sess = open_session(noisy, seed=0)
    a = sess.advance()
    with pytest.raises(InstanceError):
        sess.toss(a, 5)
    with pytest.raises(InstanceError):
        sess.compare_wins(a, a, 5)

    coins = coin_instance([0.5, 0.5])
    sess2 = open_session(coins, seed=0)
    x = sess2.advance()
    sess2.hold(x)
    y = sess2.advance()
    with pytest.raises(InstanceError):
        sess2.compare_wins(x, y, 5)


def test_uniform_arm_rewards():
    inst = CoinInstance(kind="bounded_arm", values=(0.5,), order=(0,),
                        arms=(("uniform", 0.25),))
    sess = open_session(inst, seed=11)
    arm = sess.advance()
    draws = sess.toss(arm, 10_000)
    assert draws.min() >= 0.25 - 1e-12 and draws.max() <= 0.75 + 1e-12
    assert abs(draws.mean() - 0.5) < 0.01

    twin = open_session(inst, seed=11)
    mean = twin.toss_mean(twin.advance(), 10_000)
    assert mean == pytest.approx(float(draws.mean()))


def test_tally_charges():
    inst = coin_instance([0.5, 0.5])
    sess = open_session(inst, seed=0)
    a = sess.advance()
    sess.hold(a)
    b = sess.advance()
    sess.toss(a, 10)
    sess.toss_mean(b, 20)
    assert sess.tally.total_tosses == 30
    assert sess.tally.per_coin_tosses == {a.index: 10, b.index: 20}


def test_compare_charges_first_handle():
    inst = CoinInstance(kind="noisy_order", values=(2.0, 1.0), order=(0, 1),
                        gamma=0.25)
    sess = open_session(inst, seed=0)
    a = sess.advance()
    sess.hold(a)
    b = sess.advance()
    sess.compare_wins(a, b, 7)
    assert sess.tally.total_tosses == 7
    assert sess.tally.per_coin_tosses == {a.index: 7}


# ---------------------------------------------------------------------------
# stream control: advance / hold / release / limits


def test_advance_kills_unheld_previous():
    inst = coin_instance([0.5, 0.5, 0.5])
    sess = open_session(inst, seed=0)
    first = sess.advance()
    second = sess.advance()
    assert not first.alive
    with pytest.raises(SampleAfterRelease):
        sess.toss(first, 1)
    sess.hold(second)
    third = sess.advance()
    assert second.alive
    assert sess.advance() is None
    assert not third.alive


def test_hold_is_idempotent_and_metered():
    inst = coin_instance([0.5, 0.5])
    sess = open_session(inst, seed=0)
    a = sess.advance()
    sess.hold(a)
    sess.hold(a)
    assert sess.tally.current_held == 1
    assert sess.tally.peak_held == 1
    b = sess.advance()
    sess.hold(b)
    assert sess.tally.current_held == 2
    assert sess.tally.peak_held == 2
    sess.release(a)
    assert sess.tally.current_held == 1
    assert sess.tally.peak_held == 2  # high-water mark stays


def test_release_works_on_unheld_current():
    inst = coin_instance([0.5, 0.5])
    sess = open_session(inst, seed=0)
    a = sess.advance()
    sess.release(a)
    assert not a.alive
    assert sess.tally.current_held == 0


def test_double_release_raises():
    inst = coin_instance([0.5])
    sess = open_session(inst, seed=0)
    a = sess.advance()
    sess.release(a)
    with pytest.raises(ReleaseError):
        sess.release(a)


def test_foreign_handle_rejected():
    inst = coin_instance([0.5])
    sess1 = open_session(inst, seed=0)
    sess2 = open_session(inst, seed=0)
    a = sess1.advance()
    with pytest.raises(SampleAfterRelease):
        sess2.toss(a, 1)
    with pytest.raises(SampleAfterRelease):
        sess2.release(a)


def test_held_limit_enforced():
    inst = coin_instance([0.5, 0.5, 0.5])
    sess = open_session(inst, seed=0, held_limit=1)
    a = sess.advance()
    sess.hold(a)
    b = sess.advance()
    with pytest.raises(HandleLimitExceeded):
        sess.hold(b)
    sess.release(a)
    sess.hold(b)  # slot freed


def test_set_held_limit_cannot_undercut_current():
    inst = coin_instance([0.5, 0.5])
    sess = open_session(inst, seed=0)
    a = sess.advance()
    sess.hold(a)
    b = sess.advance()
    sess.hold(b)
    with pytest.raises(HandleLimitExceeded):
        sess.set_held_limit(1)
    sess.set_held_limit(2)


def test_pad_to_appends_dummies():
    inst = coin_instance([0.9])
    sess = open_session(inst, seed=0)
    sess.pad_to(4)
    assert sess.stream_len == 4
    real = sess.advance()
    assert not real.is_dummy
    for _ in range(3):
        dummy = sess.advance()
        assert dummy.is_dummy
        assert dummy.index >= inst.n
        assert sess.toss(dummy, 10) == 0  # bias-0 padding

    noisy = CoinInstance(kind="noisy_order", values=(2.0, 1.0), order=(0, 1),
                         gamma=0.5)
    nsess = open_session(noisy, seed=0)
    nsess.pad_to(3)
    first = nsess.advance()
    nsess.hold(first)
    nsess.advance()
    dummy = nsess.advance()
    assert dummy.is_dummy
    # rank -inf: the real element always wins noiseless comparisons
    assert nsess.compare_wins(first, dummy, 9) == 9


# ---------------------------------------------------------------------------
# property fuzz: the held meter always matches the live held handles


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=6),
    ops=st.lists(st.sampled_from(["advance", "hold", "release", "toss"]),
                 max_size=40),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_session_bookkeeping_fuzz(n, ops, seed):
    inst = coin_instance([0.5] * n)
    sess = open_session(inst, seed=seed)
    live_held: list = []
    current = None
    for op in ops:
        if op == "advance":
            prev = current
            current = sess.advance()
            if prev is not None and not prev.held:
                assert not prev.alive  # advance kills the unheld arrival
            if current is None:
                break
        elif current is None:
            continue
        elif op == "hold":
            if current.alive:
                sess.hold(current)
                if current not in live_held:
                    live_held.append(current)
            else:
                with pytest.raises(SampleAfterRelease):
                    sess.hold(current)
        elif op == "release":
            if current.alive:
                sess.release(current)
                if current in live_held:
                    live_held.remove(current)
            else:
                with pytest.raises(ReleaseError):
                    sess.release(current)
        else:  # toss
            if current.alive:
                sess.toss(current, 3)
            else:
                with pytest.raises(SampleAfterRelease):
                    sess.toss(current, 3)
        assert sess.tally.current_held == len(live_held)
        assert sess.tally.peak_held >= sess.tally.current_held
    assert sess.tally.peak_held <= n
