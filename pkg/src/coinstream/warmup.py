"""Warmup selection ladders with exact memory accounting.

Three algorithms over a stream of known length n, all padded with bias-0
dummies to a power of 4 so every stage completes:

- run_log_n: t = ceil(log4 n) levels of merge-and-reduce buckets of 4.
- run_log_log_n: the same cascade cut at t = ceil(log4 ln n) levels, whose
  level-t champions duel one running candidate at a heavy top stake.
- run_log_star: one champion slot and counter per level; a full counter
  promotes the champion one level up as if it had just arrived there.

The reported peak_held is the ladder's slot capacity (4t, 4t+1, t), which
the session enforces as a hard hold limit; the live high-water mark rides
along in live_peak.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError, EmptyStream
from .game_of_coins import RunResult
from .oracle import CoinHandle, StreamSession
from .schedules import (
    ChallengeSchedule,
    c_level,
    level_count,
    s_level,
    s_top_level,
)


@dataclass
class BucketLadder:
    """Working state shared by the warmup families.

    buckets serve logn/loglogn (lists of up to 4 held handles); champions
    and counters serve the logstar ladder (at most one held handle per
    level); candidate is loglogn's single top-level slot.
    """

    t: int
    buckets: list = field(default_factory=list)
    counters: list = field(default_factory=list)
    champions: list = field(default_factory=list)
    candidate: CoinHandle | None = None


def _padded_length(n: int, minimum_levels: int = 0) -> int:
    """Next power of 4 that is >= n and >= 4^minimum_levels."""
    total = 1
    while total < n:
        total *= 4
    while total < 4 ** minimum_levels:
        total *= 4
    return total


def _require_tossable(session: StreamSession):
    if session.instance.kind == "noisy_order":
        raise ConfigError("warmup ladders run on coins or arms, not rankings")


def _bucket_winner(session, bucket, stake):
    """Sample each member stake times; argmax, ties to earliest arrival."""
    best = None
    best_mean = -1.0
    for handle in bucket:
        mean = session.toss_mean(handle, stake)
        if mean > best_mean or (mean == best_mean and best is not None
                                and handle.arrival < best.arrival):
            best = handle
            best_mean = mean
    return best


def _run_bucket_cascade(session, schedule, n, t, on_top_winner):
    """Drive the merge-and-reduce cascade; full level-t buckets are handed
    to on_top_winner instead of promoting further."""
    if n < 1:
        raise EmptyStream("no coins in the stream")
    session.pad_to(_padded_length(n, minimum_levels=t))
    ladder = BucketLadder(t=t, buckets=[[] for _ in range(t)])
    while (arrival := session.advance()) is not None:
        session.hold(arrival)
        ladder.buckets[0].append(arrival)
        level = 0
        while len(ladder.buckets[level]) == 4:
            bucket = ladder.buckets[level]
            winner = _bucket_winner(session, bucket, s_level(schedule, level + 1))
            for handle in bucket:
                if handle is not winner:
                    session.release(handle)
            bucket.clear()
            if level == t - 1:
                on_top_winner(ladder, winner)
                break
            ladder.buckets[level + 1].append(winner)
            level += 1
    return ladder


def run_log_n(session: StreamSession, schedule: ChallengeSchedule,
              n: int | None = None) -> RunResult:
    """Merge-and-reduce over t = ceil(log4 n) bucket levels.

    With padding to 4^t the level-t bucket fills exactly once, at stream
    end, and its winner is the answer. Total tosses are deterministic:
    sum over levels of (padded / 4^(l-1)) * s_l.
    """
    if schedule.family != "logn":
        raise ConfigError("run_log_n needs a logn-family schedule")
    _require_tossable(session)
    if n is None:
        n = session.n_real
    if n < 1:
        raise EmptyStream("no coins in the stream")
    t = level_count(schedule, n)
    session.set_held_limit(4 * t)

    final = []

    def crown(ladder, winner):
        final.append(winner)

    _run_bucket_cascade(session, schedule, n, t, crown)
    champion = final[-1]
    return RunResult(
        chosen=champion.index,
        total_tosses=session.tally.total_tosses,
        peak_held=4 * t,
        live_peak=session.tally.peak_held,
    )


def run_log_log_n(session: StreamSession, schedule: ChallengeSchedule,
                  n: int | None = None) -> RunResult:
    """Bucket cascade cut at t = ceil(log4 ln n) levels plus one candidate.

    Each level-t bucket winner duels the running candidate with the top
    stake s_T; the higher empirical survives, ties to the earlier arrival.
    """
    if schedule.family != "loglogn":
        raise ConfigError("run_log_log_n needs a loglogn-family schedule")
    _require_tossable(session)
    if n is None:
        n = session.n_real
    if n < 1:
        raise EmptyStream("no coins in the stream")
    t = level_count(schedule, n)
    session.set_held_limit(4 * t + 1)
    top_stake = s_top_level(schedule, max(n, 1))

    def meet_candidate(ladder, winner):
        if ladder.candidate is None:
            ladder.candidate = winner
            return
        incumbent = ladder.candidate
        mean_inc = session.toss_mean(incumbent, top_stake)
        mean_new = session.toss_mean(winner, top_stake)
        keep_new = mean_new > mean_inc or (
            mean_new == mean_inc and winner.arrival < incumbent.arrival
        )
        if keep_new:
            session.release(incumbent)
            ladder.candidate = winner
        else:
            session.release(winner)

    ladder = _run_bucket_cascade(session, schedule, n, t, meet_candidate)
    champion = ladder.candidate
    return RunResult(
        chosen=champion.index,
        total_tosses=session.tally.total_tosses,
        peak_held=4 * t + 1,
        live_peak=session.tally.peak_held,
    )


def champion_ladder(session, t, stake_of, threshold_of, capacity=None):
    """Counter-driven champion ladder shared by log-star and eps-best.

    An arrival at level l duels that level's champion with stake_of(l);
    the arrival is dropped only when strictly worse (ties replace, except
    that a dummy never displaces a real coin). Each processed arrival bumps
    the level counter, and a counter reaching threshold_of(l) promotes the
    champion to level l+1 as a fresh arrival there. Level t never promotes.
    Returns the champion of the highest occupied level at stream end.
    """
    session.set_held_limit(capacity if capacity is not None else t)
    champs: list[CoinHandle | None] = [None] * t
    counters = [0] * t
    if session.stream_len == 0:
        raise EmptyStream("no coins in the stream")
    while (arrival := session.advance()) is not None:
        coin = arrival
        held = False  # fresh arrivals stay free until they win a slot
        level = 0
        while True:
            incumbent = champs[level]
            if incumbent is None:
                if not held:
                    session.hold(coin)
                champs[level] = coin
            else:
                outcome = duel_means(session, incumbent, coin, stake_of(level + 1))
                arriving_wins = outcome[1] > outcome[0] or (
                    outcome[1] == outcome[0]
                    and not (coin.is_dummy and not incumbent.is_dummy)
                )
                if arriving_wins:
                    session.release(incumbent)
                    if not held:
                        session.hold(coin)
                    champs[level] = coin
                else:
                    session.release(coin)
            counters[level] += 1
            if level < t - 1 and counters[level] == threshold_of(level + 1):
                counters[level] = 0
                coin = champs[level]
                champs[level] = None
                held = True
                level += 1
                continue
            break
    champion = None
    for level in range(t - 1, -1, -1):
        if champs[level] is None:
            continue
        if champion is None:
            champion = champs[level]
        else:
            session.release(champs[level])
    return champion


def duel_means(session, first, second, stake):
    """(mean_first, mean_second) from stake tosses each."""
    return (
        session.toss_mean(first, stake),
        session.toss_mean(second, stake),
    )


def run_log_star(session: StreamSession, schedule: ChallengeSchedule,
                 n: int | None = None) -> RunResult:
    """Champion ladder of t = log*(n)+1 levels with tower stakes."""
    if schedule.family != "logstar":
        raise ConfigError("run_log_star needs a logstar-family schedule")
    _require_tossable(session)
    if n is None:
        n = session.n_real
    if n < 1:
        raise EmptyStream("no coins in the stream")
    t = level_count(schedule, n)
    session.pad_to(_padded_length(n, minimum_levels=1))
    champion = champion_ladder(
        session,
        t,
        stake_of=lambda ell: s_level(schedule, ell),
        threshold_of=c_level,
    )
    return RunResult(
        chosen=champion.index,
        total_tosses=session.tally.total_tosses,
        peak_held=t,
        live_peak=session.tally.peak_held,
    )
