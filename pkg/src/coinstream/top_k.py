"""Federated court for streaming top-k selection.

k kings and a buffer of K = 10k coins. Each trial funds every king with b,
draws a uniform pivot from the buffer, duels the pivot against every other
buffer coin at stake s_1, then runs the full king challenge against each
king. D counts the opponents that beat the pivot: D >= k discards the pivot
along with everyone who lost to it (kings refill from the stream), D < k
swaps the pivot with a uniformly chosen defeated king and the trial repeats
with fresh king funding. At stream end the survivors are sampled s_1 times
each and the k best empiricals win.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError, EmptyStream, InstanceTooSmall, NoDefeatedKing
from .game_of_coins import KingState, RunResult, Verdict, challenge, run_game_of_coins
from .oracle import StreamSession
from .schedules import (
    ChallengeSchedule,
    budget_increment,
    buffer_size,
    duel,
    s_level,
)


@dataclass
class Court:
    """Kings, buffer, and trial accounting for one run."""

    kings: list = field(default_factory=list)
    buffer: list = field(default_factory=list)
    trial_count: int = 0
    trial_cap: int | None = None


@dataclass(frozen=True)
class TrialRecord:
    """One pivot episode."""

    pivot: int
    defeats: int
    outcome: str
    discarded: tuple
    swapped_king: int | None
    tosses: int


def resolve_trial_cap(trial_cap, k: int, n_hint):
    """"auto" means twice the expected-trial bound 200n/k, else as given."""
    if trial_cap == "auto":
        if n_hint is None:
            return None
        return 2 * math.ceil(200.0 * n_hint / k)
    return trial_cap


def _first_beats_second(outcome, first, second) -> bool:
    """Symmetric duel verdict: higher empirical, ties to earlier arrival."""
    if outcome.empirical_first != outcome.empirical_second:
        return outcome.empirical_first > outcome.empirical_second
    return first.arrival < second.arrival


def run_trial(session, court: Court, schedule: ChallengeSchedule,
              duel_fn=duel) -> TrialRecord:
    """One trial: fund kings, pick a pivot, duel everyone, resolve.

    Mutates the court: a discard removes the pivot and its losers (king
    vacancies are left for the caller to refill), a swap crowns the pivot
    in place of a defeated king who drops into the buffer without budget.
    """
    b = budget_increment(schedule)
    stake = s_level(schedule, 1)
    k = schedule.k
    tosses_before = session.tally.total_tosses

    pivot = court.buffer[int(session.alg_rng.integers(len(court.buffer)))]
    for king in court.kings:
        king.budget += b

    defeats = 0
    buffer_losers = []
    for coin in court.buffer:
        if coin is pivot:
            continue
        outcome = duel_fn(session, coin, pivot, stake)
        if _first_beats_second(outcome, coin, pivot):
            defeats += 1
        else:
            buffer_losers.append(coin)

    defeated_kings = []
    for king in court.kings:
        verdict = challenge(session, king, pivot, schedule, duel_fn)
        if verdict is Verdict.KING_DEFEATED:
            defeated_kings.append(king)
            # the king lost to the pivot; the pivot's own defeat count is
            # unchanged
        else:
            defeats += 1

    tosses = session.tally.total_tosses - tosses_before
    if defeats >= k:
        doomed = [pivot] + buffer_losers + [kg.handle for kg in defeated_kings]
        for handle in doomed:
            session.release(handle)
        court.buffer = [c for c in court.buffer
                        if c is not pivot and c not in buffer_losers]
        court.kings = [kg for kg in court.kings if kg not in defeated_kings]
        return TrialRecord(
            pivot=pivot.index,
            defeats=defeats,
            outcome="discard",
            discarded=tuple(sorted(h.index for h in doomed)),
            swapped_king=None,
            tosses=tosses,
        )
    if not defeated_kings:
        raise NoDefeatedKing(
            "swap trial with no defeated king despite D < k; "
            "kings must have been underfull"
        )
    loser = defeated_kings[int(session.alg_rng.integers(len(defeated_kings)))]
    slot = court.buffer.index(pivot)
    court.buffer[slot] = loser.handle
    for i, king in enumerate(court.kings):
        if king is loser:
            court.kings[i] = KingState(pivot, budget=0.0,
                                       reign_start=session.position)
            break
    return TrialRecord(
        pivot=pivot.index,
        defeats=defeats,
        outcome="swap",
        discarded=(),
        swapped_king=loser.handle.index,
        tosses=tosses,
    )


def _final_selection(session, court: Court, schedule: ChallengeSchedule,
                     duel_fn=duel):
    """Rank the survivors and keep the k best.

    Cardinal instances sample each survivor s_1 times; noisy_order
    instances, where per-coin sampling has no meaning, run a round-robin of
    majority duels and rank by wins. Ties go to the earlier arrival.
    """
    stake = s_level(schedule, 1)
    survivors = [kg.handle for kg in court.kings] + list(court.buffer)
    if not survivors:
        return []
    if session.instance.kind == "noisy_order":
        wins = {handle: 0 for handle in survivors}
        for i, first in enumerate(survivors):
            for second in survivors[i + 1:]:
                outcome = duel_fn(session, first, second, stake)
                if _first_beats_second(outcome, first, second):
                    wins[first] += 1
                else:
                    wins[second] += 1
        ranked = sorted(survivors, key=lambda h: (-wins[h], h.arrival))
    else:
        means = {h: session.toss_mean(h, stake) for h in survivors}
        ranked = sorted(survivors, key=lambda h: (-means[h], h.arrival))
    return ranked[: schedule.k]


def run_federated(session: StreamSession, schedule: ChallengeSchedule,
                  k: int | None = None, duel_fn=duel, trial_cap="auto",
                  keep_trials=False) -> RunResult:
    """Select the top k coins of the stream with memory at most 11k.

    k defaults to schedule.k. k = 1 delegates to the single-king game under
    an equivalent main-family schedule. The trial cap (resolved from the
    schedule's n_hint when "auto") bounds the trial loop; hitting it ends
    stream processing and falls through to the final selection.
    """
    if k is None:
        k = schedule.k
    if k == 1:
        main = ChallengeSchedule(
            family="main", delta=schedule.delta, gap=schedule.gap,
            C=schedule.C, k=1, n_hint=None,
        )
        result = run_game_of_coins(session, main, duel_fn)
        result.chosen = (result.chosen,)
        return result
    if schedule.family != "topk" or schedule.k != k:
        raise ConfigError(
            f"run_federated with k={k} needs a topk schedule with k={k}, "
            f"got family={schedule.family!r} k={schedule.k}"
        )

    K = buffer_size(k)
    session.set_held_limit(k + K)
    court = Court(trial_cap=resolve_trial_cap(trial_cap, k, schedule.n_hint))
    trials: list[TrialRecord] = []
    swaps = 0
    capped = False

    def refill_kings():
        while len(court.kings) < k:
            handle = session.advance()
            if handle is None:
                return False
            session.hold(handle)
            court.kings.append(KingState(handle, budget=0.0,
                                         reign_start=handle.arrival))
        return True

    def refill_buffer():
        while len(court.buffer) < K:
            handle = session.advance()
            if handle is None:
                return False
            session.hold(handle)
            court.buffer.append(handle)
        return True

    first = session.advance()
    if first is None:
        raise EmptyStream("no coins in the stream")
    session.hold(first)
    court.kings.append(KingState(first, budget=0.0, reign_start=first.arrival))
    if not refill_kings():
        raise InstanceTooSmall(
            f"stream has fewer than k={k} coins"
        )

    streaming = True
    while streaming:
        if not refill_buffer():
            break
        while True:
            if court.trial_cap is not None and court.trial_count >= court.trial_cap:
                capped = True
                streaming = False
                break
            record = run_trial(session, court, schedule, duel_fn)
            court.trial_count += 1
            if keep_trials:
                trials.append(record)
            if record.outcome == "swap":
                swaps += 1
                continue
            if not refill_kings():
                streaming = False
            break

    chosen_handles = _final_selection(session, court, schedule, duel_fn)
    survivors = tuple(sorted(
        h.index for h in [kg.handle for kg in court.kings] + list(court.buffer)
    ))
    return RunResult(
        chosen=tuple(sorted(h.index for h in chosen_handles)),
        total_tosses=session.tally.total_tosses,
        peak_held=session.tally.peak_held,
        live_peak=session.tally.peak_held,
        king_changes=swaps,
        trials=court.trial_count,
        trial_records=tuple(trials),
        capped=capped,
        survivors=survivors,
    )
