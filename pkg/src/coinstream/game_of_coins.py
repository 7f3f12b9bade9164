"""Single-coin-memory best coin selection via budgeted king challenges.

The first coin is crowned with budget 0. Every later arrival grants the king
b budget and then challenges it through escalating levels: at level l the
king pays the stake s_l (or is defeated on the spot if it cannot), both sides
toss s_l times, and a strictly higher king empirical ends the challenge.
Defeat crowns the challenger with a fresh zero budget. Memory never exceeds
one stored coin beyond the arriving one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import EmptyStream
from .oracle import CoinHandle, StreamSession
from .schedules import ChallengeSchedule, budget_increment, duel, s_level


class Verdict(enum.Enum):
    KING_WINS = "KingWins"
    KING_DEFEATED = "KingDefeated"


@dataclass
class KingState:
    """The reigning coin and its amortized toss allowance."""

    handle: CoinHandle
    budget: float = 0.0
    reign_start: int = 0


@dataclass(frozen=True)
class ChallengeRecord:
    """One challenge, as seen from the budget's point of view.

    spent counts the stakes the king paid; shortfall is the stake it could
    not pay when defeated (0 on a win). The walk view of a reign uses
    b - (spent + shortfall) per record, so a defeat is exactly a partial sum
    dipping below zero.
    """

    position: int
    king: int
    challenger: int
    levels: int
    spent: int
    shortfall: int
    king_won: bool
    budget_after: float


@dataclass
class RunResult:
    """Outcome of one algorithm run over one session.

    peak_held is the run's memory in coins: the live high-water mark for
    king/court algorithms, the enforced slot capacity for the warmup and
    eps-best ladders (live occupancy is always available as live_peak).
    success stays None until the harness scores it against the hidden
    instance.
    """

    chosen: object
    total_tosses: int
    peak_held: int
    live_peak: int
    king_changes: int = 0
    budget_trace: tuple = ()
    budget_per_coin: float | None = None
    trials: int | None = None
    trial_records: tuple = ()
    capped: bool = False
    survivors: tuple = ()
    success: bool | None = None


def challenge(session, king: KingState, challenger, schedule, duel_fn=duel,
              record=None) -> Verdict:
    """Run one lazy leveled challenge; mutates the king's budget.

    Level l = 1, 2, ...: a budget below s_l is immediate defeat; otherwise
    the king pays s_l, both sides duel with m = s_l, and only a strict king
    win stops the escalation. Appends a ChallengeRecord to record when given.
    """
    level = 1
    spent = 0
    while True:
        stake = s_level(schedule, level)
        if king.budget < stake:
            if record is not None:
                record.append(ChallengeRecord(
                    position=challenger.arrival,
                    king=king.handle.index,
                    challenger=challenger.index,
                    levels=level,
                    spent=spent,
                    shortfall=stake,
                    king_won=False,
                    budget_after=king.budget,
                ))
            return Verdict.KING_DEFEATED
        king.budget -= stake
        spent += stake
        outcome = duel_fn(session, king.handle, challenger, stake)
        if outcome.winner == "first":
            if record is not None:
                record.append(ChallengeRecord(
                    position=challenger.arrival,
                    king=king.handle.index,
                    challenger=challenger.index,
                    levels=level,
                    spent=spent,
                    shortfall=0,
                    king_won=True,
                    budget_after=king.budget,
                ))
            return Verdict.KING_WINS
        level += 1


def run_game_of_coins(session: StreamSession, schedule: ChallengeSchedule,
                      duel_fn=duel, keep_trace=True) -> RunResult:
    """Play the stream and return the final king.

    The session never learns n; the schedule must be the main family (topk
    is accepted for reuse by the court). Raises EmptyStream on a coinless
    stream.
    """
    b = budget_increment(schedule)
    session.set_held_limit(1)
    first = session.advance()
    if first is None:
        raise EmptyStream("no coins in the stream")
    session.hold(first)
    king = KingState(first, budget=0.0, reign_start=first.arrival)
    changes = 0
    trace: list[ChallengeRecord] = [] if keep_trace else None
    while (coin := session.advance()) is not None:
        king.budget += b
        verdict = challenge(session, king, coin, schedule, duel_fn, trace)
        if verdict is Verdict.KING_DEFEATED:
            session.release(king.handle)
            session.hold(coin)
            king = KingState(coin, budget=0.0, reign_start=coin.arrival)
            changes += 1
        else:
            session.release(coin)
    return RunResult(
        chosen=king.handle.index,
        total_tosses=session.tally.total_tosses,
        peak_held=session.tally.peak_held,
        live_peak=session.tally.peak_held,
        king_changes=changes,
        budget_trace=tuple(trace) if trace is not None else (),
        budget_per_coin=b,
    )
