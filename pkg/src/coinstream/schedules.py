"""Parameter schedules and the two-coin duel primitive.

Every per-level sample count, budget increment, and level count used by the
algorithms lives here, together with the duel that all of them share. Sample
counts are ceilings of real formulas; budgets stay real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, LevelOverflow

FAMILIES = ("main", "topk", "logn", "loglogn", "logstar", "epsbest")

DEFAULT_C = 32.0


@dataclass(frozen=True)
class ChallengeSchedule:
    """Family-tagged parameter bundle.

    gap is the family's separation knob: Delta for main, Delta_k for topk,
    gamma when driving comparison streams, eps for the epsbest ladder.
    n_hint feeds loglogn's top-level stake and the topk trial cap; the main
    family never uses it (the single-king game must not know n).
    """

    family: str
    delta: float
    gap: float
    C: float = DEFAULT_C
    k: int = 1
    n_hint: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown schedule family {self.family!r}")
        if not (0.0 < self.delta < 1.0):
            raise ConfigError("delta must lie in (0, 1)")
        if self.family == "topk" and self.delta >= 0.5:
            raise ConfigError("topk requires delta < 1/2")
        if not (0.0 < self.gap <= 1.0):
            raise ConfigError("gap must lie in (0, 1]")
        if self.C <= 0.0:
            raise ConfigError("C must be > 0")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.family != "topk" and self.k != 1:
            raise ConfigError("k > 1 only applies to the topk family")


@dataclass(frozen=True)
class DuelOutcome:
    """Result of one m-per-side duel (or m-comparison majority vote).

    winner is "first" only on a strictly larger empirical mean; exact ties
    lose for the first slot, which is the side playing the king role.
    """

    winner: str
    empirical_first: float
    empirical_second: float
    tosses_used: int


def _base(schedule: ChallengeSchedule) -> float:
    return 4.0 / (schedule.gap * schedule.gap)


def tower_r(ell: int) -> int:
    """Tower sequence r_1 = 4, r_{l+1} = 2^{r_l} (exact integers)."""
    if ell < 1:
        raise ConfigError("level must be >= 1")
    r = 4
    for _ in range(ell - 1):
        if r > 1_000_000:
            raise LevelOverflow(f"tower value at level {ell} is astronomical")
        r = 2 ** r
    return r


def r_level(schedule: ChallengeSchedule, ell: int) -> int:
    """Per-level growth factor: 3^l geometric, or the tower for ladders."""
    if ell < 1:
        raise ConfigError("level must be >= 1")
    if schedule.family in ("logstar", "epsbest"):
        return tower_r(ell)
    return 3 ** ell


def eps_level(eps: float, ell: int) -> float:
    """Ladder refinement eps_l = eps / (10 * 2^(l-1))."""
    return eps / (10.0 * 2.0 ** (ell - 1))


def s_level(schedule: ChallengeSchedule, ell: int) -> int:
    """Tosses per coin at level l, rounded up to an integer."""
    if ell < 1:
        raise ConfigError("level must be >= 1")
    fam = schedule.family
    d = schedule.delta
    try:
        if fam == "main":
            raw = _base(schedule) * math.log(1.0 / d) * (3 ** ell)
        elif fam == "topk":
            raw = 16.0 * _base(schedule) * math.log(schedule.k / d) * (3 ** ell)
        elif fam == "logn":
            raw = _base(schedule) * (math.log(1.0 / d) + 3 ** ell)
        elif fam == "loglogn":
            raw = _base(schedule) * (math.log(2.0 / d) + 3 ** ell)
        elif fam == "logstar":
            raw = _base(schedule) * (math.log(1.0 / d) + 3.0 * float(tower_r(ell)))
        else:  # epsbest
            beta = 1.0 / eps_level(schedule.gap, ell) ** 2
            raw = 4.0 * beta * (math.log(1.0 / d) + 3.0 * float(tower_r(ell)))
    except OverflowError as exc:
        raise LevelOverflow(f"stake at level {ell} overflows float range") from exc
    if math.isinf(raw):
        raise LevelOverflow(f"stake at level {ell} overflows float range")
    return math.ceil(raw)


def s_top_level(schedule: ChallengeSchedule, n: int) -> int:
    """loglogn top-level stake s_T = ceil((4/gap^2)(ln(1/delta) + ln n))."""
    if schedule.family != "loglogn":
        raise ConfigError("s_top_level only applies to the loglogn family")
    if n < 1:
        raise ConfigError("n must be >= 1")
    return math.ceil(
        _base(schedule) * (math.log(1.0 / schedule.delta) + math.log(n))
    )


def budget_increment(schedule: ChallengeSchedule) -> float:
    """Per-arrival king budget b (real-valued; only stakes are integers)."""
    d = schedule.delta
    if schedule.family == "main":
        return _base(schedule) * schedule.C * math.log(1.0 / d) + s_level(schedule, 1)
    if schedule.family == "topk":
        return (
            16.0 * _base(schedule) * schedule.C * math.log(schedule.k / d)
            + s_level(schedule, 1)
        )
    raise ConfigError(f"family {schedule.family!r} has no budget notion")


def c_level(ell: int) -> int:
    """Ladder promotion threshold c_l = 2^{r_l} / 2^{l-1} (exact integer)."""
    return 2 ** (tower_r(ell) - ell + 1)


def log_star(n) -> int:
    """Iterated logarithm: applications of log2 until the value is < 2."""
    if n < 1:
        raise ConfigError("log_star requires n >= 1")
    count = 0
    x = float(n)
    while x >= 2.0:
        x = math.log2(x)
        count += 1
    return count


def _ceil_log4(n: int) -> int:
    """Smallest t with 4^t >= n (exact integer arithmetic)."""
    t = 0
    v = 1
    while v < n:
        v *= 4
        t += 1
    return t


def level_count(schedule: ChallengeSchedule, n: int) -> int:
    """Ladder height t for the warmup families."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    fam = schedule.family
    if fam == "logn":
        return max(1, _ceil_log4(n))
    if fam == "loglogn":
        if n < 3:
            return 1
        return max(1, math.ceil(math.log(math.log(n), 4)))
    if fam in ("logstar", "epsbest"):
        return log_star(n) + 1
    raise ConfigError(f"family {fam!r} has no level count")


def buffer_size(k: int) -> int:
    """Court buffer size K = 10k."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    return 10 * k


def duel(session, handle_a, handle_b, m: int) -> DuelOutcome:
    """Sample both sides m times and compare empirical means.

    On noisy_order instances the duel is instead m comparisons decided by
    majority (empiricals are win fractions). Either way the first slot wins
    only strictly; callers wanting a symmetric tie rule break ties on the
    outcome's empirical fields themselves.
    """
    m = int(m)
    if m < 1:
        raise ConfigError("duel needs m >= 1")
    if session.instance.kind == "noisy_order":
        wins = session.compare_wins(handle_a, handle_b, m)
        emp_a = wins / m
        emp_b = 1.0 - emp_a
        used = m
    else:
        emp_a = session.toss_mean(handle_a, m)
        emp_b = session.toss_mean(handle_b, m)
        used = 2 * m
    winner = "first" if emp_a > emp_b else "second"
    return DuelOutcome(winner, emp_a, emp_b, used)
