"""Random walks: classical, flex-length positive, and budget-trace views.

The flex walk's step law is a shifted exponential: X_j = eta(j) + kappa - E_j
with E_j ~ Exp(scale kappa) and drift eta(j) = C * ln(j/delta) / sqrt(j).
The centered step kappa - E_j has Pr(|X_j - E[X_j]| >= t) <= 2 exp(-t/kappa),
the required sub-exponential tail, and E[X_j] = eta(j).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .schedules import DEFAULT_C


@dataclass
class WalkTrace:
    """A realized walk S_0 .. S_n (S_0 = 0) plus its generating params."""

    values: np.ndarray
    family: str
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    def to_csv(self, path):
        """Write the trace as two columns: i, S_i."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "S_i"])
            for i, value in enumerate(self.values):
                writer.writerow([i, repr(float(value))])


def simulate_classical(n: int, p: float, seed: int) -> WalkTrace:
    """n steps of +1 w.p. p, -1 otherwise."""
    if not (0.0 <= p <= 1.0):
        raise ConfigError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    steps = np.where(rng.random(n) < p, 1.0, -1.0)
    values = np.concatenate([[0.0], np.cumsum(steps)])
    return WalkTrace(values, "classical", {"n": n, "p": p, "seed": seed})


def default_kappa(delta: float) -> float:
    """Sub-exponential parameter kappa = 1 / ln(1/delta)."""
    if not (0.0 < delta < 1.0):
        raise ConfigError("delta must lie in (0, 1)")
    return 1.0 / math.log(1.0 / delta)


def eta_drift(j, C: float, delta: float):
    """Required mean drift eta(j) = C * ln(j/delta) / sqrt(j)."""
    j = np.asarray(j, dtype=float)
    return C * np.log(j / delta) / np.sqrt(j)


def simulate_flex(n: int, kappa: float | None = None, C: float = DEFAULT_C,
                  delta: float = 0.1, seed: int = 0) -> WalkTrace:
    """Flex-length positive walk with shifted-exponential steps.

    kappa defaults to 1/ln(1/delta). Steps are eta(j) + kappa - Exp(kappa),
    so each has mean eta(j) and a sub-exponential tail with parameter kappa.
    """
    if kappa is None:
        kappa = default_kappa(delta)
    if kappa <= 0:
        raise ConfigError("kappa must be > 0")
    if C <= 0:
        raise ConfigError("C must be > 0")
    rng = np.random.default_rng(seed)
    j = np.arange(1, n + 1, dtype=float)
    steps = eta_drift(j, C, delta) + kappa - rng.exponential(kappa, size=n)
    values = np.concatenate([[0.0], np.cumsum(steps)])
    return WalkTrace(
        values, "flex",
        {"n": n, "kappa": kappa, "C": C, "delta": delta, "seed": seed},
    )


def budget_trace_as_walk(result, king: int | None = None) -> WalkTrace:
    """View one king's reign as a walk of net budget changes.

    Steps are b - (stakes paid + unpayable stake) per challenge faced by the
    chosen king (default: the final king, result.chosen). Since the
    shortfall is included, a defeat is exactly the first partial sum below
    zero; an undefeated reign stays >= 0 throughout.
    """
    if result.budget_per_coin is None:
        raise ConfigError("result carries no budget trace")
    if king is None:
        king = result.chosen
    b = result.budget_per_coin
    steps = [
        b - (record.spent + record.shortfall)
        for record in result.budget_trace
        if record.king == king
    ]
    values = np.concatenate([[0.0], np.cumsum(steps)]) if steps else np.zeros(1)
    return WalkTrace(values, "budget", {"king": king, "b": b})


def check_positive(trace: WalkTrace, allow_zero: bool = False):
    """(all positive?, index of first violation or None) over i >= 1.

    allow_zero=True only flags strictly negative sums, the right reading
    for budget walks where an exactly spent budget is not a defeat.
    """
    tail = trace.values[1:]
    bad = np.nonzero(tail < 0)[0] if allow_zero else np.nonzero(tail <= 0)[0]
    if len(bad) == 0:
        return True, None
    return False, int(bad[0]) + 1


def positivity_frequency(n: int, delta: float, C: float = DEFAULT_C,
                         seeds: int = 10_000, base_seed: int = 0,
                         kappa: float | None = None) -> float:
    """Fraction of flex walks with S_i > 0 for every i >= 1."""
    hits = 0
    for s in range(seeds):
        trace = simulate_flex(n, kappa=kappa, C=C, delta=delta,
                              seed=base_seed + s)
        ok, _ = check_positive(trace)
        hits += ok
    return hits / seeds


def classical_nonpositivity_frequency(n: int, p: float, seeds: int = 10_000,
                                      base_seed: int = 0) -> float:
    """Fraction of classical walks that ever dip to S_i <= 0, i >= 1.

    Closed form for p > 1/2 as n grows: (1-p) + p * (1-p)/p = 2(1-p).
    """
    hits = 0
    for s in range(seeds):
        trace = simulate_classical(n, p, base_seed + s)
        ok, _ = check_positive(trace)
        hits += not ok
    return hits / seeds


def tail_frequencies(kappa: float, ts, draws: int = 1_000_000,
                     seed: int = 0):
    """Empirical vs permitted tail mass of the centered step at each t.

    Returns rows (t, empirical, exact, bound) where empirical is
    Pr(|X - E[X]| >= t) over the draws, exact is the law's true mass
    exp(-1 - t/kappa), and bound is the sub-exponential budget
    2 exp(-t/kappa).
    """
    rng = np.random.default_rng(seed)
    centered = kappa - rng.exponential(kappa, size=draws)
    rows = []
    for t in ts:
        empirical = float(np.mean(np.abs(centered) >= t))
        exact = math.exp(-1.0 - t / kappa) if t >= kappa else None
        bound = 2.0 * math.exp(-t / kappa)
        rows.append((float(t), empirical, exact, bound))
    return rows
