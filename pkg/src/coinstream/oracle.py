"""Problem instances and the metered stream session.

The session is the only gateway to randomness: algorithms receive coins one
by one through advance(), may toss or compare only live handles, and must
hold() any coin they want to keep past the next arrival. The tally meters
every sample and the high-water mark of simultaneously held coins, and an
optional held_limit turns the memory claim into a hard runtime constraint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    HandleLimitExceeded,
    InstanceError,
    ReleaseError,
    SampleAfterRelease,
)

KINDS = ("bernoulli_coin", "bounded_arm", "noisy_order")

# Philox key stream reserved for algorithm-level choices (pivot draws etc.);
# coin keys are 1 + index, so they can never collide with this.
_ALG_KEY = 0xFFFFFFFFFFFFFFFF

_JSON_VALUE_KEY = {
    "bernoulli_coin": "biases",
    "bounded_arm": "means",
    "noisy_order": "ranks",
}


@dataclass(frozen=True)
class CoinInstance:
    """A hidden collection of n coins, arms, or rankable elements.

    values holds the per-identity ground truth: a bias for bernoulli_coin, a
    mean for bounded_arm, and a rank key for noisy_order. order lists coin
    identities in arrival sequence. gap is documentation of the instance's
    separation (it is never revealed to algorithms through the session).
    arms optionally describes per-index reward laws for bounded_arm:
    ("bernoulli",) or ("uniform", width) with [mean-width, mean+width]
    required to sit inside [0, 1] so clipping never shifts the true mean.
    """

    kind: str
    values: tuple[float, ...]
    order: tuple[int, ...]
    gap: float | None = None
    gamma: float | None = None
    arms: tuple[tuple, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        if self.arms is not None:
            object.__setattr__(self, "arms", tuple(tuple(a) for a in self.arms))
        self._validate()

    def _validate(self):
        if self.kind not in KINDS:
            raise InstanceError(f"unknown instance kind {self.kind!r}")
        n = len(self.values)
        if sorted(self.order) != list(range(n)):
            raise InstanceError("order must be a permutation of range(n)")
        if self.kind in ("bernoulli_coin", "bounded_arm"):
            if any(not (0.0 <= v <= 1.0) for v in self.values):
                raise InstanceError("biases/means must lie in [0, 1]")
            if self.gamma is not None:
                raise InstanceError("gamma only applies to noisy_order")
        if self.kind == "noisy_order":
            if self.gamma is None or not (0.0 < self.gamma <= 0.5):
                raise InstanceError("noisy_order requires gamma in (0, 1/2]")
            if len(set(self.values)) != n:
                raise InstanceError("noisy_order rank keys must be distinct")
        if self.gap is not None:
            if not (0.0 < self.gap <= 1.0):
                raise InstanceError("declared gap must lie in (0, 1]")
            if self.kind in ("bernoulli_coin", "bounded_arm") and n >= 2:
                top = max(self.values)
                rest = [v for v in self.values if v != top]
                if rest and top - max(rest) < self.gap - 1e-12:
                    raise InstanceError(
                        "declared gap exceeds the actual separation between "
                        "the best and second-best distinct values"
                    )
        if self.arms is not None:
            if self.kind != "bounded_arm":
                raise InstanceError("arms spec only applies to bounded_arm")
            if len(self.arms) != n:
                raise InstanceError("arms spec must cover every index")
            for mu, arm in zip(self.values, self.arms):
                if arm[0] == "bernoulli":
                    continue
                if arm[0] == "uniform":
                    w = float(arm[1])
                    if w < 0 or mu - w < -1e-12 or mu + w > 1 + 1e-12:
                        raise InstanceError(
                            "uniform arm support must sit inside [0, 1]"
                        )
                else:
                    raise InstanceError(f"unknown arm law {arm[0]!r}")

    @property
    def n(self) -> int:
        return len(self.values)

    def top_set(self, k: int) -> set[int]:
        """Identities of the k largest true values (ties by lower index)."""
        ranked = sorted(range(self.n), key=lambda i: (-self.values[i], i))
        return set(ranked[:k])

    def best_value(self) -> float:
        return max(self.values)

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            _JSON_VALUE_KEY[self.kind]: list(self.values),
            "order": list(self.order),
        }
        if self.gap is not None:
            out["gap"] = self.gap
        if self.gamma is not None:
            out["gamma"] = self.gamma
        if self.arms is not None:
            out["arms"] = [list(a) for a in self.arms]
        return out

    @classmethod
    def from_json(cls, data) -> "CoinInstance":
        """Build an instance from a dict, JSON string, or file path."""
        if isinstance(data, str):
            try:
                with open(data) as fh:
                    data = json.load(fh)
            except OSError:
                data = json.loads(data)
        kind = data.get("kind")
        if kind not in KINDS:
            raise InstanceError(f"unknown instance kind {kind!r}")
        key = _JSON_VALUE_KEY[kind]
        if key not in data:
            raise InstanceError(f"{kind} instance needs a {key!r} field")
        values = data[key]
        order = data.get("order", list(range(len(values))))
        arms = data.get("arms")
        return cls(
            kind=kind,
            values=tuple(values),
            order=tuple(order),
            gap=data.get("gap"),
            gamma=data.get("gamma"),
            arms=tuple(tuple(a) for a in arms) if arms else None,
        )


@dataclass(eq=False)
class CoinHandle:
    """Live reference to a coin within one session (identity semantics)."""

    index: int
    arrival: int
    session_id: int
    alive: bool = True
    held: bool = False
    is_dummy: bool = False

    def __repr__(self):
        state = "live" if self.alive else "dead"
        tag = " dummy" if self.is_dummy else ""
        return f"<coin {self.index} arrival {self.arrival} {state}{tag}>"


@dataclass
class Tally:
    """Sample and memory meter for one session."""

    total_tosses: int = 0
    per_coin_tosses: dict = field(default_factory=dict)
    peak_held: int = 0
    current_held: int = 0

    def charge(self, index: int, m: int):
        self.total_tosses += m
        self.per_coin_tosses[index] = self.per_coin_tosses.get(index, 0) + m


class StreamSession:
    """One pass over an instance's arrival stream.

    The arriving coin is free until the algorithm holds it; advance() kills
    the previous arrival unless it was held. Holding beyond held_limit
    raises HandleLimitExceeded, which is what makes reported memory a
    mechanical fact rather than bookkeeping.
    """

    _next_id = 0

    def __init__(self, instance: CoinInstance, seed: int, held_limit=None):
        self.instance = instance
        self.seed = int(seed)
        self.held_limit = held_limit
        self.tally = Tally()
        StreamSession._next_id += 1
        self.session_id = StreamSession._next_id
        # stream of (identity, value, is_dummy); dummies appended on demand
        self._stream = [
            (idx, instance.values[idx], False) for idx in instance.order
        ]
        self._pos = -1
        self._current: CoinHandle | None = None
        self._gens: dict[int, np.random.Generator] = {}
        self._alg_rng: np.random.Generator | None = None

    # -- rng plumbing ------------------------------------------------------

    def _key(self, lane: int) -> np.ndarray:
        return np.array([self.seed & _ALG_KEY, lane & _ALG_KEY],
                        dtype=np.uint64)

    def _gen(self, index: int) -> np.random.Generator:
        g = self._gens.get(index)
        if g is None:
            g = np.random.Generator(np.random.Philox(key=self._key(1 + index)))
            self._gens[index] = g
        return g

    @property
    def alg_rng(self) -> np.random.Generator:
        """Deterministic generator for algorithm-level choices."""
        if self._alg_rng is None:
            self._alg_rng = np.random.Generator(
                np.random.Philox(key=self._key(_ALG_KEY))
            )
        return self._alg_rng

    # -- stream control ----------------------------------------------------

    @property
    def n_real(self) -> int:
        return self.instance.n

    @property
    def stream_len(self) -> int:
        return len(self._stream)

    @property
    def position(self) -> int:
        return self._pos

    def pad_to(self, total: int):
        """Append dummy coins (bias 0 / reward 0 / rank -inf) up to total."""
        rank = self.instance.kind == "noisy_order"
        while len(self._stream) < total:
            identity = len(self._stream)
            value = -math.inf if rank else 0.0
            self._stream.append((identity, value, True))

    def advance(self):
        """Return the next arrival's handle, or None at stream end.

        The previous arrival dies here unless it was held.
        """
        prev = self._current
        if prev is not None and prev.alive and not prev.held:
            prev.alive = False
        self._current = None
        if self._pos + 1 >= len(self._stream):
            return None
        self._pos += 1
        identity, _, dummy = self._stream[self._pos]
        handle = CoinHandle(
            index=identity,
            arrival=self._pos,
            session_id=self.session_id,
            is_dummy=dummy,
        )
        self._current = handle
        return handle

    def hold(self, handle: CoinHandle):
        """Retain a handle past the next advance()."""
        self._check_alive(handle)
        if handle.held:
            return
        if (
            self.held_limit is not None
            and self.tally.current_held + 1 > self.held_limit
        ):
            raise HandleLimitExceeded(
                f"holding coin {handle.index} would exceed held_limit="
                f"{self.held_limit}"
            )
        handle.held = True
        self.tally.current_held += 1
        if self.tally.current_held > self.tally.peak_held:
            self.tally.peak_held = self.tally.current_held

    def set_held_limit(self, limit):
        """Adjust the hold cap; runners call this with their slot capacity."""
        if limit is not None and self.tally.current_held > limit:
            raise HandleLimitExceeded(
                f"{self.tally.current_held} coins already held, over {limit}"
            )
        self.held_limit = limit

    def release(self, handle: CoinHandle):
        self._check_session(handle)
        if not handle.alive:
            raise ReleaseError(f"double release of coin {handle.index}")
        if handle.held:
            handle.held = False
            self.tally.current_held -= 1
        handle.alive = False

    # -- sampling ----------------------------------------------------------

    def _check_session(self, handle: CoinHandle):
        if handle.session_id != self.session_id:
            raise SampleAfterRelease("handle belongs to a different session")

    def _check_alive(self, handle: CoinHandle):
        self._check_session(handle)
        if not handle.alive:
            raise SampleAfterRelease(f"coin {handle.index} is dead")

    def _value(self, handle: CoinHandle) -> float:
        return self._stream_value(handle.index)

    def _stream_value(self, identity: int) -> float:
        if identity < self.instance.n:
            return self.instance.values[identity]
        return -math.inf if self.instance.kind == "noisy_order" else 0.0

    def _arm_law(self, identity: int):
        if (
            self.instance.kind == "bounded_arm"
            and self.instance.arms is not None
            and identity < self.instance.n
        ):
            return self.instance.arms[identity]
        return ("bernoulli",)

    def toss(self, handle: CoinHandle, m: int):
        """m tosses: success count for coins, reward array for arms."""
        self._check_alive(handle)
        if self.instance.kind == "noisy_order":
            raise InstanceError("noisy_order elements cannot be tossed")
        m = int(m)
        if m < 0:
            raise ValueError("m must be >= 0")
        self.tally.charge(handle.index, m)
        p = self._value(handle)
        if self.instance.kind == "bernoulli_coin":
            if m == 0 or p <= 0.0:
                return 0
            if p >= 1.0:
                return m
            return int(self._gen(handle.index).binomial(m, p))
        law = self._arm_law(handle.index)
        if law[0] == "uniform":
            w = float(law[1])
            draws = self._gen(handle.index).uniform(p - w, p + w, size=m)
            return np.clip(draws, 0.0, 1.0)
        if m == 0:
            return np.zeros(0)
        if p <= 0.0:
            return np.zeros(m)
        if p >= 1.0:
            return np.ones(m)
        return self._gen(handle.index).binomial(1, p, size=m).astype(float)

    def toss_mean(self, handle: CoinHandle, m: int) -> float:
        """Empirical mean of m tosses, metered identically to toss().

        Bernoulli draws collapse to a single binomial sample, so large m
        costs O(1); uniform arms average an explicit reward vector.
        """
        self._check_alive(handle)
        if self.instance.kind == "noisy_order":
            raise InstanceError("noisy_order elements cannot be tossed")
        m = int(m)
        if m <= 0:
            raise ValueError("m must be >= 1 for a mean")
        law = self._arm_law(handle.index)
        if self.instance.kind == "bounded_arm" and law[0] == "uniform":
            return float(np.mean(self.toss(handle, m)))
        self.tally.charge(handle.index, m)
        p = self._value(handle)
        if p <= 0.0:
            return 0.0
        if p >= 1.0:
            return 1.0
        return float(self._gen(handle.index).binomial(m, p)) / m

    def compare_noisy(self, a: CoinHandle, b: CoinHandle) -> CoinHandle:
        """One noisy comparison: the true larger wins w.p. exactly 1/2+gamma.

        With the complementary probability the answer is flipped (worst-case
        reading of "the answer is arbitrary"). Costs one sample, charged to
        the first handle.
        """
        wins_a = self.compare_wins(a, b, 1)
        return a if wins_a == 1 else b

    def compare_wins(self, a: CoinHandle, b: CoinHandle, m: int) -> int:
        """Number of times a is reported larger over m comparisons.

        One binomial draw; m samples charged to the first handle.
        """
        self._check_alive(a)
        self._check_alive(b)
        if self.instance.kind != "noisy_order":
            raise InstanceError("compare requires a noisy_order instance")
        if a.index == b.index:
            raise InstanceError("cannot compare a coin with itself")
        m = int(m)
        if m < 0:
            raise ValueError("m must be >= 0")
        self.tally.charge(a.index, m)
        if m == 0:
            return 0
        gamma = self.instance.gamma
        a_larger = self._value(a) > self._value(b)
        q = 0.5 + gamma if a_larger else 0.5 - gamma
        if q >= 1.0:
            return m
        if q <= 0.0:
            return 0
        return int(self._gen(a.index).binomial(m, q))


def open_session(instance: CoinInstance, seed: int, held_limit=None):
    """Open a fresh, deterministic session over the instance's stream."""
    return StreamSession(instance, seed, held_limit)
