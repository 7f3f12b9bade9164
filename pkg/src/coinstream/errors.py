"""Exception types shared across the toolkit."""

from __future__ import annotations


class CoinstreamError(Exception):
    """Base class for all toolkit errors."""


class InstanceError(CoinstreamError):
    """Invalid problem instance (bad biases, order, gap, or gamma)."""


class ConfigError(CoinstreamError):
    """Invalid schedule or experiment configuration."""


class HandleLimitExceeded(CoinstreamError):
    """Holding another coin would exceed the session's held_limit."""


class SampleAfterRelease(CoinstreamError):
    """A dead handle was sampled (tossed or compared)."""


class ReleaseError(CoinstreamError):
    """A handle was released twice."""


class EmptyStream(CoinstreamError):
    """An algorithm was started on a stream with no coins."""


class InstanceTooSmall(CoinstreamError):
    """The stream has fewer coins than the requested selection size."""


class LevelOverflow(CoinstreamError):
    """A tower-schedule value exceeded the representable float range."""


class NoDefeatedKing(CoinstreamError):
    """Internal invariant violation: a swap trial found no defeated king.

    Unreachable when a trial runs with a full set of k kings; D < k defeats
    means at least one king failed to beat the pivot.
    """
