"""Streaming pure-exploration toolkit.

Memory-metered streaming selection of the best coin, top-k coins, noisy
comparison partitions, and eps-best arms, plus the random-walk machinery
behind their budget analyses and a Monte Carlo harness with a CLI.
"""

from ._meta import __version__
from .adapters import (
    EpsSchedule,
    chain_counterexample_probe,
    run_eps_best,
    run_partition,
)
from .errors import (
    CoinstreamError,
    ConfigError,
    EmptyStream,
    HandleLimitExceeded,
    InstanceError,
    InstanceTooSmall,
    LevelOverflow,
    NoDefeatedKing,
    ReleaseError,
    SampleAfterRelease,
)
from .game_of_coins import (
    ChallengeRecord,
    KingState,
    RunResult,
    Verdict,
    challenge,
    run_game_of_coins,
)
from .harness import (
    ExperimentConfig,
    Report,
    SweepResult,
    generate_instance,
    run_experiment,
    sweep_C,
    wilson_halfwidth,
)
from .oracle import CoinHandle, CoinInstance, StreamSession, Tally, open_session
from .randwalk import (
    WalkTrace,
    budget_trace_as_walk,
    check_positive,
    simulate_classical,
    simulate_flex,
)
from .schedules import (
    ChallengeSchedule,
    DuelOutcome,
    budget_increment,
    buffer_size,
    c_level,
    duel,
    level_count,
    log_star,
    r_level,
    s_level,
    s_top_level,
)
from .top_k import Court, TrialRecord, run_federated, run_trial
from .warmup import BucketLadder, run_log_log_n, run_log_n, run_log_star

__all__ = [
    "__version__",
    "BucketLadder",
    "ChallengeRecord",
    "ChallengeSchedule",
    "CoinHandle",
    "CoinInstance",
    "CoinstreamError",
    "ConfigError",
    "Court",
    "DuelOutcome",
    "EmptyStream",
    "EpsSchedule",
    "ExperimentConfig",
    "HandleLimitExceeded",
    "InstanceError",
    "InstanceTooSmall",
    "KingState",
    "LevelOverflow",
    "NoDefeatedKing",
    "ReleaseError",
    "Report",
    "RunResult",
    "SampleAfterRelease",
    "StreamSession",
    "SweepResult",
    "Tally",
    "TrialRecord",
    "Verdict",
    "WalkTrace",
    "budget_increment",
    "budget_trace_as_walk",
    "buffer_size",
    "c_level",
    "chain_counterexample_probe",
    "challenge",
    "check_positive",
    "duel",
    "generate_instance",
    "level_count",
    "log_star",
    "open_session",
    "r_level",
    "run_eps_best",
    "run_experiment",
    "run_federated",
    "run_game_of_coins",
    "run_log_log_n",
    "run_log_n",
    "run_log_star",
    "run_partition",
    "run_trial",
    "s_level",
    "s_top_level",
    "simulate_classical",
    "simulate_flex",
    "sweep_C",
    "wilson_halfwidth",
]
