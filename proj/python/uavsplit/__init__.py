"""UAV split-inference energy and deadline simulator."""

from ._core import (
    Config,
    QNetwork,
    config_keys,
    evaluate,
    load_checkpoint,
    optimal_power_single_task,
    run_episode,
    saa_sample_count,
    save_checkpoint,
    train,
    verify,
)

__all__ = [
    "Config",
    "QNetwork",
    "config_keys",
    "evaluate",
    "load_checkpoint",
    "optimal_power_single_task",
    "run_episode",
    "saa_sample_count",
    "save_checkpoint",
    "train",
    "verify",
]
