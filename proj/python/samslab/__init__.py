# Copyright (c) 2026, The samslab Authors
# SPDX-License-Identifier: Apache-2.0
"""Preference optimization with learned sample scheduling."""

from samslab._core import (
    ConfigError,
    ContractViolation,
    GeneratorSpec,
    InputError,
    IoError,
    LifecycleError,
    NumericalError,
    PreferenceSample,
    ShapeError,
    batch_reward,
    combined_reward,
    default_config_json,
    dpo_loss,
    evaluate_checkpoints,
    generate_dataset,
    minmax_normalize,
    normalize_config_json,
    read_dataset,
    sample_rewards,
    select_top_k,
    sigmoid,
    train,
    write_dataset,
)

__all__ = [
    "ConfigError",
    "ContractViolation",
    "GeneratorSpec",
    "InputError",
    "IoError",
    "LifecycleError",
    "NumericalError",
    "PreferenceSample",
    "ShapeError",
    "batch_reward",
    "combined_reward",
    "default_config_json",
    "dpo_loss",
    "evaluate_checkpoints",
    "generate_dataset",
    "minmax_normalize",
    "normalize_config_json",
    "read_dataset",
    "sample_rewards",
    "select_top_k",
    "sigmoid",
    "train",
    "write_dataset",
]
