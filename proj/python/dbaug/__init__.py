"""Python bindings for the dbaug C++ core."""

from ._dbaug import (
    ContractError,
    GenerationError,
    InputError,
    Model,
    NumericError,
    ShapeError,
    ValueError,
    attack_rates,
    classification_loss,
    curriculum_steps,
    generate_toy_corpus,
    greedy_pick,
    mid_k_samples,
    reconstruction_loss,
    run_cli,
    version,
)

__all__ = [
    "ContractError",
    "GenerationError",
    "InputError",
    "Model",
    "NumericError",
    "ShapeError",
    "ValueError",
    "attack_rates",
    "classification_loss",
    "curriculum_steps",
    "generate_toy_corpus",
    "greedy_pick",
    "mid_k_samples",
    "reconstruction_loss",
    "run_cli",
    "version",
]
