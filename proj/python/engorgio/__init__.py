from ._core import (
    AttackConfig,
    ConfigError,
    ContractError,
    EngorgioError,
    Model,
    ModelDims,
    NumericError,
    TrainConfig,
    Vocab,
    evaluate_prompt,
    generation_flops,
    perplexity_filter,
    run_attack,
    run_cli,
    simulate_service,
    synthesize_corpus,
    train,
)

__all__ = [
    "AttackConfig",
    "ConfigError",
    "ContractError",
    "EngorgioError",
    "Model",
    "ModelDims",
    "NumericError",
    "TrainConfig",
    "Vocab",
    "evaluate_prompt",
    "generation_flops",
    "perplexity_filter",
    "run_attack",
    "run_cli",
    "simulate_service",
    "synthesize_corpus",
    "train",
]
