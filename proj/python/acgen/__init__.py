from ._acgen import (
    Error,
    Pipeline,
    atomicize,
    bleu,
    default_prompts,
    levenshtein,
    load_dataset_json,
    parse_gherkin,
    ranking_metrics,
    render,
    rouge,
)

__all__ = [
    "Error",
    "Pipeline",
    "atomicize",
    "bleu",
    "default_prompts",
    "levenshtein",
    "load_dataset_json",
    "parse_gherkin",
    "ranking_metrics",
    "render",
    "rouge",
]
