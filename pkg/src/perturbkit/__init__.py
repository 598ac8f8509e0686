"""perturbkit: a model-agnostic adversarial attack engine for text models.

Victim models live behind a wrapper boundary (in-process, stdio, or HTTP);
attacks compose a goal function, constraints, a transformation, and a search
method; runs parallelize across samples with deterministic per-sample
seeding.

Submodule attributes resolve lazily so lightweight children (notably the
stdio stub server) can start without importing the heavyweight engine
dependencies.
"""

from __future__ import annotations

_EXPORTS = {
    "attacked_text": ("AttackedText", "WordSpan", "tokenize"),
    "attack": (
        "Attack",
        "AttackResult",
        "RECIPES",
        "RecipeError",
        "ResourcePaths",
        "attack_sample",
        "augment",
        "build_recipe",
        "summarize",
    ),
    "bleu": ("bleu",),
    "dataset": (
        "ClassLabel",
        "DatasetError",
        "DatasetRecord",
        "DatasetSchema",
        "ReferenceText",
        "load_csv",
        "to_attacked_text",
    ),
    "goals": (
        "GoalConfig",
        "GoalFunction",
        "GoalFunctionResult",
        "GoalStatus",
        "MinimizeBleu",
        "QueryCache",
        "TargetedClassification",
        "UntargetedClassification",
    ),
    "model_bridge": (
        "BridgeError",
        "BuiltinLexiconClassifier",
        "Classification",
        "Generation",
        "HttpModelWrapper",
        "ModelWrapper",
        "StdioModelWrapper",
        "build_wrapper",
        "connect_http",
        "connect_stdio",
        "predict",
    ),
    "runner": ("ResultItem", "RunAborted", "RunPlan", "mix", "run"),
    "search": (
        "BeamSearch",
        "GeneticParams",
        "GeneticSearch",
        "GreedyWirSearch",
        "PsoParams",
        "PsoSearch",
        "SearchContext",
        "SearchMethod",
        "WeightedSaliencySearch",
    ),
    "transformations": (
        "EmbeddingTable",
        "ResourceError",
        "SynonymLexicon",
        "Transformation",
        "WordSwapEmbedding",
        "WordSwapLexicon",
        "WordSwapNeighboringChar",
        "load_embedding_table",
        "load_synonym_lexicon",
    ),
}

_ATTRIBUTE_TO_MODULE = {
    name: module for module, names in _EXPORTS.items() for name in names
}

__all__ = sorted(_ATTRIBUTE_TO_MODULE)
__version__ = "0.1.0"


def __getattr__(name: str):
    module_name = _ATTRIBUTE_TO_MODULE.get(name)
    if module_name is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    from importlib import import_module

    module = import_module(f".{module_name}", __name__)
    value = getattr(module, name)
    globals()[name] = value
    return value
