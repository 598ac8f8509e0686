"""Attack composition, recipes, per-sample execution, and augmentation.

An :class:`Attack` is the four-way composition the engine is built around:
goal function + pre-constraints/constraints + transformation + search method.
Five named recipes reconstruct published attack structures at desk scale;
their divergences from the source attacks are documented in the README.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .attacked_text import AttackedText, ORIGINAL_INDEX
from .constraints import (
    Constraint,
    EmbeddingDistanceConstraint,
    MaxPerturbedConstraint,
    PosMatchConstraint,
    PreConstraint,
    RepeatPrefilter,
    StopwordPrefilter,
    load_pos_lexicon,
    load_stopwords,
)
from .dataset import DatasetRecord
from .goals import (
    GoalConfig,
    GoalFunction,
    GoalStatus,
    MinimizeBleu,
    TargetedClassification,
    UntargetedClassification,
)
from .model_bridge import CLASSIFICATION, GENERATION, ModelWrapper
from .search import (
    BeamSearch,
    GeneticParams,
    GeneticSearch,
    GreedyWirSearch,
    PsoParams,
    PsoSearch,
    SearchContext,
    SearchMethod,
    WeightedSaliencySearch,
)
from .transformations import (
    Transformation,
    WordSwapEmbedding,
    WordSwapLexicon,
    load_embedding_table,
    load_synonym_lexicon,
)

RECIPES = (
    "greedy-embedding",
    "saliency-lexicon",
    "genetic-embedding",
    "pso-lexicon",
    "beam-embedding",
)

RECIPE_SUMMARIES = {
    "greedy-embedding": "greedy WIR + embedding swap (k=8), POS match, cosine >= 0.5, <= 40% words changed",
    "saliency-lexicon": "weighted-saliency greedy + synonym lexicon swap, POS match",
    "genetic-embedding": "genetic search + embedding swap (k=8), cosine >= 0.5",
    "pso-lexicon": "particle swarm + synonym lexicon swap",
    "beam-embedding": "beam search (width 4) + embedding swap (k=8), POS match, cosine >= 0.5",
}


class RecipeError(Exception):
    """Missing resources or incompatible model/goal combinations."""


@dataclass
class Attack:
    """A fully wired attack, ready to run on samples."""

    goal: GoalFunction
    pre_constraints: Sequence[PreConstraint]
    constraints: Sequence[Constraint]
    transformation: Transformation
    search: SearchMethod
    name: str = "custom"


@dataclass(frozen=True)
class AttackResult:
    """Outcome of attacking one sample."""

    kind: str  # "successful" | "failed" | "skipped"
    sample_index: int
    seed: int
    original: AttackedText
    perturbed: Optional[AttackedText]
    original_output: object
    perturbed_output: object
    score: float
    model_calls: int
    cache_hits: int
    words_changed: int
    elapsed_ms: float


@dataclass
class ResourcePaths:
    """File-backed resources a recipe may need."""

    embedding: Optional[str] = None
    lexicon: Optional[str] = None
    stopwords: Optional[str] = None
    pos_lexicon: Optional[str] = None


def _require(resources: ResourcePaths, attribute: str, recipe: str) -> str:
    value = getattr(resources, attribute)
    if value is None:
        raise RecipeError(f"recipe {recipe!r} needs --{attribute.replace('_', '-')}")
    if not Path(value).exists():
        raise RecipeError(f"recipe {recipe!r}: {attribute} file {value!r} does not exist")
    return value


def _build_goal(wrapper: ModelWrapper, config: GoalConfig) -> GoalFunction:
    """Pick the goal function matching the wrapper's output kind."""
    if wrapper.output_kind == CLASSIFICATION:
        if config.target_class is not None:
            return TargetedClassification(wrapper, config)
        return UntargetedClassification(wrapper, config)
    if wrapper.output_kind == GENERATION:
        if config.target_class is not None:
            raise RecipeError("target_class only applies to classification models")
        return MinimizeBleu(wrapper, config)
    raise RecipeError(f"unknown wrapper output kind {wrapper.output_kind!r}")


def build_recipe(
    recipe: str,
    wrapper: ModelWrapper,
    resources: ResourcePaths,
    config: GoalConfig | None = None,
) -> Attack:
    """Assemble one of the named attack bundles.

    The goal function follows the wrapper's output kind, so every recipe works
    unchanged against classification and generation models (and against any
    language's resource files).
    """
    config = config or GoalConfig()
    if recipe not in RECIPES:
        raise RecipeError(f"unknown recipe {recipe!r}; known: {', '.join(RECIPES)}")
    goal = _build_goal(wrapper, config)
    # Every bundle carries the same two pre-filters: stopwords and no-repeat.
    pre: list[PreConstraint] = [
        StopwordPrefilter(load_stopwords(_require(resources, "stopwords", recipe))),
        RepeatPrefilter(),
    ]

    if recipe == "greedy-embedding":
        table = load_embedding_table(_require(resources, "embedding", recipe), k=8)
        constraints: list[Constraint] = [
            PosMatchConstraint(load_pos_lexicon(_require(resources, "pos_lexicon", recipe))),
            EmbeddingDistanceConstraint(table, min_cos=0.5),
            MaxPerturbedConstraint(0.4),
        ]
        return Attack(goal, pre, constraints, WordSwapEmbedding(table, k=8), GreedyWirSearch(), recipe)
    if recipe == "saliency-lexicon":
        lexicon = load_synonym_lexicon(_require(resources, "lexicon", recipe))
        constraints = [
            PosMatchConstraint(load_pos_lexicon(_require(resources, "pos_lexicon", recipe))),
        ]
        return Attack(goal, pre, constraints, WordSwapLexicon(lexicon), WeightedSaliencySearch(), recipe)
    if recipe == "genetic-embedding":
        table = load_embedding_table(_require(resources, "embedding", recipe), k=8)
        constraints = [EmbeddingDistanceConstraint(table, min_cos=0.5)]
        return Attack(
            goal, pre, constraints, WordSwapEmbedding(table, k=8), GeneticSearch(GeneticParams()), recipe
        )
    if recipe == "pso-lexicon":
        lexicon = load_synonym_lexicon(_require(resources, "lexicon", recipe))
        return Attack(goal, pre, [], WordSwapLexicon(lexicon), PsoSearch(PsoParams()), recipe)
    # beam-embedding
    table = load_embedding_table(_require(resources, "embedding", recipe), k=8)
    constraints = [
        PosMatchConstraint(load_pos_lexicon(_require(resources, "pos_lexicon", recipe))),
        EmbeddingDistanceConstraint(table, min_cos=0.5),
    ]
    return Attack(goal, pre, constraints, WordSwapEmbedding(table, k=8), BeamSearch(width=4), recipe)


def attack_sample(
    attack: Attack, record: DatasetRecord, sample_index: int, seed: int
) -> AttackResult:
    """Attack one sample: init, search, re-verify, and package the result.

    A Successful result is re-verified with a fresh wrapper call that bypasses
    the cache; verification queries are excluded from the reported counters.
    """
    started = time.perf_counter()
    original = AttackedText(record.input, {ORIGINAL_INDEX: sample_index})
    initial = attack.goal.init_attack(original, record.output)

    if initial.status is GoalStatus.SKIPPED:
        calls, hits = attack.goal.cache_stats()
        return AttackResult(
            kind="skipped",
            sample_index=sample_index,
            seed=seed,
            original=original,
            perturbed=None,
            original_output=initial.output,
            perturbed_output=None,
            score=initial.score,
            model_calls=calls,
            cache_hits=hits,
            words_changed=0,
            elapsed_ms=(time.perf_counter() - started) * 1000.0,
        )

    ctx = SearchContext(
        goal=attack.goal,
        transformation=attack.transformation,
        pre_constraints=attack.pre_constraints,
        constraints=attack.constraints,
        rng=random.Random(seed),
        original=original,
    )
    final = attack.search.run(initial, ctx)
    calls, hits = attack.goal.cache_stats()

    kind = "failed"
    if final.status is GoalStatus.SUCCEEDED and attack.goal.verify(final.text):
        kind = "successful"

    perturbed = final.text if final.text != original else None
    return AttackResult(
        kind=kind,
        sample_index=sample_index,
        seed=seed,
        original=original,
        perturbed=perturbed,
        original_output=initial.output,
        perturbed_output=final.output if perturbed is not None else None,
        score=final.score,
        model_calls=calls,
        cache_hits=hits,
        words_changed=len(perturbed.modified_indices) if perturbed is not None else 0,
        elapsed_ms=(time.perf_counter() - started) * 1000.0,
    )


def augment(
    transformation: Transformation,
    constraints: Sequence[Constraint],
    text: AttackedText,
    n: int,
    swap_fraction: float,
    seed: int,
    pre_constraints: Sequence[PreConstraint] = (),
) -> list[AttackedText]:
    """Generate up to ``n`` distinct augmented variants of ``text``.

    Each variant applies constrained swaps at ``ceil(swap_fraction * words)``
    randomly chosen indices. No model is queried: augmentation is
    label-preserving by constraint assumption only. Deterministic per seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < swap_fraction <= 1.0:
        raise ValueError("swap_fraction must be in (0, 1]")
    rng = random.Random(seed)
    target_swaps = max(1, math.ceil(swap_fraction * text.num_words))

    def modifiable(t: AttackedText) -> set[int]:
        allowed = set(range(t.num_words))
        for pre in pre_constraints:
            allowed &= pre.modifiable_indices(t)
        return allowed

    def constrained(t: AttackedText, index: int) -> list[AttackedText]:
        out = []
        for candidate in transformation.candidates(t, {index}):
            if all(
                c.check(candidate, text if c.compare_against_original else t)
                for c in constraints
            ):
                out.append(candidate)
        return out

    variants: list[AttackedText] = []
    seen = {text}
    attempts = max(20, 10 * n)
    for _ in range(attempts):
        if len(variants) >= n:
            break
        current = text
        indices = sorted(modifiable(current))
        rng.shuffle(indices)
        swaps = 0
        for index in indices:
            if swaps >= target_swaps:
                break
            options = constrained(current, index)
            if not options:
                continue
            current = options[rng.randrange(len(options))]
            swaps += 1
        if current not in seen:
            seen.add(current)
            variants.append(current)
    return variants


@dataclass
class RunSummary:
    """Aggregate counts over a run; rates are None when undefined."""

    total: int = 0
    successful: int = 0
    failed: int = 0
    skipped: int = 0
    errored: int = 0
    success_rate: Optional[float] = None
    mean_model_calls: Optional[float] = None
    mean_cache_hits: Optional[float] = None
    mean_words_changed: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "successful": self.successful,
            "failed": self.failed,
            "skipped": self.skipped,
            "errored": self.errored,
            "success_rate": self.success_rate,
            "mean_model_calls": self.mean_model_calls,
            "mean_cache_hits": self.mean_cache_hits,
            "mean_words_changed": self.mean_words_changed,
        }


def summarize(results: Sequence[AttackResult]) -> RunSummary:
    """Counts per kind plus per-sample query and cache-hit means.

    "Attempted" samples (successful + failed) form the denominator for the
    query means; skipped samples cost one model call each but measure nothing
    about the search. Permutation-invariant by construction.
    """
    summary = RunSummary(total=len(results))
    attempted = []
    changed = []
    for result in results:
        if result.kind == "successful":
            summary.successful += 1
            attempted.append(result)
            changed.append(result.words_changed)
        elif result.kind == "failed":
            summary.failed += 1
            attempted.append(result)
        elif result.kind == "skipped":
            summary.skipped += 1
        else:
            summary.errored += 1
    if summary.successful + summary.failed > 0:
        summary.success_rate = summary.successful / (summary.successful + summary.failed)
    if attempted:
        summary.mean_model_calls = sum(r.model_calls for r in attempted) / len(attempted)
        summary.mean_cache_hits = sum(r.cache_hits for r in attempted) / len(attempted)
    if changed:
        summary.mean_words_changed = sum(changed) / len(changed)
    return summary
