"""Goal functions: scoring candidates against the attack objective.

A goal function owns the model wrapper, an LRU cache of model outputs keyed
by the transmitted string, and the query counters. Search methods submit
candidate batches; cache misses are forwarded to the wrapper in a single
call. All scores are "higher is better" in [0, 1] so every search method can
maximize uniformly.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .attacked_text import AttackedText
from .bleu import bleu
from .dataset import ClassLabel, Output, ReferenceText
from .model_bridge import (
    CLASSIFICATION,
    GENERATION,
    Classification,
    Generation,
    ModelOutput,
    ModelWrapper,
)


class GoalStatus(Enum):
    SEARCHING = "searching"
    SUCCEEDED = "succeeded"
    BUDGET_EXHAUSTED = "budget_exhausted"
    SKIPPED = "skipped"


TERMINAL_STATUSES = frozenset(
    {GoalStatus.SUCCEEDED, GoalStatus.BUDGET_EXHAUSTED, GoalStatus.SKIPPED}
)


@dataclass(frozen=True)
class GoalFunctionResult:
    """A scored candidate. ``output`` is None only when the budget blocked the query."""

    text: AttackedText
    output: Optional[ModelOutput]
    score: float
    status: GoalStatus
    queries_so_far: int


@dataclass
class GoalConfig:
    query_budget: Optional[int] = None
    bleu_success_threshold: float = 0.10
    target_class: Optional[int] = None
    cache_capacity: int = 2**18

    def __post_init__(self) -> None:
        if self.query_budget is not None and self.query_budget <= 0:
            raise ValueError("query_budget must be positive when set")
        if not 0.0 <= self.bleu_success_threshold <= 1.0:
            raise ValueError("bleu_success_threshold must be in [0, 1]")
        if self.cache_capacity < 0:
            raise ValueError("cache_capacity must be >= 0")


class QueryCache:
    """LRU map from transmitted text to model output, with hit counters."""

    def __init__(self, capacity: int) -> None:
        self.capacity = capacity
        self._entries: OrderedDict[str, ModelOutput] = OrderedDict()
        self.model_calls = 0
        self.cache_hits = 0

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> Optional[ModelOutput]:
        if key in self._entries:
            self._entries.move_to_end(key)
            return self._entries[key]
        return None

    def put(self, key: str, output: ModelOutput) -> None:
        if self.capacity == 0:
            return
        self._entries[key] = output
        self._entries.move_to_end(key)
        while len(self._entries) > self.capacity:
            self._entries.popitem(last=False)

    def reset(self) -> None:
        self._entries.clear()
        self.model_calls = 0
        self.cache_hits = 0


# -- score primitives -------------------------------------------------------


def score_untargeted_classification(output: Classification, truth: int) -> float:
    """``1 - probs[truth]``; success is argmax != truth (ties to lowest index)."""
    if not 0 <= truth < len(output.probs):
        raise ValueError(f"label {truth} out of range for {len(output.probs)} classes")
    return 1.0 - output.probs[truth]


def untargeted_success(output: Classification, truth: int) -> bool:
    return output.argmax != truth


def score_targeted_classification(output: Classification, target: int) -> float:
    """``probs[target]``; success is argmax == target."""
    if not 0 <= target < len(output.probs):
        raise ValueError(f"target {target} out of range for {len(output.probs)} classes")
    return output.probs[target]


def targeted_success(output: Classification, target: int) -> bool:
    return output.argmax == target


def score_minimize_bleu(output: Generation, reference: str) -> float:
    """``1 - bleu(output, reference)``."""
    return 1.0 - bleu(output.text, reference)


# -- goal functions ----------------------------------------------------------


class GoalFunction:
    """Base class: memoized model access plus per-sample attack state.

    A goal function instance is confined to a single worker; the cache and
    counters reset at every :meth:`init_attack` so per-sample results never
    depend on sample order or worker assignment.
    """

    output_kind: str

    def __init__(self, wrapper: ModelWrapper, config: GoalConfig | None = None) -> None:
        self.wrapper = wrapper
        self.config = config or GoalConfig()
        self.cache = QueryCache(self.config.cache_capacity)
        if wrapper.output_kind != self.output_kind:
            raise ValueError(
                f"{type(self).__name__} needs a {self.output_kind} model, "
                f"got a {wrapper.output_kind} wrapper"
            )

    # subclass hooks
    def _bind_ground_truth(self, ground_truth: Output) -> None:
        raise NotImplementedError

    def _score(self, output: ModelOutput) -> float:
        raise NotImplementedError

    def _is_success(self, output: ModelOutput) -> bool:
        raise NotImplementedError

    def _should_skip(self, output: ModelOutput) -> bool:
        """Classification goals skip already-satisfied samples; see subclasses."""
        return False

    # shared machinery
    def init_attack(self, original: AttackedText, ground_truth: Output) -> GoalFunctionResult:
        """Start a fresh attack: clear the cache, query the original once."""
        self._bind_ground_truth(ground_truth)
        self.cache.reset()
        self.original = original
        output = self._fetch([original.joined_text])[0]
        if self._should_skip(output):
            status = GoalStatus.SKIPPED
        else:
            status = GoalStatus.SEARCHING
        return GoalFunctionResult(original, output, self._score(output), status, self.cache.model_calls)

    def _fetch(self, keys: Sequence[str]) -> list[ModelOutput]:
        outputs = self.wrapper(list(keys))
        if len(outputs) != len(keys):
            raise ValueError(f"wrapper returned {len(outputs)} outputs for {len(keys)} inputs")
        self.cache.model_calls += len(keys)
        for key, output in zip(keys, outputs):
            self.cache.put(key, output)
        return outputs

    def _remaining_budget(self) -> Optional[int]:
        if self.config.query_budget is None:
            return None
        # The budget bounds model calls beyond the init query.
        return max(0, self.config.query_budget - (self.cache.model_calls - 1))

    def get_results(self, candidates: Sequence[AttackedText]) -> list[GoalFunctionResult]:
        """Score a batch of candidates, resolving cache misses in one model call.

        A repeated text within the batch counts as a cache hit, exactly as it
        would when scored sequentially. Candidates whose query would exceed
        the budget come back with ``BUDGET_EXHAUSTED`` and no output.
        """
        keys = [c.joined_text for c in candidates]
        resolved: dict[str, ModelOutput] = {}
        misses: list[str] = []
        hit_flags: list[bool] = []
        for key in keys:
            cached = self.cache.get(key)
            if cached is not None:
                resolved[key] = cached
                hit_flags.append(True)
            elif key in resolved or key in misses:
                hit_flags.append(True)  # duplicate in batch resolves off the first fetch
            else:
                misses.append(key)
                hit_flags.append(False)

        remaining = self._remaining_budget()
        allowed = misses if remaining is None else misses[:remaining]
        if allowed:
            for key, output in zip(allowed, self._fetch(allowed)):
                resolved[key] = output

        results: list[GoalFunctionResult] = []
        for candidate, key, was_hit in zip(candidates, keys, hit_flags):
            if key not in resolved:
                results.append(
                    GoalFunctionResult(
                        candidate, None, 0.0, GoalStatus.BUDGET_EXHAUSTED, self.cache.model_calls
                    )
                )
                continue
            if was_hit:
                self.cache.cache_hits += 1
            output = resolved[key]
            status = GoalStatus.SUCCEEDED if self._is_success(output) else GoalStatus.SEARCHING
            results.append(
                GoalFunctionResult(candidate, output, self._score(output), status, self.cache.model_calls)
            )
        return results

    def get_result(self, candidate: AttackedText) -> GoalFunctionResult:
        return self.get_results([candidate])[0]

    def cache_stats(self) -> tuple[int, int]:
        """(model_calls, cache_hits) since the last init_attack."""
        return self.cache.model_calls, self.cache.cache_hits

    def verify(self, text: AttackedText) -> bool:
        """Re-check the success predicate with a fresh call that bypasses the cache.

        Verification queries touch neither the cache nor the counters.
        """
        output = self.wrapper([text.joined_text])[0]
        return self._is_success(output)


class UntargetedClassification(GoalFunction):
    """Push the model off the ground-truth label."""

    output_kind = CLASSIFICATION

    def _bind_ground_truth(self, ground_truth: Output) -> None:
        if not isinstance(ground_truth, ClassLabel):
            raise ValueError(
                f"classification goal needs an integer label, got {type(ground_truth).__name__}"
            )
        self.truth = ground_truth.value

    def _score(self, output: ModelOutput) -> float:
        return score_untargeted_classification(output, self.truth)

    def _is_success(self, output: ModelOutput) -> bool:
        return untargeted_success(output, self.truth)

    def _should_skip(self, output: ModelOutput) -> bool:
        # Already misclassified: nothing to attack.
        return self._is_success(output)


class TargetedClassification(GoalFunction):
    """Steer the model onto a chosen target class."""

    output_kind = CLASSIFICATION

    def __init__(self, wrapper: ModelWrapper, config: GoalConfig | None = None) -> None:
        super().__init__(wrapper, config)
        if self.config.target_class is None:
            raise ValueError("targeted classification requires config.target_class")
        self.target = self.config.target_class

    def _bind_ground_truth(self, ground_truth: Output) -> None:
        if not isinstance(ground_truth, ClassLabel):
            raise ValueError(
                f"classification goal needs an integer label, got {type(ground_truth).__name__}"
            )

    def _score(self, output: ModelOutput) -> float:
        return score_targeted_classification(output, self.target)

    def _is_success(self, output: ModelOutput) -> bool:
        return targeted_success(output, self.target)

    def _should_skip(self, output: ModelOutput) -> bool:
        return self._is_success(output)


class MinimizeBleu(GoalFunction):
    """Degrade a generation model's output away from the reference text."""

    output_kind = GENERATION

    def _bind_ground_truth(self, ground_truth: Output) -> None:
        if not isinstance(ground_truth, ReferenceText):
            raise ValueError(
                f"generation goal needs a reference text, got {type(ground_truth).__name__}"
            )
        self.reference = ground_truth.value

    def _score(self, output: ModelOutput) -> float:
        return score_minimize_bleu(output, self.reference)

    def _is_success(self, output: ModelOutput) -> bool:
        return bleu(output.text, self.reference) <= self.config.bleu_success_threshold

    # Generation goals never skip: a reference can always be degraded.
