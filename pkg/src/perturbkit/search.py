"""Search methods exploring the perturbation space.

Four strategies ship: greedy with deletion-based word importance ranking, a
saliency-weighted greedy variant, beam search, and two population methods
(genetic, particle swarm). All randomness flows through the per-sample rng in
:class:`SearchContext`, so outcomes depend only on (config, seed, sample) and
never on scheduling.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

from .attacked_text import AttackedText
from .constraints import Constraint, PreConstraint
from .goals import GoalFunction, GoalFunctionResult, GoalStatus
from .transformations import Transformation


@dataclass
class SearchContext:
    """Everything a search method needs for one sample."""

    goal: GoalFunction
    transformation: Transformation
    pre_constraints: Sequence[PreConstraint]
    constraints: Sequence[Constraint]
    rng: random.Random
    original: AttackedText
    scored_log: Optional[list[AttackedText]] = None

    def modifiable_indices(self, text: AttackedText) -> set[int]:
        """Intersection of all pre-constraint index sets (order-independent)."""
        allowed = set(range(text.num_words))
        for pre in self.pre_constraints:
            allowed &= pre.modifiable_indices(text)
        return allowed

    def constrained_candidates(
        self, text: AttackedText, indices: Iterable[int] | None = None
    ) -> list[AttackedText]:
        """Transformation candidates at the allowed indices, constraint-filtered.

        Constraints flagged ``compare_against_original`` see the sample's
        original text; the rest see ``text``, the candidate's predecessor.
        """
        allowed = self.modifiable_indices(text)
        if indices is not None:
            allowed &= set(indices)
        out = []
        for candidate in self.transformation.candidates(text, allowed):
            ok = all(
                c.check(candidate, self.original if c.compare_against_original else text)
                for c in self.constraints
            )
            if ok:
                out.append(candidate)
        return out

    def evaluate(self, candidates: Sequence[AttackedText]) -> list[GoalFunctionResult]:
        if self.scored_log is not None:
            self.scored_log.extend(candidates)
        return self.goal.get_results(candidates)


class SearchMethod:
    """Interface: ``run(initial, ctx)`` -> a terminal or Searching result."""

    def run(self, initial: GoalFunctionResult, ctx: SearchContext) -> GoalFunctionResult:
        raise NotImplementedError


def _best(results: Sequence[GoalFunctionResult]) -> GoalFunctionResult:
    # max() keeps the first of equally scored results: deterministic tie-break.
    return max(results, key=lambda r: r.score)


def _split_live(
    results: Sequence[GoalFunctionResult],
) -> tuple[list[GoalFunctionResult], bool]:
    live = [r for r in results if r.status is not GoalStatus.BUDGET_EXHAUSTED]
    return live, len(live) < len(results)


def word_importance_ranking(ctx: SearchContext, text: AttackedText) -> list[int]:
    """Modifiable indices sorted by the goal score of deleting each word.

    Higher deletion score first; ties break toward the lower index. Scores
    come through the cached goal function, so repeated rankings are free.
    """
    order, _ = _deletion_ranking(ctx, text)
    return order


def _deletion_ranking(
    ctx: SearchContext, text: AttackedText
) -> tuple[list[int], bool]:
    """(ranked indices, budget_exhausted). Also returns deletion scores via closure-free reuse."""
    indices = sorted(ctx.modifiable_indices(text))
    if len(indices) <= 1:
        return indices, False
    probes = [text.delete_word_at(i) for i in indices]
    results = ctx.evaluate(probes)
    live, exhausted = _split_live(results)
    if exhausted:
        return [], True
    ranked = sorted(zip(indices, results), key=lambda pair: (-pair[1].score, pair[0]))
    return [i for i, _ in ranked], False


def _greedy_adopt(
    ctx: SearchContext, initial: GoalFunctionResult, order: Sequence[int]
) -> GoalFunctionResult:
    """Walk ``order``, adopting the best strictly improving candidate per index."""
    current = initial
    for index in order:
        candidates = ctx.constrained_candidates(current.text, {index})
        if not candidates:
            continue
        results = ctx.evaluate(candidates)
        live, exhausted = _split_live(results)
        succeeded = [r for r in live if r.status is GoalStatus.SUCCEEDED]
        if succeeded:
            return _best(succeeded)
        if live:
            best = _best(live)
            if best.score > current.score:
                current = best
        if exhausted:
            return replace(current, status=GoalStatus.BUDGET_EXHAUSTED)
    return current


class GreedyWirSearch(SearchMethod):
    """Greedy word swap in deletion-importance order."""

    def run(self, initial: GoalFunctionResult, ctx: SearchContext) -> GoalFunctionResult:
        order, exhausted = _deletion_ranking(ctx, initial.text)
        if exhausted:
            return replace(initial, status=GoalStatus.BUDGET_EXHAUSTED)
        return _greedy_adopt(ctx, initial, order)


def weighted_saliency_order(ctx: SearchContext, initial: GoalFunctionResult) -> list[int]:
    """Rank indices by softmax(deletion saliency) x best candidate gain.

    Saliency is the deletion score delta against the current text; gain is
    the best constrained candidate's score improvement at that index (0 when
    the index has no candidates).
    """
    order, _ = _saliency_ranking(ctx, initial)
    return order


def _saliency_ranking(
    ctx: SearchContext, initial: GoalFunctionResult
) -> tuple[list[int], bool]:
    text = initial.text
    indices = sorted(ctx.modifiable_indices(text))
    if len(indices) <= 1:
        return indices, False
    probes = [text.delete_word_at(i) for i in indices]
    probe_results = ctx.evaluate(probes)
    live, exhausted = _split_live(probe_results)
    if exhausted:
        return [], True
    saliency = [r.score - initial.score for r in probe_results]
    peak = max(saliency)
    exps = [math.exp(s - peak) for s in saliency]
    total = sum(exps)
    weights = [e / total for e in exps]

    gains = []
    for index in indices:
        candidates = ctx.constrained_candidates(text, {index})
        if not candidates:
            gains.append(0.0)
            continue
        results = ctx.evaluate(candidates)
        live, exhausted = _split_live(results)
        if exhausted:
            return [], True
        gains.append(_best(live).score - initial.score)

    ranked = sorted(
        zip(indices, weights, gains), key=lambda row: (-(row[1] * row[2]), row[0])
    )
    return [i for i, _, _ in ranked], False


class WeightedSaliencySearch(SearchMethod):
    """Greedy adoption in probability-weighted word saliency order."""

    def run(self, initial: GoalFunctionResult, ctx: SearchContext) -> GoalFunctionResult:
        order, exhausted = _saliency_ranking(ctx, initial)
        if exhausted:
            return replace(initial, status=GoalStatus.BUDGET_EXHAUSTED)
        return _greedy_adopt(ctx, initial, order)


class BeamSearch(SearchMethod):
    """Keep the ``width`` best texts, expanding every frontier text each step."""

    def __init__(self, width: int = 4) -> None:
        if width < 1:
            raise ValueError("beam width must be >= 1")
        self.width = width

    def run(self, initial: GoalFunctionResult, ctx: SearchContext) -> GoalFunctionResult:
        frontier = [initial]
        visited = {initial.text}
        best = initial
        while True:
            expansions: list[AttackedText] = []
            for result in frontier:
                for candidate in ctx.constrained_candidates(result.text):
                    if candidate not in visited:
                        visited.add(candidate)
                        expansions.append(candidate)
            if not expansions:
                return best
            results = ctx.evaluate(expansions)
            live, exhausted = _split_live(results)
            succeeded = [r for r in live if r.status is GoalStatus.SUCCEEDED]
            if succeeded:
                return _best(succeeded)
            if live and _best(live).score > best.score:
                best = _best(live)
            if exhausted:
                return replace(best, status=GoalStatus.BUDGET_EXHAUSTED)
            frontier = sorted(live, key=lambda r: -r.score)[: self.width]


@dataclass
class GeneticParams:
    population: int = 20
    generations: int = 15
    elite_count: int = 1
    temperature: float = 1.0
    mutation_prob: float = 0.3

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0 <= self.elite_count < self.population:
            raise ValueError("elite_count must be in [0, population)")


def _apply_word_vector(original: AttackedText, words: Sequence[str]) -> AttackedText:
    """Rebuild a text from the original by replacing every differing word.

    Replaying against the original keeps ``modified_indices`` equal to the
    true diff even when a population member reverts a word.
    """
    text = original
    for index, word in enumerate(words):
        if word != original.words[index]:
            text = text.replace_word_at(index, word)
    return text


def _random_swap(ctx: SearchContext, text: AttackedText) -> AttackedText:
    """One uniformly random constrained swap; the text itself when none exist."""
    by_index: list[tuple[int, list[AttackedText]]] = []
    for index in sorted(ctx.modifiable_indices(text)):
        candidates = ctx.constrained_candidates(text, {index})
        if candidates:
            by_index.append((index, candidates))
    if not by_index:
        return text
    _, candidates = by_index[ctx.rng.randrange(len(by_index))]
    return candidates[ctx.rng.randrange(len(candidates))]


class GeneticSearch(SearchMethod):
    """Population search with softmax selection, uniform crossover, and mutation.

    The whole population is re-scored through the cached goal function every
    generation, so clones and elites turn into cache hits instead of fresh
    model queries.
    """

    def __init__(self, params: GeneticParams | None = None) -> None:
        self.params = params or GeneticParams()

    def run(self, initial: GoalFunctionResult, ctx: SearchContext) -> GoalFunctionResult:
        p = self.params
        original = initial.text
        population = [_random_swap(ctx, original) for _ in range(p.population)]
        best = initial
        for generation in range(p.generations):
            results = ctx.evaluate(population)
            live, exhausted = _split_live(results)
            succeeded = [r for r in live if r.status is GoalStatus.SUCCEEDED]
            if succeeded:
                return _best(succeeded)
            if live and _best(live).score > best.score:
                best = _best(live)
            if exhausted:
                return replace(best, status=GoalStatus.BUDGET_EXHAUSTED)
            if generation == p.generations - 1:
                break

            ranked = sorted(range(len(live)), key=lambda idx: (-live[idx].score, idx))
            elites = [live[idx].text for idx in ranked[: p.elite_count]]
            weights = _softmax_weights([r.score for r in live], p.temperature)
            children: list[AttackedText] = []
            while len(children) < p.population - p.elite_count:
                parent_a, parent_b = ctx.rng.choices(live, weights=weights, k=2)
                words = [
                    a if ctx.rng.random() < 0.5 else b
                    for a, b in zip(parent_a.text.words, parent_b.text.words)
                ]
                child = _apply_word_vector(original, words)
                if ctx.rng.random() < p.mutation_prob:
                    child = _random_swap(ctx, child)
                children.append(child)
            population = elites + children
        return best


def _softmax_weights(scores: Sequence[float], temperature: float) -> list[float]:
    scaled = [s / temperature for s in scores]
    peak = max(scaled)
    exps = [math.exp(s - peak) for s in scaled]
    total = sum(exps)
    return [e / total for e in exps]


@dataclass
class PsoParams:
    particles: int = 20
    iterations: int = 15
    inertia_start: float = 0.8
    inertia_end: float = 0.2
    cognitive: float = 0.5
    social: float = 0.5

    def __post_init__(self) -> None:
        if self.particles < 2:
            raise ValueError("particles must be >= 2")
        for value in (self.inertia_start, self.inertia_end):
            if not 0.0 <= value <= 1.0:
                raise ValueError("inertia must be in [0, 1]")


def _pso_update_position(
    position: list[str],
    personal_best: list[str],
    global_best: list[str],
    probs: tuple[float, float, float],
    rng: random.Random,
) -> list[str]:
    """Per index: keep the word, adopt the personal best, or adopt the global best."""
    keep, cognitive, _ = probs
    new_position = []
    for current, personal, swarm in zip(position, personal_best, global_best):
        draw = rng.random()
        if draw < keep:
            new_position.append(current)
        elif draw < keep + cognitive:
            new_position.append(personal)
        else:
            new_position.append(swarm)
    return new_position


class PsoSearch(SearchMethod):
    """Particle swarm over per-index word choices.

    Each modifiable index gets its constrained candidate set once, computed
    against the original. A particle's position picks one word per index from
    {original word} plus that set.
    """

    def __init__(self, params: PsoParams | None = None) -> None:
        self.params = params or PsoParams()

    def run(self, initial: GoalFunctionResult, ctx: SearchContext) -> GoalFunctionResult:
        p = self.params
        original = initial.text
        slots = sorted(ctx.modifiable_indices(original))
        options: list[list[str]] = []
        for index in slots:
            words = [original.words[index]]
            for candidate in ctx.constrained_candidates(original, {index}):
                word = candidate.words[index]
                if word not in words:
                    words.append(word)
            options.append(words)
        if not slots or all(len(words) == 1 for words in options):
            return initial

        positions = [
            [words[ctx.rng.randrange(len(words))] for words in options]
            for _ in range(p.particles)
        ]
        personal_best = [list(pos) for pos in positions]
        personal_score = [-math.inf] * p.particles
        global_best = list(positions[0])
        global_score = -math.inf
        best = initial

        for iteration in range(p.iterations):
            texts = [self._realize(original, slots, pos) for pos in positions]
            results = ctx.evaluate(texts)
            live, exhausted = _split_live(results)
            succeeded = [r for r in live if r.status is GoalStatus.SUCCEEDED]
            if succeeded:
                return _best(succeeded)
            for particle, result in enumerate(results):
                if result.status is GoalStatus.BUDGET_EXHAUSTED:
                    continue
                if result.score > personal_score[particle]:
                    personal_score[particle] = result.score
                    personal_best[particle] = list(positions[particle])
                if result.score > global_score:
                    global_score = result.score
                    global_best = list(positions[particle])
            if live and _best(live).score > best.score:
                best = _best(live)
            if exhausted:
                return replace(best, status=GoalStatus.BUDGET_EXHAUSTED)
            if iteration == p.iterations - 1:
                break

            if p.iterations > 1:
                decay = iteration / (p.iterations - 1)
            else:
                decay = 0.0
            inertia = p.inertia_start + (p.inertia_end - p.inertia_start) * decay
            total = inertia + p.cognitive + p.social
            probs = (inertia / total, p.cognitive / total, p.social / total)
            positions = [
                _pso_update_position(positions[i], personal_best[i], global_best, probs, ctx.rng)
                for i in range(p.particles)
            ]
        return best

    @staticmethod
    def _realize(original: AttackedText, slots: Sequence[int], position: Sequence[str]) -> AttackedText:
        words = list(original.words)
        for slot, word in zip(slots, position):
            words[slot] = word
        return _apply_word_vector(original, words)
