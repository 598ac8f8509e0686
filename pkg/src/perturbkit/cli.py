"""Command-line entry point: attack, augment, list-recipes.

Exit codes: 0 on completion (a failed attack is a measurement, not an
error), 1 on configuration problems, 2 when a run aborts.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import os
import sys
from dataclasses import dataclass
from typing import Optional

from .attack import (
    RECIPE_SUMMARIES,
    RECIPES,
    Attack,
    RecipeError,
    ResourcePaths,
    augment,
    build_recipe,
)
from .constraints import (
    EmbeddingDistanceConstraint,
    PosMatchConstraint,
    StopwordPrefilter,
    load_pos_lexicon,
    load_stopwords,
)
from .dataset import DatasetError, DatasetSchema, load_csv, to_attacked_text
from .goals import GoalConfig
from .model_bridge import BridgeError, build_wrapper
from .records import FORMATS, RecordWriter
from .runner import RunAborted, RunPlan, run
from .transformations import (
    ResourceError,
    WordSwapEmbedding,
    WordSwapLexicon,
    load_embedding_table,
    load_synonym_lexicon,
)

DEFAULT_CACHE_SIZE = 2**18
CACHE_SIZE_ENV = "PERTURB_CACHE_SIZE"


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # Usage problems exit 1 (not argparse's default 2, which we reserve for
    # aborted runs).
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise CliError(message)


@dataclass
class RecipeFactory:
    """Picklable attack builder: each worker constructs its own instance."""

    recipe: str
    model_spec: str
    resources: ResourcePaths
    config: GoalConfig

    def __call__(self) -> Attack:
        wrapper = build_wrapper(self.model_spec)
        return build_recipe(self.recipe, wrapper, self.resources, self.config)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="perturbkit", description="Black-box adversarial attacks on text models.")
    commands = parser.add_subparsers(dest="command", required=True)

    attack_cmd = commands.add_parser("attack", help="run an attack recipe over a CSV dataset")
    attack_cmd.add_argument("--model", required=True, help="builtin:lexicon:<path> | stdio:<command> | http:<url>")
    attack_cmd.add_argument("--dataset", required=True, help="CSV file with a header row")
    attack_cmd.add_argument("--input-columns", required=True, help="comma-separated input column names, in order")
    attack_cmd.add_argument("--output-column", required=True)
    attack_cmd.add_argument("--output-kind", choices=("auto", "label", "text"), default="auto")
    attack_cmd.add_argument("--recipe", required=True, choices=RECIPES)
    attack_cmd.add_argument("--num-examples", type=int, default=None, help="attack the first N rows (default: all)")
    attack_cmd.add_argument("--parallel", type=int, default=1, help="number of attack workers")
    attack_cmd.add_argument("--seed", type=int, default=0)
    attack_cmd.add_argument("--query-budget", type=int, default=None)
    attack_cmd.add_argument("--cache-size", type=int, default=None,
                            help=f"LRU capacity (default {DEFAULT_CACHE_SIZE}, or ${CACHE_SIZE_ENV})")
    attack_cmd.add_argument("--target-class", type=int, default=None)
    attack_cmd.add_argument("--bleu-threshold", type=float, default=0.10)
    attack_cmd.add_argument("--log-format", choices=FORMATS, default="text")
    attack_cmd.add_argument("--output", default=None, help="write records here instead of stdout")
    attack_cmd.add_argument("--unordered", action="store_true", help="emit results as they finish")
    attack_cmd.add_argument("--embedding", default=None)
    attack_cmd.add_argument("--lexicon", default=None)
    attack_cmd.add_argument("--stopwords", default=None)
    attack_cmd.add_argument("--pos-lexicon", default=None)

    augment_cmd = commands.add_parser("augment", help="write augmented copies of a CSV dataset")
    augment_cmd.add_argument("--dataset", required=True)
    augment_cmd.add_argument("--input-columns", required=True)
    augment_cmd.add_argument("--output-column", required=True)
    augment_cmd.add_argument("--output-kind", choices=("auto", "label", "text"), default="auto")
    augment_cmd.add_argument("--transformation", choices=("lexicon", "embedding"), default="lexicon")
    augment_cmd.add_argument("--lexicon", default=None)
    augment_cmd.add_argument("--embedding", default=None)
    augment_cmd.add_argument("--neighbors", type=int, default=8, help="embedding neighbors per word")
    augment_cmd.add_argument("--per-example", type=int, default=4)
    augment_cmd.add_argument("--swap-fraction", type=float, default=0.2)
    augment_cmd.add_argument("--seed", type=int, default=0)
    augment_cmd.add_argument("--stopwords", default=None)
    augment_cmd.add_argument("--pos-lexicon", default=None)
    augment_cmd.add_argument("--min-cos", type=float, default=None)
    augment_cmd.add_argument("--output", default=None, help="write the augmented CSV here instead of stdout")

    commands.add_parser("list-recipes", help="show the attack recipe catalog")
    return parser


def _parse_columns(raw: str) -> tuple[str, ...]:
    columns = tuple(part.strip() for part in raw.split(",") if part.strip())
    if not columns:
        raise CliError("--input-columns must name at least one column")
    return columns


def _cache_size(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get(CACHE_SIZE_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"${CACHE_SIZE_ENV} must be an integer, got {env!r}") from None
    return DEFAULT_CACHE_SIZE


@contextlib.contextmanager
def _open_output(path: Optional[str]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            yield handle


def _cmd_attack(args: argparse.Namespace) -> int:
    if args.parallel < 1:
        raise CliError("--parallel must be >= 1")
    if args.num_examples is not None and args.num_examples < 1:
        raise CliError("--num-examples must be >= 1")
    schema = DatasetSchema(
        input_columns=_parse_columns(args.input_columns),
        output_column=args.output_column,
        output_kind=args.output_kind,
    )
    records = load_csv(args.dataset, schema)
    if not records:
        raise CliError(f"dataset {args.dataset} has no data rows")
    count = len(records) if args.num_examples is None else min(args.num_examples, len(records))

    config = GoalConfig(
        query_budget=args.query_budget,
        bleu_success_threshold=args.bleu_threshold,
        target_class=args.target_class,
        cache_capacity=_cache_size(args.cache_size),
    )
    resources = ResourcePaths(
        embedding=args.embedding,
        lexicon=args.lexicon,
        stopwords=args.stopwords,
        pos_lexicon=args.pos_lexicon,
    )
    factory = RecipeFactory(args.recipe, args.model, resources, config)
    factory()  # validate model/resources/recipe up front, before spawning workers

    plan = RunPlan(
        worker_count=args.parallel,
        global_seed=args.seed,
        sample_range=list(range(count)),
        ordered_output=not args.unordered,
    )
    with _open_output(args.output) as stream:
        writer = RecordWriter(stream, args.log_format)
        summary = run(plan, factory, records, writer.write)

    print(f"attack complete: {summary.total} samples", file=sys.stderr)
    for key, value in summary.to_dict().items():
        if key == "total":
            continue
        rendered = "n/a" if value is None else (f"{value:.4f}" if isinstance(value, float) else value)
        print(f"  {key}: {rendered}", file=sys.stderr)
    return 0


def _cmd_augment(args: argparse.Namespace) -> int:
    if args.per_example < 1:
        raise CliError("--per-example must be >= 1")
    schema = DatasetSchema(
        input_columns=_parse_columns(args.input_columns),
        output_column=args.output_column,
        output_kind=args.output_kind,
    )
    records = load_csv(args.dataset, schema)

    if args.transformation == "lexicon":
        if not args.lexicon:
            raise CliError("--lexicon is required for the lexicon transformation")
        transformation = WordSwapLexicon(load_synonym_lexicon(args.lexicon))
    else:
        if not args.embedding:
            raise CliError("--embedding is required for the embedding transformation")
        transformation = WordSwapEmbedding(load_embedding_table(args.embedding, args.neighbors), args.neighbors)

    constraints = []
    if args.pos_lexicon:
        constraints.append(PosMatchConstraint(load_pos_lexicon(args.pos_lexicon)))
    if args.min_cos is not None:
        if args.transformation != "embedding":
            raise CliError("--min-cos needs the embedding transformation")
        constraints.append(EmbeddingDistanceConstraint(transformation.table, args.min_cos))
    pre_constraints = []
    if args.stopwords:
        pre_constraints.append(StopwordPrefilter(load_stopwords(args.stopwords)))

    with _open_output(args.output) as stream:
        writer = csv.writer(stream)
        writer.writerow([*schema.input_columns, schema.output_column])
        emitted = 0
        for row_index, record in enumerate(records):
            text = to_attacked_text(record)
            variants = augment(
                transformation,
                constraints,
                text,
                n=args.per_example,
                swap_fraction=args.swap_fraction,
                seed=args.seed + row_index,
                pre_constraints=pre_constraints,
            )
            output_value = record.output.value
            for variant in variants:
                writer.writerow([*variant.column_values, output_value])
                emitted += 1
    print(f"augment complete: {emitted} variants from {len(records)} rows", file=sys.stderr)
    return 0


def _cmd_list_recipes() -> int:
    for recipe in RECIPES:
        print(f"{recipe:20s} {RECIPE_SUMMARIES[recipe]}")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help and friends
            return 0 if not exc.code else 1
        if args.command == "list-recipes":
            return _cmd_list_recipes()
        if args.command == "augment":
            return _cmd_augment(args)
        return _cmd_attack(args)
    except (CliError, DatasetError, RecipeError, BridgeError, ResourceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RunAborted as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
