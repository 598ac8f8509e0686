"""Queue-parallel attack execution.

N worker processes pull sample indices off an in-queue, attack them with
their own private attack instance (own wrapper connection, own cache and
counters), and push results onto an out-queue that the main process drains
and forwards to a sink. Per-sample seeding plus per-sample cache resets make
every result a pure function of (dataset, config, seed, index), so worker
count never changes outcomes.
"""

from __future__ import annotations

import multiprocessing as mp
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .attack import Attack, AttackResult, RunSummary, attack_sample, summarize
from .dataset import DatasetRecord
from .model_bridge import BridgeError

_MASK64 = (1 << 64) - 1

#: First output of the splitmix64 stream seeded with 0, i.e. mix(0, 0).
MIX_ZERO = 0xE220A8397B1DCDAF


def mix(global_seed: int, sample_index: int) -> int:
    """Derive a per-sample seed: the splitmix64 finalizer over seed XOR index.

    The finalizer is the published constant sequence (golden-gamma add, two
    xorshift-multiply rounds, final xorshift).
    """
    z = ((global_seed ^ sample_index) + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class ResultItem:
    """One out-queue entry: an attack result or an error record."""

    sample_index: int
    seed: int
    result: Optional[AttackResult]
    error: Optional[str] = None


@dataclass
class RunPlan:
    worker_count: int = 1
    global_seed: int = 0
    sample_range: Sequence[int] = field(default_factory=list)
    ordered_output: bool = True

    def __post_init__(self) -> None:
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        if len(set(self.sample_range)) != len(self.sample_range):
            raise ValueError("sample_range indices must be unique")


class RunAborted(Exception):
    """A worker crashed twice; the run cannot be trusted to finish."""


AttackFactory = Callable[[], Attack]
Sink = Callable[[ResultItem], None]


def _attack_one(attack: Attack, records, index: int, global_seed: int) -> ResultItem:
    seed = mix(global_seed, index)
    try:
        result = attack_sample(attack, records[index], index, seed)
        return ResultItem(index, seed, result)
    except BridgeError as exc:
        return ResultItem(index, seed, None, error=str(exc))


def _worker_main(
    worker_id: int,
    factory: AttackFactory,
    records: Sequence[DatasetRecord],
    in_queue: "mp.Queue[Optional[int]]",
    out_queue,
    global_seed: int,
) -> None:
    # The out channel is a SimpleQueue: puts write synchronously to the pipe,
    # so a "taken" announcement survives even if this process dies right after.
    attack = factory()
    while True:
        index = in_queue.get()
        if index is None:
            break
        out_queue.put(("taken", worker_id, index))
        out_queue.put(("result", worker_id, _attack_one(attack, records, index, global_seed)))


class _OrderedRelease:
    """Buffer results and hand them to the sink in ascending sample order."""

    def __init__(self, sample_range: Sequence[int], sink: Sink, ordered: bool) -> None:
        self._sink = sink
        self._ordered = ordered
        self._pending: dict[int, ResultItem] = {}
        self._release_order = sorted(sample_range)
        self._next = 0

    def push(self, item: ResultItem) -> None:
        if not self._ordered:
            self._sink(item)
            return
        self._pending[item.sample_index] = item
        while self._next < len(self._release_order) and self._release_order[self._next] in self._pending:
            self._sink(self._pending.pop(self._release_order[self._next]))
            self._next += 1


def run(
    plan: RunPlan,
    attack_factory: AttackFactory,
    records: Sequence[DatasetRecord],
    sink: Sink,
) -> RunSummary:
    """Attack every sample in ``plan.sample_range`` and return the summary.

    With one worker the loop runs in-process; otherwise a pool of worker
    processes shares an in-queue of indices and an out-queue of results. A
    crashed worker has its in-flight sample recorded as errored and is
    restarted once; a second crash aborts the run.
    """
    for index in plan.sample_range:
        if not 0 <= index < len(records):
            raise ValueError(f"sample index {index} out of range for {len(records)} records")

    items: list[ResultItem] = []
    release = _OrderedRelease(plan.sample_range, sink, plan.ordered_output)

    def deliver(item: ResultItem) -> None:
        items.append(item)
        release.push(item)

    if plan.worker_count == 1:
        attack = attack_factory()
        for index in plan.sample_range:
            deliver(_attack_one(attack, records, index, plan.global_seed))
    else:
        _run_pool(plan, attack_factory, records, deliver)

    results = [item.result for item in items if item.result is not None]
    summary = summarize(results)
    summary.total = len(items)
    summary.errored = sum(1 for item in items if item.result is None)
    return summary


def _run_pool(
    plan: RunPlan,
    attack_factory: AttackFactory,
    records: Sequence[DatasetRecord],
    deliver: Sink,
) -> None:
    ctx = mp.get_context()
    in_queue: mp.Queue = ctx.Queue()
    out_queue = ctx.SimpleQueue()
    for index in plan.sample_range:
        in_queue.put(index)
    for _ in range(plan.worker_count):
        in_queue.put(None)

    def spawn(worker_id: int) -> mp.Process:
        process = ctx.Process(
            target=_worker_main,
            args=(worker_id, attack_factory, records, in_queue, out_queue, plan.global_seed),
            daemon=True,
        )
        process.start()
        return process

    workers = {slot: spawn(slot) for slot in range(plan.worker_count)}
    restarts_left = {slot: 1 for slot in range(plan.worker_count)}
    in_flight: dict[int, int] = {}  # worker slot -> sample index
    delivered: set[int] = set()
    expected = len(plan.sample_range)

    def deliver_errored(index: int, message: str) -> None:
        delivered.add(index)
        deliver(ResultItem(index, mix(plan.global_seed, index), None, error=message))

    def handle(message) -> None:
        tag, slot, payload = message
        if tag == "taken":
            in_flight[slot] = payload
        else:
            in_flight.pop(slot, None)
            delivered.add(payload.sample_index)
            deliver(payload)

    try:
        while len(delivered) < expected:
            if not out_queue.empty():
                handle(out_queue.get())
                continue
            # The pipe is drained. Puts are synchronous, so a dead worker can
            # have nothing further in flight: judging liveness is now safe.
            for slot, process in list(workers.items()):
                if process.is_alive():
                    continue
                if not out_queue.empty():
                    break  # new traffic arrived; drain before judging anyone
                index = in_flight.pop(slot, None)
                if index is None:
                    continue
                # The worker died mid-sample: record it and restart once.
                deliver_errored(index, f"worker crashed (exit code {process.exitcode})")
                if restarts_left[slot] <= 0:
                    raise RunAborted(
                        f"worker slot {slot} crashed twice; aborting after {len(delivered)} results"
                    )
                restarts_left[slot] -= 1
                workers[slot] = spawn(slot)
            if (
                out_queue.empty()
                and len(delivered) < expected
                and not any(p.is_alive() for p in workers.values())
            ):
                # Defensive: every worker exited yet samples are missing.
                for index in plan.sample_range:
                    if index not in delivered:
                        deliver_errored(index, "worker pool exited before sample ran")
            time.sleep(0.02)
    finally:
        for process in workers.values():
            if process.is_alive():
                process.join(timeout=5)
            if process.is_alive():
                process.terminate()
