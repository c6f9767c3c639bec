"""Composition-style planners and plan execution.

A plan fixes, per output sample, which foreground(s) go onto which
background before any pixel is touched. Four styles are supported:

* ``dim`` walks the foreground pool in order, one single per sample.
* ``gca`` walks the pool and combines each base with a random partner
  with probability ``p``.
* ``triplet`` emits bound groups of three samples: each source
  foreground alone plus their combination.
* ``quadruplet`` adds the swapped-order combination, so each group has
  four samples and the two combined images share one alpha.

Randomness comes from numpy's PCG64; every decision category (background
pick, combine coin, partner pick, pair draw, final shuffle) reads its own
substream derived as ``SeedSequence(seed, spawn_key=(category,))``. Plans
are therefore pure functions of (pool sizes, count, seed, ordering, p),
and growing the sample count never disturbs earlier decisions.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from .core import DEFAULT_EPSILON, EpsilonConfig, FgEntry, comp, ncf, rcf
from .errors import ConfigError, MissingIdError
from .io import BgEntry, SampleRecord, harmonize

_MAX_SEED = 2**64 - 1

# Substream labels; changing these renumbers every existing dataset.
_STREAM_BACKGROUND = 0
_STREAM_COIN = 1
_STREAM_PARTNER = 2
_STREAM_PAIR = 3
_STREAM_SHUFFLE = 4


class Style(str, Enum):
    DIM = "dim"
    GCA = "gca"
    TRIPLET = "triplet"
    QUADRUPLET = "quadruplet"


class Ordering(str, Enum):
    ORDERED = "ordered"
    SHUFFLED = "shuffled"


class ItemKind(str, Enum):
    SINGLE = "single"
    COMBINED = "combined"


class Combiner(str, Enum):
    NCF = "ncf"
    RCF = "rcf"


_GROUPED_STYLES = (Style.TRIPLET, Style.QUADRUPLET)


@dataclass(frozen=True)
class PlanItem:
    """One planned sample.

    ``sample_index`` is the generation ordinal; shuffling a plan permutes
    the item list without renumbering, so ordered and shuffled plans of
    one seed hold the same items. ``fg_ids`` are indices into the ordered
    foreground pool, overlay order first-on-top.
    """

    sample_index: int
    kind: ItemKind
    fg_ids: tuple[int, ...]
    bg_id: int
    style: Style
    group_id: int | None = None

    def __post_init__(self) -> None:
        if self.kind is ItemKind.SINGLE and len(self.fg_ids) != 1:
            raise ConfigError(f"single item must hold exactly 1 foreground, got {self.fg_ids}")
        if self.kind is ItemKind.COMBINED:
            if len(self.fg_ids) != 2 or self.fg_ids[0] == self.fg_ids[1]:
                raise ConfigError(f"combined item must hold 2 distinct foregrounds, got {self.fg_ids}")
        if (self.group_id is not None) != (self.style in _GROUPED_STYLES):
            raise ConfigError(
                f"group_id must be present exactly for triplet/quadruplet items, "
                f"got style={self.style.value} group_id={self.group_id}"
            )


@dataclass(frozen=True)
class CompositionPlan:
    """A deterministic, seed-reproducible schedule of samples."""

    items: tuple[PlanItem, ...]
    style: Style
    seed: int
    requested_count: int
    ordering: Ordering
    fg_count: int
    bg_count: int
    combine_probability: float | None = None

    def __post_init__(self) -> None:
        if len(self.items) != self.requested_count:
            raise ConfigError(
                f"plan holds {len(self.items)} items but requested {self.requested_count}"
            )


@dataclass(frozen=True)
class GcaParams:
    """Knobs for gca-style planning."""

    combine_probability: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 <= self.combine_probability <= 1.0):
            raise ConfigError(f"combine probability must lie in [0, 1], got {self.combine_probability}")


def _substream(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(stream,))))


def _check_inputs(fg_count: int, bg_count: int, count: int, seed: int, min_fg: int = 1) -> None:
    if fg_count < min_fg:
        raise ConfigError(f"foreground pool must hold at least {min_fg} entries, got {fg_count}")
    if bg_count < 1:
        raise ConfigError(f"background pool must hold at least 1 entry, got {bg_count}")
    if count < 1:
        raise ConfigError(f"sample count must be >= 1, got {count}")
    if not (0 <= seed <= _MAX_SEED):
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")


def _finish(
    items: list[PlanItem],
    style: Style,
    seed: int,
    count: int,
    ordering: Ordering,
    fg_count: int,
    bg_count: int,
    p: float | None = None,
) -> CompositionPlan:
    if ordering is Ordering.SHUFFLED:
        perm = _substream(seed, _STREAM_SHUFFLE).permutation(len(items))
        items = [items[j] for j in perm]
    return CompositionPlan(
        items=tuple(items),
        style=style,
        seed=seed,
        requested_count=count,
        ordering=ordering,
        fg_count=fg_count,
        bg_count=bg_count,
        combine_probability=p,
    )


def plan_dim(
    fg_count: int,
    bg_count: int,
    count: int,
    seed: int,
    ordering: Ordering = Ordering.ORDERED,
) -> CompositionPlan:
    """Walk the foreground pool in order; sample i uses foreground i mod N.

    Every sample is a single composited onto an independently drawn random
    background; no combinations are planned.
    """
    _check_inputs(fg_count, bg_count, count, seed)
    bg_rng = _substream(seed, _STREAM_BACKGROUND)
    items = [
        PlanItem(i, ItemKind.SINGLE, (i % fg_count,), int(bg_rng.integers(bg_count)), Style.DIM)
        for i in range(count)
    ]
    return _finish(items, Style.DIM, seed, count, ordering, fg_count, bg_count)


def plan_gca(
    fg_count: int,
    bg_count: int,
    count: int,
    seed: int,
    params: GcaParams = GcaParams(),
    ordering: Ordering = Ordering.ORDERED,
) -> CompositionPlan:
    """Pool walk with probabilistic combination.

    The base foreground of sample i is i mod N, exactly as in dim-style
    planning. With probability ``p`` the sample instead becomes the base
    combined with a partner drawn uniformly from the rest of the pool
    (self-combination is excluded: it degenerates to a no-op overlay).
    """
    p = params.combine_probability
    _check_inputs(fg_count, bg_count, count, seed)
    if p > 0.0 and fg_count < 2:
        raise ConfigError("gca planning with p > 0 needs at least 2 foregrounds so a partner exists")
    bg_rng = _substream(seed, _STREAM_BACKGROUND)
    coin_rng = _substream(seed, _STREAM_COIN)
    partner_rng = _substream(seed, _STREAM_PARTNER)
    items = []
    for i in range(count):
        bg = int(bg_rng.integers(bg_count))
        base = i % fg_count
        if coin_rng.random() < p:
            partner = int(partner_rng.integers(fg_count - 1))
            if partner >= base:
                partner += 1
            items.append(PlanItem(i, ItemKind.COMBINED, (base, partner), bg, Style.GCA))
        else:
            items.append(PlanItem(i, ItemKind.SINGLE, (base,), bg, Style.GCA))
    return _finish(items, Style.GCA, seed, count, ordering, fg_count, bg_count, p)


class _PairSampler:
    """Uniform draws from all unordered index pairs, without replacement.

    The pair pool is reshuffled whenever exhausted, so pair coverage is
    maximal within each epoch of N*(N-1)/2 draws.
    """

    def __init__(self, fg_count: int, rng: np.random.Generator) -> None:
        self._pairs = [(i, j) for i in range(fg_count - 1) for j in range(i + 1, fg_count)]
        self._rng = rng
        self._order: np.ndarray | None = None
        self._cursor = len(self._pairs)

    def draw(self) -> tuple[int, int]:
        if self._cursor >= len(self._pairs):
            self._order = self._rng.permutation(len(self._pairs))
            self._cursor = 0
        pair = self._pairs[int(self._order[self._cursor])]
        self._cursor += 1
        return pair


def _plan_grouped(
    style: Style,
    group_size: int,
    fg_count: int,
    bg_count: int,
    count: int,
    seed: int,
    ordering: Ordering,
    allow_remainder: bool,
) -> CompositionPlan:
    _check_inputs(fg_count, bg_count, count, seed, min_fg=2)
    groups, remainder = divmod(count, group_size)
    if remainder and not allow_remainder:
        raise ConfigError(
            f"{style.value} planning needs a sample count divisible by {group_size}; "
            f"got {count} (pass allow_remainder to pad with dim-style singles)"
        )
    bg_rng = _substream(seed, _STREAM_BACKGROUND)
    pair_rng = _substream(seed, _STREAM_PAIR)
    pairs = _PairSampler(fg_count, pair_rng)
    items: list[PlanItem] = []
    index = 0
    for g in range(groups):
        m, n = pairs.draw()
        backgrounds = [int(bg_rng.integers(bg_count)) for _ in range(group_size)]
        items.append(PlanItem(index, ItemKind.SINGLE, (m,), backgrounds[0], style, g))
        items.append(PlanItem(index + 1, ItemKind.SINGLE, (n,), backgrounds[1], style, g))
        items.append(PlanItem(index + 2, ItemKind.COMBINED, (m, n), backgrounds[2], style, g))
        if group_size == 4:
            items.append(PlanItem(index + 3, ItemKind.COMBINED, (n, m), backgrounds[3], style, g))
        index += group_size
    # remainder padding is dim-style: plain singles walking the pool
    for j in range(remainder):
        bg = int(bg_rng.integers(bg_count))
        items.append(PlanItem(index + j, ItemKind.SINGLE, (j % fg_count,), bg, Style.DIM))
    return _finish(items, style, seed, count, ordering, fg_count, bg_count)


def plan_triplet(
    fg_count: int,
    bg_count: int,
    count: int,
    seed: int,
    ordering: Ordering = Ordering.ORDERED,
    allow_remainder: bool = False,
) -> CompositionPlan:
    """Bound groups of three samples: two sources plus their combination.

    Each group draws an unordered foreground pair (without replacement
    within an epoch over all pairs) and three independent backgrounds.
    """
    return _plan_grouped(Style.TRIPLET, 3, fg_count, bg_count, count, seed, ordering, allow_remainder)


def plan_quadruplet(
    fg_count: int,
    bg_count: int,
    count: int,
    seed: int,
    ordering: Ordering = Ordering.ORDERED,
    allow_remainder: bool = False,
) -> CompositionPlan:
    """Bound groups of four: two sources plus both combination orders.

    The two combined samples of a group are twins: distinct color images
    sharing one alpha matte.
    """
    return _plan_grouped(Style.QUADRUPLET, 4, fg_count, bg_count, count, seed, ordering, allow_remainder)


def item_to_dict(item: PlanItem) -> dict:
    return {
        "sample_index": item.sample_index,
        "kind": item.kind.value,
        "fg_ids": list(item.fg_ids),
        "bg_id": item.bg_id,
        "style": item.style.value,
        "group_id": item.group_id,
    }


def plan_to_dict(plan: CompositionPlan) -> dict:
    return {
        "style": plan.style.value,
        "seed": plan.seed,
        "count": plan.requested_count,
        "ordering": plan.ordering.value,
        "fg_count": plan.fg_count,
        "bg_count": plan.bg_count,
        "combine_probability": plan.combine_probability,
        "items": [item_to_dict(item) for item in plan.items],
    }


def _validate_plan_ids(plan: CompositionPlan, fg_size: int, bg_size: int) -> None:
    for item in plan.items:
        for fg in item.fg_ids:
            if not 0 <= fg < fg_size:
                raise MissingIdError(f"foreground id {fg} not found in pool of {fg_size} entries")
        if not 0 <= item.bg_id < bg_size:
            raise MissingIdError(f"background id {item.bg_id} not found in pool of {bg_size} entries")


def execute_plan(
    plan: CompositionPlan,
    fg_pool: Sequence[FgEntry],
    bg_pool: Sequence[BgEntry],
    eps: EpsilonConfig = DEFAULT_EPSILON,
    combiner: Combiner = Combiner.RCF,
    workers: int = 1,
) -> Iterator[SampleRecord]:
    """Realize a plan into pixels, yielding records in plan order.

    Execution is free of randomness (all decisions live in the plan) and
    each item renders independently, so the worker count never changes
    the output bytes. The first foreground of an item fixes the sample
    shape; partners are bilinear-resized and backgrounds cover-fitted.
    """
    _validate_plan_ids(plan, len(fg_pool), len(bg_pool))
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")

    def render(task: tuple[int, PlanItem]) -> SampleRecord:
        order_index, item = task
        fa = fg_pool[item.fg_ids[0]]
        bg = bg_pool[item.bg_id]
        bg_image = harmonize(bg.image, fa.image.shape)
        if item.kind is ItemKind.SINGLE:
            alpha = fa.alpha
            composite = comp(fa.image, alpha, bg_image)
            names: tuple[str, ...] = (fa.id,)
        else:
            fb = harmonize(fg_pool[item.fg_ids[1]], fa.image.shape)
            if combiner is Combiner.NCF:
                fg_new, alpha = ncf(fa, fb)
            else:
                fg_new, alpha = rcf(fa, fb, eps)
            composite = comp(fg_new, alpha, bg_image)
            names = (fa.id, fb.id)
        return SampleRecord(
            sample_id=f"{order_index:06d}",
            composite=composite,
            alpha=alpha,
            item=item,
            order_index=order_index,
            fg_names=names,
            bg_name=bg.id,
            seed=plan.seed,
            epsilon=eps.epsilon,
            combiner=combiner.value,
        )

    def stream() -> Iterator[SampleRecord]:
        tasks = list(enumerate(plan.items))
        if workers == 1:
            for task in tasks:
                yield render(task)
            return
        chunk = workers * 4
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for start in range(0, len(tasks), chunk):
                yield from pool.map(render, tasks[start:start + chunk])

    return stream()
