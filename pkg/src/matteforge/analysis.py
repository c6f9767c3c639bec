"""Foreground-component statistics over plans and manifests.

Treats each combination as a reversible reaction between its two source
foregrounds and the combined product: a combined sample plus one single
of each source (plus, for quadruplet items, the swapped-order twin) form
a matched reaction. Usages left over after greedy matching are residues,
i.e. samples that only teach their own pattern.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import IntegrityError, MatteforgeError
from .schedulers import CompositionPlan, ItemKind, PlanItem, Style

PlanLike = CompositionPlan | Sequence[PlanItem]


def _items_of(source: PlanLike) -> Sequence[PlanItem]:
    if isinstance(source, CompositionPlan):
        return source.items
    return source


def count_occurrences(source: PlanLike) -> dict[int, tuple[int, int]]:
    """Per foreground id: (times used alone, times involved in a combination).

    A combined item contributes one involvement to each of its two ids.
    """
    counts: dict[int, list[int]] = {}
    for item in _items_of(source):
        if item.kind is ItemKind.SINGLE:
            counts.setdefault(item.fg_ids[0], [0, 0])[0] += 1
        else:
            for fg in item.fg_ids:
                counts.setdefault(fg, [0, 0])[1] += 1
    return {fg: (single, combined) for fg, (single, combined) in counts.items()}


def _match_reactions(items: Sequence[PlanItem]) -> tuple[set[int], int]:
    """Greedy reaction matching; returns (residue ids, matched reaction count).

    Combined items are matched in plan order against the pool of unconsumed
    usages anywhere in the plan, so the result does not depend on whether
    the plan was shuffled.
    """
    singles: dict[int, deque[int]] = {}
    combined: dict[tuple[int, int], deque[int]] = {}
    for idx, item in enumerate(items):
        if item.kind is ItemKind.SINGLE:
            singles.setdefault(item.fg_ids[0], deque()).append(idx)
        else:
            combined.setdefault((item.fg_ids[0], item.fg_ids[1]), deque()).append(idx)

    consumed: set[int] = set()
    reactions = 0
    for idx, item in enumerate(items):
        if item.kind is not ItemKind.COMBINED or idx in consumed:
            continue
        a, b = item.fg_ids
        own = combined[(a, b)]
        while own and own[0] in consumed:
            own.popleft()
        twin: deque[int] | None = None
        if item.style is Style.QUADRUPLET:
            twin = combined.get((b, a))
            while twin and twin[0] in consumed:
                twin.popleft()
            if not twin:
                continue
        single_a = singles.get(a)
        single_b = singles.get(b)
        if not single_a or not single_b:
            continue
        consumed.add(single_a.popleft())
        consumed.add(single_b.popleft())
        if twin is not None:
            consumed.add(twin.popleft())
        consumed.add(idx)
        own.popleft()
        reactions += 1

    residues: set[int] = set()
    for idx, item in enumerate(items):
        if idx not in consumed:
            residues.update(item.fg_ids)
    return residues, reactions


def residue(source: PlanLike) -> set[int]:
    """Ids with at least one usage not consumed by any matched reaction."""
    residues, _ = _match_reactions(_items_of(source))
    return residues


def positive_correlation_fraction(source: PlanLike) -> float:
    """Fraction of appearing ids realized in both roles (alone and combined)."""
    counts = count_occurrences(source)
    if not counts:
        return 0.0
    satisfied = sum(1 for single, combined in counts.values() if single > 0 and combined > 0)
    return satisfied / len(counts)


def twin_coexistence_fraction(source: PlanLike) -> float | None:
    """Fraction of combined items whose swapped-order twin occurs in the plan.

    Undefined (None) when the plan holds no combined items.
    """
    items = _items_of(source)
    pairs = [item.fg_ids for item in items if item.kind is ItemKind.COMBINED]
    if not pairs:
        return None
    present = set(pairs)
    with_twin = sum(1 for a, b in pairs if (b, a) in present)
    return with_twin / len(pairs)


@dataclass(frozen=True)
class ComponentReport:
    """Full foreground-component statistics for one plan or manifest."""

    style: str
    seed: int
    sample_count: int
    fg_count: int
    per_fg_counts: Mapping[int, tuple[int, int]]
    residue_ids: frozenset[int]
    positive_correlation_fraction: float
    twin_coexistence_fraction: float | None
    reaction_count: int

    def to_dict(self) -> dict:
        return {
            "style": self.style,
            "seed": self.seed,
            "M": self.sample_count,
            "N": self.fg_count,
            "per_fg_counts": {
                str(fg): {"single": single, "combined": combined}
                for fg, (single, combined) in sorted(self.per_fg_counts.items())
            },
            "residue_ids": sorted(self.residue_ids),
            "positive_correlation_fraction": self.positive_correlation_fraction,
            "twin_coexistence_fraction": self.twin_coexistence_fraction,
            "reaction_count": self.reaction_count,
        }

    def summary(self) -> str:
        twin = (
            "undefined (no combined samples)"
            if self.twin_coexistence_fraction is None
            else f"{self.twin_coexistence_fraction:.4f}"
        )
        return (
            f"style={self.style} M={self.sample_count} N={self.fg_count}: "
            f"{self.reaction_count} matched reactions, {len(self.residue_ids)} residue ids, "
            f"positive correlation {self.positive_correlation_fraction:.4f}, "
            f"twin co-existence {twin}"
        )


def _build_report(items: Sequence[PlanItem], style: str, seed: int, count: int, fg_count: int) -> ComponentReport:
    residues, reactions = _match_reactions(items)
    return ComponentReport(
        style=style,
        seed=seed,
        sample_count=count,
        fg_count=fg_count,
        per_fg_counts=count_occurrences(items),
        residue_ids=frozenset(residues),
        positive_correlation_fraction=positive_correlation_fraction(items),
        twin_coexistence_fraction=twin_coexistence_fraction(items),
        reaction_count=reactions,
    )


def report_from_plan(plan: CompositionPlan) -> ComponentReport:
    return _build_report(plan.items, plan.style.value, plan.seed, len(plan.items), plan.fg_count)


def items_from_manifest(header: dict, rows: Iterable[dict]) -> list[PlanItem]:
    """Rebuild plan items from manifest sample rows, validating integrity."""
    try:
        fg_count = int(header["fg_count"])
        bg_count = int(header["bg_count"])
    except (KeyError, TypeError, ValueError) as exc:
        raise IntegrityError(f"manifest header is missing pool sizes: {exc}") from exc
    items: list[PlanItem] = []
    for rowno, row in enumerate(rows, start=1):
        try:
            fg_ids = tuple(int(v) for v in row["fg_indices"])
            item = PlanItem(
                sample_index=int(row["item_index"]),
                kind=ItemKind(row["kind"]),
                fg_ids=fg_ids,
                bg_id=int(row["bg_index"]),
                style=Style(row["style"]),
                group_id=None if row.get("group_id") is None else int(row["group_id"]),
            )
        except (KeyError, TypeError, ValueError, MatteforgeError) as exc:
            raise IntegrityError(f"manifest sample row {rowno} is invalid: {exc}") from exc
        for fg in item.fg_ids:
            if not 0 <= fg < fg_count:
                raise IntegrityError(
                    f"manifest sample row {rowno} references foreground {fg} "
                    f"outside the declared pool of {fg_count}"
                )
        if not 0 <= item.bg_id < bg_count:
            raise IntegrityError(
                f"manifest sample row {rowno} references background {item.bg_id} "
                f"outside the declared pool of {bg_count}"
            )
        items.append(item)
    return items


def report_from_manifest(header: dict, rows: Sequence[dict]) -> ComponentReport:
    items = items_from_manifest(header, rows)
    return _build_report(
        items,
        style=str(header.get("style", "unknown")),
        seed=int(header.get("seed", 0)),
        count=len(items),
        fg_count=int(header["fg_count"]),
    )
