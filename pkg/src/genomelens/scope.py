"""Focus selection and scale-dependent scope culling.

A FocusState names the chromosome under inspection and a strand of up to
five consecutive fibers around a focus fiber. Each schedule row renders a
different slice of the hierarchy: everything at the coarse rows, only the
focus chromosome at the fiber row, and only the fiber window beyond that,
with the window's sequence ends faded out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from genomelens.config import DEFAULT_CONFIG, EngineConfig
from genomelens.model import (
    DataLevel,
    ElementId,
    GenomeDataset,
    ancestors,
    child_range,
)

WINDOW_FIBERS = 5


@dataclass(frozen=True)
class FocusState:
    """Selected chromosome plus the fiber window driving scope and highlight."""

    chromosome: int
    focus_fiber: int
    fiber_window: tuple[int, ...]
    focus_point: tuple[float, float, float]


@dataclass(frozen=True)
class ScopeResult:
    """Index ranges to render per data level, with end-fade alphas.

    `ranges` holds half-open [a, b) index ranges for every stored level the
    row touches; `fade` (rows 4 and finer) has one alpha per nucleosome of
    the window's range; `link_detail` asks for linker geometry (row 4 only).
    """

    ranges: dict[DataLevel, tuple[int, int]]
    fade: np.ndarray | None
    link_detail: bool


def ancestor_index_of(dataset: GenomeDataset, level: DataLevel, ancestor: DataLevel) -> np.ndarray:
    """Ancestor indices at `ancestor` level for every element of a stored level.

    Cached on the dataset; the returned array is read-only.
    """
    if level.is_virtual or ancestor.is_virtual:
        raise ValueError("ancestor arrays exist for stored levels only")
    if ancestor > level:
        raise ValueError(f"{ancestor.name} is finer than {level.name}")
    cache = dataset._cache.setdefault("ancestor_index", {})
    key = (level, ancestor)
    if key not in cache:
        if level == ancestor:
            arr = np.arange(len(dataset.tables[level]), dtype=np.int64)
        else:
            assert level.coarser is not None
            coarser = ancestor_index_of(dataset, level.coarser, ancestor)
            arr = coarser[dataset.tables[level].parent_index]
        arr.setflags(write=False)
        cache[key] = arr
    return cache[key]


def chromosome_index_of(dataset: GenomeDataset, level: DataLevel) -> np.ndarray:
    return ancestor_index_of(dataset, level, DataLevel.CHROMOSOME)


def fiber_span(dataset: GenomeDataset, chromosome: int) -> tuple[int, int]:
    """Half-open fiber index range of one chromosome."""
    la, lb = child_range(dataset, ElementId(DataLevel.CHROMOSOME, chromosome))
    fa = child_range(dataset, ElementId(DataLevel.LOCUS, la))[0]
    fb = child_range(dataset, ElementId(DataLevel.LOCUS, lb - 1))[1]
    return fa, fb


def nucleosome_span(dataset: GenomeDataset, fiber_lo: int, fiber_hi: int) -> tuple[int, int]:
    """Half-open nucleosome index range covering fibers [fiber_lo, fiber_hi)."""
    na = child_range(dataset, ElementId(DataLevel.FIBER, fiber_lo))[0]
    nb = child_range(dataset, ElementId(DataLevel.FIBER, fiber_hi - 1))[1]
    return na, nb


def _window_around(fiber: int, fa: int, fb: int) -> tuple[int, ...]:
    """Up to five consecutive fibers centered on `fiber`, clamped to [fa, fb)."""
    lo = max(fa, min(fiber - 2, fb - WINDOW_FIBERS))
    hi = min(fb, lo + WINDOW_FIBERS)
    return tuple(range(lo, hi))


def _focus_for_fiber(dataset: GenomeDataset, chromosome: int, fiber: int) -> FocusState:
    fa, fb = fiber_span(dataset, chromosome)
    point = dataset.tables[DataLevel.FIBER].positions[fiber]
    return FocusState(
        chromosome=chromosome,
        focus_fiber=fiber,
        fiber_window=_window_around(fiber, fa, fb),
        focus_point=(float(point[0]), float(point[1]), float(point[2])),
    )


def set_focus_chromosome(dataset: GenomeDataset, chromosome: int) -> FocusState:
    """Focus a chromosome at the median fiber of its sequence."""
    fa, fb = fiber_span(dataset, chromosome)
    median = fa + (fb - fa - 1) // 2
    return _focus_for_fiber(dataset, chromosome, median)


def set_focus_fiber(dataset: GenomeDataset, fiber: int) -> FocusState:
    """Focus a fiber; the chromosome follows the fiber's ancestry."""
    chromosome = ancestors(dataset, ElementId(DataLevel.FIBER, fiber)).chromosome
    assert chromosome is not None
    return _focus_for_fiber(dataset, chromosome, fiber)


def default_focus(dataset: GenomeDataset) -> FocusState:
    """Initial focus: chromosome 0 at its median fiber."""
    if len(dataset.tables[DataLevel.CHROMOSOME]) == 0:
        raise ValueError("dataset has no chromosomes")
    return set_focus_chromosome(dataset, 0)


def focus_from_element(dataset: GenomeDataset, elem: ElementId) -> FocusState:
    """Focus update for a picked element: chromosome for coarse hits, fiber otherwise."""
    if elem.level == DataLevel.CHROMOSOME:
        return set_focus_chromosome(dataset, elem.index)
    path = ancestors(dataset, elem)
    if elem.level == DataLevel.LOCUS:
        assert path.chromosome is not None
        return set_focus_chromosome(dataset, path.chromosome)
    fiber = elem.index if elem.level == DataLevel.FIBER else path.fiber
    assert fiber is not None
    return set_focus_fiber(dataset, fiber)


def end_fade(count: int, fraction: float) -> np.ndarray:
    """Alphas fading 1 -> 0 over the leading and trailing `fraction` of a sequence."""
    ramp = fraction * count
    if ramp <= 0.0:
        return np.ones(count, dtype=np.float64)
    j = np.arange(count, dtype=np.float64)
    return np.minimum(1.0, np.minimum(j / ramp, (count - 1 - j) / ramp))


def visible_scope(
    dataset: GenomeDataset,
    row: int,
    focus: FocusState,
    config: EngineConfig = DEFAULT_CONFIG,
) -> ScopeResult:
    """Which elements a schedule row renders, given the current focus."""
    if not 0 <= row <= 7:
        raise ValueError(f"row {row} outside the schedule")
    if row <= 2:
        level = (DataLevel.CHROMOSOME, DataLevel.LOCUS, DataLevel.FIBER)[row]
        return ScopeResult(
            ranges={level: (0, len(dataset.tables[level]))},
            fade=None,
            link_detail=False,
        )
    if row == 3:
        fa, fb = fiber_span(dataset, focus.chromosome)
        na, nb = nucleosome_span(dataset, fa, fb)
        return ScopeResult(
            ranges={
                DataLevel.CHROMOSOME: (focus.chromosome, focus.chromosome + 1),
                DataLevel.FIBER: (fa, fb),
                DataLevel.NUCLEOSOME: (na, nb),
            },
            fade=None,
            link_detail=False,
        )
    wlo, whi = focus.fiber_window[0], focus.fiber_window[-1] + 1
    na, nb = nucleosome_span(dataset, wlo, whi)
    return ScopeResult(
        ranges={DataLevel.FIBER: (wlo, whi), DataLevel.NUCLEOSOME: (na, nb)},
        fade=end_fade(nb - na, config.fade_fraction),
        link_detail=row == 4,
    )


def focus_tint(
    dataset: GenomeDataset,
    row: int,
    elem: ElementId,
    focus: FocusState,
    config: EngineConfig = DEFAULT_CONFIG,
) -> float:
    """Brightness gain for one element: highlight the next-finer focus target.

    At the coarse rows the focus chromosome's elements are lightened; at the
    fiber row the window's elements are; from the nucleotide row on the whole
    scope is the focus, so nothing is singled out.
    """
    if row <= 2:
        if elem.level == DataLevel.CHROMOSOME:
            chromosome = elem.index
        else:
            chromosome = ancestors(dataset, elem).chromosome
        return config.highlight_gain if chromosome == focus.chromosome else 1.0
    if row == 3:
        fiber = elem.index if elem.level == DataLevel.FIBER else ancestors(dataset, elem).fiber
        return config.highlight_gain if fiber in focus.fiber_window else 1.0
    return 1.0


def tint_gains(
    dataset: GenomeDataset,
    row: int,
    level: DataLevel,
    a: int,
    b: int,
    focus: FocusState,
    config: EngineConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    """Vectorized focus_tint over elements [a, b) of a stored level."""
    gains = np.ones(b - a, dtype=np.float64)
    if row <= 2:
        match = chromosome_index_of(dataset, level)[a:b] == focus.chromosome
        gains[match] = config.highlight_gain
    elif row == 3:
        fibers = ancestor_index_of(dataset, level, DataLevel.FIBER)[a:b]
        wlo, whi = focus.fiber_window[0], focus.fiber_window[-1] + 1
        gains[(fibers >= wlo) & (fibers < whi)] = config.highlight_gain
    return gains
