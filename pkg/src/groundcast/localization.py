"""Turn ranked concepts into one predicted box per query.

Five strategies: random / largest / confidence pick one instance of the
top-ranked concept, union encloses all of its instances, and consensus runs
a weighted vote. For consensus, each of the top-K concepts scoring at or
above the similarity threshold paints its instances' pixels with the
concept's similarity (a 0/1 mask per concept, so overlapping instances of
the same concept count once), the heatmaps are summed, and the prediction
is the highest-similarity instance covering a maximal-vote pixel; exact
score ties return the union of the tied boxes.

The vote field is coordinate-compressed: box edges are the only places the
summed heatmap can change, so it is computed on the O((#boxes)^2) grid of
edge-aligned cells instead of width x height pixels, pixel-exact by
construction.
"""

from __future__ import annotations

import hashlib
import random
from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from groundcast.concept_selection import ScoredConcept
from groundcast.detection_ingest import Detection
from groundcast.geometry import BoundingBox, union_box


class Strategy(str, Enum):
    RANDOM = "random"
    LARGEST = "largest"
    CONFIDENCE = "confidence"
    UNION = "union"
    CONSENSUS = "consensus"


@dataclass(frozen=True)
class ConsensusConfig:
    top_k: int = 5
    similarity_threshold: float = 0.6

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if not -1.0 <= self.similarity_threshold <= 1.0:
            raise ValueError("similarity_threshold must be in [-1, 1]")


@dataclass
class Prediction:
    box: BoundingBox
    concept: str | None = None
    score: float | None = None
    note: str = "ok"


def derive_seed(seed: int, image_id: str, query_index: int) -> int:
    """Stable per-query seed so parallel execution order never matters."""
    digest = hashlib.blake2b(
        f"{seed}\x1f{image_id}\x1f{query_index}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


def strategy_random(instances: list[Detection], seed: int) -> BoundingBox:
    if not instances:
        raise ValueError("no instances")
    return instances[random.Random(seed).randrange(len(instances))].box


def strategy_largest(instances: list[Detection]) -> BoundingBox:
    if not instances:
        raise ValueError("no instances")
    return min(
        instances,
        key=lambda d: (-_area(d.box), -d.confidence, d.box.as_tuple()),
    ).box


def strategy_confidence(instances: list[Detection]) -> BoundingBox:
    if not instances:
        raise ValueError("no instances")
    return min(
        instances,
        key=lambda d: (-d.confidence, -_area(d.box), d.box.as_tuple()),
    ).box


def _area(box: BoundingBox) -> int:
    return (box.x_max - box.x_min) * (box.y_max - box.y_min)


class VoteField:
    """Coordinate-compressed weighted vote heatmap.

    Cell (ix, iy) spans pixels [x_cuts[ix], x_cuts[ix+1]) x
    [y_cuts[iy], y_cuts[iy+1]); pixels outside the cut range have value 0.
    """

    def __init__(self, scored: list[ScoredConcept]):
        if not scored:
            raise ValueError("no qualifying concepts")
        self.scores = [sc.score for sc in scored]
        self.instances: list[tuple[int, int, BoundingBox]] = [
            (ci, ii, det.box)
            for ci, sc in enumerate(scored)
            for ii, det in enumerate(sc.group.instances)
        ]
        xs, ys = set(), set()
        for _, _, box in self.instances:
            xs.update((box.x_min, box.x_max))
            ys.update((box.y_min, box.y_max))
        self.x_cuts = sorted(xs)
        self.y_cuts = sorted(ys)
        nx, ny = len(self.x_cuts) - 1, len(self.y_cuts) - 1

        self.cell_values = np.zeros((ny, nx), dtype=np.float64)
        x_index = {x: i for i, x in enumerate(self.x_cuts)}
        y_index = {y: i for i, y in enumerate(self.y_cuts)}
        for ci, sc in enumerate(scored):
            covered = np.zeros((ny, nx), dtype=bool)
            for det in sc.group.instances:
                box = det.box
                covered[
                    y_index[box.y_min] : y_index[box.y_max],
                    x_index[box.x_min] : x_index[box.x_max],
                ] = True
            self.cell_values[covered] += sc.score

    def cell_contributors(self, ix: int, iy: int) -> set[tuple[int, int]]:
        """(concept, instance) ids of the boxes containing cell (ix, iy)."""
        xa, xb = self.x_cuts[ix], self.x_cuts[ix + 1]
        ya, yb = self.y_cuts[iy], self.y_cuts[iy + 1]
        return {
            (ci, ii)
            for ci, ii, box in self.instances
            if box.x_min <= xa and xb <= box.x_max and box.y_min <= ya and yb <= box.y_max
        }

    @cached_property
    def contributing(self) -> list[list[set[tuple[int, int]]]]:
        ny, nx = self.cell_values.shape
        return [[self.cell_contributors(ix, iy) for ix in range(nx)] for iy in range(ny)]

    def value_at(self, x: int, y: int) -> float:
        ix = bisect_right(self.x_cuts, x) - 1
        iy = bisect_right(self.y_cuts, y) - 1
        if not (0 <= ix < len(self.x_cuts) - 1 and 0 <= iy < len(self.y_cuts) - 1):
            return 0.0
        return float(self.cell_values[iy, ix])

    def to_pixel_grid(self, width: int, height: int) -> np.ndarray:
        grid = np.zeros((height, width), dtype=np.float64)
        for iy in range(self.cell_values.shape[0]):
            ya = max(0, self.y_cuts[iy])
            yb = min(height, self.y_cuts[iy + 1])
            for ix in range(self.cell_values.shape[1]):
                xa = max(0, self.x_cuts[ix])
                xb = min(width, self.x_cuts[ix + 1])
                grid[ya:yb, xa:xb] = self.cell_values[iy, ix]
        return grid

    def max_cells(self) -> tuple[float, list[tuple[int, int]]]:
        peak = float(self.cell_values.max())
        iys, ixs = np.nonzero(self.cell_values == peak)
        return peak, list(zip(ixs.tolist(), iys.tolist()))


def build_vote_field(scored: list[ScoredConcept], width: int, height: int) -> VoteField:
    """Vote field over the already-filtered qualifying concepts."""
    del width, height  # field extent is defined by the boxes themselves
    return VoteField(scored)


def strategy_consensus(
    scored: list[ScoredConcept],
    width: int,
    height: int,
    config: ConsensusConfig,
) -> Prediction:
    if not scored:
        return Prediction(
            box=BoundingBox(0, 0, width, height), note="whole_image_fallback"
        )
    qualifying = [
        sc for sc in scored[: config.top_k] if sc.score >= config.similarity_threshold
    ]
    if not qualifying:
        # Nothing clears the threshold: vote degenerates to union on the top
        # concept so consensus never abstains.
        top = scored[0]
        return Prediction(
            box=union_box([d.box for d in top.group.instances]),
            concept=top.group.label,
            score=top.score,
            note="consensus_threshold_fallback",
        )
    field = build_vote_field(qualifying, width, height)
    _, peaks = field.max_cells()
    voters: set[tuple[int, int]] = set()
    for ix, iy in peaks:
        voters |= field.cell_contributors(ix, iy)
    if not voters:
        # Reachable only with non-positive scores, where empty cells win.
        top = scored[0]
        return Prediction(
            box=union_box([d.box for d in top.group.instances]),
            concept=top.group.label,
            score=top.score,
            note="consensus_empty_peak_fallback",
        )
    best = max(qualifying[ci].score for ci, _ in voters)
    tied = sorted((ci, ii) for ci, ii in voters if qualifying[ci].score == best)
    if len(tied) == 1:
        ci, ii = tied[0]
        return Prediction(
            box=qualifying[ci].group.instances[ii].box,
            concept=qualifying[ci].group.label,
            score=best,
            note="ok",
        )
    boxes = [qualifying[ci].group.instances[ii].box for ci, ii in tied]
    return Prediction(
        box=union_box(boxes),
        concept=qualifying[tied[0][0]].group.label,
        score=best,
        note="consensus_tie_union",
    )


def localize_detailed(
    scored: list[ScoredConcept],
    strategy: Strategy,
    width: int,
    height: int,
    config: ConsensusConfig | None = None,
    seed: int = 0,
) -> Prediction:
    """Strategy dispatch with whole-image fallback on an empty ranking."""
    if not scored:
        return Prediction(
            box=BoundingBox(0, 0, width, height), note="whole_image_fallback"
        )
    if strategy is Strategy.CONSENSUS:
        return strategy_consensus(scored, width, height, config or ConsensusConfig())
    top = scored[0]
    instances = top.group.instances
    if strategy is Strategy.RANDOM:
        box = strategy_random(instances, seed)
    elif strategy is Strategy.LARGEST:
        box = strategy_largest(instances)
    elif strategy is Strategy.CONFIDENCE:
        box = strategy_confidence(instances)
    elif strategy is Strategy.UNION:
        box = union_box([d.box for d in instances])
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return Prediction(box=box, concept=top.group.label, score=top.score)


def localize(
    scored: list[ScoredConcept],
    strategy: Strategy,
    width: int,
    height: int,
    config: ConsensusConfig | None = None,
    seed: int = 0,
) -> BoundingBox:
    return localize_detailed(scored, strategy, width, height, config, seed).box
