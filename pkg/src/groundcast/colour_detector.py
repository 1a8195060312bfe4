"""Colour-term detections from per-pixel posterior lookup.

Pipeline: bin each RGB pixel into a posterior-table cell, threshold one
colour's posterior plane, label the resulting mask under 8-connectivity, and
emit one detection per surviving component (bounding-box area filter, label =
colour term, confidence = mean posterior over the component's pixels).

Two labelling implementations live here on purpose: the production one is a
run-based two-pass union-find (linear in pixels), and `label_mask_bfs` is a
plain flood fill kept as an independent oracle for tests.

File formats:
  - image input: binary PPM (P6), 8-bit.
  - posterior table: header ``PTAB <bins> 11`` then bins^3 lines of 11 ASCII
    floats, cell order r-major then g then b.
  - precomputed posterior maps: header ``PFMAP <width> <height> 11`` then
    row-major 32-bit little-endian floats.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from groundcast.detection_ingest import Detection
from groundcast.geometry import BoundingBox

COLOUR_TERMS = (
    "black", "blue", "brown", "grey", "green", "orange",
    "pink", "purple", "red", "white", "yellow",
)
N_COLOURS = len(COLOUR_TERMS)

POSTERIOR_THRESHOLD = 0.3
MIN_BOX_AREA = 625


@dataclass
class PosteriorTable:
    bins_per_channel: int
    table: np.ndarray  # [bins, bins, bins, 11], rows sum to 1

    def __post_init__(self):
        b = self.bins_per_channel
        if self.table.shape != (b, b, b, N_COLOURS):
            raise ValueError(f"posterior table shape {self.table.shape} != ({b},{b},{b},{N_COLOURS})")
        if np.any(self.table < 0):
            raise ValueError("negative posterior")
        sums = self.table.reshape(-1, N_COLOURS).sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-4):
            raise ValueError("posterior rows must sum to 1 within 1e-4")


@dataclass
class PosteriorMap:
    width: int
    height: int
    values: np.ndarray  # [height, width, 11] floats in [0, 1]

    def __post_init__(self):
        if self.values.shape != (self.height, self.width, N_COLOURS):
            raise ValueError("posterior map shape mismatch")


@dataclass
class PixelComponent:
    xs: np.ndarray
    ys: np.ndarray
    box: BoundingBox
    colour_index: int
    mean_posterior: float

    @property
    def pixel_count(self) -> int:
        return len(self.xs)


def load_posterior_table(path) -> PosteriorTable:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "PTAB" or header[2] != str(N_COLOURS):
            raise ValueError(f"{path}: expected header 'PTAB <bins> {N_COLOURS}'")
        bins = int(header[1])
        data = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if data.shape != (bins**3, N_COLOURS):
        raise ValueError(
            f"{path}: expected {bins**3} rows of {N_COLOURS} floats, got {data.shape}"
        )
    return PosteriorTable(bins, data.reshape(bins, bins, bins, N_COLOURS))


def save_posterior_table(table: PosteriorTable, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"PTAB {table.bins_per_channel} {N_COLOURS}\n")
        for row in table.table.reshape(-1, N_COLOURS):
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_posterior_map(path) -> PosteriorMap:
    with open(path, "rb") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != b"PFMAP" or header[3] != str(N_COLOURS).encode():
            raise ValueError(f"{path}: expected header 'PFMAP <width> <height> {N_COLOURS}'")
        width, height = int(header[1]), int(header[2])
        raw = np.frombuffer(fh.read(), dtype="<f4")
    expected = width * height * N_COLOURS
    if raw.size != expected:
        raise ValueError(f"{path}: expected {expected} floats, got {raw.size}")
    values = raw.reshape(height, width, N_COLOURS).astype(np.float64)
    return PosteriorMap(width, height, values)


def save_posterior_map(pmap: PosteriorMap, path):
    with open(path, "wb") as fh:
        fh.write(f"PFMAP {pmap.width} {pmap.height} {N_COLOURS}\n".encode())
        fh.write(pmap.values.astype("<f4").tobytes())


def read_ppm(path) -> np.ndarray:
    """Binary PPM (P6), 8-bit, to an RGB uint8 array of shape [H, W, 3]."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PPM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    if tokens[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM (P6)")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise ValueError(f"{path}: only 8-bit PPM supported (maxval {maxval})")
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height * 3, offset=pos)
    if pixels.size != width * height * 3:
        raise ValueError(f"{path}: truncated pixel data")
    return pixels.reshape(height, width, 3)


def write_ppm(image: np.ndarray, path):
    height, width, _ = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode())
        fh.write(image.astype(np.uint8).tobytes())


def apply_lookup(image: np.ndarray, table: PosteriorTable) -> PosteriorMap:
    """Map each 8-bit RGB pixel to the posteriors of its binned table cell."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("expected an RGB image of shape [H, W, 3]")
    bins = table.bins_per_channel
    idx = (image.astype(np.int64) * bins) // 256
    values = table.table[idx[..., 0], idx[..., 1], idx[..., 2]]
    height, width = image.shape[:2]
    return PosteriorMap(width, height, values)


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self):
        self.parent: list[int] = []

    def make(self) -> int:
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:  # path compression
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _row_runs(row: np.ndarray) -> list[tuple[int, int]]:
    """Maximal [start, end) runs of True in a 1-D bool row."""
    padded = np.empty(len(row) + 2, dtype=bool)
    padded[0] = padded[-1] = False
    padded[1:-1] = row
    diff = np.flatnonzero(padded[1:] != padded[:-1])
    return [(int(diff[i]), int(diff[i + 1])) for i in range(0, len(diff), 2)]


def label_mask_unionfind(mask: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """8-connectivity components, two-pass union-find over row runs.

    Returns one (xs, ys) pixel-index pair per component, in order of each
    component's first run.
    """
    uf = _UnionFind()
    prev: list[tuple[int, int, int]] = []  # (start, end, run_id) in previous row
    runs_by_row: list[list[tuple[int, int, int]]] = []
    for row in np.asarray(mask, dtype=bool):
        current = []
        j = 0
        for start, end in _row_runs(row):
            rid = uf.make()
            # 8-adjacency with a previous-row run [a, b): a <= end and start <= b
            while j < len(prev) and prev[j][1] < start:
                j += 1
            k = j
            while k < len(prev) and prev[k][0] <= end:
                uf.union(prev[k][2], rid)
                k += 1
            current.append((start, end, rid))
        runs_by_row.append(current)
        prev = current

    by_root: dict[int, list[tuple[int, int, int]]] = {}
    for y, row_runs in enumerate(runs_by_row):
        for start, end, rid in row_runs:
            by_root.setdefault(uf.find(rid), []).append((y, start, end))
    components = []
    for run_list in sorted(by_root.values(), key=lambda runs: (runs[0][0], runs[0][1])):
        xs_parts, ys_parts = [], []
        for y, start, end in run_list:
            xs_parts.append(np.arange(start, end, dtype=np.int64))
            ys_parts.append(np.full(end - start, y, dtype=np.int64))
        components.append((np.concatenate(xs_parts), np.concatenate(ys_parts)))
    return components


def label_mask_bfs(mask: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Independent flood-fill labelling used as the test oracle."""
    mask = np.asarray(mask, dtype=bool)
    height, width = mask.shape
    seen = np.zeros_like(mask)
    components = []
    for sy in range(height):
        for sx in range(width):
            if not mask[sy, sx] or seen[sy, sx]:
                continue
            queue = deque([(sx, sy)])
            seen[sy, sx] = True
            xs, ys = [], []
            while queue:
                x, y = queue.popleft()
                xs.append(x)
                ys.append(y)
                for ny in range(max(0, y - 1), min(height, y + 2)):
                    for nx in range(max(0, x - 1), min(width, x + 2)):
                        if mask[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            queue.append((nx, ny))
            components.append((np.array(xs, dtype=np.int64), np.array(ys, dtype=np.int64)))
    return components


def threshold_and_label(
    pmap: PosteriorMap, colour: int, threshold: float = POSTERIOR_THRESHOLD
) -> list[PixelComponent]:
    """Components of the pixels whose posterior for `colour` is >= threshold."""
    plane = pmap.values[..., colour]
    mask = plane >= threshold
    components = []
    for xs, ys in label_mask_unionfind(mask):
        box = BoundingBox(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)
        components.append(
            PixelComponent(
                xs=xs,
                ys=ys,
                box=box,
                colour_index=colour,
                mean_posterior=float(plane[ys, xs].mean()),
            )
        )
    return components


def boxes_from_components(
    components: list[PixelComponent], min_area: int = MIN_BOX_AREA
) -> list[Detection]:
    """One detection per component whose bounding-box area reaches min_area.

    The filter is on box area, not component pixel count; confidence is the
    mean posterior over the component's pixels.
    """
    if min_area <= 0:
        raise ValueError("min_area must be positive")
    out = []
    for comp in components:
        box = comp.box
        if (box.x_max - box.x_min) * (box.y_max - box.y_min) >= min_area:
            out.append(
                Detection(
                    label=COLOUR_TERMS[comp.colour_index],
                    box=box,
                    confidence=comp.mean_posterior,
                    detector_id="colour",
                )
            )
    return out


def detect_colours(
    image: np.ndarray,
    table: PosteriorTable,
    threshold: float = POSTERIOR_THRESHOLD,
    min_area: int = MIN_BOX_AREA,
) -> list[Detection]:
    """Full per-image colour pipeline across all 11 colour terms."""
    pmap = apply_lookup(image, table)
    detections = []
    for colour in range(N_COLOURS):
        detections.extend(
            boxes_from_components(threshold_and_label(pmap, colour, threshold), min_area)
        )
    return detections
