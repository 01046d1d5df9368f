"""Superpixel segmentation by localized k-means over 5-D (Lab + position) features.

Cluster centers start on a regular grid with interval S = sqrt(N / n_segments)
and each pixel is only compared against centers whose 2S x 2S window covers it,
so one iteration touches each pixel a bounded number of times regardless of
image size. Distances combine color and space as

    D = sqrt((d_color / compactness)^2 + (d_spatial / S)^2)

with d_color the Euclidean CIELAB distance and d_spatial the Euclidean pixel
distance. After the iterations, fragments smaller than
min_region_frac * S^2 are merged into their largest adjacent region.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator

from .color import rgb_to_lab
from .exceptions import DimensionMismatchError, ImageTooSmallError
from .validation import as_image, check_positive

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


@dataclass
class SlicParams:
    """Knobs for slic_segment. Defaults follow the standard budget."""

    n_segments: int = 50
    compactness: float = 10.0
    max_iter: int = 10
    min_region_frac: float = 0.25
    tol: float = 1e-3

    def validate(self) -> None:
        if self.n_segments < 1:
            raise ValueError(f"n_segments must be >= 1, got {self.n_segments}")
        check_positive(self.compactness, "compactness")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not 0.0 < self.min_region_frac < 1.0:
            raise ValueError(f"min_region_frac must be in (0, 1), got {self.min_region_frac}")


@dataclass
class SuperpixelLabeling:
    """Result of a segmentation: dense per-pixel labels plus cluster centers.

    labels: (H, W) int32, values in [0, len(centers)).
    centers: (K, 5) float64 rows [l, a, b, x, y], recomputed as the mean
        feature of each final region, so centers are exactly the centroids
        of their members.
    residual: total 5-D center movement of the last k-means iteration.
    """

    labels: np.ndarray
    centers: np.ndarray
    residual: float


@dataclass
class SuperpixelPatch:
    """One superpixel cut out of its source image at its bounding box."""

    bbox: tuple[int, int, int, int]  # (top, left, height, width)
    mask: np.ndarray  # (height, width) bool, at least one True
    pixels: np.ndarray  # (height, width, 3) float64
    source_label: int = 0

    @property
    def area(self) -> int:
        return int(self.mask.sum())


def slic_distance(center, pixel, compactness: float, grid_interval: float) -> float:
    """Normalized 5-D distance between a [l, a, b, x, y] center and pixel."""
    check_positive(compactness, "compactness")
    check_positive(grid_interval, "grid_interval")
    cl, ca, cb, cx, cy = (float(v) for v in center)
    pl, pa, pb, px, py = (float(v) for v in pixel)
    d_color = math.sqrt((pl - cl) ** 2 + (pa - ca) ** 2 + (pb - cb) ** 2)
    d_spatial = math.sqrt((px - cx) ** 2 + (py - cy) ** 2)
    return math.sqrt((d_color / compactness) ** 2 + (d_spatial / grid_interval) ** 2)


def _init_centers(lab: np.ndarray, n_segments: int) -> tuple[np.ndarray, float]:
    """Grid-seeded centers, each nudged to the lowest-gradient pixel nearby.

    The grid is ny x nx with nx/ny matching the image aspect and
    nx * ny close to n_segments. Seeding on a local gradient minimum keeps
    initial centers off edges.
    """
    height, width = lab.shape[:2]
    grid_interval = math.sqrt(height * width / n_segments)
    ny = max(1, round(math.sqrt(n_segments * height / width)))
    nx = max(1, round(n_segments / ny))

    gy, gx = np.gradient(lab, axis=(0, 1))
    grad = (gy**2).sum(axis=2) + (gx**2).sum(axis=2)

    centers = np.empty((ny * nx, 5))
    idx = 0
    for i in range(ny):
        cy = min(height - 1, int((i + 0.5) * height / ny))
        for j in range(nx):
            cx = min(width - 1, int((j + 0.5) * width / nx))
            y0, y1 = max(0, cy - 1), min(height - 1, cy + 1)
            x0, x1 = max(0, cx - 1), min(width - 1, cx + 1)
            window = grad[y0 : y1 + 1, x0 : x1 + 1]
            dy, dx = np.unravel_index(np.argmin(window), window.shape)
            py, px = y0 + int(dy), x0 + int(dx)
            centers[idx] = (lab[py, px, 0], lab[py, px, 1], lab[py, px, 2], px, py)
            idx += 1
    return centers, grid_interval


def _assign_labels(
    lab: np.ndarray, centers: np.ndarray, compactness: float, grid_interval: float
) -> np.ndarray:
    """One assignment sweep: nearest covering center, ties to the lowest index.

    Pixels covered by no 2S x 2S window (possible for tiny segment counts)
    fall back to the globally nearest center.
    """
    height, width = lab.shape[:2]
    best = np.full((height, width), np.inf)
    labels = np.full((height, width), -1, dtype=np.int32)

    for idx in range(len(centers)):
        cl, ca, cb, cx, cy = centers[idx]
        x0 = max(0, math.ceil(cx - grid_interval))
        x1 = min(width - 1, math.floor(cx + grid_interval))
        y0 = max(0, math.ceil(cy - grid_interval))
        y1 = min(height - 1, math.floor(cy + grid_interval))
        if x0 > x1 or y0 > y1:
            continue
        window = lab[y0 : y1 + 1, x0 : x1 + 1]
        d_color = np.sqrt(
            (window[..., 0] - cl) ** 2 + (window[..., 1] - ca) ** 2 + (window[..., 2] - cb) ** 2
        )
        xs = np.arange(x0, x1 + 1, dtype=np.float64)
        ys = np.arange(y0, y1 + 1, dtype=np.float64)
        d_spatial = np.sqrt((xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2)
        dist = np.sqrt((d_color / compactness) ** 2 + (d_spatial / grid_interval) ** 2)

        view_best = best[y0 : y1 + 1, x0 : x1 + 1]
        view_labels = labels[y0 : y1 + 1, x0 : x1 + 1]
        better = dist < view_best
        view_best[better] = dist[better]
        view_labels[better] = idx

    uncovered = labels < 0
    if uncovered.any():
        uy, ux = np.nonzero(uncovered)
        pix = lab[uy, ux]
        fx = ux.astype(np.float64)
        fy = uy.astype(np.float64)
        best_u = np.full(len(uy), np.inf)
        label_u = np.zeros(len(uy), dtype=np.int32)
        for idx in range(len(centers)):
            cl, ca, cb, cx, cy = centers[idx]
            d_color = np.sqrt(
                (pix[:, 0] - cl) ** 2 + (pix[:, 1] - ca) ** 2 + (pix[:, 2] - cb) ** 2
            )
            d_spatial = np.sqrt((fx - cx) ** 2 + (fy - cy) ** 2)
            dist = np.sqrt((d_color / compactness) ** 2 + (d_spatial / grid_interval) ** 2)
            better = dist < best_u
            best_u[better] = dist[better]
            label_u[better] = idx
        labels[uy, ux] = label_u
    return labels


def _coordinate_features(lab: np.ndarray) -> list[np.ndarray]:
    height, width = lab.shape[:2]
    xs, ys = np.meshgrid(
        np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64)
    )
    return [lab[..., 0], lab[..., 1], lab[..., 2], xs, ys]


def _update_centers(
    lab: np.ndarray, labels: np.ndarray, centers: np.ndarray
) -> tuple[np.ndarray, float]:
    """Move each center to the mean feature of its members (empty ones stay)."""
    k = len(centers)
    flat = labels.ravel()
    counts = np.bincount(flat, minlength=k)
    occupied = counts > 0
    updated = centers.copy()
    for col, feature in enumerate(_coordinate_features(lab)):
        sums = np.bincount(flat, weights=feature.ravel(), minlength=k)
        updated[occupied, col] = sums[occupied] / counts[occupied]
    residual = float(np.sqrt(((updated - centers) ** 2).sum(axis=1)).sum())
    return updated, residual


def _centers_for_labels(lab: np.ndarray, labels: np.ndarray, n_labels: int) -> np.ndarray:
    centers = np.zeros((n_labels, 5))
    flat = labels.ravel()
    counts = np.bincount(flat, minlength=n_labels)
    for col, feature in enumerate(_coordinate_features(lab)):
        centers[:, col] = np.bincount(flat, weights=feature.ravel(), minlength=n_labels) / counts
    return centers


def _enforce_connectivity(labels: np.ndarray, min_size: float) -> tuple[np.ndarray, int]:
    """Merge 4-connected fragments smaller than min_size into their largest neighbor.

    Every surviving connected component becomes its own final label, so each
    output label is one 4-connected region. Fragments merge smallest-first
    (ties by component id), each into its largest adjacent region (ties by
    label then component id); a heap worklist keeps this deterministic order
    without rescanning.
    """
    height, width = labels.shape
    component = np.full((height, width), -1, dtype=np.int64)
    component_label: list[int] = []
    for label in range(int(labels.max()) + 1):
        mask = labels == label
        if not mask.any():
            continue
        marked, count = ndimage.label(mask, structure=_FOUR_CONNECTED)
        component[mask] = marked[mask] + len(component_label) - 1
        component_label.extend([label] * count)

    n_comp = len(component_label)
    sizes = np.bincount(component.ravel(), minlength=n_comp).tolist()

    # undirected adjacency as a CSR table, deduped via integer edge keys
    across = []
    for a, b in (
        (component[:-1, :], component[1:, :]),
        (component[:, :-1], component[:, 1:]),
    ):
        touching = a != b
        across.append((a[touching], b[touching]))
    u = np.concatenate([p for p, _ in across] + [q for _, q in across])
    v = np.concatenate([q for _, q in across] + [p for p, _ in across])
    keys = np.unique(u * n_comp + v)
    neighbor = (keys % n_comp).astype(np.int64)
    starts = np.searchsorted(keys // n_comp, np.arange(n_comp + 1))
    extra: dict[int, set[int]] = {}  # adjacency gained by merging, small comps only

    def neighbor_ids(c: int):
        ids = neighbor[starts[c] : starts[c + 1]].tolist()
        if c in extra:
            ids.extend(extra[c])
        return ids

    parent = list(range(n_comp))

    def find(c: int) -> int:
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    alive = n_comp
    heap = [(sizes[c], c) for c in range(n_comp) if sizes[c] < min_size]
    heapq.heapify(heap)
    while heap and alive > 1:
        size_at_push, fragment = heapq.heappop(heap)
        if find(fragment) != fragment or sizes[fragment] != size_at_push:
            continue  # stale entry: already merged away or since grown
        neighbors = {find(c) for c in neighbor_ids(fragment)} - {fragment}
        if not neighbors:
            continue
        target = min(neighbors, key=lambda r: (-sizes[r], component_label[r], r))
        parent[fragment] = target
        sizes[target] += sizes[fragment]
        alive -= 1
        if sizes[target] < min_size:
            # only comps that may still be merged ever read their adjacency
            extra.setdefault(target, set()).update(neighbor_ids(fragment))
            heapq.heappush(heap, (sizes[target], target))
        extra.pop(fragment, None)

    roots = [find(c) for c in range(n_comp)]
    survivors = sorted(set(roots), key=lambda r: (component_label[r], r))
    dense = {root: i for i, root in enumerate(survivors)}
    lookup = np.array([dense[r] for r in roots], dtype=np.int32)
    return lookup[component], len(survivors)


def slic_segment(image, params: SlicParams | None = None) -> SuperpixelLabeling:
    """Segment an (H, W, 3) image in [0, 1] into superpixels.

    Deterministic: identical (image, params) always yield the identical
    labeling. Raises ImageTooSmallError when the image has fewer pixels than
    the requested segment count.
    """
    params = params if params is not None else SlicParams()
    params.validate()
    img = as_image(image, channels=3, name="image")
    height, width = img.shape[:2]
    if height * width < params.n_segments:
        raise ImageTooSmallError(
            f"image has {height * width} pixels but {params.n_segments} segments requested"
        )

    lab = rgb_to_lab(img)
    centers, grid_interval = _init_centers(lab, params.n_segments)
    residual = math.inf
    for _ in range(params.max_iter):
        labels = _assign_labels(lab, centers, params.compactness, grid_interval)
        centers, residual = _update_centers(lab, labels, centers)
        if residual < params.tol:
            break

    labels = _assign_labels(lab, centers, params.compactness, grid_interval)
    labels, n_labels = _enforce_connectivity(
        labels, params.min_region_frac * grid_interval * grid_interval
    )
    centers = _centers_for_labels(lab, labels, n_labels)
    return SuperpixelLabeling(labels=labels, centers=centers, residual=residual)


def extract_patches(image, labeling: SuperpixelLabeling) -> list[SuperpixelPatch]:
    """Cut one bounding-box patch per label out of the segmented image.

    Patch masks are pairwise disjoint and together cover every pixel exactly
    once; patches come back ordered by label index.
    """
    img = as_image(image, channels=3, name="image")
    if labeling.labels.shape != img.shape[:2]:
        raise DimensionMismatchError(
            f"labels {labeling.labels.shape} do not match image {img.shape[:2]}"
        )
    patches = []
    for label in range(len(labeling.centers)):
        mask = labeling.labels == label
        ys, xs = np.nonzero(mask)
        top, left = int(ys.min()), int(xs.min())
        h = int(ys.max()) - top + 1
        w = int(xs.max()) - left + 1
        patches.append(
            SuperpixelPatch(
                bbox=(top, left, h, w),
                mask=mask[top : top + h, left : left + w].copy(),
                pixels=img[top : top + h, left : left + w].copy(),
                source_label=label,
            )
        )
    return patches


class SlicSegmenter(BaseEstimator):
    """Estimator wrapper around slic_segment.

    Follows the clustering-estimator convention: fit(image) computes
    ``labels_``, ``cluster_centers_`` and ``residual_``; fit_predict returns
    the label map. The algorithm has no stochastic step, so there is no
    random_state parameter.
    """

    def __init__(
        self,
        n_segments: int = 50,
        compactness: float = 10.0,
        max_iter: int = 10,
        min_region_frac: float = 0.25,
        tol: float = 1e-3,
    ):
        self.n_segments = n_segments
        self.compactness = compactness
        self.max_iter = max_iter
        self.min_region_frac = min_region_frac
        self.tol = tol

    def _make_params(self) -> SlicParams:
        return SlicParams(
            n_segments=self.n_segments,
            compactness=self.compactness,
            max_iter=self.max_iter,
            min_region_frac=self.min_region_frac,
            tol=self.tol,
        )

    def fit(self, X, y=None):
        labeling = slic_segment(X, self._make_params())
        self.labeling_ = labeling
        self.labels_ = labeling.labels
        self.cluster_centers_ = labeling.centers
        self.residual_ = labeling.residual
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).labels_

    def extract_patches(self, X) -> list[SuperpixelPatch]:
        """Patches of the image this segmenter was fitted on."""
        if not hasattr(self, "labeling_"):
            raise RuntimeError("SlicSegmenter must be fitted before extracting patches")
        return extract_patches(X, self.labeling_)
