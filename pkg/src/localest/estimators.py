"""Histogram density surrogate and the MAP / CM / LMAP / LCM estimators.

Local estimators follow two rules:

* an LMAP is a histogram bin that is the maximum of its neighbourhood
  (``2 * min_separation + 1`` bins wide per axis) and at least ``epsilon``
  times the global maximum height;
* an LCM is the mean of the post-burn-in samples inside a region, i.e. the
  conditional mean normalised by the region's mass.

Ties between equal heights always resolve toward smaller coordinates.
"""

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .models import ModelError

__all__ = [
    "EmptyChainError",
    "EmptyRegionError",
    "DensityEstimate",
    "Region",
    "LocalEstimate",
    "EstimatorReport",
    "estimate_density",
    "map_estimate",
    "cm_estimate",
    "find_lmaps",
    "partition_1d",
    "region_mask",
    "lcm_estimate",
    "local_estimates",
    "full_report",
]


class EmptyChainError(ValueError):
    pass


class EmptyRegionError(ValueError):
    pass


@dataclass(frozen=True)
class DensityEstimate:
    bin_edges: tuple
    counts: np.ndarray
    heights: np.ndarray

    @property
    def dimension(self):
        return len(self.bin_edges)

    @property
    def centers(self):
        return tuple(0.5 * (e[1:] + e[:-1]) for e in self.bin_edges)

    @property
    def widths(self):
        return tuple(np.diff(e) for e in self.bin_edges)

    @property
    def bin_volumes(self):
        vol = self.widths[0]
        for w in self.widths[1:]:
            vol = np.multiply.outer(vol, w)
        return vol

    @property
    def total(self):
        return int(self.counts.sum())

    def center_of(self, index):
        return np.array([c[i] for c, i in zip(self.centers, index)])

    def bin_of(self, x):
        """Multi-index of the bin holding ``x`` (upper box edge folds into the last bin)."""
        idx = []
        for e, v in zip(self.bin_edges, np.atleast_1d(x)):
            i = int(np.searchsorted(e, v, side="right")) - 1
            idx.append(min(max(i, 0), len(e) - 2))
        return tuple(idx)


@dataclass(frozen=True)
class Region:
    """Axis-aligned box ``[lo, hi)``; ``closed`` makes every upper edge inclusive."""

    lo: tuple
    hi: tuple
    closed: bool = False

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise ValueError("region bounds must have equal length")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"region requires lo < hi on every axis, got {lo} / {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, x):
        return bool(region_mask(self, np.atleast_2d(x))[0])


def region_mask(region, samples):
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    lo = np.asarray(region.lo)
    hi = np.asarray(region.hi)
    upper = samples <= hi if region.closed else samples < hi
    return np.all((samples >= lo) & upper, axis=1)


@dataclass
class LocalEstimate:
    region: Region
    lmap: np.ndarray
    lcm: np.ndarray
    peak_height: float
    mass: float
    count: int = 0
    forward_check: dict = None

    def as_dict(self):
        return {
            "lo": list(self.region.lo),
            "hi": list(self.region.hi),
            "lmap": _floats(self.lmap),
            "lcm": _floats(self.lcm),
            "mass": float(self.mass),
            "count": int(self.count),
            "peak_height": float(self.peak_height),
            "forward_check": self.forward_check,
        }


@dataclass
class EstimatorReport:
    map: np.ndarray
    cm: np.ndarray
    lmaps: list
    regions: list = field(default_factory=list)
    map_forward: list = None
    cm_forward: list = None

    def as_dict(self):
        return {
            "map": _floats(self.map),
            "cm": _floats(self.cm),
            "map_forward": self.map_forward,
            "cm_forward": self.cm_forward,
            "lmaps": [_floats(p) for p in self.lmaps],
            "regions": [r.as_dict() for r in self.regions],
        }

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, allow_nan=True) + "\n"


def _floats(v):
    return [float(a) for a in np.atleast_1d(v)]


def _post_burn_in(chain):
    samples = chain.samples
    if len(samples) == 0:
        raise EmptyChainError("chain has no post-burn-in samples")
    return samples


def estimate_density(chain, bins, box):
    """Normalised histogram of the post-burn-in samples over ``box``.

    Parameters
    ----------
    chain : Chain
    bins : int or sequence of int
        Bins per axis.
    box : BoxPrior
        Histogram range; samples on the upper face fall in the last bin.
    """
    samples = _post_burn_in(chain)
    dim = samples.shape[1]
    bins = [int(b) for b in np.broadcast_to(np.atleast_1d(bins), (dim,))]
    if any(b < 1 for b in bins):
        raise ValueError(f"bins must be positive, got {bins}")
    ranges = list(zip(box.lower, box.upper))
    counts, edges = np.histogramdd(samples, bins=bins, range=ranges)
    counts = counts.astype(np.int64)
    dens = DensityEstimate(tuple(np.asarray(e) for e in edges), counts, np.zeros(counts.shape))
    heights = counts / (counts.sum() * dens.bin_volumes)
    return DensityEstimate(dens.bin_edges, counts, heights)


def map_estimate(density):
    """Centre of the highest bin (first in C order on ties)."""
    index = np.unravel_index(int(np.argmax(density.heights)), density.heights.shape)
    return density.center_of(index)


def cm_estimate(chain):
    return _post_burn_in(chain).mean(axis=0)


def _is_neighbourhood_max(heights, index, radius):
    h = heights[index]
    window = []
    for i, n in zip(index, heights.shape):
        window.append(range(max(i - radius, 0), min(i + radius + 1, n)))
    for other in itertools.product(*window):
        if other == index:
            continue
        g = heights[other]
        # equal heights: the bin with the smaller index wins
        if g > h or (g == h and other < index):
            return False
    return True


def find_lmaps(density, epsilon=0.2, min_separation=3):
    """Bin centres of the local maxima, highest first.

    A bin qualifies when it beats every other bin within ``min_separation``
    bins on each axis and its height is at least ``epsilon`` times the
    global maximum.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    if min_separation < 1:
        raise ValueError(f"min_separation must be a positive number of bins, got {min_separation}")
    heights = density.heights
    floor = epsilon * heights.max()
    found = []
    for flat in np.flatnonzero(heights >= floor):
        index = np.unravel_index(flat, heights.shape)
        index = tuple(int(i) for i in index)
        if heights[index] > 0 and _is_neighbourhood_max(heights, index, min_separation):
            found.append(index)
    # stable sort keeps C order among equal heights
    found.sort(key=lambda idx: -heights[idx])
    return [density.center_of(idx) for idx in found]


def partition_1d(density, lmaps):
    """Split the 1-D box at the lowest point between each pair of adjacent LMAPs.

    The valley is the leftmost run of consecutive minimum-height bins between
    two peaks; the cut sits at the middle of that run (a single bin's centre
    when the minimum is unique). Returns one region per LMAP, ordered left
    to right, covering the box.
    """
    if density.dimension != 1:
        raise ValueError("automatic partition is only defined for 1-D densities")
    if len(lmaps) == 0:
        raise ValueError("at least one LMAP is required")
    edges = density.bin_edges[0]
    centers = density.centers[0]
    heights = density.heights
    peaks = sorted(density.bin_of(p)[0] for p in lmaps)
    cuts = []
    for a, b in zip(peaks, peaks[1:]):
        segment = heights[a:b + 1]
        first = a + int(np.argmin(segment))
        last = first
        while last + 1 <= b and heights[last + 1] == heights[first]:
            last += 1
        cuts.append(float(0.5 * (centers[first] + centers[last])))
    bounds = [float(edges[0])] + cuts + [float(edges[-1])]
    return [
        Region((lo,), (hi,), closed=(i == len(bounds) - 2))
        for i, (lo, hi) in enumerate(zip(bounds, bounds[1:]))
    ]


def lcm_estimate(chain, region):
    """Mean of the post-burn-in samples inside ``region``."""
    samples = _post_burn_in(chain)
    inside = samples[region_mask(region, samples)]
    if len(inside) == 0:
        raise EmptyRegionError(f"no post-burn-in samples in region {region.lo}..{region.hi}")
    return inside.mean(axis=0)


def _region_bins(density, region):
    """Boolean mask of bins whose centre lies in ``region``."""
    grids = np.meshgrid(*density.centers, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return region_mask(region, pts).reshape(density.heights.shape)


def local_estimates(chain, density, regions, lmaps):
    """One ``LocalEstimate`` per region.

    The region's LMAP is the highest listed LMAP inside it, falling back to
    the highest bin of the region when none of the LMAPs lands there.
    """
    samples = _post_burn_in(chain)
    out = []
    for region in regions:
        mask = region_mask(region, samples)
        count = int(mask.sum())
        if count == 0:
            raise EmptyRegionError(f"no post-burn-in samples in region {region.lo}..{region.hi}")
        inside_bins = _region_bins(density, region)
        heights = np.where(inside_bins, density.heights, -1.0)
        candidates = [p for p in lmaps if region.contains(p)]
        if candidates:
            lmap = candidates[0]
        else:
            lmap = density.center_of(np.unravel_index(int(np.argmax(heights)), heights.shape))
        out.append(
            LocalEstimate(
                region=region,
                lmap=np.asarray(lmap, dtype=float),
                lcm=samples[mask].mean(axis=0),
                peak_height=float(max(heights.max(), 0.0)),
                mass=count / len(samples),
                count=count,
            )
        )
    return out


def _forward_values(model, x):
    if model is None:
        return None
    try:
        return [float(v) for v in np.atleast_1d(model.forward(np.atleast_1d(x)))]
    except ModelError:
        return None


def full_report(chain, density, epsilon=0.2, min_separation=3, regions=None, model=None):
    """MAP, CM, LMAP list and per-region local estimates.

    Without ``regions`` a 1-D density is partitioned at the valleys between
    LMAPs; a 2-D density gets a single region spanning the whole box. When
    ``model`` is given, its forward values at every estimator are attached.
    """
    lmaps = find_lmaps(density, epsilon, min_separation)
    if regions is None:
        if density.dimension == 1:
            regions = partition_1d(density, lmaps)
        else:
            lo = tuple(float(e[0]) for e in density.bin_edges)
            hi = tuple(float(e[-1]) for e in density.bin_edges)
            regions = [Region(lo, hi, closed=True)]
    locals_ = local_estimates(chain, density, regions, lmaps)
    if model is not None:
        for loc in locals_:
            loc.forward_check = {
                "lmap": _forward_values(model, loc.lmap),
                "lcm": _forward_values(model, loc.lcm),
            }
    map_x = map_estimate(density)
    cm_x = cm_estimate(chain)
    return EstimatorReport(
        map=map_x,
        cm=cm_x,
        lmaps=lmaps,
        regions=locals_,
        map_forward=_forward_values(model, map_x),
        cm_forward=_forward_values(model, cm_x),
    )
