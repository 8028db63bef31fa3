"""Information maps and start-region geometry.

A :class:`GridMap` discretizes a nonnegative information density over a
rectangular domain [0, L1] x [0, L2]. Synthetic maps come from Gaussian
mixtures; arbitrary maps round-trip through a plain text format (ERGMAP).
Start regions are unions of axis-aligned rectangles per agent type
(ERGSTART format), with uniform sampling and exact nearest-point
projection.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import multivariate_normal

from .errors import (
    DegenerateMapError,
    MapFormatError,
    PreconditionError,
    UnknownAgentTypeError,
)

MAP_MAGIC = "ERGMAP 1"
REGION_MAGIC = "ERGSTART 1"

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class GridMap:
    """Cell-midpoint densities on a regular nx-by-ny grid.

    ``cells`` has shape (ny, nx); ``cells[iy, ix]`` is the density at the
    midpoint ((ix+0.5)*L1/nx, (iy+0.5)*L2/ny). Flattened row-major order
    is therefore y-major, matching the ERGMAP file layout.
    """

    nx: int
    ny: int
    domain_lengths: np.ndarray
    cells: np.ndarray

    @property
    def cell_area(self) -> float:
        return float(self.domain_lengths[0] * self.domain_lengths[1]) / (
            self.nx * self.ny
        )

    def integral(self) -> float:
        return float(self.cells.sum()) * self.cell_area

    def cell_points(self) -> np.ndarray:
        """Cell midpoints, shape (nx*ny, 2), in flattened cell order."""
        l1, l2 = self.domain_lengths
        xs = (np.arange(self.nx) + 0.5) * (l1 / self.nx)
        ys = (np.arange(self.ny) + 0.5) * (l2 / self.ny)
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def is_normalized(self, tol: float = NORMALIZATION_TOL) -> bool:
        return abs(self.integral() - 1.0) <= tol


def make_grid_map(cells, domain_lengths) -> GridMap:
    """Wrap a (ny, nx) array of cell values as a GridMap."""
    cells = np.asarray(cells, dtype=float)
    if cells.ndim != 2:
        raise PreconditionError("cells must be a 2-D array")
    ny, nx = cells.shape
    dl = np.asarray(domain_lengths, dtype=float)
    if dl.shape != (2,) or not np.all(dl > 0):
        raise PreconditionError("domain_lengths must be two positive reals")
    return GridMap(nx=nx, ny=ny, domain_lengths=dl, cells=cells)


def normalize(grid_map: GridMap) -> GridMap:
    """Scale cells so the midpoint-rule integral equals 1."""
    total = grid_map.cells.sum() * grid_map.cell_area
    if total <= 0.0:
        raise DegenerateMapError("map has no positive mass")
    return GridMap(
        nx=grid_map.nx,
        ny=grid_map.ny,
        domain_lengths=grid_map.domain_lengths,
        cells=grid_map.cells / total,
    )


def clip_nonnegative(grid_map: GridMap) -> GridMap:
    """Zero out negative cells (used to repair reconstructions)."""
    return GridMap(
        nx=grid_map.nx,
        ny=grid_map.ny,
        domain_lengths=grid_map.domain_lengths,
        cells=np.maximum(grid_map.cells, 0.0),
    )


# ---------------------------------------------------------------------------
# Gaussian mixture maps


@dataclass(frozen=True)
class GmmSpec:
    """Mixture components as (weight, mean, covariance) triples.

    Weights must sum to 1; covariances must be symmetric positive
    definite. ``seed`` records the draw that produced randomized
    parameters (see :func:`random_gmm_spec`); generation itself is
    deterministic given the components.
    """

    components: tuple
    seed: int = 0

    def __post_init__(self):
        if not self.components:
            raise PreconditionError("mixture needs at least one component")
        weights = np.array([w for w, _, _ in self.components], dtype=float)
        if np.any(weights <= 0):
            raise PreconditionError("component weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise PreconditionError("component weights must sum to 1")
        for _, _, cov in self.components:
            cov = np.asarray(cov, dtype=float)
            if cov.shape != (2, 2) or abs(cov[0, 1] - cov[1, 0]) > 1e-12:
                raise PreconditionError("covariances must be symmetric 2x2")
            try:
                np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise PreconditionError(
                    "covariances must be positive definite"
                ) from None


def random_gmm_spec(seed, domain_lengths) -> GmmSpec:
    """Draw a random mixture: 2-5 isotropic components in the domain.

    Means are uniform over the domain; sigma is uniform in
    [0.05, 0.2] times the shorter domain side; weights are uniform draws
    renormalized to sum to 1.
    """
    rng = np.random.default_rng(seed)
    dl = np.asarray(domain_lengths, dtype=float)
    scale = float(dl.min())
    n = int(rng.integers(2, 6))
    raw_w = rng.uniform(0.5, 1.5, size=n)
    weights = raw_w / raw_w.sum()
    components = []
    for i in range(n):
        mean = rng.uniform(0.0, 1.0, size=2) * dl
        sigma = rng.uniform(0.05, 0.2) * scale
        cov = np.eye(2) * sigma**2
        components.append((float(weights[i]), mean, cov))
    return GmmSpec(components=tuple(components), seed=int(seed))


def mixture_density(spec: GmmSpec, points) -> np.ndarray:
    """Mixture pdf evaluated at (P, 2) points."""
    points = np.asarray(points, dtype=float)
    out = np.zeros(points.shape[0])
    for weight, mean, cov in spec.components:
        out += weight * multivariate_normal.pdf(points, mean=mean, cov=cov)
    return out


def generate_gmm_map(spec: GmmSpec, nx, ny, domain_lengths) -> GridMap:
    """Evaluate the mixture at cell midpoints and normalize."""
    dl = np.asarray(domain_lengths, dtype=float)
    for _, mean, _ in spec.components:
        mean = np.asarray(mean, dtype=float)
        if np.any(mean < 0) or np.any(mean > dl):
            raise PreconditionError(f"component mean {mean} outside domain")
    shell = make_grid_map(np.zeros((ny, nx)), dl)
    values = mixture_density(spec, shell.cell_points())
    return normalize(make_grid_map(values.reshape(ny, nx), dl))


# ---------------------------------------------------------------------------
# Map file I/O


def _format_float(x: float) -> str:
    # repr round-trips float64 exactly, keeping save/load lossless
    return repr(float(x))


def save_map(grid_map: GridMap, path) -> None:
    """Write ERGMAP text: header, dimensions, then rows of cell values."""
    lines = [MAP_MAGIC]
    l1, l2 = grid_map.domain_lengths
    lines.append(
        f"{grid_map.nx} {grid_map.ny} {_format_float(l1)} {_format_float(l2)}"
    )
    for row in grid_map.cells:
        lines.append(" ".join(_format_float(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_map(path) -> GridMap:
    """Parse an ERGMAP file; errors carry line numbers."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != MAP_MAGIC:
        raise MapFormatError(f"expected header '{MAP_MAGIC}'", path, 1)
    if len(lines) < 2:
        raise MapFormatError("missing dimension line", path, 2)
    head = lines[1].split()
    if len(head) != 4:
        raise MapFormatError("dimension line must be 'nx ny L1 L2'", path, 2)
    try:
        nx, ny = int(head[0]), int(head[1])
        l1, l2 = float(head[2]), float(head[3])
    except ValueError:
        raise MapFormatError("malformed dimension line", path, 2) from None
    if nx <= 0 or ny <= 0 or l1 <= 0 or l2 <= 0:
        raise MapFormatError("dimensions and lengths must be positive", path, 2)

    values = []
    for lineno, line in enumerate(lines[2:], start=3):
        for tok in line.split():
            try:
                v = float(tok)
            except ValueError:
                raise MapFormatError(
                    f"bad cell value {tok!r}", path, lineno
                ) from None
            if v < 0:
                raise MapFormatError(
                    f"negative cell value {tok}", path, lineno
                )
            values.append(v)
    if len(values) != nx * ny:
        raise MapFormatError(
            f"expected {nx * ny} cell values, found {len(values)}", path
        )
    cells = np.array(values, dtype=float).reshape(ny, nx)
    return GridMap(nx=nx, ny=ny, domain_lengths=np.array([l1, l2]), cells=cells)


# ---------------------------------------------------------------------------
# Start regions


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle [xmin, xmax] x [ymin, ymax]."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    def contains(self, point) -> bool:
        x, y = point
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def clamp(self, point) -> np.ndarray:
        x, y = point
        return np.array(
            [min(max(x, self.xmin), self.xmax), min(max(y, self.ymin), self.ymax)]
        )


@dataclass(frozen=True)
class StartRegionSet:
    """Viable start locations: per agent type, a union of rectangles."""

    domain_lengths: np.ndarray
    regions: dict = field(default_factory=dict)

    def __post_init__(self):
        dl = np.asarray(self.domain_lengths, dtype=float)
        if not self.regions:
            raise PreconditionError("region set must cover at least one type")
        for type_id, rects in self.regions.items():
            if not rects:
                raise PreconditionError(
                    f"agent type {type_id} has no start rectangles"
                )
            for r in rects:
                if r.xmax <= r.xmin or r.ymax <= r.ymin:
                    raise PreconditionError(f"rectangle {r} has no area")
                if r.xmin < 0 or r.ymin < 0 or r.xmax > dl[0] or r.ymax > dl[1]:
                    raise PreconditionError(f"rectangle {r} exceeds the domain")

    def rects_for(self, agent_type) -> list:
        try:
            return self.regions[agent_type]
        except KeyError:
            raise UnknownAgentTypeError(agent_type) from None

    @property
    def type_ids(self) -> list:
        return sorted(self.regions)

    def contains(self, point, agent_type) -> bool:
        return any(r.contains(point) for r in self.rects_for(agent_type))


def sample_start(
    regions: StartRegionSet, agent_type, rng: np.random.Generator
) -> np.ndarray:
    """Uniform point over the union of the type's rectangles.

    Rectangle chosen with probability proportional to area, then a
    uniform point within it. Overlapping rectangles slightly overweight
    the overlap; generators keep rectangles disjoint.
    """
    rects = regions.rects_for(agent_type)
    areas = np.array([r.area for r in rects])
    idx = int(rng.choice(len(rects), p=areas / areas.sum()))
    r = rects[idx]
    return np.array(
        [rng.uniform(r.xmin, r.xmax), rng.uniform(r.ymin, r.ymax)]
    )


def project_to_regions(x, regions: StartRegionSet, agent_type) -> np.ndarray:
    """Nearest point of the rectangle union (ties: lowest rectangle index)."""
    x = np.asarray(x, dtype=float)
    best = None
    best_d = np.inf
    for r in regions.rects_for(agent_type):
        cand = r.clamp(x)
        d = float(np.hypot(cand[0] - x[0], cand[1] - x[1]))
        if d < best_d:
            best, best_d = cand, d
    return best


def intersect_regions(regions: StartRegionSet, type_ids) -> tuple:
    """Rectangles of the exact intersection of several types' unions.

    Since each type's viable set is a union of axis-aligned rectangles,
    the set of points viable for every listed type is again a rectangle
    union: the pairwise (then k-wise) overlaps. Returns an empty tuple
    when no point is viable for all types. Zero-area contacts (shared
    edges or corners) do not count.
    """
    type_ids = list(type_ids)
    if not type_ids:
        raise PreconditionError("need at least one agent type")
    rects = list(regions.rects_for(type_ids[0]))
    for tid in type_ids[1:]:
        overlaps = []
        for a in rects:
            for b in regions.rects_for(tid):
                xmin = max(a.xmin, b.xmin)
                ymin = max(a.ymin, b.ymin)
                xmax = min(a.xmax, b.xmax)
                ymax = min(a.ymax, b.ymax)
                if xmax > xmin and ymax > ymin:
                    overlaps.append(Rect(xmin, ymin, xmax, ymax))
        rects = overlaps
        if not rects:
            break
    return tuple(rects)


def save_regions(regions: StartRegionSet, path) -> None:
    """Write ERGSTART text: one 'type xmin ymin xmax ymax' line per rect."""
    lines = [REGION_MAGIC]
    for type_id in regions.type_ids:
        for r in regions.regions[type_id]:
            lines.append(
                f"{type_id} {_format_float(r.xmin)} {_format_float(r.ymin)} "
                f"{_format_float(r.xmax)} {_format_float(r.ymax)}"
            )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_regions(path, domain_lengths) -> StartRegionSet:
    """Parse an ERGSTART file against the given domain."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != REGION_MAGIC:
        raise MapFormatError(f"expected header '{REGION_MAGIC}'", path, 1)
    regions: dict = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        toks = line.split()
        if len(toks) != 5:
            raise MapFormatError(
                "rectangle line must be 'type xmin ymin xmax ymax'", path, lineno
            )
        try:
            type_id = int(toks[0])
            coords = [float(t) for t in toks[1:]]
        except ValueError:
            raise MapFormatError("malformed rectangle line", path, lineno) from None
        regions.setdefault(type_id, []).append(Rect(*coords))
    if not regions:
        raise MapFormatError("no rectangles found", path)
    return StartRegionSet(
        domain_lengths=np.asarray(domain_lengths, dtype=float), regions=regions
    )


def random_start_regions(
    rng: np.random.Generator,
    domain_lengths,
    type_ids=(0,),
    rects_per_type=(2, 4),
    total_area_fraction=(0.05, 0.15),
    cluster_radius=0.05,
) -> StartRegionSet:
    """Random viable-start rectangles per agent type.

    Every type shares the first rectangle, so a start feasible for all
    types always exists (multi-type deployments assume the viable sets
    admit a common point). Remaining rectangles are drawn independently
    per type, centered within ``cluster_radius`` (in units of the
    domain diagonal scale) of the shared rectangle so each type's
    viable set forms one deployment neighborhood rather than isolated
    pockets scattered across the domain.
    """
    dl = np.asarray(domain_lengths, dtype=float)
    lo, hi = rects_per_type
    frac_lo, frac_hi = total_area_fraction

    def draw_rect(area, near=None):
        aspect = rng.uniform(0.5, 2.0)
        w = min(np.sqrt(area * aspect), 0.9 * dl[0])
        h = min(area / w, 0.9 * dl[1])
        if near is None:
            x0 = rng.uniform(0.0, dl[0] - w)
            y0 = rng.uniform(0.0, dl[1] - h)
        else:
            cx = near[0] + rng.uniform(-1.0, 1.0) * cluster_radius * dl[0]
            cy = near[1] + rng.uniform(-1.0, 1.0) * cluster_radius * dl[1]
            x0 = min(max(cx - 0.5 * w, 0.0), dl[0] - w)
            y0 = min(max(cy - 0.5 * h, 0.0), dl[1] - h)
        return Rect(float(x0), float(y0), float(x0 + w), float(y0 + h))

    shared_count = int(rng.integers(lo, hi + 1))
    shared_frac = rng.uniform(frac_lo, frac_hi)
    shared_area = shared_frac * dl[0] * dl[1] / shared_count
    shared = draw_rect(shared_area)
    anchor = (0.5 * (shared.xmin + shared.xmax), 0.5 * (shared.ymin + shared.ymax))

    regions = {}
    for t in type_ids:
        n = int(rng.integers(lo, hi + 1))
        frac = rng.uniform(frac_lo, frac_hi)
        per_rect_area = frac * dl[0] * dl[1] / n
        rects = [shared]
        for _ in range(n - 1):
            rects.append(draw_rect(per_rect_area, near=anchor))
        regions[t] = rects
    return StartRegionSet(domain_lengths=dl, regions=regions)
