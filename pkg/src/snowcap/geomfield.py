"""Grids over fractal-boundary domains and exact distance fields.

The domain is carved out of a uniform cell grid by the geometry's domain rule
(polygon interior or box complement). Distances from every cell center to the
realized boundary are exact point-to-segment / point-to-box-boundary values,
certified through a k-nearest-sample search with an expansion fallback, so the
only geometric error left is the finite realization depth itself.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .errors import (
    DegenerateFit,
    Disconnected,
    EmptyDomain,
    EmptyRegion,
    InsufficientSamples,
)
from .simsys import BoundaryGeometry

__all__ = [
    "Grid",
    "DistanceField",
    "ScalingFit",
    "build_grid",
    "distance_field",
    "neighborhood_volume",
    "minkowski_dimension",
    "ahlfors_check",
    "uniformity_estimate",
    "save_distance_field",
    "load_distance_field",
    "distance_field_to_csv",
]


@dataclass(frozen=True)
class Grid:
    """Uniform cell grid: cell (i1,..,id) has center origin + (i + 1/2) h.

    `omega_mask` flags cells whose center lies in the open domain. Flat
    indexing is C-order (last axis fastest), matching numpy defaults.
    """

    origin: np.ndarray
    h: float
    dims: tuple
    omega_mask: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        if self.omega_mask.shape != self.dims:
            raise ValueError("omega_mask shape must equal dims")
        if self.h <= 0:
            raise ValueError("cell size must be positive")

    @property
    def dim(self) -> int:
        return len(self.dims)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.dims))

    def axis_centers(self, ax: int) -> np.ndarray:
        return self.origin[ax] + (np.arange(self.dims[ax]) + 0.5) * self.h

    def centers(self) -> np.ndarray:
        """All cell centers, shape (n_cells, d), C-order."""
        axes = [self.axis_centers(ax) for ax in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class DistanceField:
    """Exact boundary distance at every cell center (masked or not).

    depth_error bounds the Hausdorff gap between the realized and the ideal
    boundary, so |d_ideal - values| <= depth_error cellwise. diameter is the
    boundary's bounding-box diagonal (NaN when unknown, e.g. after loading).
    """

    grid: Grid
    values: np.ndarray
    depth_error: float
    diameter: float = float("nan")

    def __post_init__(self):
        if self.values.shape != self.grid.dims:
            raise ValueError("values shape must equal grid dims")


@dataclass(frozen=True)
class ScalingFit:
    """Power-law fit of near-boundary volume against radius.

    For volumes scaling like C r^(d-s) the log-log slope is d - s, and
    `exponent` reports d - slope, i.e. the dimension estimate s itself.
    """

    exponent: float
    prefactor: float
    r_range: tuple
    residual: float


# --- grid construction -------------------------------------------------------


def _polygon_mask(segs: np.ndarray, origin: np.ndarray, h: float, dims: tuple) -> np.ndarray:
    """Even-odd interior test for all cell centers against a segment soup.

    Incidence-based: each edge contributes one x-crossing to every grid row
    whose center ordinate lies in the edge's half-open y-span, then a running
    parity along x marks interior cells. Cost O(cells + crossings).
    """
    nx, ny = dims
    ox, oy = origin
    x1, y1 = segs[:, 0, 0], segs[:, 0, 1]
    x2, y2 = segs[:, 1, 0], segs[:, 1, 1]
    ylo, yhi = np.minimum(y1, y2), np.maximum(y1, y2)
    j0 = np.clip(np.ceil((ylo - oy) / h - 0.5).astype(np.int64), 0, ny)
    j1 = np.clip(np.ceil((yhi - oy) / h - 0.5).astype(np.int64), 0, ny)
    counts = np.maximum(j1 - j0, 0)
    total = int(counts.sum())
    if total == 0:
        return np.zeros(dims, dtype=bool)
    eidx = np.repeat(np.arange(len(segs)), counts)
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    rows = np.arange(total) - np.repeat(offsets, counts) + j0[eidx]
    yrow = oy + (rows + 0.5) * h
    t = (yrow - y1[eidx]) / (y2[eidx] - y1[eidx])
    xcross = x1[eidx] + t * (x2[eidx] - x1[eidx])
    # first cell whose center sits right of the crossing
    p = np.floor((xcross - ox) / h + 0.5).astype(np.int64)
    counts2d = np.zeros((ny, nx + 1), dtype=np.int64)
    np.add.at(counts2d, (rows, np.clip(p, 0, nx)), 1)
    inside = (np.cumsum(counts2d[:, :nx], axis=1) % 2) == 1
    return np.ascontiguousarray(inside.T)


def _box_union_mask(boxes: np.ndarray, origin: np.ndarray, h: float, dims: tuple) -> np.ndarray:
    """Cells whose center lies in some closed box."""
    d = len(dims)
    hit = np.zeros(dims, dtype=bool)
    for lo, hi in boxes:
        sl = []
        for ax in range(d):
            i0 = int(np.ceil((lo[ax] - origin[ax]) / h - 0.5 - 1e-12))
            i1 = int(np.floor((hi[ax] - origin[ax]) / h - 0.5 + 1e-12))
            i0, i1 = max(i0, 0), min(i1, dims[ax] - 1)
            if i1 < i0:
                sl = None
                break
            sl.append(slice(i0, i1 + 1))
        if sl is not None:
            hit[tuple(sl)] = True
    return hit


def build_grid(geometry: BoundaryGeometry, resolution: int, margin: float = 0.0) -> Grid:
    """Grid the geometry's bounding box (inflated by `margin`) with a uniform
    cell size h = longest_extent / resolution and mask the domain cells.

    resolution >= 8; for complement domains a positive margin widens the
    region outside the unit cell that belongs to the domain.
    """
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    lo, hi = geometry.bounds()
    lo, hi = lo - margin, hi + margin
    ext = hi - lo
    h = float(ext.max()) / resolution
    dims = tuple(max(1, int(np.ceil(e / h - 1e-9))) for e in ext)
    if geometry.domain_rule == "interior":
        mask = _polygon_mask(geometry.primitives, lo, h, dims)
    else:
        mask = ~_box_union_mask(geometry.primitives, lo, h, dims)
    if not mask.any():
        raise EmptyDomain("no cell center falls inside the domain")
    return Grid(origin=lo, h=h, dims=dims, omega_mask=mask)


# --- exact distances ---------------------------------------------------------


def _segment_distance(pts: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Exact point-to-segment distances, pts (m, 2) against segs (m, 2, 2)."""
    a, b = segs[:, 0], segs[:, 1]
    e = b - a
    ee = np.einsum("ij,ij->i", e, e)
    t = np.einsum("ij,ij->i", pts - a, e) / np.where(ee > 0, ee, 1.0)
    t = np.clip(np.where(ee > 0, t, 0.0), 0.0, 1.0)
    closest = a + t[:, None] * e
    return np.linalg.norm(pts - closest, axis=1)


def _box_boundary_distance(pts: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Exact point-to-box-boundary distances, pts (m, d) vs boxes (m, 2, d)."""
    lo, hi = boxes[:, 0], boxes[:, 1]
    g = np.maximum(lo - pts, pts - hi)  # per-axis signed gap
    outside = np.linalg.norm(np.maximum(g, 0.0), axis=1)
    inside = -g.max(axis=1)  # distance to the nearest face when interior
    return np.where((g > 0).any(axis=1), outside, inside)


def _boundary_samples(geometry: BoundaryGeometry):
    prims = geometry.primitives
    if geometry.kind == "segments":
        a, b = prims[:, 0], prims[:, 1]
        samples = np.concatenate([a, 0.5 * (a + b), b])
        owner = np.tile(np.arange(len(prims)), 3)
        lengths = np.linalg.norm(b - a, axis=1)
        cover = float(lengths.max()) / 4.0 if len(prims) else 0.0
        exact = _segment_distance
    else:
        lo, hi = prims[:, 0], prims[:, 1]
        samples = 0.5 * (lo + hi)
        owner = np.arange(len(prims))
        cover = float(np.linalg.norm(hi - lo, axis=1).max()) / 2.0
        exact = _box_boundary_distance
    return samples, owner, cover, exact


def distance_field(
    geometry: BoundaryGeometry, grid: Grid, chunk: int = 262144
) -> DistanceField:
    """Exact distance from every cell center to the realized boundary.

    A kd-tree over boundary samples proposes candidate primitives; a cell is
    certified once its exact best is closer than the k-th sample distance
    minus the sample covering radius, so no unexamined primitive can beat it.
    Uncertified cells escalate k and finally fall back to a ball query.
    """
    prims = geometry.primitives
    samples, owner, cover, exact = _boundary_samples(geometry)
    tree = cKDTree(samples)
    pts = grid.centers()
    n = len(pts)
    values = np.full(n, np.inf)
    pending = np.arange(n)

    for k in (6, 24, 96):
        if len(pending) == 0:
            break
        kk = min(k, len(samples))
        still = []
        for s in range(0, len(pending), chunk):
            sel = pending[s : s + chunk]
            d_s, idx = tree.query(pts[sel], k=kk)
            if kk == 1:
                d_s, idx = d_s[:, None], idx[:, None]
            cand = owner[idx]
            flat_pts = np.repeat(pts[sel], kk, axis=0)
            ex = exact(flat_pts, prims[cand.ravel()]).reshape(-1, kk)
            best = ex.min(axis=1)
            values[sel] = np.minimum(values[sel], best)
            if kk == len(samples):
                continue
            bad = best > d_s[:, -1] - cover - 1e-12
            still.append(sel[bad])
        pending = np.concatenate(still) if still else np.array([], dtype=np.int64)

    for i in pending:  # expansion fallback, exact by the same covering bound
        hood = tree.query_ball_point(pts[i], values[i] + cover + 1e-12)
        cand = np.unique(owner[hood])
        if len(cand):
            ex = exact(np.repeat(pts[i][None], len(cand), axis=0), prims[cand])
            values[i] = min(values[i], float(ex.min()))

    return DistanceField(
        grid=grid,
        values=values.reshape(grid.dims),
        depth_error=geometry.approx_error,
        diameter=geometry.diameter,
    )


# --- scaling of near-boundary volume ------------------------------------------


def neighborhood_volume(field: DistanceField, r) -> float:
    """Lebesgue volume of the in-domain cells within distance r of the boundary."""
    vals = field.values[field.grid.omega_mask]
    hd = field.grid.h ** field.grid.dim
    if np.isscalar(r):
        return float(hd * np.count_nonzero(vals < r))
    return np.array([hd * np.count_nonzero(vals < ri) for ri in np.asarray(r)])


def minkowski_dimension(
    field: DistanceField,
    r_min: float | None = None,
    r_max: float | None = None,
    n_points: int = 8,
) -> ScalingFit:
    """Box-counting dimension estimate from |{d < r}| ~ C r^(d - s).

    Radii are geometric in [r_min, r_max] (defaults 4h and diameter/8);
    requires r_min >= 4h so shells are resolved and r_max <= diameter/4 so
    shells stay local. The fitted log-log slope of volume against radius
    gives the reported exponent d - slope.
    """
    h, d = field.grid.h, field.grid.dim
    if r_min is None:
        r_min = 4.0 * h
    if r_max is None:
        r_max = (field.diameter if np.isfinite(field.diameter) else 1.0) / 8.0
    if not 4.0 * h <= r_min < r_max:
        raise ValueError("need 4h <= r_min < r_max")
    if np.isfinite(field.diameter) and r_max > field.diameter / 4.0 + 1e-12:
        raise ValueError("r_max exceeds a quarter of the boundary diameter")
    if n_points < 4:
        raise ValueError("need at least four radii")
    radii = np.geomspace(r_min, r_max, n_points)
    vols = neighborhood_volume(field, radii)
    if (vols <= 0).any():
        raise DegenerateFit("empty neighborhood at the smallest radius")
    lv, lr = np.log(vols), np.log(radii)
    if np.ptp(lv) < 1e-12:
        raise DegenerateFit("volumes do not vary over the radius range")
    slope, intercept = np.polyfit(lr, lv, 1)
    resid = float(np.sqrt(np.mean((lv - (slope * lr + intercept)) ** 2)))
    return ScalingFit(
        exponent=float(d - slope),
        prefactor=float(np.exp(intercept)),
        r_range=(float(r_min), float(r_max)),
        residual=resid,
    )


# --- measure regularity -------------------------------------------------------


def ahlfors_check(
    geometry: BoundaryGeometry,
    s: float,
    n_centers: int = 200,
    r_range=(0.01, 0.2),
    radii_per_center: int = 4,
    seed: int = 0,
):
    """Sampled regularity constants of the natural self-similar measure.

    Pieces at the realization depth carry mass proportional to scale^s; ball
    masses mu(B(x, r)) for centers drawn from the measure and geometric radii
    give ratios mu(B)/r^s, returned as (c_lo, c_hi). Raises
    InsufficientSamples when the realization is too coarse for r_range[0].
    """
    prims = geometry.primitives
    if geometry.kind == "segments":
        reps = 0.5 * (prims[:, 0] + prims[:, 1])
        scale = np.linalg.norm(prims[:, 1] - prims[:, 0], axis=1)
    else:
        reps = 0.5 * (prims[:, 0] + prims[:, 1])
        scale = np.linalg.norm(prims[:, 1] - prims[:, 0], axis=1) / np.sqrt(geometry.dim)
    r_lo, r_hi = float(r_range[0]), float(r_range[1])
    if not 0 < r_lo < r_hi:
        raise ValueError("need 0 < r_lo < r_hi")
    masses = scale**s
    masses = masses / masses.sum()
    rng = np.random.default_rng(seed)
    centers = reps[rng.choice(len(reps), size=n_centers, p=masses)]
    radii = np.geomspace(r_lo, r_hi, radii_per_center)
    tree = cKDTree(reps)
    ratios = []
    for x in centers:
        for r in radii:
            mu = float(masses[tree.query_ball_point(x, r)].sum())
            if mu == 0.0:
                raise InsufficientSamples(
                    f"ball of radius {r:.3g} contains no boundary sample"
                )
            ratios.append(mu / r**s)
    return float(min(ratios)), float(max(ratios))


def uniformity_estimate(
    field: DistanceField,
    z,
    R: float,
    n_pairs: int = 16,
    seed: int = 0,
    sigma_max: float = 64.0,
) -> float:
    """Smallest cigar constant sigma joining sampled cell pairs near z.

    For a pair (x, y), a lattice path (kings moves on in-domain cells within
    distance R of z) is admissible at level sigma when every visited cell w
    keeps sigma * d(w) >= min(|w-x|, |w-y|) and the path length is at most
    sigma * |x-y|. Bisection over sigma per pair; the maximum over pairs is
    returned, saturated at sigma_max. Raises Disconnected when a sampled pair
    has no path at all inside the region.
    """
    grid = field.grid
    z = np.asarray(z, dtype=float)
    centers = grid.centers()
    dist_z = np.linalg.norm(centers - z, axis=1)
    region = grid.omega_mask.ravel() & (dist_z <= R)
    node_ids = np.flatnonzero(region)
    if len(node_ids) < 2:
        raise EmptyRegion("fewer than two cells near z")
    compact = -np.ones(grid.n_cells, dtype=np.int64)
    compact[node_ids] = np.arange(len(node_ids))
    region_nd = region.reshape(grid.dims)

    rows, cols, wts = [], [], []
    d = grid.dim
    offsets = [
        off
        for off in np.stack(
            np.meshgrid(*([[-1, 0, 1]] * d), indexing="ij"), axis=-1
        ).reshape(-1, d)
        if (off != 0).any()
    ]
    flat_idx = np.arange(grid.n_cells).reshape(grid.dims)
    for off in offsets:
        src = [slice(max(0, -o), grid.dims[ax] - max(0, o)) for ax, o in enumerate(off)]
        dst = [slice(max(0, o), grid.dims[ax] - max(0, -o)) for ax, o in enumerate(off)]
        ok = region_nd[tuple(src)] & region_nd[tuple(dst)]
        i = flat_idx[tuple(src)][ok]
        j = flat_idx[tuple(dst)][ok]
        rows.append(compact[i])
        cols.append(compact[j])
        wts.append(np.full(len(i), grid.h * float(np.linalg.norm(off))))
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    wts = np.concatenate(wts)
    n = len(node_ids)
    graph = csr_matrix((wts, (rows, cols)), shape=(n, n))

    pts = centers[node_ids]
    dvals = field.values.ravel()[node_ids]
    rng = np.random.default_rng(seed)
    sigma_est = 1.0

    def feasible(xi, yi, sigma):
        lam = np.minimum(
            np.linalg.norm(pts - pts[xi], axis=1), np.linalg.norm(pts - pts[yi], axis=1)
        )
        allowed = sigma * np.maximum(dvals, 1e-300) >= lam
        allowed[[xi, yi]] = True
        sub = np.flatnonzero(allowed)
        pos = -np.ones(n, dtype=np.int64)
        pos[sub] = np.arange(len(sub))
        g = graph[sub][:, sub]
        dd = dijkstra(g, directed=False, indices=pos[xi])
        gap = np.linalg.norm(pts[xi] - pts[yi])
        return np.isfinite(dd[pos[yi]]) and dd[pos[yi]] <= sigma * gap + 1e-12

    for _ in range(n_pairs):
        xi, yi = rng.choice(n, size=2, replace=False)
        if not feasible(xi, yi, sigma_max):
            dd = dijkstra(graph, directed=False, indices=xi)
            if not np.isfinite(dd[yi]):
                raise Disconnected("sampled cells are not joined inside the region")
            sigma_est = float(sigma_max)
            continue
        lo, hi = 1.0, float(sigma_max)
        if feasible(xi, yi, lo):
            hi = lo
        else:
            for _ in range(24):
                mid = np.sqrt(lo * hi)
                if feasible(xi, yi, mid):
                    hi = mid
                else:
                    lo = mid
                if hi / lo < 1.02:
                    break
        sigma_est = max(sigma_est, hi)
    return float(sigma_est)


# --- persistence --------------------------------------------------------------

_MAGIC = b"SCDF1\n"


def save_distance_field(field: DistanceField, path: str):
    """Binary dump: magic, d, dims, h, origin, depth_error, diameter, values
    (float64 C-order, all cells), mask bytes."""
    g = field.grid
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", g.dim))
        f.write(struct.pack(f"<{g.dim}Q", *g.dims))
        f.write(struct.pack("<d", g.h))
        f.write(struct.pack(f"<{g.dim}d", *g.origin))
        f.write(struct.pack("<dd", field.depth_error, field.diameter))
        f.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(g.omega_mask, dtype=np.uint8).tobytes())


def load_distance_field(path: str) -> DistanceField:
    with open(path, "rb") as f:
        if f.read(len(_MAGIC)) != _MAGIC:
            raise ValueError("not a distance-field file")
        (d,) = struct.unpack("<I", f.read(4))
        dims = struct.unpack(f"<{d}Q", f.read(8 * d))
        (h,) = struct.unpack("<d", f.read(8))
        origin = np.array(struct.unpack(f"<{d}d", f.read(8 * d)))
        depth_error, diameter = struct.unpack("<dd", f.read(16))
        n = int(np.prod(dims))
        values = np.frombuffer(f.read(8 * n), dtype="<f8").reshape(dims).copy()
        mask = np.frombuffer(f.read(n), dtype=np.uint8).reshape(dims).astype(bool)
    grid = Grid(origin=origin, h=h, dims=dims, omega_mask=mask)
    return DistanceField(grid=grid, values=values, depth_error=depth_error, diameter=diameter)


def distance_field_to_csv(field: DistanceField, path: str, max_cells: int = 1 << 20):
    """Plain-text export for small grids: index, center, distance, in_domain."""
    g = field.grid
    if g.n_cells > max_cells:
        raise ValueError(f"{g.n_cells} cells exceed the CSV cap {max_cells}")
    idx = np.indices(g.dims).reshape(g.dim, -1).T
    pts = g.centers()
    cols_i = ",".join(f"i{ax}" for ax in range(g.dim))
    cols_x = ",".join(f"x{ax}" for ax in range(g.dim))
    with open(path, "w") as f:
        f.write(f"{cols_i},{cols_x},dist,in_domain\n")
        vals = field.values.ravel()
        msk = g.omega_mask.ravel().astype(int)
        for row_i, row_x, v, m in zip(idx, pts, vals, msk):
            si = ",".join(str(int(v_)) for v_ in row_i)
            sx = ",".join(f"{v_:.17g}" for v_ in row_x)
            f.write(f"{si},{sx},{v:.17g},{m}\n")
