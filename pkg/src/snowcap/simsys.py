"""Self-similar boundary systems and their finite-depth realizations.

A boundary is described by an iterated system of contracting similarities.
The module solves the Moran equation for the similarity dimension, exposes the
uniqueness threshold ``critical_delta``, and realizes the three named families
(Koch snowflake, Vicsek cross, Cantor dust) as finite unions of primitives
(segments in the plane, axis-aligned boxes otherwise) suitable for gridding.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DepthOverflow, NoSolutionInRange

__all__ = [
    "Similarity",
    "SimilaritySystem",
    "BoundaryGeometry",
    "similarity_dimension",
    "critical_delta",
    "koch_snowflake",
    "vicsek",
    "cantor_dust",
    "realize",
    "geometry_to_text",
    "geometry_from_text",
]

_ORTHO_TOL = 1e-12

# primitive-count guardrails; semantics are unchanged by raising them
DEPTH_CAPS = {
    ("koch", 2): 10,
    ("vicsek", 2): 9,
    ("vicsek", 3): 6,
    ("cantor-dust", 1): 20,
    ("cantor-dust", 2): 11,
    ("cantor-dust", 3): 7,
}


@dataclass(frozen=True)
class Similarity:
    """Contracting similarity x -> ratio * R x + t with R orthogonal."""

    ratio: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float)
        if not 0.0 < self.ratio < 1.0:
            raise ValueError(f"contraction ratio must lie in (0,1), got {self.ratio}")
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError("rotation must be a square matrix")
        if t.shape != (R.shape[0],):
            raise ValueError("translation length must match rotation dimension")
        if np.abs(R.T @ R - np.eye(R.shape[0])).max() > _ORTHO_TOL:
            raise ValueError("rotation must be orthogonal (R^T R = I within 1e-12)")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @property
    def dim(self) -> int:
        return self.rotation.shape[0]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return self.ratio * points @ self.rotation.T + self.translation


@dataclass(frozen=True)
class SimilaritySystem:
    """A finite system of contracting similarities in R^d.

    Parameters
    ----------
    dim : ambient dimension d >= 1.
    maps : the contracting similarities, all acting on R^d.
    family : one of "koch", "vicsek", "cantor-dust", "custom".
    lam : generator parameter for the named families, None for "custom".
    """

    dim: int
    maps: tuple
    family: str = "custom"
    lam: float | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("ambient dimension must be >= 1")
        if not self.maps:
            raise ValueError("a similarity system needs at least one map")
        maps = tuple(self.maps)
        for m in maps:
            if not isinstance(m, Similarity) or m.dim != self.dim:
                raise ValueError("all maps must be Similarity instances in the ambient dimension")
        if self.family not in ("koch", "vicsek", "cantor-dust", "custom"):
            raise ValueError(f"unknown family tag {self.family!r}")
        if self.family == "koch" and not 0.0 < self.lam <= 1.0 / 3.0:
            raise ValueError("koch requires lambda in (0, 1/3]")
        if self.family in ("vicsek", "cantor-dust") and not 0.0 < self.lam < 0.5:
            raise ValueError(f"{self.family} requires lambda in (0, 1/2)")
        object.__setattr__(self, "maps", maps)

    @property
    def ratios(self) -> np.ndarray:
        return np.array([m.ratio for m in self.maps])


def similarity_dimension(system: SimilaritySystem, tol: float = 1e-12) -> float:
    """Solve the Moran equation sum_k r_k^s = 1 for s by bisection on [0, d].

    Raises NoSolutionInRange when sum r_k^d > 1 (overlapping system whose
    formal dimension exceeds the ambient space).
    """
    r = system.ratios
    d = float(system.dim)

    def f(s):
        return float(np.sum(r**s))

    if f(d) > 1.0 + 1e-9:
        raise NoSolutionInRange(
            f"sum r_k^d = {f(d):.6f} > 1: no similarity dimension in [0, {d}]"
        )
    if abs(f(0.0) - 1.0) <= tol:  # single map
        return 0.0
    if abs(f(d) - 1.0) <= tol:
        return d

    lo, hi = 0.0, d
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # bracket at machine precision
            break
        if f(mid) >= 1.0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    if abs(f(s) - 1.0) > tol:
        raise NoSolutionInRange(f"bisection residual {abs(f(s)-1.0):.3e} exceeds tol {tol:.3e}")
    return s


def critical_delta(s: float, d: int) -> float:
    """Uniqueness threshold delta_c = 1 + (s - (d-1)) = 2 + s - d.

    Valid for boundary dimension 0 < s < d; degeneration orders at or above
    this threshold make the boundary invisible to the form.
    """
    if not 0.0 < s < d:
        raise ValueError(f"critical_delta requires 0 < s < d, got s={s}, d={d}")
    return 2.0 + s - float(d)


@dataclass(frozen=True)
class BoundaryGeometry:
    """Finite-depth realization of a boundary as a union of primitives.

    primitives: segments with shape (n, 2, 2) when kind == "segments",
    axis-aligned boxes with shape (n, 2, d) holding [lo, hi] rows otherwise.
    domain_rule selects how the domain is carved out of the ambient space:
    "interior" (inside the closed polygon formed by the segments) or
    "complement" (outside every box). `system` is the generating similarity
    system when the geometry came from one, else None.
    """

    dim: int
    kind: str
    primitives: np.ndarray
    depth: int
    approx_error: float
    domain_rule: str
    system: SimilaritySystem | None = None
    _diameter: float = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        p = np.asarray(self.primitives, dtype=float)
        if self.kind not in ("segments", "boxes"):
            raise ValueError(f"unknown primitive kind {self.kind!r}")
        if self.kind == "segments" and (p.ndim != 3 or p.shape[1:] != (2, 2) or self.dim != 2):
            raise ValueError("segments must have shape (n, 2, 2) in dimension 2")
        if self.kind == "boxes" and (p.ndim != 3 or p.shape[1] != 2 or p.shape[2] != self.dim):
            raise ValueError("boxes must have shape (n, 2, d)")
        if self.domain_rule not in ("interior", "complement"):
            raise ValueError(f"unknown domain rule {self.domain_rule!r}")
        if self.domain_rule == "interior" and self.kind != "segments":
            raise ValueError("interior domains require a segment polygon")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if self.system is not None and self.system.dim != self.dim:
            raise ValueError("system dimension does not match geometry dimension")
        object.__setattr__(self, "primitives", p)
        lo = p.reshape(len(p) * 2, -1).min(axis=0)
        hi = p.reshape(len(p) * 2, -1).max(axis=0)
        object.__setattr__(self, "_diameter", float(np.linalg.norm(hi - lo)))

    @property
    def diameter(self) -> float:
        """Diameter proxy of the realized boundary (bounding-box diagonal)."""
        return self._diameter

    def bounds(self):
        p = self.primitives
        flat = p.reshape(len(p) * 2, -1)
        return flat.min(axis=0), flat.max(axis=0)


def _check_depth(family: str, dim: int, depth: int, max_depth: int | None):
    cap = max_depth if max_depth is not None else DEPTH_CAPS.get((family, dim), 10)
    if depth > cap:
        raise DepthOverflow(f"{family} depth {depth} exceeds cap {cap}")
    if depth < 0:
        raise ValueError("depth must be >= 0")


def _rot2(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _koch_system(lam: float) -> SimilaritySystem:
    # four maps acting on the base segment (0,0)-(1,0); the replaced middle
    # portion bulges to the right of the direction of travel so that a
    # counterclockwise polygon grows outward
    alpha = (1.0 - lam) / 2.0
    apex = np.array([alpha + lam / 2.0, -lam * np.sqrt(3) / 2.0])
    eye = np.eye(2)
    maps = (
        Similarity(alpha, eye, np.zeros(2)),
        Similarity(lam, _rot2(-np.pi / 3), np.array([alpha, 0.0])),
        Similarity(lam, _rot2(np.pi / 3), apex),
        Similarity(alpha, eye, np.array([alpha + lam, 0.0])),
    )
    return SimilaritySystem(2, maps, family="koch", lam=lam)


def _cube_corner_maps(lam: float, dim: int):
    corners = np.stack(np.meshgrid(*([[0.0, 1.0]] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    eye = np.eye(dim)
    return [Similarity(lam, eye, c * (1.0 - lam)) for c in corners]


def _vicsek_system(lam: float, dim: int) -> SimilaritySystem:
    maps = _cube_corner_maps(lam, dim)
    maps.append(Similarity(1.0 - 2.0 * lam, np.eye(dim), np.full(dim, lam)))
    return SimilaritySystem(dim, tuple(maps), family="vicsek", lam=lam)


def _cantor_system(lam: float, dim: int) -> SimilaritySystem:
    return SimilaritySystem(dim, tuple(_cube_corner_maps(lam, dim)), family="cantor-dust", lam=lam)


def realize(system: SimilaritySystem, depth: int, base: np.ndarray, kind: str) -> np.ndarray:
    """Apply all length-`depth` words of the system to a base primitive set.

    Segments transform exactly; boxes require axis-preserving maps (identity
    rotation), which holds for the cube families used here.
    """
    prims = np.asarray(base, dtype=float)
    if kind == "boxes":
        for m in system.maps:
            if np.abs(m.rotation - np.eye(system.dim)).max() > _ORTHO_TOL:
                raise ValueError("box realization requires identity rotations")
    for _ in range(depth):
        shape = (len(prims) * len(system.maps),) + prims.shape[1:]
        prims = np.concatenate(
            [m(prims.reshape(-1, system.dim)).reshape(prims.shape) for m in system.maps]
        ).reshape(shape)
    return prims


def koch_snowflake(lam: float, depth: int, max_depth: int | None = None) -> BoundaryGeometry:
    """Koch snowflake boundary at a finite depth.

    Parameters
    ----------
    lam : middle-portion size in (0, 1/3]; lam = 1/3 is the classical curve.
    depth : number of substitution rounds applied to the unit triangle.

    Returns a closed counterclockwise polygon with 3 * 4^depth segments and
    outward-pointing bumps; the domain is the polygon interior.
    """
    system = _koch_system(lam)
    _check_depth("koch", 2, depth, max_depth)
    base = np.array([[[0.0, 0.0], [1.0, 0.0]]])
    curve = realize(system, depth, base, "segments")
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2.0]])
    sides = []
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        e = b - a
        R = np.array([[e[0], -e[1]], [e[1], e[0]]])  # rotate+scale (0,0)-(1,0) onto a-b
        sides.append(curve @ R.T + a)
    segs = np.concatenate(sides)
    r_max = float(system.ratios.max())
    return BoundaryGeometry(2, "segments", segs, depth, r_max**depth, "interior", system)


def vicsek(lam: float, dim: int, depth: int, max_depth: int | None = None) -> BoundaryGeometry:
    """Vicsek cross boundary: 2^d corner cubes of side lam plus a central cube
    of side 1-2*lam, iterated `depth` times inside the unit cube. The domain
    is the complement of the box union."""
    if dim not in (2, 3):
        raise ValueError("vicsek realization supports d in {2, 3}")
    system = _vicsek_system(lam, dim)
    _check_depth("vicsek", dim, depth, max_depth)
    base = np.array([np.stack([np.zeros(dim), np.ones(dim)])])
    boxes = realize(system, depth, base, "boxes")
    r_max = float(system.ratios.max())
    err = np.sqrt(dim) * r_max**depth
    return BoundaryGeometry(dim, "boxes", boxes, depth, err, "complement", system)


def cantor_dust(lam: float, dim: int, depth: int, max_depth: int | None = None) -> BoundaryGeometry:
    """Cantor dust boundary: 2^d corner cubes of side lam per round. The dust
    is totally disconnected; the domain is the complement of the box union."""
    if dim not in (1, 2, 3):
        raise ValueError("cantor dust realization supports d in {1, 2, 3}")
    system = _cantor_system(lam, dim)
    _check_depth("cantor-dust", dim, depth, max_depth)
    base = np.array([np.stack([np.zeros(dim), np.ones(dim)])])
    boxes = realize(system, depth, base, "boxes")
    err = np.sqrt(dim) * lam**depth
    return BoundaryGeometry(dim, "boxes", boxes, depth, err, "complement", system)


# --- line-oriented geometry exchange format ---------------------------------
#
# header:  G d=<dim> depth=<k> family=<tag> lambda=<float> rule=<rule>
# then one primitive per line:
#   S x1 y1 x2 y2                  (segment, d = 2)
#   B lo1 .. lod hi1 .. hid        (axis-aligned box)


def geometry_to_text(geom: BoundaryGeometry) -> str:
    family = geom.system.family if geom.system is not None else "custom"
    lam = geom.system.lam if geom.system is not None else None
    out = io.StringIO()
    out.write(
        f"G d={geom.dim} depth={geom.depth} family={family} "
        f"lambda={'nan' if lam is None else repr(lam)} rule={geom.domain_rule}\n"
    )
    if geom.kind == "segments":
        for (x1, y1), (x2, y2) in geom.primitives:
            out.write(f"S {float(x1)!r} {float(y1)!r} {float(x2)!r} {float(y2)!r}\n")
    else:
        for lo, hi in geom.primitives:
            coords = " ".join(repr(float(v)) for v in np.concatenate([lo, hi]))
            out.write(f"B {coords}\n")
    return out.getvalue()


def geometry_from_text(text: str) -> BoundaryGeometry:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "G":
        raise ValueError("missing geometry header line")
    kv = dict(part.split("=", 1) for part in head[1:])
    dim, depth = int(kv["d"]), int(kv["depth"])
    family, rule = kv["family"], kv["rule"]
    lam = None if kv["lambda"] == "nan" else float(kv["lambda"])

    if family == "koch":
        system = _koch_system(lam)
    elif family == "vicsek":
        system = _vicsek_system(lam, dim)
    elif family == "cantor-dust":
        system = _cantor_system(lam, dim)
    else:
        system = None

    kinds = {ln.split()[0] for ln in lines[1:]}
    rows = np.array([[float(v) for v in ln.split()[1:]] for ln in lines[1:]])
    if kinds == {"S"}:
        prims, kind = rows.reshape(-1, 2, 2), "segments"
    elif kinds == {"B"}:
        prims, kind = rows.reshape(-1, 2, dim), "boxes"
    else:
        raise ValueError(f"mixed or unknown primitive tags {kinds}")
    if system is not None:
        r_max = float(system.ratios.max())
        err = r_max**depth if kind == "segments" else np.sqrt(dim) * r_max**depth
    else:
        err = 0.0
    return BoundaryGeometry(dim, kind, prims, depth, err, rule, system)
