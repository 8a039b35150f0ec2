"""
Canonical Delaunay triangulation.

Qhull (via ``scipy.spatial.Delaunay``) produces the triangulation; the
result is then canonicalized so the same input always yields the same
triangle list:

1. vertex indices are sorted inside every triangle and triangles are
   sorted lexicographically;
2. for every interior edge whose quadrilateral is cocircular (relative
   in-circle determinant within ``COCIRCULAR_RTOL``) the diagonal with the
   lexicographically smaller sorted endpoint pair is kept.

Each tie-break flip replaces an edge by a strictly smaller one, so the
flip loop terminates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.spatial import Delaunay, QhullError

from otbmorph.errors import DegenerateInputError, DuplicatePointError

from .landmarks import LandmarkSet

logger = logging.getLogger(__name__)

COCIRCULAR_RTOL = 1e-9
AREA_RTOL = 1e-12

Edge = tuple[int, int]
Triangle = tuple[int, int, int]


@dataclass(frozen=True, eq=False)
class Triangulation:
    """
    Triangles over a point set.

    Attributes:
        vertices: Indices of the points the triangulation is built over
        triangles: (T, 3) int array, indices ascending within each row and
            rows in lexicographic order
        points: (n, 2) coordinates the indices refer to
    """

    vertices: tuple[int, ...]
    triangles: np.ndarray
    points: np.ndarray

    def __len__(self) -> int:
        return int(self.triangles.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Triangulation):
            return NotImplemented
        return self.vertices == other.vertices and bool(
            np.array_equal(self.triangles, other.triangles)
        )

    __hash__ = None  # type: ignore[assignment]

    def edges(self) -> list[Edge]:
        return sorted(_edge_map(_as_tuples(self.triangles)))

    def areas(self) -> np.ndarray:
        p = self.points[self.triangles]
        return 0.5 * np.abs(
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
        )


def _orient(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    return float((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def incircle(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> float:
    """
    Relative in-circle determinant.

    Positive when ``d`` lies strictly inside the circumcircle of ``abc``
    (for either orientation of ``abc``), scaled by the fourth power of the
    quad's extent so the value is comparable against a relative tolerance.
    """
    if _orient(a, b, c) < 0.0:
        a, b = b, a
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    det = (
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        - (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    )
    scale = max(abs(adx), abs(ady), abs(bdx), abs(bdy), abs(cdx), abs(cdy))
    if scale == 0.0:
        return 0.0
    return float(det / scale**4)


def _as_points(points: Union[LandmarkSet, np.ndarray]) -> np.ndarray:
    if isinstance(points, LandmarkSet):
        return points.points
    return np.asarray(points, dtype=np.float64)


def _check_input(pts: np.ndarray) -> None:
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise DegenerateInputError(
            f"Triangulation needs at least 3 two-dimensional points, got shape {pts.shape}"
        )
    _, first, inverse, counts = np.unique(
        pts, axis=0, return_index=True, return_inverse=True, return_counts=True
    )
    if np.any(counts > 1):
        inverse = np.asarray(inverse).reshape(-1)
        dup = tuple(int(i) for i in np.flatnonzero(counts[inverse] > 1))
        raise DuplicatePointError(f"Duplicate points at indices {list(dup)}", dup)
    centred = pts - pts.mean(axis=0)
    singular = np.linalg.svd(centred, compute_uv=False)
    if singular[0] == 0.0 or singular[1] <= AREA_RTOL * singular[0]:
        raise DegenerateInputError("All points are collinear")


def _as_tuples(triangles: np.ndarray) -> list[Triangle]:
    return [tuple(int(v) for v in row) for row in triangles]  # type: ignore[misc]


def _edge_map(triangles: list[Triangle]) -> dict[Edge, list[Triangle]]:
    edges: dict[Edge, list[Triangle]] = {}
    for tri in triangles:
        a, b, c = tri
        for edge in ((a, b), (a, c), (b, c)):
            edges.setdefault(edge, []).append(tri)
    return edges


def _opposite(tri: Triangle, edge: Edge) -> int:
    return next(v for v in tri if v not in edge)


def _canonical_flips(pts: np.ndarray, triangles: list[Triangle]) -> list[Triangle]:
    """Apply legalizing and cocircular tie-break flips until none applies."""
    current = set(triangles)
    max_flips = 10 * len(pts) ** 2
    flips = 0
    while True:
        edges = _edge_map(sorted(current))
        flip = None
        for edge in sorted(edges):
            owners = edges[edge]
            if len(owners) != 2:
                continue
            a, b = edge
            c, d = _opposite(owners[0], edge), _opposite(owners[1], edge)
            pa, pb, pc, pd = pts[a], pts[b], pts[c], pts[d]
            if _orient(pc, pd, pa) * _orient(pc, pd, pb) >= 0.0:
                continue  # quad not strictly convex, flip not valid
            inside = incircle(pa, pb, pc, pd)
            if inside > COCIRCULAR_RTOL or (
                abs(inside) <= COCIRCULAR_RTOL and (min(c, d), max(c, d)) < edge
            ):
                flip = (owners[0], owners[1], a, b, c, d)
                break
        if flip is None:
            return sorted(current)
        t1, t2, a, b, c, d = flip
        current.discard(t1)
        current.discard(t2)
        current.add(tuple(sorted((a, c, d))))  # type: ignore[arg-type]
        current.add(tuple(sorted((b, c, d))))  # type: ignore[arg-type]
        flips += 1
        if flips > max_flips:
            raise DegenerateInputError("Triangulation canonicalization did not converge")


def delaunay_triangulate(points: Union[LandmarkSet, np.ndarray]) -> Triangulation:
    """
    Triangulate a point set with a canonical, deterministic triangle order.

    Args:
        points: LandmarkSet or (n, 2) coordinates

    Returns:
        Triangulation over all input points

    Raises:
        DegenerateInputError: fewer than 3 points or all points collinear
        DuplicatePointError: two points coincide
    """
    pts = _as_points(points)
    _check_input(pts)
    try:
        qhull = Delaunay(pts)
    except QhullError as exc:
        raise DegenerateInputError(f"Qhull could not triangulate the points: {exc}") from exc

    simplices = np.sort(np.asarray(qhull.simplices, dtype=np.int64), axis=1)
    extent = float(np.ptp(pts, axis=0).max())
    p = pts[simplices]
    doubled_area = np.abs(
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
        - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    )
    keep = doubled_area > AREA_RTOL * extent**2
    if not np.all(keep):
        logger.debug("Dropped %d zero-area simplices", int(np.count_nonzero(~keep)))

    triangles = _canonical_flips(pts, _as_tuples(simplices[keep]))
    tri_array = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    frozen_pts = np.array(pts, dtype=np.float64)
    frozen_pts.setflags(write=False)
    tri_array.setflags(write=False)
    return Triangulation(
        vertices=tuple(range(pts.shape[0])),
        triangles=tri_array,
        points=frozen_pts,
    )
