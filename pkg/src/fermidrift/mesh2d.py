"""Structured triangulations of the unit square with tagged boundary.

The boundary splits into five segments:

* Gamma1: bottom,   0 < x1 <= 1, x2 = 0
* Gamma2: right,    x1 = 1, 0 < x2 <= 1
* Gamma3: top,      0 <= x1 < 1, x2 = 1
* Gamma4: left,     x1 = 0, 1/2 <= x2 < 1
* Gamma5: left,     x1 = 0, 0 <= x2 < 1/2

The half-open conventions make the five segments a partition: every
boundary point, corners included, carries exactly one tag.  Meshes are
uniform n x n grids of squares cut along the same diagonal, so the left
split at x2 = 1/2 requires even n.
"""

import dataclasses
import enum

import numpy as np

from .errors import ValidationError

__all__ = ["BoundaryTag", "Mesh2D", "build_structured", "classify_boundary"]

_SNAP = 1e-12


class BoundaryTag(enum.Enum):
    GAMMA1 = 1
    GAMMA2 = 2
    GAMMA3 = 3
    GAMMA4 = 4
    GAMMA5 = 5


def classify_boundary(x1, x2, tol=_SNAP):
    """Tag of the boundary point (x1, x2); raises if interior/outside.

    Coordinates within ``tol`` of 0, 1 or 1/2 are snapped before the
    half-open comparisons, so floating-point mesh coordinates land on
    the intended segment.
    """
    def snap(t):
        for ref in (0.0, 0.5, 1.0):
            if abs(t - ref) <= tol:
                return ref
        return t

    x1, x2 = snap(float(x1)), snap(float(x2))
    inside = lambda t: 0.0 <= t <= 1.0
    if not (inside(x1) and inside(x2)):
        raise ValidationError(f"({x1}, {x2}) lies outside the unit square")
    if x2 == 0.0 and 0.0 < x1 <= 1.0:
        return BoundaryTag.GAMMA1
    if x1 == 1.0 and 0.0 < x2 <= 1.0:
        return BoundaryTag.GAMMA2
    if x2 == 1.0 and 0.0 <= x1 < 1.0:
        return BoundaryTag.GAMMA3
    if x1 == 0.0:
        return BoundaryTag.GAMMA4 if x2 >= 0.5 else BoundaryTag.GAMMA5
    raise ValidationError(f"({x1}, {x2}) is not a boundary point")


@dataclasses.dataclass
class Mesh2D:
    """Conforming P1 triangulation of [0, 1]^2.

    ``triangles`` are counterclockwise vertex triples.
    ``boundary_edges`` is an integer array of rows (v0, v1, tag value).
    ``vertex_tags`` holds a tag value per vertex, 0 for interior ones.
    """

    n: int
    points: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    vertex_tags: np.ndarray

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def n_vertices(self):
        return len(self.points)

    def vertices_with_tag(self, tag):
        return np.nonzero(self.vertex_tags == tag.value)[0]


def build_structured(n):
    """Uniform crossed-diagonal mesh with n x n cells (n even, >= 2).

    Each cell splits along its lower-left to upper-right diagonal into
    two triangles.  Vertex (i, j) has index j*(n+1) + i.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValidationError(f"n must be an integer >= 2, got {n!r}")
    if n % 2 != 0:
        raise ValidationError(
            f"n must be even so the left-edge split at x2 = 1/2 lands on a vertex; got {n}")
    n = int(n)
    side = np.linspace(0.0, 1.0, n + 1)
    xg, yg = np.meshgrid(side, side, indexing="xy")
    points = np.column_stack([xg.ravel(), yg.ravel()])

    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    ll = (jj * (n + 1) + ii).ravel()
    lr = ll + 1
    ul = ll + (n + 1)
    ur = ul + 1
    lower = np.column_stack([ll, lr, ur])
    upper = np.column_stack([ll, ur, ul])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    edges = []
    ids = np.arange(n + 1)
    bottom = ids
    top = n * (n + 1) + ids
    left = ids * (n + 1)
    right = ids * (n + 1) + n
    for k in range(n):
        edges.append((bottom[k], bottom[k + 1], BoundaryTag.GAMMA1.value))
        edges.append((right[k], right[k + 1], BoundaryTag.GAMMA2.value))
        edges.append((top[k], top[k + 1], BoundaryTag.GAMMA3.value))
        half = BoundaryTag.GAMMA4.value if k >= n // 2 else BoundaryTag.GAMMA5.value
        edges.append((left[k], left[k + 1], half))
    boundary_edges = np.asarray(edges, dtype=np.int64)

    vertex_tags = np.zeros(len(points), dtype=np.int64)
    on_boundary = (
        (points[:, 0] <= _SNAP) | (points[:, 0] >= 1.0 - _SNAP)
        | (points[:, 1] <= _SNAP) | (points[:, 1] >= 1.0 - _SNAP))
    for p in np.nonzero(on_boundary)[0]:
        vertex_tags[p] = classify_boundary(points[p, 0], points[p, 1]).value

    return Mesh2D(n=n, points=points, triangles=triangles,
                  boundary_edges=boundary_edges, vertex_tags=vertex_tags)
