"""Scalar diagnostics of evolving fields: norms, boundary currents.

Boundary currents come from the weak residual rather than from
pointwise flux values: at a solved step the residual vanishes on free
nodes, so summing it over the Dirichlet nodes of a segment yields the
discrete flux functional through that segment.  This "consistent flux"
inherits the scheme's conservation structure and converges one order
faster than integrating the projected flux field along the edge.
"""

import dataclasses

import numpy as np

from .errors import ValidationError
from .fem2d import AssemblyContext, Field
from .mesh2d import BoundaryTag

__all__ = [
    "TimeSeries",
    "record",
    "write_series_csv",
    "l1_norm",
    "boundary_current",
    "projected_boundary_current",
]

_LEFT_TAGS = {BoundaryTag.GAMMA4, BoundaryTag.GAMMA5}
_OUTWARD_NORMALS = {
    BoundaryTag.GAMMA1: np.array([0.0, -1.0]),
    BoundaryTag.GAMMA2: np.array([1.0, 0.0]),
    BoundaryTag.GAMMA3: np.array([0.0, 1.0]),
    BoundaryTag.GAMMA4: np.array([-1.0, 0.0]),
    BoundaryTag.GAMMA5: np.array([-1.0, 0.0]),
}


@dataclasses.dataclass
class TimeSeries:
    """A named scalar signal sampled at increasing times."""

    name: str
    times: list = dataclasses.field(default_factory=list)
    values: list = dataclasses.field(default_factory=list)


def record(series, t, value):
    """Append a sample; times must increase strictly."""
    if series.times and t <= series.times[-1]:
        raise ValidationError(
            f"time {t} does not increase past {series.times[-1]} in series {series.name!r}")
    series.times.append(float(t))
    series.values.append(float(value))
    return series


def write_series_csv(series, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"t,{series.name}\n")
        for t, v in zip(series.times, series.values):
            fh.write(f"{t:.17g},{v:.17g}\n")


def l1_norm(mesh, values):
    """Integral of |u_h| over the square.

    Exact on triangles where the nodal values share a sign; mixed-sign
    triangles fall back to edge-midpoint quadrature of |u|.
    """
    if isinstance(values, Field):
        values = values.values
    values = np.asarray(values, dtype=float)
    tri = mesh.triangles
    pts = mesh.points[tri]
    e1 = pts[:, 1] - pts[:, 0]
    e2 = pts[:, 2] - pts[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    vt = values[tri]  # (nt, 3)
    same_sign = (vt >= 0.0).all(axis=1) | (vt <= 0.0).all(axis=1)
    means = np.abs(vt.mean(axis=1))
    mid_abs = np.abs(0.5 * (vt[:, [1, 2, 0]] + vt[:, [2, 0, 1]]))
    return float(np.sum(area * np.where(same_sign, means, mid_abs.mean(axis=1))))


def _normalize_tags(tags):
    if isinstance(tags, BoundaryTag):
        return [tags]
    out = list(tags)
    if not out:
        raise ValidationError("no boundary tags given")
    for t in out:
        if not isinstance(t, BoundaryTag):
            raise ValidationError(f"expected BoundaryTag, got {t!r}")
    return out


def boundary_current(mesh, u_new, u_prev_clamped, v, dt, tags, bc, *,
                     context=None, reported=True):
    """Consistent flux through the Dirichlet segment(s) in ``tags``.

    ``u_new`` and ``u_prev_clamped`` are the solution and the mobility
    iterate of one solved implicit step.  The raw value is the outward
    flux; with ``reported=True`` left segments (Gamma4/Gamma5) are
    negated so a left-to-right through-current is positive on both
    sides of the device.
    """
    tags = _normalize_tags(tags)
    for t in tags:
        if not bc.is_dirichlet(t):
            raise ValidationError(
                f"{t.name} is a zero-flux segment; its consistent current is "
                "identically zero by construction")
    ctx = context or AssemblyContext(mesh, v)
    if isinstance(u_new, Field):
        u_new = u_new.values
    if isinstance(u_prev_clamped, Field):
        u_prev_clamped = u_prev_clamped.values
    res = ctx.residual(np.asarray(u_new, dtype=float),
                       np.asarray(u_prev_clamped, dtype=float), dt)
    wanted = np.isin(mesh.vertex_tags, [t.value for t in tags])
    outward = -float(res[wanted].sum())
    if reported and set(tags) <= _LEFT_TAGS:
        return -outward
    return outward


def projected_boundary_current(mesh, flux, tags, reported=True):
    """Edge-trapezoid integral of a projected P1 flux field over segments.

    The lower-order alternative to ``boundary_current``; same sign
    convention.
    """
    tags = _normalize_tags(tags)
    if isinstance(flux, Field):
        flux = flux.values
    flux = np.asarray(flux, dtype=float)
    if flux.shape != (len(mesh.points), 2):
        raise ValidationError(f"flux must be (n_vertices, 2), got {flux.shape}")
    wanted = {t.value for t in tags}
    total = 0.0
    for v0, v1, tagval in mesh.boundary_edges:
        if tagval not in wanted:
            continue
        normal = _OUTWARD_NORMALS[BoundaryTag(tagval)]
        length = float(np.linalg.norm(mesh.points[v1] - mesh.points[v0]))
        qn = 0.5 * (flux[v0] + flux[v1]) @ normal
        total += length * qn
    if reported and {BoundaryTag(t) for t in wanted} <= _LEFT_TAGS:
        return -total
    return total
