"""Linearized implicit P1 finite elements for the 2D evolution problem.

The PDE is u_t = div(u grad(u + V)) on the unit square with mixed
Dirichlet / zero-flux boundary conditions.  One implicit Euler step
freezes the diffusion mobility at the clamped previous iterate
u+ = max(u, 0) (nodal clamp), keeping each step linear:

    (1/dt)(u_new - u+, psi) + (u+ grad u_new, grad psi)
                            + (u_new grad V, grad psi) = 0

for all test functions psi vanishing on the Dirichlet part.

Both gradient terms are assembled in edge form.  With k_ij the P1
stiffness entry of edge (i, j) and V interpolated at the nodes,

    (u+ grad u_new, grad psi_i) -> sum_j k_ij m_ij (u_j - u_i),
    (u_new grad V,  grad psi_i) -> sum_j k_ij (u_i + u_j)/2 (V_j - V_i),

where m_ij is the arithmetic mean of the clamped endpoint values, and
the time term is mass-lumped.  This quadrature is chosen over exact
per-triangle integration because it preserves the structure of the
continuous equation discretely: the operator acts on nodal u + V, so
u = gamma - V is an exact steady state, total mass is conserved
exactly under all-Neumann conditions, x2-independent data stays
x2-independent on the structured mesh (boundary-row stencils reduce
to exact halves of interior ones), and on such data the scheme
collapses to the same arithmetic-mean finite-volume scheme the 1D
oracle uses.
"""

import dataclasses
import warnings

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import EngineError, ValidationError
from .mesh2d import BoundaryTag, Mesh2D

__all__ = [
    "Field",
    "Dirichlet",
    "ZeroFlux",
    "BoundarySpec",
    "StepperConfig",
    "LinearSystem",
    "Trajectory",
    "AssemblyContext",
    "SingularSystemError",
    "SolverConvergenceError",
    "assemble_step",
    "solve_linear",
    "evolve",
    "detect_steady",
    "recover_flux",
    "apply_dirichlet",
    "mass_matrix",
]


class SingularSystemError(EngineError):
    """The step matrix could not be solved to tolerance."""


class SolverConvergenceError(EngineError):
    """The iterative solver did not reach the requested tolerance."""


@dataclasses.dataclass
class Field:
    """Nodal values on a mesh; shape (n_vertices,) or (n_vertices, 2)."""

    mesh: Mesh2D
    values: np.ndarray


@dataclasses.dataclass(frozen=True)
class Dirichlet:
    """Pinned positive boundary value."""

    value: float

    def __post_init__(self):
        if not self.value > 0.0:
            raise ValidationError(f"Dirichlet value must be positive, got {self.value}")


@dataclasses.dataclass(frozen=True)
class ZeroFlux:
    """Natural (no-flux) boundary segment."""


@dataclasses.dataclass
class BoundarySpec:
    """Condition per boundary tag; all five tags must be present."""

    conditions: dict

    def __post_init__(self):
        missing = [t for t in BoundaryTag if t not in self.conditions]
        if missing:
            names = ", ".join(t.name for t in missing)
            raise ValidationError(f"boundary spec is missing {names}")
        for tag, cond in self.conditions.items():
            if not isinstance(cond, (Dirichlet, ZeroFlux)):
                raise ValidationError(
                    f"{tag.name}: conditions must be Dirichlet or ZeroFlux, got {cond!r}")

    def is_dirichlet(self, tag):
        return isinstance(self.conditions[tag], Dirichlet)

    def dirichlet_tags(self):
        return [t for t in BoundaryTag if self.is_dirichlet(t)]

    def value(self, tag):
        cond = self.conditions[tag]
        return cond.value if isinstance(cond, Dirichlet) else None


@dataclasses.dataclass
class StepperConfig:
    """Time-stepping parameters.

    ``snapshot_times`` must be multiples of ``dt`` (so must ``t_end``).
    ``steady_tol`` stops early once max|du|/dt falls below it.
    ``diffusion_scale`` rescales the nonlinear diffusion term and
    exists for sensitivity checks; the model itself has scale 1.
    """

    dt: float
    t_end: float
    snapshot_times: tuple = ()
    steady_tol: float = None
    solver_tol: float = 1e-10
    diffusion_scale: float = 1.0
    store_steps: bool = False
    method: str = "direct"


@dataclasses.dataclass
class LinearSystem:
    """One implicit step reduced to the free (non-Dirichlet) nodes."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray
    dirichlet: np.ndarray
    dirichlet_values: np.ndarray
    n_nodes: int

    def compose(self, free_values):
        full = np.empty(self.n_nodes)
        full[self.free] = free_values
        full[self.dirichlet] = self.dirichlet_values
        return full


@dataclasses.dataclass
class Trajectory:
    """Result of ``evolve``: snapshots, change history, steady info."""

    mesh: Mesh2D
    dt: float
    n_steps: int
    final: Field
    snapshots: list
    step_changes: np.ndarray
    steady_step: int = None
    steady_time: float = None
    steady_field: Field = None
    all_fields: list = None


def _as_values(mesh, u_in):
    if isinstance(u_in, Field):
        u_in = u_in.values
    vals = np.asarray(u_in, dtype=float)
    if vals.shape != (mesh.n_vertices,):
        raise ValidationError(
            f"initial data must have {mesh.n_vertices} nodal values, got shape {vals.shape}")
    return vals.copy()


def apply_dirichlet(mesh, bc, values, warn=True):
    """Copy of ``values`` with Dirichlet nodes set to their boundary data.

    Warns when existing values disagree beyond 1e-12 (the same policy
    ``evolve`` applies to initial data).
    """
    out = _as_values(mesh, values)
    for tag in bc.dirichlet_tags():
        nodes = mesh.vertices_with_tag(tag)
        val = bc.value(tag)
        if warn and len(nodes) and np.max(np.abs(out[nodes] - val)) > 1e-12:
            warnings.warn(f"initial data disagrees with the {tag.name} Dirichlet "
                          "value; boundary nodes were overwritten", stacklevel=2)
        out[nodes] = val
    return out


class AssemblyContext:
    """Per-(mesh, potential) arrays shared across time steps.

    Precomputes geometry, the edge list with its stiffness weights and
    nodal potential differences, and the scatter indices, so each step
    only rescales the edge entries by the frozen mobility and sums into
    a sparse matrix.
    """

    def __init__(self, mesh, v, diffusion_scale=1.0):
        if v.dim != 2:
            raise ValidationError("the 2D stepper needs a 2-variable potential")
        self.mesh = mesh
        self.potential = v
        self.diffusion_scale = diffusion_scale
        tri = mesh.triangles
        pts = mesh.points[tri]  # (nt, 3, 2)
        nt = len(tri)
        e0 = pts[:, 2] - pts[:, 1]
        e1 = pts[:, 0] - pts[:, 2]
        e2 = pts[:, 1] - pts[:, 0]
        area = 0.5 * (e2[:, 0] * (-e1[:, 1]) - e2[:, 1] * (-e1[:, 0]))
        if np.any(area <= 0.0):
            raise ValidationError("mesh has non-CCW or degenerate triangles")
        self.areas = area
        grads = np.empty((nt, 3, 2))
        for k, e in enumerate((e0, e1, e2)):
            grads[:, k, 0] = -e[:, 1]
            grads[:, k, 1] = e[:, 0]
        grads /= (2.0 * area)[:, None, None]
        self.grads = grads

        self.stiff = area[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)
        mref = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
        self.mass = area[:, None, None] * mref[None, :, :]

        # Edge midpoints m_k sit opposite vertex k; grad V is evaluated
        # there analytically for the flux projection in recover_flux.
        mids = 0.5 * (pts[:, [1, 2, 0], :] + pts[:, [2, 0, 1], :])
        gx, gy = v.gradient(mids[:, :, 0], mids[:, :, 1])
        self.grad_v_mid = np.stack([gx, gy], axis=-1)  # (nt, 3, 2)

        nv = mesh.n_vertices
        self.n_nodes = nv
        idx = np.arange(3)
        el_rows = tri[:, np.repeat(idx, 3)].ravel()
        el_cols = tri[:, np.tile(idx, 3)].ravel()
        mass_flat = self.mass.reshape(nt, 9).ravel()
        self.mass_csr = sp.csr_matrix(
            (mass_flat, (el_rows, el_cols)), shape=(nv, nv))
        self._mass_solve = None
        self.lumped_mass = np.bincount(
            tri.ravel(), weights=np.repeat(area / 3.0, 3), minlength=nv)

        # Assembled off-diagonal stiffness entries, one per directed edge.
        k_geo = sp.csr_matrix(
            (self.stiff.reshape(nt, 9).ravel(), (el_rows, el_cols)),
            shape=(nv, nv)).tocoo()
        off = (k_geo.row != k_geo.col) & (k_geo.data != 0.0)
        self.edge_rows = k_geo.row[off]
        self.edge_cols = k_geo.col[off]
        self.edge_stiff = k_geo.data[off]
        v_nodal = np.asarray(
            v.value(mesh.points[:, 0], mesh.points[:, 1]), dtype=float)
        self.v_nodal = v_nodal
        self.edge_dv = v_nodal[self.edge_cols] - v_nodal[self.edge_rows]
        # Drift is time-independent: entry k_ij (V_j - V_i)/2 feeds both
        # the (i,j) slot and, summed over j, the (i,i) slot.
        drift_off = 0.5 * self.edge_stiff * self.edge_dv
        self.drift_off = drift_off
        self.drift_diag = np.bincount(self.edge_rows, weights=drift_off,
                                      minlength=nv)
        diag = np.arange(nv)
        self.rows = np.concatenate([self.edge_rows, diag])
        self.cols = np.concatenate([self.edge_cols, diag])

    def mass_solver(self):
        if self._mass_solve is None:
            self._mass_solve = spla.splu(self.mass_csr.tocsc())
        return self._mass_solve

    def step_values(self, u_prev_clamped, dt):
        """Entry values at (rows, cols) of M/dt + K(m) + D for one step."""
        m = 0.5 * (u_prev_clamped[self.edge_rows] + u_prev_clamped[self.edge_cols])
        kvals = self.diffusion_scale * self.edge_stiff * m
        diag = (self.lumped_mass / dt + self.drift_diag
                - np.bincount(self.edge_rows, weights=kvals, minlength=self.n_nodes))
        return np.concatenate([kvals + self.drift_off, diag])

    def residual(self, u_new, u_prev_clamped, dt):
        """Nodal weak residual A u_new - (1/dt) M u_prev_clamped.

        Zero at free nodes once the step is solved; at Dirichlet nodes
        it equals minus the outward boundary flux functional.
        """
        vals = self.step_values(u_prev_clamped, dt)
        au = np.bincount(self.rows, weights=vals * u_new[self.cols],
                         minlength=self.n_nodes)
        return au - self.lumped_mass * u_prev_clamped / dt


class _BcMaps:
    # Free/Dirichlet bookkeeping for one BoundarySpec on one mesh.

    def __init__(self, mesh, bc, ctx):
        nv = mesh.n_vertices
        dirichlet_mask = np.zeros(nv, dtype=bool)
        values = np.zeros(nv)
        for tag in bc.dirichlet_tags():
            nodes = mesh.vertices_with_tag(tag)
            dirichlet_mask[nodes] = True
            values[nodes] = bc.value(tag)
        self.dirichlet = np.nonzero(dirichlet_mask)[0]
        self.free = np.nonzero(~dirichlet_mask)[0]
        self.dirichlet_values = values[self.dirichlet]
        self.full_values = values
        index = np.full(nv, -1, dtype=np.int64)
        index[self.free] = np.arange(len(self.free))
        row_free = ~dirichlet_mask[ctx.rows]
        col_free = ~dirichlet_mask[ctx.cols]
        self.ff = row_free & col_free
        self.fd = row_free & ~col_free
        self.rows_ff = index[ctx.rows[self.ff]]
        self.cols_ff = index[ctx.cols[self.ff]]
        self.rows_fd = index[ctx.rows[self.fd]]
        self.cols_fd = ctx.cols[self.fd]
        self.n_free = len(self.free)


def _build_system(ctx, maps, u_prev_clamped, dt):
    vals = ctx.step_values(u_prev_clamped, dt)
    a_ff = sp.csr_matrix((vals[maps.ff], (maps.rows_ff, maps.cols_ff)),
                         shape=(maps.n_free, maps.n_free))
    rhs_full = ctx.lumped_mass * u_prev_clamped / dt
    b = rhs_full[maps.free]
    if len(maps.rows_fd):
        lift = np.bincount(maps.rows_fd,
                           weights=vals[maps.fd] * maps.full_values[maps.cols_fd],
                           minlength=maps.n_free)
        b = b - lift
    return LinearSystem(matrix=a_ff, rhs=b, free=maps.free,
                        dirichlet=maps.dirichlet,
                        dirichlet_values=maps.dirichlet_values,
                        n_nodes=ctx.n_nodes)


def assemble_step(mesh, u_prev, v, bc, dt, *, context=None, diffusion_scale=1.0):
    """Assemble one implicit step as a ``LinearSystem``.

    ``u_prev`` is the previous iterate; the nonnegative clamp is
    applied here.  Pass a shared ``AssemblyContext`` to amortize the
    element arrays over many steps.
    """
    if dt <= 0.0:
        raise ValidationError(f"dt must be positive, got {dt}")
    ctx = context or AssemblyContext(mesh, v, diffusion_scale)
    maps = _BcMaps(mesh, bc, ctx)
    u_clamped = np.maximum(_as_values(mesh, u_prev), 0.0)
    return _build_system(ctx, maps, u_clamped, dt)


def solve_linear(system, tol=1e-10, method="direct"):
    """Solve the reduced step system and verify the residual.

    ``method`` is "direct" (sparse LU) or "bicgstab" (ILU
    preconditioned).  The relative residual is checked against ``tol``
    either way.
    """
    a = system.matrix
    b = system.rhs
    if method == "direct":
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            try:
                x = spla.spsolve(a.tocsc(), b)
            except (spla.MatrixRankWarning, RuntimeError) as exc:
                raise SingularSystemError(f"direct solve failed: {exc}") from None
    elif method == "bicgstab":
        try:
            ilu = spla.spilu(a.tocsc(), drop_tol=1e-6, fill_factor=20)
        except RuntimeError as exc:
            raise SingularSystemError(f"ILU factorization failed: {exc}") from None
        prec = spla.LinearOperator(a.shape, ilu.solve)
        x, info = spla.bicgstab(a, b, rtol=tol, atol=0.0, M=prec, maxiter=2000)
        if info != 0:
            raise SolverConvergenceError(f"bicgstab stopped with code {info}")
    else:
        raise ValidationError(f"unknown method {method!r}")
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("solution contains non-finite entries")
    scale = np.linalg.norm(b)
    res = np.linalg.norm(a.dot(x) - b)
    if res > tol * max(scale, 1.0):
        raise SingularSystemError(
            f"solve residual {res:.3g} exceeds tolerance {tol:g} (|b| = {scale:.3g})")
    return x


def _step_index(t, dt, what):
    k = int(round(t / dt))
    if abs(t - k * dt) > 1e-12 * max(1.0, abs(t)):
        raise ValidationError(f"{what} = {t} is not a multiple of dt = {dt}")
    return k


def evolve(mesh, u_in, v, bc, config, hooks=(), context=None):
    """March the implicit scheme from nodal data ``u_in``.

    Parameters
    ----------
    mesh : Mesh2D
    u_in : Field or array
        Nonnegative initial nodal values.  Values on Dirichlet nodes
        are overwritten by the boundary data (with a warning if they
        disagree).
    v : Potential (2D)
    bc : BoundarySpec
    config : StepperConfig
    hooks : iterable of callables
        Called as ``hook(step, t, u_new, u_prev_clamped)`` after every
        step; ``u_prev_clamped`` is the mobility iterate of the step.
    context : AssemblyContext, optional
        Shared element arrays (built here when omitted).

    Returns
    -------
    Trajectory
    """
    if config.dt <= 0.0:
        raise ValidationError(f"dt must be positive, got {config.dt}")
    n_steps = _step_index(config.t_end, config.dt, "t_end")
    if n_steps < 1:
        raise ValidationError(f"t_end = {config.t_end} gives no steps at dt = {config.dt}")
    snap_steps = {}
    for t in config.snapshot_times:
        k = _step_index(float(t), config.dt, "snapshot time")
        if not 0 <= k <= n_steps:
            raise ValidationError(f"snapshot time {t} is outside [0, {config.t_end}]")
        snap_steps[k] = float(t)

    ctx = context or AssemblyContext(mesh, v, config.diffusion_scale)
    maps = _BcMaps(mesh, bc, ctx)
    u = _as_values(mesh, u_in)
    if np.min(u) < 0.0:
        raise ValidationError(f"initial data has negative values (min {np.min(u):.3g})")
    if len(maps.dirichlet):
        mismatch = np.abs(u[maps.dirichlet] - maps.dirichlet_values)
        if np.max(mismatch, initial=0.0) > 1e-12:
            warnings.warn("initial data disagrees with Dirichlet values; "
                          "boundary nodes were overwritten", stacklevel=2)
        u[maps.dirichlet] = maps.dirichlet_values

    snapshots = []
    if 0 in snap_steps:
        snapshots.append((0.0, Field(mesh, u.copy())))
    all_fields = [Field(mesh, u.copy())] if config.store_steps else None
    step_changes = np.empty(n_steps)
    steady_step = steady_time = steady_field = None

    done = 0
    for step in range(1, n_steps + 1):
        u_clamped = np.maximum(u, 0.0)
        system = _build_system(ctx, maps, u_clamped, config.dt)
        x = solve_linear(system, tol=config.solver_tol, method=config.method)
        u_new = system.compose(x)
        t = step * config.dt
        for hook in hooks:
            hook(step, t, u_new, u_clamped)
        change = float(np.max(np.abs(u_new - u)) / config.dt)
        step_changes[step - 1] = change
        u = u_new
        done = step
        if config.store_steps:
            all_fields.append(Field(mesh, u.copy()))
        if step in snap_steps:
            snapshots.append((snap_steps[step], Field(mesh, u.copy())))
        if config.steady_tol is not None and change < config.steady_tol:
            steady_step = step
            steady_time = t
            steady_field = Field(mesh, u.copy())
            break

    return Trajectory(mesh=mesh, dt=config.dt, n_steps=done,
                      final=Field(mesh, u.copy()), snapshots=snapshots,
                      step_changes=step_changes[:done],
                      steady_step=steady_step, steady_time=steady_time,
                      steady_field=steady_field, all_fields=all_fields)


def detect_steady(trajectory, steady_tol):
    """First step whose change rate max|du|/dt fell below ``steady_tol``.

    Returns ``(step, field_or_None)`` or ``None``; the field is only
    available when the trajectory stored per-step fields.
    """
    idx = np.nonzero(trajectory.step_changes < steady_tol)[0]
    if len(idx) == 0:
        return None
    step = int(idx[0]) + 1
    field = None
    if trajectory.all_fields is not None:
        field = trajectory.all_fields[step]
    elif trajectory.steady_step == step:
        field = trajectory.steady_field
    return step, field


def recover_flux(mesh, u_new, u_prev, v, *, context=None):
    """L2-project the discrete flux -u+ grad u - u grad V onto P1.

    ``u_prev`` enters through the clamped mobility exactly as in the
    time step, so at steady state the projection is consistent with the
    scheme's own flux.  Returns a vector ``Field`` (n_vertices, 2).
    """
    ctx = context or AssemblyContext(mesh, v)
    u_new = _as_values(mesh, u_new)
    up = np.maximum(_as_values(mesh, u_prev), 0.0)
    tri = mesh.triangles
    gradu = np.einsum("tkd,tk->td", ctx.grads, u_new[tri])  # (nt, 2)
    mloc_up = np.einsum("tij,tj->ti", ctx.mass, up[tri])  # (nt, 3)
    u_mid = 0.5 * (u_new[tri[:, [1, 2, 0]]] + u_new[tri[:, [2, 0, 1]]])  # (nt, 3)
    b = np.zeros((ctx.n_nodes, 2))
    for comp in range(2):
        diff = -mloc_up * gradu[:, comp][:, None]  # (nt, 3=test)
        f_mid = u_mid * ctx.grad_v_mid[:, :, comp]  # (nt, 3=k)
        drift = -(ctx.areas[:, None] / 6.0) * (f_mid.sum(axis=1)[:, None] - f_mid)
        contrib = (diff + drift).ravel()
        b[:, comp] = np.bincount(tri.ravel(), weights=contrib, minlength=ctx.n_nodes)
    solver = ctx.mass_solver()
    q = np.column_stack([solver.solve(b[:, 0]), solver.solve(b[:, 1])])
    return Field(mesh, q)


def mass_matrix(mesh):
    """Consistent P1 mass matrix (CSR); ``(M @ u).sum()`` integrates u."""
    tri = mesh.triangles
    pts = mesh.points[tri]
    e1 = pts[:, 1] - pts[:, 0]
    e2 = pts[:, 2] - pts[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    mref = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    vals = (area[:, None, None] * mref[None, :, :]).reshape(len(tri), 9).ravel()
    idx = np.arange(3)
    rows = tri[:, np.repeat(idx, 3)].ravel()
    cols = tri[:, np.tile(idx, 3)].ravel()
    nv = mesh.n_vertices
    return sp.csr_matrix((vals, (rows, cols)), shape=(nv, nv))
