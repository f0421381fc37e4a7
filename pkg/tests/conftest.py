"""Shared helpers: standard contact layouts on the unit square."""
from fermidrift.fem2d import BoundarySpec, Dirichlet, ZeroFlux
from fermidrift.mesh2d import BoundaryTag


def contact_layout(u_left, u_right):
    """Dirichlet contacts on the left and right edges, insulated top/bottom."""
    return BoundarySpec({
        BoundaryTag.GAMMA1: ZeroFlux(),
        BoundaryTag.GAMMA2: Dirichlet(u_right),
        BoundaryTag.GAMMA3: ZeroFlux(),
        BoundaryTag.GAMMA4: Dirichlet(u_left),
        BoundaryTag.GAMMA5: Dirichlet(u_left),
    })


def all_neumann():
    return BoundarySpec({tag: ZeroFlux() for tag in BoundaryTag})
