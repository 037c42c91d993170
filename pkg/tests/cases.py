"""Shared growth tables, schedules and a small pipeline helper for the tests."""

import math

from volgrowth.assembly import assemble
from volgrowth.growth import GrowthFunction
from volgrowth.pieces import CONNECTED_SUM, default_catalog
from volgrowth.simulate import to_metric_graph
from volgrowth.tree import LevelSet, build_tree

N = 60


def from_increments(c, horizon=N):
    """Table with ``v(0) = 1`` and ``v(n) - v(n-1) = c(n)``."""
    return GrowthFunction.from_increments(1, [c(n) for n in range(1, horizon + 1)])


TABLES = {
    "linear": from_increments(lambda n: 2),
    "quadratic": from_increments(lambda n: 2 * n),
    "quadratic-cap20": from_increments(lambda n: min(2 * n, 20)),
    "quadratic-cap50": from_increments(lambda n: min(2 * n, 50)),
    "doubling-cap16": from_increments(lambda n: min(2**n, 16)),
    "doubling-cap64": from_increments(lambda n: min(2**n, 64)),
    "doubling-cap128": from_increments(lambda n: min(2**n, 128)),
    "ramp-thirds": from_increments(lambda n: 2 + n // 3),
    "ramp-unit": from_increments(lambda n: n + 1),
    "ramp-sqrt": from_increments(lambda n: 2 + math.isqrt(n - 1)),
}

SCHEDULES = {
    "empty": LevelSet(),
    "sparse": LevelSet(((8, 1), (16, 1), (32, 1))),
    "dense-then-sparse": LevelSet(((8, 1), (11, 1), (14, 2), (18, 1), (30, 3), (50, 2))),
}


def heights(S):
    return tuple(t for _, t in S.intervals)


def build_model(v, S=LevelSet(), mode=CONNECTED_SUM, catalog=None):
    catalog = catalog or default_catalog(block_heights=heights(S), mode=mode)
    return assemble(v, S, build_tree(v, S), catalog)


def build_graph(v, S=LevelSet(), mode=CONNECTED_SUM, resolution=1):
    m = build_model(v, S, mode)
    return m, to_metric_graph(m, resolution)


def piece_sweep(count=50):
    """Deterministic constructor configurations: ``(bounds, pieces)`` pairs."""
    import itertools

    from volgrowth.pieces import SHAPES, SPHERE_KINDS, CatalogBounds, make_block, make_sphere_piece, make_torus_cylinder

    bounds = [
        CatalogBounds(6, 1, 4, 2),
        CatalogBounds(6, 1, 1, 2),
        CatalogBounds(9, 2, 5, 3, U=(7, 7, 9)),
        CatalogBounds(12, 2, 8, 3),
        CatalogBounds(18, 1, 6, 4, U=(6, 10, 12)),
    ]
    blocks = [(0, 1, 1, [1]), (1, 2, 2, [1, 1]), (2, 3, 1, [2]), (0, 4, 3, [1, 0, 2])]
    tori = [(1, 3), (2, 3), (1, 4)]
    out = []
    for i, (b, shape, blk) in enumerate(itertools.product(bounds, SHAPES, blocks)):
        if len(out) == count:
            break
        j, t, ncomp, counts = blk
        p, q = tori[i % len(tori)]
        pieces = [make_sphere_piece(k, b, shape) for k in SPHERE_KINDS]
        pieces.append(make_block(j, t, ncomp, counts, b, shape))
        pieces.append(make_torus_cylinder(b, p, q, shape))
        out.append((b, pieces))
    return out


def item_violations():
    """For each checkable item, a piece list (with bounds) that breaks exactly that item."""
    from volgrowth.pieces import CatalogBounds, make_block, make_sphere_piece

    b = CatalogBounds(l=6, h=1, H=4, d=2)
    return {
        # profile has 4 shells but T_P = 5 needs 5
        1: ([make_sphere_piece("Sphere2", b, increments=[2, 2, 2, 2])], b),
        # block of height 1 reaching T_P = 7 > l·t_j = 6
        2: ([make_block(0, 1, 1, [1], b, T_P=7)], b),
        # sphere with T_P = l + 1
        3: ([make_sphere_piece("Sphere2", b, T_P=7)], b),
        # ∂⁻ diameter 5 > d = 2
        4: ([make_sphere_piece("Sphere2", b, diameter=5)], b),
        # t_P + offset = 5 + 2 > l = 6
        5: ([make_sphere_piece("Sphere2", b, t_P=5, T_P=5, marked_point_offset=2)], b),
        # shell volume 9 > H = 4
        6: ([make_sphere_piece("Sphere1", b, increments=[2, 2, 9, 2, 2])], b),
        # block shell 9 > U_j = 4
        7: ([make_block(0, 1, 1, [1], b, profiles=[[1, 1, 9, 1, 1]], u_bound=4)], b),
        # Q_0 leaves two strands, Q_1 accepts one
        8: ([make_block(0, 1, 1, [2], b), make_block(1, 1, 1, [1], b)], b),
    }
