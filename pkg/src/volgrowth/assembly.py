"""Place pieces on the tree and compute the discrete growth function ``z``.

Trunk levels in ``S`` are covered by blocks; every other trunk level carries
one piece per ``∂⁺`` boundary of the preceding block (its strand
multiplicity), and off-trunk vertices carry sphere pieces whose boundary count
is ``1 + number of children``.  Off-trunk branches leaving the trunk attach to
the first strand (or to the block's side port).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .growth import DEFAULT_A_MAX, GrowthFunction, same_growth_type
from .pieces import (
    LOWER_DIM,
    Catalog,
    CatalogBounds,
    Kind,
    PieceSpec,
    default_catalog,
    sphere_kind,
    verify_pieces,
)
from .tree import LevelSet, RootedTree, build_tree, lower_density_profile


class AssemblyError(ValueError):
    pass


class MissingPiece(AssemblyError):
    pass


class InterfaceMismatch(AssemblyError):
    pass


class ScheduleNotFound(AssemblyError):
    pass


TRUNK, BRANCH, BLOCK = "trunk", "branch", "block"


@dataclass(frozen=True)
class PieceInstance:
    id: int
    spec: PieceSpec
    level: int
    strand_multiplicity: int = 1
    vertex: int = 0
    role: str = BRANCH


@dataclass(frozen=True)
class Gluing:
    """The ``∂⁻`` of ``(child, strand, component)`` is glued to a ``∂⁺`` port of the parent."""

    child: int
    strand: int
    component: int
    parent: int
    parent_strand: int
    parent_component: int
    port: int


@dataclass(frozen=True)
class ManifoldModel:
    tree: RootedTree
    schedule: LevelSet
    catalog: Catalog
    instances: tuple
    placements: dict = field(compare=False)
    gluings: tuple = ()

    @property
    def l(self) -> int:
        return self.catalog.bounds.l

    @property
    def horizon(self) -> int:
        return self.tree.horizon

    @property
    def length_horizon(self) -> int:
        """Every point has ``r <= (N + 1) * l``."""
        return (self.horizon + 1) * self.l

    @property
    def basepiece(self) -> PieceInstance:
        return self.instances[self.placements[self.tree.root]]

    def base(self, inst: PieceInstance) -> int:
        return inst.level * self.l

    def total_volume(self) -> int:
        return sum(i.strand_multiplicity * i.spec.total for i in self.instances)


def _port_kind(model_instances, g: Gluing) -> str:
    return model_instances[g.parent].spec.components[g.parent_component].plus_kinds[g.port]


def assemble(v: GrowthFunction, S: LevelSet, tree: RootedTree, catalog: Catalog) -> ManifoldModel:
    counts = tree.level_counts()
    vals = v.values
    if len(counts) != len(vals) or any(
        sum(counts[: n + 1]) != vals[n] for n in range(len(vals))
    ):
        raise AssemblyError("tree does not have growth v at the root")
    torus_mode = catalog.mode == LOWER_DIM
    instances: list = []
    placements: dict = {}
    gluings: list = []
    side_attach: dict = {}  # trunk vertex -> (instance, strand, component, port) for its off-trunk child
    ends: list = []  # open trunk ports awaiting the next trunk level

    def add(spec, level, mult, vertex, role):
        inst = PieceInstance(len(instances), spec, level, mult, vertex, role)
        instances.append(inst)
        return inst

    def glue(child: PieceInstance, strand, comp, parent_port):
        p_inst, p_strand, p_comp, port = parent_port
        kind = instances[p_inst].spec.components[p_comp].plus_kinds[port]
        want = child.spec.components[comp].minus_kind
        if kind != want:
            raise InterfaceMismatch(
                f"{child.spec.label} at level {child.level} has a {want} ∂⁻ but the port above it is a {kind}"
            )
        gluings.append(Gluing(child.id, strand, comp, p_inst, p_strand, p_comp, port))

    for vert in tree.vertices:
        kids = tree.children(vert.id)
        if vert.trunk:
            j = S.interval_of(vert.level)
            if j is not None:
                n_j, t_j = S.intervals[j]
                if vert.level == n_j:
                    spec = catalog.block(j)
                    if spec is None:
                        raise MissingPiece(f"catalog has no block for interval {j} = ({n_j}, {t_j})")
                    if spec.t_units != t_j:
                        raise MissingPiece(f"block {j} has height {spec.t_units}, interval needs {t_j}")
                    if len(ends) != len(spec.components):
                        raise InterfaceMismatch(
                            f"block {j} has {len(spec.components)} components but {len(ends)} strands arrive"
                        )
                    inst = add(spec, n_j, 1, vert.id, BLOCK)
                    for ci, port in enumerate(ends):
                        glue(inst, 0, ci, port)
                    ends = [(inst.id, 0, ci, pi) for ci, pi in spec.trunk_ports()]
                    block_inst = inst
                else:
                    block_inst = instances[placements[tree.trunk(n_j)]]
                placements[vert.id] = block_inst.id
                side = [c for c in kids if not tree[c].trunk]
                if side:
                    if block_inst.spec.side_port is None:
                        raise InterfaceMismatch(f"block {j} has no port for the branch at vertex {side[0]}")
                    ci, pi = block_inst.spec.side_port
                    side_attach[vert.id] = (block_inst.id, 0, ci, pi)
                continue

            mult = max(1, len(ends))
            if torus_mode:
                spec = catalog.torus
            else:
                spec = catalog.sphere(sphere_kind(1 + len(kids)))
            inst = add(spec, vert.level, mult, vert.id, TRUNK)
            placements[vert.id] = inst.id
            for s, port in enumerate(ends):
                glue(inst, s, 0, port)
            has_trunk_child = any(tree[c].trunk for c in kids)
            has_side = any(not tree[c].trunk for c in kids)
            if torus_mode:
                ends = [(inst.id, s, 0, 0) for s in range(mult)] if has_trunk_child else []
                if has_side:
                    side_attach[vert.id] = (inst.id, 0, 0, 1)
            else:
                ends = [(inst.id, s, 0, 0) for s in range(mult)] if has_trunk_child else []
                if has_side:
                    side_attach[vert.id] = (inst.id, 0, 0, kids.index(next(c for c in kids if not tree[c].trunk)))
            continue

        spec = catalog.sphere(sphere_kind(1 + len(kids)))
        inst = add(spec, vert.level, 1, vert.id, BRANCH)
        placements[vert.id] = inst.id
        parent = tree[vert.parent]
        if parent.trunk:
            glue(inst, 0, 0, side_attach[parent.id])
        else:
            p_inst = placements[parent.id]
            glue(inst, 0, 0, (p_inst, 0, 0, tree.children(parent.id).index(vert.id)))

    model = ManifoldModel(tree, S, catalog, tuple(instances), placements, tuple(gluings))
    return model


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str = ""
    vertex: int | None = None

    def line(self) -> str:
        where = f" (vertex {self.vertex})" if self.vertex is not None else ""
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}{where}{': ' + self.detail if self.detail else ''}"


@dataclass(frozen=True)
class ModelReport:
    checks: tuple
    piece_checks: object = None

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks) and (self.piece_checks is None or self.piece_checks.ok)

    def failures(self) -> list:
        return [c for c in self.checks if not c.ok]

    def lines(self) -> list:
        out = [c.line() for c in self.checks]
        if self.piece_checks is not None:
            out += [r.line() for r in self.piece_checks.results]
        return out


def expected_multiplicities(model: ManifoldModel) -> dict:
    """Strand count the multiplicity rule prescribes for each trunk level outside ``S``."""
    out = {}
    mult = 1
    S = model.schedule
    for n in range(model.horizon + 1):
        j = S.interval_of(n)
        if j is not None:
            spec = model.catalog.block(j)
            if spec is not None:
                mult = len(spec.trunk_ports())
            continue
        out[n] = mult
    return out


def validate_model(model: ManifoldModel) -> ModelReport:
    """Check placement, multiplicity and interface invariants; never raises."""
    tree, S = model.tree, model.schedule
    insts = model.instances
    torus_mode = model.catalog.mode == LOWER_DIM
    checks = []

    def fail(name, detail, vertex=None):
        checks.append(Check(name, False, detail, vertex))

    missing = [v.id for v in tree.vertices if v.id not in model.placements]
    for vid in missing[:5]:
        fail("placement", "vertex has no piece", vid)

    mults = expected_multiplicities(model)
    for vert in tree.vertices:
        iid = model.placements.get(vert.id)
        if iid is None:
            continue
        inst = insts[iid]
        kids = tree.children(vert.id)
        j = S.interval_of(vert.level) if vert.trunk else None
        if j is not None:
            n_j, t_j = S.intervals[j]
            if not inst.spec.is_block or inst.spec.index != j:
                fail("placement", f"thin trunk level {vert.level} is not covered by block {j}", vert.id)
            elif inst.level != n_j or inst.spec.t_units != t_j:
                fail(
                    "placement",
                    f"block {j} spans [{inst.level}, {inst.level + inst.spec.t_units - 1}], "
                    f"interval is [{n_j}, {n_j + t_j - 1}]",
                    vert.id,
                )
            continue
        if inst.spec.is_block:
            fail("placement", f"block on level {vert.level} outside S", vert.id)
            continue
        if inst.level != vert.level:
            fail("placement", f"piece level {inst.level} != vertex level {vert.level}", vert.id)
        if vert.trunk and torus_mode:
            if inst.spec.kind is not Kind.TORUS_CYLINDER:
                fail("kind", f"trunk carries {inst.spec.kind.value}, expected TorusCylinder", vert.id)
        else:
            want = sphere_kind(1 + len(kids)) if len(kids) <= 2 else None
            if inst.spec.kind is not want:
                fail("kind", f"{inst.spec.kind.value} on a vertex with {len(kids)} children", vert.id)
        want_mult = mults.get(vert.level, 1) if vert.trunk else 1
        if inst.strand_multiplicity != want_mult:
            fail(
                "multiplicity",
                f"strand multiplicity {inst.strand_multiplicity}, expected {want_mult}",
                vert.id,
            )

    seen_ports, seen_children = set(), set()
    for g in model.gluings:
        child, parent = insts[g.child], insts[g.parent]
        pk = _port_kind(insts, g)
        ck = child.spec.components[g.component].minus_kind
        if pk != ck:
            fail("interface", f"{parent.spec.label} port {g.port} is {pk}, {child.spec.label} ∂⁻ is {ck}", child.vertex)
        key = (g.parent, g.parent_strand, g.parent_component, g.port)
        if key in seen_ports:
            fail("interface", f"port {key} glued twice", child.vertex)
        seen_ports.add(key)
        seen_children.add((g.child, g.strand, g.component))
        if g.strand >= child.strand_multiplicity or g.parent_strand >= parent.strand_multiplicity:
            fail("interface", "gluing refers to a strand that does not exist", child.vertex)
    root_inst = model.basepiece.id
    for inst in insts:
        if inst.id == root_inst:
            continue
        for s in range(inst.strand_multiplicity):
            for ci in range(len(inst.spec.components)):
                if (inst.id, s, ci) not in seen_children:
                    fail("interface", f"{inst.spec.label} strand {s} component {ci} is not glued", inst.vertex)

    if not checks:
        checks.append(Check("model invariants", True))
    specs = []
    for inst in insts:
        if not any(inst.spec is s for s in specs):
            specs.append(inst.spec)
    return ModelReport(tuple(checks), verify_pieces(specs, model.catalog.bounds))


# ---------------------------------------------------------------- radial function and z


@dataclass(frozen=True)
class RadialFunction:
    """``r(x) = ⌊depth of x below ∂⁻⌋ + base``, with base ``n·l`` (or ``n_j·l`` for a block)."""

    offsets: dict
    l: int

    def __call__(self, instance: int, depth) -> int:
        return math.floor(Fraction(depth)) + self.offsets[instance]


def radial(model: ManifoldModel) -> RadialFunction:
    return RadialFunction({i.id: model.base(i) for i in model.instances}, model.l)


def discrete_growth(model: ManifoldModel, n: int) -> int:
    """``z(n)``: total volume of ``{r <= n}``, read off the piece profiles."""
    if n < 0:
        return 0
    total = 0
    for inst in model.instances:
        k = n - model.base(inst) + 1
        if k > 0:
            total += inst.strand_multiplicity * inst.spec.volume(k)
    return total


def discrete_growth_table(model: ManifoldModel, upto: int | None = None) -> tuple:
    """``z(0..upto)`` in one pass; ``upto`` defaults to the length horizon."""
    upto = model.length_horizon if upto is None else upto
    delta = [0] * (upto + 1)
    for inst in model.instances:
        base = model.base(inst)
        for comp in inst.spec.components:
            for k, dv in enumerate(comp.increments(), start=1):
                idx = base + k - 1
                if idx <= upto:
                    delta[idx] += inst.strand_multiplicity * dv
    out, acc = [], 0
    for x in delta:
        acc += x
        out.append(acc)
    return tuple(out)


def level_restricted(z: Sequence[int], l: int, horizon: int) -> tuple:
    """``n -> z(n·l)`` for ``n = 0..horizon``."""
    return tuple(z[n * l] for n in range(horizon + 1))


# ---------------------------------------------------------------- schedule


def _feasible(c: Sequence[int], n: int, t: int) -> bool:
    return all(c[k] <= 2 * c[k - 1] - 1 for k in range(n, n + t))


def _corridor_ok(v, intervals, catalog, a0) -> bool:
    n, t = intervals[-1]
    m = n + t
    if m > v.horizon:
        m = v.horizon
    vt = v.truncate(m)
    S = LevelSet(tuple(intervals))
    tree = build_tree(vt, S, raw=True)
    model = assemble(vt, S, tree, catalog)
    z = discrete_growth(model, m * model.l)
    return z <= a0 * vt(m) + a0 and vt(m) <= a0 * z + a0


def schedule_density_ok(S: LevelSet, horizon: int, density_max=Fraction(15, 100)) -> tuple:
    """Running minimum of the density just before each block must strictly drop, and end below ``density_max``."""
    if not S.intervals:
        return False, "empty schedule"
    prof = lower_density_profile(S, horizon)
    marks = [S.intervals[j + 1][0] - 1 for j in range(len(S) - 1)]
    mins = [prof.min_at(k) for k in marks]
    for a, b, k in zip(mins, mins[1:], marks[1:]):
        if not b < a:
            return False, f"running minimum density does not drop at checkpoint {k}: {float(a):.4f} -> {float(b):.4f}"
    final = prof.min_at(horizon)
    if final >= density_max:
        return False, f"running minimum density {float(final):.4f} >= {float(density_max)} at the horizon"
    return True, ""


def choose_levels(
    v: GrowthFunction,
    t: Sequence[int],
    bounds: CatalogBounds,
    catalog: Catalog | None = None,
    *,
    a_max: int = DEFAULT_A_MAX,
    ratio: int = 3,
    density_max=Fraction(15, 100),
) -> LevelSet:
    """Greedy block schedule ``n_0 < n_1 < ...`` with ``n_j >= d``.

    Each ``n_j`` starts at ``max(ratio·n_(j-1), previous end + 2)``, moves up to
    the first level where the tree can absorb a thin level, and doubles if the
    partial model leaves the corridor ``[v/a_max, a_max·v]``.  Blocks that no
    longer fit under the horizon are dropped.  The result is then checked:
    the density condition of :func:`schedule_density_ok` and the equivalence
    of ``n -> z(n·l)`` with ``v``.
    """
    N = v.horizon
    if catalog is None:
        catalog = default_catalog(bounds, tuple(t))
    c = v.increments()
    intervals: list = []
    n = max(bounds.d, 1)
    for j, tj in enumerate(t):
        if intervals:
            pn, pt = intervals[-1]
            n = max(ratio * pn, pn + pt + 2)
        placed = False
        while n + tj - 1 <= N:
            while n + tj - 1 <= N and not _feasible(c, n, tj):
                n += 1
            if n + tj - 1 > N:
                break
            if _corridor_ok(v, intervals + [(n, tj)], catalog, a_max):
                intervals.append((n, tj))
                placed = True
                break
            n *= 2
        if not placed:
            break
    S = LevelSet(tuple(intervals))
    ok, why = schedule_density_ok(S, N, density_max)
    if not ok:
        raise ScheduleNotFound(f"horizon {N} exhausted: {why}")
    tree = build_tree(v, S, raw=True)
    model = assemble(v, S, tree, catalog)
    z = discrete_growth_table(model)
    if same_growth_type(v, level_restricted(z, model.l, N), a_max) is None:
        raise ScheduleNotFound(f"z is not of the growth type of v within A <= {a_max}")
    return S
