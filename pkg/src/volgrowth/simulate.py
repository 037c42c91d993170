"""Metric-graph discretisation of an assembled model and its ball volumes.

Each piece component becomes a star: a hub (its ``∂⁻`` marked point) with one
leg per ``∂⁺`` boundary, subdivided into edges of length ``1/resolution``.
The shell between depths ``k-1`` and ``k`` carries volume ``v'_P(k)``, spread
evenly over the legs that reach that depth.  Gluing identifies a leg end with
the hub of the piece above it, so the graph is a tree and ball volumes are
exact rationals.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .assembly import (
    ManifoldModel,
    discrete_growth_table,
    level_restricted,
)
from .growth import DEFAULT_A_MAX, GrowthClassWitness, GrowthFunction, same_growth_type


@dataclass(frozen=True)
class GraphVertex:
    id: int
    instance: int
    strand: int
    component: int
    depth: Fraction


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    length: Fraction
    density: Fraction
    instance: int = -1

    @property
    def volume(self) -> Fraction:
        return self.length * self.density


@dataclass(frozen=True)
class MetricGraph:
    vertices: tuple
    edges: tuple
    basepoint: int
    resolution: int = 1
    _adj: list = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        adj = [[] for _ in self.vertices]
        for i, e in enumerate(self.edges):
            adj[e.u].append(i)
            adj[e.v].append(i)
        object.__setattr__(self, "_adj", adj)

    def with_basepoint(self, o: int) -> "MetricGraph":
        return MetricGraph(self.vertices, self.edges, o, self.resolution)

    def total_volume(self) -> Fraction:
        return sum((e.volume for e in self.edges), Fraction(0))

    def instance_volume(self, instance: int) -> Fraction:
        """Volume on the legs of one instance (all strands and components)."""
        return sum((e.volume for e in self.edges if e.instance == instance), Fraction(0))

    def neighbours(self, u: int) -> Iterable:
        for i in self._adj[u]:
            e = self.edges[i]
            yield (e.v if e.u == u else e.u), e

    def distances(self, source: int | None = None) -> list:
        """Exact single-source shortest-path distances (Dijkstra on scaled integer lengths)."""
        source = self.basepoint if source is None else source
        D = _lcm(e.length.denominator for e in self.edges)
        w = [int(e.length * D) for e in self.edges]
        dist = [None] * len(self.vertices)
        dist[source] = 0
        heap = [(0, source)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for i in self._adj[u]:
                e = self.edges[i]
                x = e.v if e.u == u else e.u
                nd = d + w[i]
                if dist[x] is None or nd < dist[x]:
                    dist[x] = nd
                    heapq.heappush(heap, (nd, x))
        return [None if d is None else Fraction(d, D) for d in dist]


def _lcm(xs: Iterable[int]) -> int:
    out = 1
    for x in xs:
        out = out * x // math.gcd(out, x)
    return out


def to_metric_graph(model: ManifoldModel, resolution: int = 1) -> MetricGraph:
    if resolution < 1:
        raise ValueError("resolution must be a positive integer")
    step = Fraction(1, resolution)
    parent_of = {(g.child, g.strand, g.component): (g.parent, g.parent_strand, g.parent_component, g.port)
                 for g in model.gluings}
    verts: list = []
    edges: list = []
    port_vertex: dict = {}

    def new_vertex(inst, strand, comp, depth):
        verts.append(GraphVertex(len(verts), inst, strand, comp, Fraction(depth)))
        return len(verts) - 1

    basepoint = None
    for inst in model.instances:
        for s in range(inst.strand_multiplicity):
            for ci, comp in enumerate(inst.spec.components):
                key = (inst.id, s, ci)
                if key in parent_of:
                    hub = port_vertex[parent_of[key]]
                    verts[hub] = GraphVertex(hub, inst.id, s, ci, Fraction(0))
                else:
                    hub = new_vertex(inst.id, s, ci, 0)
                    if basepoint is None:
                        basepoint = hub
                shells = comp.shells
                legs = [math.ceil(d) for d in comp.port_depths]
                dead_end = not legs or max(legs) < shells
                if dead_end:
                    legs.append(shells)
                inc = comp.increments()
                reach = [sum(1 for L in legs if L >= k) for k in range(shells + 1)]
                for li, L in enumerate(legs):
                    prev = hub
                    for j in range(L * resolution):
                        x = new_vertex(inst.id, s, ci, (j + 1) * step)
                        k = j // resolution + 1
                        rho = Fraction(inc[k - 1], reach[k]) if k <= shells else Fraction(0)
                        edges.append(Edge(prev, x, step, rho, inst.id))
                        prev = x
                    if li < len(comp.port_depths):
                        port_vertex[(inst.id, s, ci, li)] = prev
    return MetricGraph(tuple(verts), tuple(edges), basepoint, resolution)


# ---------------------------------------------------------------- ball volumes


def _covered(a: Fraction, b: Fraction, L: Fraction, alpha: Fraction) -> Fraction:
    """Length of the part of an edge within distance ``alpha`` of the source."""
    return min(L, max(Fraction(0), alpha - a) + max(Fraction(0), alpha - b))


def ball_volume(g: MetricGraph, n, dist: Sequence | None = None) -> Fraction:
    """Volume of ``B(o, n)``, pro-rating partially covered edges by their density."""
    n = Fraction(n)
    if n <= 0:
        return Fraction(0)
    dist = g.distances() if dist is None else dist
    total = Fraction(0)
    for e in g.edges:
        if e.density:
            total += e.density * _covered(dist[e.u], dist[e.v], e.length, n)
    return total


@dataclass(frozen=True)
class BallVolumeTable:
    values: tuple
    distances: tuple

    def __call__(self, alpha: int) -> Fraction:
        return self.values[alpha]

    def __len__(self) -> int:
        return len(self.values)


def ball_volume_table(g: MetricGraph, upto: int, dist: Sequence | None = None) -> BallVolumeTable:
    """``w(alpha)`` for integer ``alpha = 0..upto`` in one sorted sweep.

    Each edge contributes ``ρ·((α-a)+ + (α-b)+ - 2(α-m)+)`` where ``a, b`` are
    its endpoint distances and ``m`` its farthest point, so the whole table is
    a sum of ramps evaluated with running prefix sums.
    """
    dist = g.distances() if dist is None else dist
    D = _lcm(x.denominator for x in dist if x is not None)
    D = _lcm([D] + [e.length.denominator for e in g.edges])
    R = _lcm(e.density.denominator for e in g.edges)
    # work in half-ticks of 1/(2D) so the farthest point of every edge is an integer
    events = []
    for e in g.edges:
        if not e.density:
            continue
        a, b, L = int(dist[e.u] * 2 * D), int(dist[e.v] * 2 * D), int(e.length * 2 * D)
        m = (a + b + L) // 2
        rho = int(e.density * R)
        events += [(a, rho), (b, rho), (m, -2 * rho)]
    events.sort()
    out = []
    slope = 0
    moment = 0
    i = 0
    for alpha in range(upto + 1):
        x = alpha * 2 * D
        while i < len(events) and events[i][0] <= x:
            p, s = events[i]
            slope += s
            moment += s * p
            i += 1
        out.append(Fraction(slope * x - moment, 2 * D * R))
    return BallVolumeTable(tuple(out), tuple(dist))


# ---------------------------------------------------------------- verification


def max_shell_volume(model: ManifoldModel) -> int:
    return max(max(c.increments()) for inst in model.instances for c in inst.spec.components)


def sample_vertices(g: MetricGraph, k: int = 500) -> list:
    n = len(g.vertices)
    if n <= k:
        return list(range(n))
    return sorted({(i * (n - 1)) // (k - 1) for i in range(k)})


def vertex_radial(model: ManifoldModel, vert: GraphVertex) -> int:
    return math.floor(vert.depth) + model.base(model.instances[vert.instance])


@dataclass(frozen=True)
class SandwichReport:
    alphas: tuple
    eps_shell: int
    lower_violations: tuple
    upper_violations: tuple
    point_violations: tuple
    sample_size: int
    c0: int
    complete: bool
    tightest_lower: tuple = ()
    tightest_upper: tuple = ()

    @property
    def ok(self) -> bool:
        return not (self.lower_violations or self.upper_violations or self.point_violations)

    def lines(self) -> list:
        out = [
            f"alpha range: {self.alphas[0]}..{self.alphas[-1]} ({'complete' if self.complete else 'INCOMPLETE'})",
            f"eps_shell: {self.eps_shell}",
            f"z(floor(a/3)) <= w(a) + eps violations: {len(self.lower_violations)}",
            f"w(a) <= z(3a) + eps violations: {len(self.upper_violations)}",
            f"per-point violations: {len(self.point_violations)} of {self.sample_size} sampled (c0={self.c0})",
        ]
        if self.tightest_lower:
            out.append(f"tightest lower side: alpha={self.tightest_lower[0]} slack={self.tightest_lower[1]}")
        if self.tightest_upper:
            out.append(f"tightest upper side: alpha={self.tightest_upper[0]} slack={self.tightest_upper[1]}")
        return out


def verify_sandwich(
    model: ManifoldModel,
    g: MetricGraph,
    alphas: Iterable[int] | None = None,
    *,
    sample: int = 500,
    c0: int | None = None,
    w: BallVolumeTable | None = None,
) -> SandwichReport:
    """Check ``z(⌊α/3⌋) <= w(α) + ε`` and ``w(α) <= z(3α) + ε`` with ``ε`` one maximal shell volume.

    Also checks ``r(x)/3 - c0 <= d(o, x) <= 3·r(x) + c0`` on a deterministic
    vertex sample, ``c0 = l + 1`` by default.
    """
    alphas = tuple(range(model.length_horizon + 1)) if alphas is None else tuple(alphas)
    top = max(alphas)
    c0 = model.l + 1 if c0 is None else c0
    if w is None or len(w) <= top:
        w = ball_volume_table(g, top)
    z = discrete_growth_table(model, 3 * top)
    eps = max_shell_volume(model)
    lower, upper = [], []
    tl = tu = None
    for a in alphas:
        lo_slack = w(a) + eps - z[a // 3]
        up_slack = z[3 * a] + eps - w(a)
        if lo_slack < 0:
            lower.append((a, lo_slack))
        if up_slack < 0:
            upper.append((a, up_slack))
        if tl is None or lo_slack < tl[1]:
            tl = (a, lo_slack)
        if tu is None or up_slack < tu[1]:
            tu = (a, up_slack)
    dist = w.distances
    points = []
    ids = sample_vertices(g, sample)
    for vid in ids:
        r = vertex_radial(model, g.vertices[vid])
        d = dist[vid]
        if d > 3 * r + c0 or d < Fraction(r, 3) - c0:
            points.append((vid, r, d))
    complete = min(alphas) <= 0 and top >= model.length_horizon
    return SandwichReport(
        alphas=alphas,
        eps_shell=eps,
        lower_violations=tuple(lower),
        upper_violations=tuple(upper),
        point_violations=tuple(points),
        sample_size=len(ids),
        c0=c0,
        complete=complete,
        tightest_lower=tl,
        tightest_upper=tu,
    )


# ---------------------------------------------------------------- certificate

VALID, INCOMPLETE, FAILED = "VALID", "INCOMPLETE", "FAILED"


class CertificateFailed(Exception):
    def __init__(self, component: str, certificate: "Certificate"):
        super().__init__(f"certificate failed at {component}")
        self.component = component
        self.certificate = certificate


@dataclass(frozen=True)
class Certificate:
    status: str
    failed_component: str | None
    A1: GrowthClassWitness | None
    A2: GrowthClassWitness | None
    sandwich: SandwichReport
    density_ok: bool
    density_detail: str
    final_density: Fraction | None
    a_max: int
    resolution: int

    @property
    def valid(self) -> bool:
        return self.status == VALID

    def to_record(self) -> str:
        def wit(w):
            return "none" if w is None else str(w.A)

        lines = [
            f"status={self.status}",
            f"failed_component={self.failed_component or ''}",
            f"a_max={self.a_max}",
            f"resolution={self.resolution}",
            f"A1_v_z={wit(self.A1)}",
            f"A1_checked_range={self.A1.checked_range if self.A1 else ''}",
            f"A2_z_w={wit(self.A2)}",
            f"A2_checked_range={self.A2.checked_range if self.A2 else ''}",
            f"sandwich_ok={self.sandwich.ok}",
            f"sandwich_complete={self.sandwich.complete}",
            f"sandwich_alpha_max={self.sandwich.alphas[-1]}",
            f"eps_shell={self.sandwich.eps_shell}",
            f"sandwich_lower_violations={len(self.sandwich.lower_violations)}",
            f"sandwich_upper_violations={len(self.sandwich.upper_violations)}",
            f"point_violations={len(self.sandwich.point_violations)}",
            f"density_ok={self.density_ok}",
            f"final_density={'' if self.final_density is None else self.final_density}",
            f"density_detail={self.density_detail}",
        ]
        return "\n".join(lines) + "\n"


def growth_certificate(
    v: GrowthFunction,
    model: ManifoldModel,
    g: MetricGraph,
    a_max: int = DEFAULT_A_MAX,
    *,
    alphas: Iterable[int] | None = None,
    strict: bool = True,
    w: BallVolumeTable | None = None,
    density_max=Fraction(15, 100),
) -> Certificate:
    """Bundle the witnesses for ``(v, z)`` and ``(z, w)``, the sandwich report and the density of ``S``.

    With ``strict`` (the default) a failing component raises
    :class:`CertificateFailed`.  The density component passes when the
    running minimum of the density of ``S`` ends below ``density_max``
    (vacuously for ``S = ∅``).  A sandwich range that stops short of the
    model's length horizon only makes the certificate INCOMPLETE.
    """
    from .tree import lower_density_profile

    N = min(v.horizon, model.horizon)
    z = discrete_growth_table(model)
    A1 = same_growth_type(v.truncate(N), level_restricted(z, model.l, N), a_max)
    if w is None:
        w = ball_volume_table(g, model.length_horizon)
    A2 = same_growth_type(z, w.values[: model.length_horizon + 1], a_max)
    report = verify_sandwich(model, g, alphas, w=w)
    S = model.schedule
    if S.intervals:
        final = lower_density_profile(S, model.horizon).min_at(model.horizon)
        d_ok = final < density_max
        d_why = "" if d_ok else f"running minimum density {final} >= {density_max} at the horizon"
    else:
        d_ok, d_why, final = True, "no blocks", None

    failed = None
    for name, ok in (("(v,z)", A1 is not None), ("(z,w)", A2 is not None), ("sandwich", report.ok), ("density", d_ok)):
        if not ok:
            failed = name
            break
    if failed:
        status = FAILED
    elif not report.complete:
        status = INCOMPLETE
    else:
        status = VALID
    cert = Certificate(status, failed, A1, A2, report, d_ok, d_why, final, a_max, g.resolution)
    if failed and strict:
        raise CertificateFailed(failed, cert)
    return cert
