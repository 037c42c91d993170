"""Abstract pieces of the connected sum.

A piece is never given a metric.  It is described by the numbers that matter
for volume growth: the distances ``t_P <= T_P`` from its ``∂⁻`` boundary to its
``∂⁺`` boundaries, the volumes ``v_P(k)`` of the ``k``-neighbourhoods of ``∂⁻``,
the diameter of ``∂⁻`` and the position of a marked point on ``∂⁻``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Sequence


class Kind(str, Enum):
    SPHERE1 = "Sphere1"
    SPHERE2 = "Sphere2"
    SPHERE3 = "Sphere3"
    BLOCK = "Block"
    TORUS_CYLINDER = "TorusCylinder"

    @property
    def is_sphere(self) -> bool:
        return self in SPHERE_KINDS


SPHERE_KINDS = (Kind.SPHERE1, Kind.SPHERE2, Kind.SPHERE3)
SPHERE, TORUS = "sphere", "torus"
SHAPES = ("flat", "ramp", "plateau")


class PieceError(ValueError):
    pass


class InvalidTopology(PieceError):
    pass


class InvalidCodimension(PieceError):
    pass


def sphere_kind(boundary_count: int) -> Kind:
    return SPHERE_KINDS[boundary_count - 1]


@dataclass(frozen=True)
class CatalogBounds:
    """Global constants of the catalog; ``l = 6T`` is the unit length."""

    l: int
    h: int
    H: int
    d: int
    U: tuple = ()

    def __post_init__(self):
        for name in ("l", "h", "H", "d"):
            if int(getattr(self, name)) < 1:
                raise PieceError(f"bound {name} must be a positive integer")
        if self.h > self.H:
            raise PieceError(f"h={self.h} exceeds H={self.H}")
        U = tuple(int(u) for u in self.U)
        if any(u < 1 for u in U):
            raise PieceError("U_j must be positive integers")
        object.__setattr__(self, "U", U)

    @property
    def T(self) -> Fraction:
        return Fraction(self.l, 6)

    def u(self, j: int):
        return self.U[j] if 0 <= j < len(self.U) else None


@dataclass(frozen=True)
class ComponentSpec:
    t_P: Fraction
    T_P: Fraction
    volume_profile: tuple
    marked_point_offset: Fraction = Fraction(0)
    port_depths: tuple = ()
    plus_kinds: tuple = ()
    minus_kind: str = SPHERE

    def __post_init__(self):
        object.__setattr__(self, "t_P", Fraction(self.t_P))
        object.__setattr__(self, "T_P", Fraction(self.T_P))
        object.__setattr__(self, "marked_point_offset", Fraction(self.marked_point_offset))
        object.__setattr__(self, "volume_profile", tuple(int(x) for x in self.volume_profile))
        object.__setattr__(self, "port_depths", tuple(Fraction(x) for x in self.port_depths))
        object.__setattr__(self, "plus_kinds", tuple(self.plus_kinds))
        if not 0 < self.t_P <= self.T_P:
            raise PieceError(f"need 0 < t_P <= T_P, got {self.t_P}, {self.T_P}")
        prof = self.volume_profile
        if len(prof) < 2 or prof[0] != 0:
            raise PieceError("volume profile must start at v_P(0) = 0 and have a shell")
        if any(b <= a for a, b in zip(prof, prof[1:])):
            raise PieceError("volume profile must be strictly increasing")
        if len(self.port_depths) != len(self.plus_kinds):
            raise PieceError("one boundary kind per ∂⁺ port")
        if self.marked_point_offset < 0:
            raise PieceError("marked point offset must be >= 0")

    @property
    def shells(self) -> int:
        return len(self.volume_profile) - 1

    def increments(self) -> tuple:
        """Shell volumes ``v'_P(k)`` for ``k = 1..shells``."""
        p = self.volume_profile
        return tuple(p[k] - p[k - 1] for k in range(1, len(p)))

    def volume(self, k: int) -> int:
        """``v_P(k)`` clamped to ``[0, total]``."""
        if k <= 0:
            return 0
        return self.volume_profile[min(k, self.shells)]

    @property
    def total(self) -> int:
        return self.volume_profile[-1]


@dataclass(frozen=True)
class PieceSpec:
    kind: Kind
    components: tuple
    t_units: int
    l: int
    boundary_minus_diameter: Fraction
    index: int | None = None
    u_bound: int | None = None
    side_port: tuple | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "boundary_minus_diameter", Fraction(self.boundary_minus_diameter))
        if not self.components:
            raise InvalidTopology("a piece needs at least one component")
        if self.t_units < 1 or self.l < 1:
            raise PieceError("t_units and l must be positive")
        if self.boundary_minus_diameter <= 0:
            raise PieceError("∂⁻ diameter must be positive")
        for c in self.components:
            if c.marked_point_offset > self.boundary_minus_diameter:
                raise PieceError("marked point must lie on ∂⁻ (offset <= diameter)")
        if self.kind.is_sphere:
            want = SPHERE_KINDS.index(self.kind)
            if len(self.components) != 1 or len(self.components[0].port_depths) != want:
                raise InvalidTopology(f"{self.kind.value} must have one ∂⁻ and {want} ∂⁺ boundaries")
        if self.kind is Kind.TORUS_CYLINDER:
            c = self.components[0]
            if len(self.components) != 1 or len(c.port_depths) != 2:
                raise InvalidTopology("TorusCylinder has one ∂⁻ torus, one ∂⁺ torus and one sphere")

    @property
    def is_block(self) -> bool:
        return self.kind is Kind.BLOCK

    @property
    def label(self) -> str:
        if self.is_block:
            return f"Block[{self.index}]"
        return self.kind.value

    @property
    def interface(self) -> str:
        return self.components[0].minus_kind

    def trunk_ports(self) -> list:
        """``(component, port)`` pairs that continue the trunk, in order.

        Sphere pieces decide their port roles from the tree, so this is only
        meaningful for blocks and torus-cylinders.
        """
        return [
            (ci, pi)
            for ci, c in enumerate(self.components)
            for pi in range(len(c.port_depths))
            if (ci, pi) != self.side_port
        ]

    def volume(self, k: int) -> int:
        return sum(c.volume(k) for c in self.components)

    def increments(self) -> tuple:
        """Shell volumes of the whole piece (components summed)."""
        n = max(c.shells for c in self.components)
        return tuple(self.volume(k) - self.volume(k - 1) for k in range(1, n + 1))

    @property
    def total(self) -> int:
        return sum(c.total for c in self.components)


def make_profile(shape: str, lo: int, hi: int, shells: int) -> tuple:
    """Cumulative volume profile ``v_P(0..shells)`` with shell volumes in ``[lo, hi]``."""
    if lo < 1 or lo > hi:
        raise PieceError(f"bad shell range [{lo}, {hi}]")
    if shape == "flat":
        inc = [(lo + hi) // 2] * shells
    elif shape == "ramp":
        inc = [min(lo + k, hi) for k in range(shells)]
    elif shape == "plateau":
        half = (shells + 1) // 2
        inc = [lo] * half + [hi] * (shells - half)
    else:
        raise PieceError(f"unknown profile shape {shape!r}; expected one of {SHAPES}")
    return profile_from_increments(inc)


def profile_from_increments(inc: Sequence[int]) -> tuple:
    out = [0]
    for x in inc:
        out.append(out[-1] + int(x))
    return tuple(out)


def _ceil(x) -> int:
    return math.ceil(Fraction(x))


def _port_depths(n: int, t_P, T_P) -> tuple:
    # the first ∂⁺ marker realises the maximal distance, the others the minimal one
    return tuple([T_P] + [t_P] * (n - 1)) if n else ()


def default_heights(l: int, t_units: int = 1) -> tuple:
    """``t_P = ⌈l·t/3⌉`` and ``T_P = ⌊5·l·t/6⌋``."""
    return -(-l * t_units // 3), (5 * l * t_units) // 6


def make_sphere_piece(
    kind,
    bounds: CatalogBounds,
    profile_shape: str = "flat",
    *,
    t_P=None,
    T_P=None,
    increments: Sequence[int] | None = None,
    marked_point_offset=0,
    diameter=None,
) -> PieceSpec:
    kind = Kind(kind)
    if not kind.is_sphere:
        raise PieceError(f"{kind.value} is not a sphere piece")
    t0, T0 = default_heights(bounds.l)
    t_P = t0 if t_P is None else t_P
    T_P = T0 if T_P is None else T_P
    shells = _ceil(T_P)
    if increments is None:
        profile = make_profile(profile_shape, bounds.h, bounds.H, shells)
    else:
        profile = profile_from_increments(increments)
    ports = SPHERE_KINDS.index(kind)
    comp = ComponentSpec(
        t_P=t_P,
        T_P=T_P,
        volume_profile=profile,
        marked_point_offset=marked_point_offset,
        port_depths=_port_depths(ports, t_P, T_P),
        plus_kinds=(SPHERE,) * ports,
    )
    return PieceSpec(
        kind=kind,
        components=(comp,),
        t_units=1,
        l=bounds.l,
        boundary_minus_diameter=bounds.d if diameter is None else diameter,
        metadata={"shape": profile_shape if increments is None else "explicit"},
    )


def make_block(
    j: int,
    t_j: int,
    num_components: int,
    boundary_plus_counts: Sequence[int],
    bounds: CatalogBounds,
    profile_shape: str = "flat",
    *,
    profiles: Sequence[Sequence[int]] | None = None,
    u_bound: int | None = None,
    side_port: bool = True,
    interface: str = SPHERE,
    t_P=None,
    T_P=None,
    marked_point_offset=0,
    diameter=None,
) -> PieceSpec:
    """Block ``Q_j`` spanning ``t_j`` trunk levels.

    ``profiles`` gives explicit shell volumes per component; otherwise the
    shape is drawn between ``h`` and ``U_j / num_components`` (or ``H`` when
    ``U_j`` is not configured).  Component 0 carries one extra sphere port where the
    off-trunk branch leaving the block's last level is attached.
    """
    if t_j < 1:
        raise PieceError("t_j must be >= 1")
    counts = [int(c) for c in boundary_plus_counts]
    if num_components < 1 or len(counts) != num_components:
        raise InvalidTopology(f"need one ∂⁺ count per component ({num_components})")
    if any(c < 0 for c in counts):
        raise InvalidTopology("∂⁺ counts must be >= 0")
    if sum(counts) == 0:
        raise InvalidTopology("block has no ∂⁺ boundary: the trunk could not continue past it")
    t0, T0 = default_heights(bounds.l, t_j)
    t_P = t0 if t_P is None else t_P
    T_P = T0 if T_P is None else T_P
    shells = _ceil(T_P)
    # the block's shell volume is summed over components, so U_j is shared between them
    U = bounds.u(j)
    hi = U // num_components if U else bounds.H
    if profiles is None and hi < bounds.h:
        raise PieceError(f"U_{j}={U} cannot hold {num_components} components with shells >= h={bounds.h}")
    comps = []
    for i, c in enumerate(counts):
        if profiles is not None:
            prof = profile_from_increments(profiles[i])
        else:
            prof = make_profile(profile_shape, bounds.h, hi, shells)
        kinds = [interface] * c
        if side_port and i == 0:
            kinds.append(SPHERE)
        comps.append(
            ComponentSpec(
                t_P=t_P,
                T_P=T_P,
                volume_profile=prof,
                marked_point_offset=marked_point_offset,
                port_depths=_port_depths(len(kinds), t_P, T_P),
                plus_kinds=tuple(kinds),
                minus_kind=interface,
            )
        )
    side = (0, counts[0]) if side_port else None
    piece = PieceSpec(
        kind=Kind.BLOCK,
        components=tuple(comps),
        t_units=t_j,
        l=bounds.l,
        boundary_minus_diameter=bounds.d if diameter is None else diameter,
        index=j,
        side_port=side,
        metadata={"shape": profile_shape if profiles is None else "explicit"},
    )
    if u_bound is None:
        u_bound = bounds.u(j) or max(piece.increments())
    return replace(piece, u_bound=int(u_bound))


def make_torus_cylinder(
    bounds: CatalogBounds, p: int, q: int, profile_shape: str = "flat", *, marked_point_offset=0
) -> PieceSpec:
    """Trunk piece ``S^p × S^(q-1) × [0, l/3]`` with one disc removed for a side branch."""
    if q < 3:
        raise InvalidCodimension(f"codimension q={q} < 3")
    if p < 1:
        raise PieceError("p must be >= 1")
    height = -(-bounds.l // 3)
    profile = make_profile(profile_shape, bounds.h, bounds.H, height)
    comp = ComponentSpec(
        t_P=height,
        T_P=height,
        volume_profile=profile,
        marked_point_offset=marked_point_offset,
        port_depths=(height, height),
        plus_kinds=(TORUS, SPHERE),
        minus_kind=TORUS,
    )
    return PieceSpec(
        kind=Kind.TORUS_CYLINDER,
        components=(comp,),
        t_units=1,
        l=bounds.l,
        boundary_minus_diameter=bounds.d,
        side_port=(0, 1),
        metadata={"p": p, "q": q, "dimension": p + q, "shape": profile_shape},
    )


# ---------------------------------------------------------------- verification

PASS, FAIL, NA, SKIPPED = "PASS", "FAIL", "N/A", "SKIPPED"
ITEMS = tuple(range(1, 10))


@dataclass(frozen=True)
class ItemResult:
    piece: int
    label: str
    item: int
    status: str
    detail: str = ""

    def line(self) -> str:
        tail = f"  {self.detail}" if self.detail else ""
        return f"piece {self.piece} ({self.label}) item {self.item}: {self.status}{tail}"


@dataclass(frozen=True)
class PieceReport:
    results: tuple

    @property
    def ok(self) -> bool:
        return not self.failures()

    def failures(self) -> list:
        return [r for r in self.results if r.status == FAIL]

    def failed_items(self) -> set:
        return {r.item for r in self.failures()}

    def lines(self) -> list:
        return [r.line() for r in self.results]


def _check_items(P: PieceSpec, bounds: CatalogBounds) -> dict:
    l = bounds.l
    out = {}

    bad = []
    for ci, c in enumerate(P.components):
        if c.shells != _ceil(c.T_P):
            bad.append(f"component {ci}: profile has {c.shells} shells, expected ⌈T_P⌉={_ceil(c.T_P)}")
        if c.port_depths:
            if max(c.port_depths) != c.T_P:
                bad.append(f"component {ci}: farthest ∂⁺ marker at {max(c.port_depths)} != T_P={c.T_P}")
            if min(c.port_depths) < c.t_P:
                bad.append(f"component {ci}: ∂⁺ marker closer than t_P")
    out[1] = (FAIL, "; ".join(bad)) if bad else (PASS, "")

    def window(lo, hi):
        msgs = []
        for ci, c in enumerate(P.components):
            if not (lo <= c.t_P <= c.T_P <= hi):
                msgs.append(f"component {ci}: [{c.t_P}, {c.T_P}] not inside [{lo}, {hi}]")
        return (FAIL, "; ".join(msgs)) if msgs else (PASS, "")

    if P.is_block:
        out[2] = window(Fraction(l * P.t_units, 3), Fraction(l * P.t_units))
        out[3] = (NA, "")
    else:
        out[2] = (NA, "")
        out[3] = window(Fraction(l, 3), Fraction(l))

    if P.boundary_minus_diameter <= bounds.d:
        out[4] = (PASS, "")
    else:
        out[4] = (FAIL, f"diameter(∂⁻)={P.boundary_minus_diameter} > d={bounds.d}")

    reach = l * (P.t_units if P.is_block else 1)
    bad = [
        f"component {ci}: t_P + offset = {c.t_P + c.marked_point_offset} > {reach}"
        for ci, c in enumerate(P.components)
        if c.t_P + c.marked_point_offset > reach
    ]
    out[5] = (FAIL, "; ".join(bad)) if bad else (PASS, "")

    if P.is_block:
        out[6] = (NA, "")
        inc = P.increments()
        bounds_j = [u for u in (P.u_bound, bounds.u(P.index if P.index is not None else -1)) if u]
        if not bounds_j:
            out[7] = (FAIL, "no U_j recorded")
        else:
            U = min(bounds_j)
            k = max(range(len(inc)), key=inc.__getitem__)
            out[7] = (PASS, "") if inc[k] <= U else (FAIL, f"v'_Q({k + 1})={inc[k]} > U_j={U}")
    else:
        out[7] = (NA, "")
        inc = P.increments()
        lo, hi = min(inc), max(inc)
        if bounds.h <= lo and hi <= bounds.H:
            out[6] = (PASS, "")
        else:
            out[6] = (FAIL, f"shell volumes span [{lo}, {hi}], allowed [{bounds.h}, {bounds.H}]")

    out[8] = _interface_check(P)
    out[9] = (SKIPPED, "curvature and bounded geometry are not modelled")
    return out


def _interface_check(P: PieceSpec):
    msgs = []
    minus = {c.minus_kind for c in P.components}
    if len(minus) != 1:
        msgs.append("components disagree on the ∂⁻ boundary type")
    iface = P.interface
    if P.kind.is_sphere:
        if iface != SPHERE or any(k != SPHERE for c in P.components for k in c.plus_kinds):
            msgs.append("sphere pieces glue along spheres only")
    else:
        for ci, pi in P.trunk_ports():
            if P.components[ci].plus_kinds[pi] != iface:
                msgs.append(f"trunk port ({ci},{pi}) is {P.components[ci].plus_kinds[pi]}, ∂⁻ is {iface}")
        if P.side_port is not None:
            ci, pi = P.side_port
            if P.components[ci].plus_kinds[pi] != SPHERE:
                msgs.append("side port must be a sphere")
    if P.kind is Kind.TORUS_CYLINDER and iface != TORUS:
        msgs.append("TorusCylinder ∂⁻ must be a torus")
    return (FAIL, "; ".join(msgs)) if msgs else (PASS, "")


def verify_pieces(pieces: Sequence[PieceSpec], bounds: CatalogBounds) -> PieceReport:
    """One verdict per numbered condition per piece; never raises.

    Blocks are also checked pairwise in index order: the ``∂⁺`` of ``Q_j``
    must match ``∂⁻`` of ``Q_(j+1)`` in count and boundary type (item 8).
    """
    results = []
    per_piece = []
    for i, P in enumerate(pieces):
        try:
            items = _check_items(P, bounds)
        except Exception as exc:  # a malformed piece is a failure, not a crash
            items = {k: (FAIL, f"check crashed: {exc}") for k in ITEMS}
        per_piece.append(items)

    blocks = sorted(
        (i for i, P in enumerate(pieces) if P.is_block and P.index is not None),
        key=lambda i: pieces[i].index,
    )
    for a, b in zip(blocks, blocks[1:]):
        Pa, Pb = pieces[a], pieces[b]
        if Pb.index != Pa.index + 1:
            continue
        out_ports = len(Pa.trunk_ports())
        if out_ports != len(Pb.components) or Pa.interface != Pb.interface:
            status, detail = per_piece[b][8]
            msg = (
                f"∂⁺Q_{Pa.index} has {out_ports} {Pa.interface} boundaries, "
                f"∂⁻Q_{Pb.index} has {len(Pb.components)} {Pb.interface}"
            )
            per_piece[b][8] = (FAIL, "; ".join(x for x in (detail, msg) if x))

    for i, (P, items) in enumerate(zip(pieces, per_piece)):
        for k in ITEMS:
            status, detail = items[k]
            results.append(ItemResult(i, P.label, k, status, detail))
    return PieceReport(tuple(results))


# ---------------------------------------------------------------- catalog

CONNECTED_SUM, LOWER_DIM = "connected-sum", "lower-dim-spheres"
MODES = (CONNECTED_SUM, LOWER_DIM)


@dataclass(frozen=True)
class Catalog:
    bounds: CatalogBounds
    spheres: dict
    blocks: tuple
    torus: PieceSpec | None = None
    mode: str = CONNECTED_SUM

    def __post_init__(self):
        if self.mode not in MODES:
            raise PieceError(f"unknown mode {self.mode!r}")
        if self.mode == LOWER_DIM and self.torus is None:
            raise PieceError("lower-dim-spheres mode needs a TorusCylinder piece")

    def sphere(self, kind) -> PieceSpec:
        return self.spheres[Kind(kind)]

    def block(self, j: int) -> PieceSpec | None:
        for b in self.blocks:
            if b.index == j:
                return b
        return None

    @property
    def block_heights(self) -> tuple:
        return tuple(b.t_units for b in sorted(self.blocks, key=lambda b: b.index))

    def pieces(self) -> list:
        out = [self.spheres[k] for k in SPHERE_KINDS if k in self.spheres]
        if self.torus is not None:
            out.append(self.torus)
        out.extend(sorted(self.blocks, key=lambda b: b.index))
        return out

    def verify(self) -> PieceReport:
        return verify_pieces(self.pieces(), self.bounds)


DEFAULT_BOUNDS = CatalogBounds(l=6, h=1, H=4, d=2)
DEFAULT_BLOCK_HEIGHTS = (1, 1, 2, 2, 3, 3, 4, 4)


def default_catalog(
    bounds: CatalogBounds = DEFAULT_BOUNDS,
    block_heights: Sequence[int] = DEFAULT_BLOCK_HEIGHTS,
    mode: str = CONNECTED_SUM,
    shape: str = "flat",
) -> Catalog:
    iface = TORUS if mode == LOWER_DIM else SPHERE
    spheres = {k: make_sphere_piece(k, bounds, shape) for k in SPHERE_KINDS}
    blocks = tuple(
        make_block(j, t, 1, [1], bounds, shape, interface=iface) for j, t in enumerate(block_heights)
    )
    torus = make_torus_cylinder(bounds, 1, 3, shape) if mode == LOWER_DIM else None
    return Catalog(bounds, spheres, blocks, torus, mode)
