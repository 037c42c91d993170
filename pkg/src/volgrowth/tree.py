"""Rooted one-ended trees with a prescribed growth function.

Level counts follow ``c(0) = 1``, ``c(n) = v(n) - v(n-1)``.  Level ``n+1`` is
filled from level ``n`` in vertex order: the trunk vertex takes one child when
``n+1`` is a thin level (in ``S``) and two otherwise, every later vertex takes
two while the budget allows, then one, then none.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .growth import GrowthFunction, canonical_violations


class InfeasibleLevel(ValueError):
    def __init__(self, n: int, budget: int, capacity: int):
        super().__init__(
            f"level {n + 1} needs {budget} vertices but level {n} can attach between 1 and {capacity}"
        )
        self.n = n
        self.budget = budget
        self.capacity = capacity


@dataclass(frozen=True)
class LevelSet:
    """Thin trunk levels ``S = union of [n_j, n_j + t_j - 1]``."""

    intervals: tuple = ()

    def __post_init__(self):
        ivs = tuple((int(n), int(t)) for n, t in self.intervals)
        for n, t in ivs:
            if n < 1 or t < 1:
                raise ValueError(f"bad interval ({n}, {t}): need n_j >= 1 and t_j >= 1")
        for (n0, t0), (n1, _) in zip(ivs, ivs[1:]):
            if n1 <= n0 + t0:
                raise ValueError(f"intervals ({n0}, {t0}) and ({n1}, ...) overlap or touch")
            if n0 + t0 + 1 == n1:
                warnings.warn(
                    f"n_j + t_j + 1 == n_(j+1) == {n1}: blocks separated by a single level",
                    stacklevel=2,
                )
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def from_levels(cls, levels: Iterable[int]) -> "LevelSet":
        """Group a set of levels into maximal runs."""
        runs = []
        for n in sorted(set(levels)):
            if runs and runs[-1][0] + runs[-1][1] == n:
                runs[-1][1] += 1
            else:
                runs.append([n, 1])
        return cls(tuple((n, t) for n, t in runs))

    @property
    def members(self) -> frozenset:
        return frozenset(k for n, t in self.intervals for k in range(n, n + t))

    def __contains__(self, k: int) -> bool:
        return any(n <= k < n + t for n, t in self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def interval_of(self, k: int):
        for j, (n, t) in enumerate(self.intervals):
            if n <= k < n + t:
                return j
        return None

    def count_upto(self, k: int) -> int:
        return sum(max(0, min(k, n + t - 1) - n + 1) for n, t in self.intervals)


@dataclass(frozen=True)
class Vertex:
    id: int
    level: int
    order: int
    parent: int | None
    trunk: bool


@dataclass(frozen=True)
class RootedTree:
    vertices: tuple
    horizon: int
    _children: dict = field(init=False, repr=False, compare=False)
    _levels: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        children = {v.id: [] for v in self.vertices}
        levels = [[] for _ in range(self.horizon + 1)]
        for v in self.vertices:
            if v.parent is not None:
                children[v.parent].append(v.id)
            levels[v.level].append(v.id)
        order = {v.id: v.order for v in self.vertices}
        for lst in levels:
            lst.sort(key=order.__getitem__)
        for lst in children.values():
            lst.sort(key=order.__getitem__)
        object.__setattr__(self, "_children", {k: tuple(v) for k, v in children.items()})
        object.__setattr__(self, "_levels", tuple(tuple(x) for x in levels))

    def __getitem__(self, vid: int) -> Vertex:
        return self.vertices[vid]

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def root(self) -> int:
        return self._levels[0][0]

    def children(self, vid: int) -> tuple:
        return self._children[vid]

    def level(self, n: int) -> tuple:
        """Vertex ids on level ``n`` in their order."""
        return self._levels[n]

    def trunk(self, n: int) -> int:
        return self._levels[n][0]

    def level_counts(self) -> tuple:
        return tuple(len(x) for x in self._levels)

    def check(self) -> list:
        """Structural invariants; returns a list of problems."""
        out = []
        roots = [v for v in self.vertices if v.parent is None]
        if len(roots) != 1 or roots[0].level != 0 or not roots[0].trunk:
            out.append("tree must have exactly one root, on level 0, on the trunk")
        for i, v in enumerate(self.vertices):
            if v.id != i:
                out.append(f"vertex {v.id} stored at position {i}")
            if v.parent is not None and self.vertices[v.parent].level != v.level - 1:
                out.append(f"vertex {v.id}: parent is not one level below")
            if len(self._children[v.id]) > 2:
                out.append(f"vertex {v.id} has {len(self._children[v.id])} children")
        for n, ids in enumerate(self._levels):
            orders = sorted(self.vertices[i].order for i in ids)
            if orders != list(range(len(ids))):
                out.append(f"level {n}: orders are not a permutation")
            trunks = [i for i in ids if self.vertices[i].trunk]
            if len(trunks) != 1:
                out.append(f"level {n} has {len(trunks)} trunk vertices")
                continue
            t = self.vertices[trunks[0]]
            if t.order != 0:
                out.append(f"level {n}: trunk vertex has order {t.order}")
            if n > 0 and (t.parent is None or not self.vertices[t.parent].trunk):
                out.append(f"level {n}: trunk vertex hangs off a non-trunk vertex")
        return out


def build_tree(v: GrowthFunction, S: LevelSet = LevelSet(), raw: bool = False) -> RootedTree:
    """Tree whose ball of radius ``n`` about the root has exactly ``v(n)`` vertices.

    ``raw=True`` skips the canonical-form precondition (useful for thin tables
    such as ``v(n) = n + 1``); feasibility is still enforced level by level.
    """
    vals = v.values
    N = len(vals) - 1
    if vals[0] != 1:
        raise ValueError("v(0) must be 1 (the root)")
    if not raw:
        problems = canonical_violations(vals)
        if problems:
            raise ValueError("table is not canonical: " + problems[0])
    thin = S.members
    if any(k < 1 or k > N for k in thin):
        raise ValueError(f"thin levels must lie in 1..{N}")

    verts = [Vertex(0, 0, 0, None, True)]
    current = [0]
    for n in range(N):
        budget = vals[n + 1] - vals[n]
        in_s = (n + 1) in thin
        capacity = 2 * len(current) - (1 if in_s else 0)
        if budget < 1 or budget > capacity:
            raise InfeasibleLevel(n, budget, capacity)
        remaining = budget
        nxt = []
        for idx, pid in enumerate(current):
            if remaining == 0:
                break
            k = 1 if (idx == 0 and in_s) else min(2, remaining)
            for c in range(k):
                vid = len(verts)
                verts.append(Vertex(vid, n + 1, len(nxt), pid, idx == 0 and c == 0))
                nxt.append(vid)
            remaining -= k
        current = nxt
    return RootedTree(tuple(verts), N)


def tree_growth(t: RootedTree, n: int) -> int:
    """Number of vertices on levels ``0..n``."""
    if n > t.horizon:
        raise ValueError(f"n={n} is past the horizon {t.horizon}")
    return sum(t.level_counts()[: n + 1])


def branch_lengths(t: RootedTree) -> dict:
    """Depth of every finite branch hanging off the trunk, keyed by its top vertex."""
    height = {}
    for v in reversed(t.vertices):
        kids = t.children(v.id)
        height[v.id] = 1 + max(height[c] for c in kids) if kids else 0
    return {
        v.id: height[v.id]
        for v in t.vertices
        if not v.trunk and v.parent is not None and t[v.parent].trunk
    }


@dataclass(frozen=True)
class DensityProfile:
    """``density[k-1] = |S ∩ {0..k}| / k`` for ``k = 1..n``.

    The running minimum starts at the first thin level (before that the
    density is identically zero and says nothing about sparseness).
    """

    density: tuple
    running_min: tuple
    start: int

    def at(self, k: int) -> Fraction:
        return self.density[k - 1]

    def min_at(self, k: int) -> Fraction:
        return self.running_min[k - 1]


def lower_density_profile(S: LevelSet, n: int) -> DensityProfile:
    if n < 1:
        raise ValueError("n must be >= 1")
    members = S.members
    start = min(members) if members and min(members) <= n else 1
    density, running = [], []
    count = 1 if 0 in members else 0
    cur = None
    for k in range(1, n + 1):
        if k in members:
            count += 1
        d = Fraction(count, k)
        density.append(d)
        if k >= start:
            cur = d if cur is None else min(cur, d)
            running.append(cur)
        else:
            running.append(d)
    return DensityProfile(tuple(density), tuple(running), start)
