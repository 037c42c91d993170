"""Growth functions on finite tables.

A growth function is stored as an integer table ``values[n]`` for
``n = 0..N``.  Everything here works with exact integer/rational arithmetic;
all "for all n" statements are checked on the table's range only, and every
verdict says which range that was.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence, Union

DEFAULT_LAMBDA = Fraction(19, 10)
DEFAULT_A_MAX = 64


class GrowthError(Exception):
    pass


class NotBgd(GrowthError):
    """Some increment ``v(n+2) - v(n+1)`` is zero, or follows a zero increment."""

    def __init__(self, n: int, message: str):
        super().__init__(message)
        self.n = n


class NormalizationFailed(GrowthError):
    def __init__(self, message: str, budget: dict):
        super().__init__(message)
        self.budget = budget


class HorizonTooShort(GrowthError):
    pass


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**6)
    return Fraction(x)


@dataclass(frozen=True)
class GrowthFunction:
    values: tuple
    bgd_constant: int | None = None

    def __post_init__(self):
        vals = tuple(int(x) for x in self.values)
        if not vals:
            raise ValueError("growth table is empty")
        if any(x < 0 for x in vals):
            raise ValueError("growth table has negative values")
        for n in range(len(vals) - 1):
            if vals[n + 1] < vals[n]:
                raise ValueError(f"growth table decreases at n={n}: {vals[n]} -> {vals[n + 1]}")
        object.__setattr__(self, "values", vals)
        if self.bgd_constant is not None:
            L = int(self.bgd_constant)
            if L < 1:
                raise ValueError("bgd constant must be a positive integer")
            bad = _bgd_violation(vals, L)
            if bad is not None:
                raise ValueError(f"bgd certificate L={L} fails at n={bad}")

    @classmethod
    def from_function(cls, f: Callable[[int], int], horizon: int) -> "GrowthFunction":
        return cls(tuple(f(n) for n in range(horizon + 1)))

    @classmethod
    def from_increments(cls, first: int, increments: Sequence[int]) -> "GrowthFunction":
        vals = [first]
        for c in increments:
            vals.append(vals[-1] + c)
        return cls(tuple(vals))

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    def __call__(self, n: int) -> int:
        return self.values[n]

    def __len__(self) -> int:
        return len(self.values)

    def increments(self) -> tuple:
        """``c(0) = v(0)`` and ``c(n) = v(n) - v(n-1)`` for ``n >= 1``."""
        vals = self.values
        return (vals[0],) + tuple(vals[n] - vals[n - 1] for n in range(1, len(vals)))

    def truncate(self, horizon: int) -> "GrowthFunction":
        return GrowthFunction(self.values[: horizon + 1])


@dataclass(frozen=True)
class GrowthClassWitness:
    """``f(n) <= A*h(A*n+A) + A`` and ``h(n) <= A*f(A*n+A) + A`` up to ``checked_range``.

    Indices ``A*n+A`` past a table's horizon are replaced by the horizon; since
    tables are non-decreasing this only makes the right-hand side smaller, so
    the certificate stays sound.  ``exact_range`` is the largest ``n`` for which
    no such replacement was needed.
    """

    A: int
    checked_range: int
    exact_range: int = -1

    def to_record(self, **extra) -> str:
        lines = [f"A={self.A}", f"checked_range={self.checked_range}", f"exact_range={self.exact_range}"]
        lines += [f"{k}={v}" for k, v in extra.items()]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ScaleWitness:
    scale: int
    argmax: int
    max_ratio: Fraction


@dataclass(frozen=True)
class CanonicalGrowthFunction(GrowthFunction):
    lam: Fraction = DEFAULT_LAMBDA
    scale_witness: int = 1
    witness: GrowthClassWitness | None = field(default=None, compare=False)

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "lam", _as_fraction(self.lam))
        problems = canonical_violations(self.values, self.lam, self.scale_witness)
        if problems:
            raise ValueError("not canonical: " + "; ".join(problems))


GrowthLike = Union[GrowthFunction, Sequence[int]]


def _values(f: GrowthLike) -> tuple:
    if isinstance(f, GrowthFunction):
        return f.values
    return GrowthFunction(tuple(f)).values


def _bgd_violation(vals: Sequence[int], L: int):
    for n in range(len(vals) - 2):
        d1 = vals[n + 1] - vals[n]
        d2 = vals[n + 2] - vals[n + 1]
        if L * d2 < 1 or d2 > L * d1:
            return n
    return None


def check_bgd(v: GrowthLike) -> int:
    """Least integer ``L >= 1`` with ``1/L <= v(n+2)-v(n+1) <= L*(v(n+1)-v(n))`` for ``n <= N-2``.

    Raises NotBgd when no ``L`` works.  Because the table is integer valued the
    lower bound only fails on a zero increment.
    """
    vals = _values(v)
    if len(vals) < 4:
        raise ValueError("check_bgd needs a horizon N >= 3")
    L = 1
    for n in range(len(vals) - 2):
        d1 = vals[n + 1] - vals[n]
        d2 = vals[n + 2] - vals[n + 1]
        if d2 == 0:
            raise NotBgd(n, f"increment v({n + 2})-v({n + 1}) is zero: the function stalls")
        if d1 == 0:
            raise NotBgd(n, f"increment v({n + 1})-v({n}) is zero but the next one is not")
        L = max(L, -(-d2 // d1))
    return L


def with_bgd(v: GrowthFunction) -> GrowthFunction:
    return replace(v, bgd_constant=check_bgd(v))


def canonical_violations(values: Sequence[int], lam=None, scale=None) -> list:
    """Independent check of the canonical-form conditions; returns messages, empty if fine."""
    vals = list(values)
    out = []
    if vals[0] != 1:
        out.append(f"v(0)={vals[0]} != 1")
    for n in range(len(vals) - 2):
        d1 = vals[n + 1] - vals[n]
        d2 = vals[n + 2] - vals[n + 1]
        if not (2 <= d2 <= 2 * d1):
            out.append(f"increment condition fails at n={n}: {d2} not in [2, {2 * d1}]")
            break
    if lam is not None and scale is not None:
        lam = _as_fraction(lam)
        power = Fraction(1)
        for n, x in enumerate(vals):
            if x > scale * power:
                out.append(f"v({n})={x} exceeds {scale}*lambda^{n}")
                break
            power *= lam
    return out


def _dominated(f: Sequence[int], h: Sequence[int], A: int) -> bool:
    Nh = len(h) - 1
    for n, fn in enumerate(f):
        if fn > A * h[min(A * n + A, Nh)] + A:
            return False
    return True


def same_growth_type(f: GrowthLike, h: GrowthLike, a_max: int = DEFAULT_A_MAX) -> GrowthClassWitness | None:
    """Least ``A <= a_max`` certifying that ``f`` and ``h`` have the same growth type.

    ``None`` means no ``A`` up to ``a_max`` works on these tables.  That is
    evidence of inequivalence, not a proof: a longer table or a larger budget
    might still find a witness.
    """
    fv, hv = _values(f), _values(h)
    if a_max < 1:
        raise ValueError("a_max must be >= 1")
    horizon = min(len(fv), len(hv)) - 1
    if horizon < 1:
        raise HorizonTooShort(f"horizon {horizon} is too short for any A >= 1")
    for A in range(1, a_max + 1):
        if _dominated(fv, hv, A) and _dominated(hv, fv, A):
            return GrowthClassWitness(A=A, checked_range=horizon, exact_range=max(-1, horizon // A - 1))
    return None


def subexponential_check(v: GrowthLike, lam=None) -> ScaleWitness:
    """Least positive integer ``C`` with ``v(n) <= C * lam^n`` on the table.

    Also reports where ``v(n)/lam^n`` peaks.  A peak at the horizon means the
    ratio was still growing when the table ran out.
    """
    if lam is None:
        lam = getattr(v, "lam", DEFAULT_LAMBDA)
    lam = _as_fraction(lam)
    vals = _values(v)
    best, arg = Fraction(-1), 0
    power = Fraction(1)
    for n, x in enumerate(vals):
        ratio = x / power
        if ratio > best:
            best, arg = ratio, n
        power *= lam
    return ScaleWitness(scale=max(1, math.ceil(best)), argmax=arg, max_ratio=best)


def _clamped_rewrite(vals: Sequence[int]) -> tuple:
    out = [1]
    prev = 2
    out.append(1 + prev)
    for n in range(2, len(vals)):
        c = vals[n] - vals[n - 1]
        c = min(max(c, 2), 2 * prev)
        out.append(out[-1] + c)
        prev = c
    return tuple(out[: len(vals)])


def normalize(
    v: GrowthFunction,
    lam=DEFAULT_LAMBDA,
    a_max: int = DEFAULT_A_MAX,
    c_max: int | None = None,
) -> CanonicalGrowthFunction:
    """Rewrite a bgd table into canonical form and certify it is equivalent to the input.

    Tables already in canonical form are returned unchanged.  Otherwise
    ``v'(0) = 1``, ``v'(1) = 3`` and each later increment is clamped into
    ``[2, 2 * previous increment]``.  The rewrite is then checked a posteriori:
    it must be of the same growth type as ``v`` (witness ``A <= a_max``), and
    ``v'(n)/lam^n`` must peak before the horizon (and stay under ``c_max`` if
    given).
    """
    lam = _as_fraction(lam)
    if not 1 < lam < 2:
        raise ValueError("lambda must lie in (1, 2)")
    check_bgd(v)
    budget = {"a_max": a_max, "lambda": str(lam), "c_max": c_max}
    if not canonical_violations(v.values):
        new = v.values
    else:
        new = _clamped_rewrite(v.values)
    sw = subexponential_check(new, lam)
    budget["C"] = sw.scale
    budget["ratio_argmax"] = sw.argmax
    if len(new) > 2 and sw.argmax == len(new) - 1:
        raise NormalizationFailed(
            f"v(n)/lambda^n is still increasing at the horizon n={sw.argmax}", budget
        )
    if c_max is not None and sw.scale > c_max:
        raise NormalizationFailed(f"scale witness C={sw.scale} exceeds c_max={c_max}", budget)
    witness = same_growth_type(v, new, a_max)
    if witness is None:
        raise NormalizationFailed(f"no equivalence witness A <= {a_max}", budget)
    out = CanonicalGrowthFunction(
        new, bgd_constant=check_bgd(new), lam=lam, scale_witness=sw.scale, witness=witness
    )
    problems = canonical_violations(out.values, lam, sw.scale)
    assert not problems, problems
    return out


def as_canonical(v: GrowthFunction, lam=DEFAULT_LAMBDA) -> CanonicalGrowthFunction:
    """Wrap an already-canonical table without rewriting it."""
    sw = subexponential_check(v, lam)
    return CanonicalGrowthFunction(v.values, lam=lam, scale_witness=sw.scale)
