"""Fibonacci and Korobov point sets and the equal-weight cubature rule.

Coordinates are always computed as (integer mod m)/m so every coordinate
is an exact multiple of 1/m and the half-open cube [0,1)^d is respected
(the index mu = m lands on the origin, never on 1.0).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import PreconditionError

# b_90 is the largest Fibonacci number of the b_0 = b_1 = 1 convention
# that fits in a signed 64-bit integer.
_FIB_MAX_INDEX = 90


def fibonacci_number(n: int) -> int:
    """Return b_n with b_0 = b_1 = 1 and b_n = b_{n-1} + b_{n-2}."""
    if n < 0:
        raise PreconditionError(f"fibonacci index must be >= 0, got {n}")
    if n > _FIB_MAX_INDEX:
        raise PreconditionError(
            f"fibonacci index {n} exceeds the exact 64-bit range (max {_FIB_MAX_INDEX})"
        )
    a, b = 1, 1
    for _ in range(n):
        a, b = b, a + b
    return a


@dataclass(frozen=True)
class SourceTag:
    """Provenance of a point set: how it was constructed."""

    kind: str  # "fibonacci" | "korobov" | "external"
    n: int | None = None
    m: int | None = None
    a: tuple[int, ...] | None = None

    @property
    def label(self) -> str:
        if self.kind == "fibonacci":
            return f"fibonacci({self.n})"
        if self.kind == "korobov":
            avec = ",".join(str(x) for x in self.a)
            return f"korobov({self.m},({avec}))"
        return "external"

    @property
    def denominator(self) -> int | None:
        """Common denominator of all coordinates, when known."""
        if self.kind == "fibonacci":
            return fibonacci_number(self.n)
        if self.kind == "korobov":
            return self.m
        return None

    @staticmethod
    def parse(label: str) -> "SourceTag":
        m = re.fullmatch(r"fibonacci\((\d+)\)", label)
        if m:
            return SourceTag("fibonacci", n=int(m.group(1)))
        m = re.fullmatch(r"korobov\((\d+),\(([\d,\s-]+)\)\)", label)
        if m:
            avec = tuple(int(t) for t in m.group(2).split(","))
            return SourceTag("korobov", m=int(m.group(1)), a=avec)
        return SourceTag("external")


@dataclass(frozen=True)
class Generator:
    """Korobov direction vector a modulo m.

    special_form means a = (1, a0, a0^2, ..., a0^{d-1}) mod m for a scalar a0.
    Components are stored reduced to [0, m).
    """

    m: int
    a: tuple[int, ...]
    special_form: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise PreconditionError(f"modulus must be positive, got {self.m}")
        if not self.a:
            raise PreconditionError("direction vector must be nonempty")
        object.__setattr__(self, "a", tuple(x % self.m for x in self.a))
        if self.special_form:
            if self.a[0] != 1 % self.m:
                raise PreconditionError("special form requires a_1 = 1")
            for j in range(len(self.a) - 1):
                if self.a[j + 1] != (self.a[j] * self.a[1]) % self.m:
                    raise PreconditionError("special form requires a_{j+1} = a_j * a_2 mod m")

    @property
    def dim(self) -> int:
        return len(self.a)

    @classmethod
    def from_scalar(cls, m: int, a0: int, d: int) -> "Generator":
        """Build the special-form vector (1, a0, a0^2, ..., a0^{d-1}) mod m."""
        if d < 1:
            raise PreconditionError(f"dimension must be positive, got {d}")
        vec = []
        p = 1
        for _ in range(d):
            vec.append(p % m)
            p = (p * a0) % m
        return cls(m, tuple(vec), special_form=True)

    @property
    def scalar(self) -> int | None:
        """The defining scalar a0 for special-form generators (None otherwise)."""
        if not self.special_form:
            return None
        return self.a[1] if self.dim > 1 else 1


def fibonacci_generator(n: int) -> Generator:
    """The d=2 generator (b_n, (1, b_{n-1} mod b_n)) of the n-th Fibonacci set."""
    if n < 2:
        raise PreconditionError(f"fibonacci point sets need n >= 2, got {n}")
    bn = fibonacci_number(n)
    return Generator(bn, (1, fibonacci_number(n - 1) % bn))


@dataclass(frozen=True)
class PointSet:
    """An ordered point set in [0,1)^d with construction provenance."""

    dim: int
    points: tuple[tuple[float, ...], ...]
    source: SourceTag = field(default_factory=lambda: SourceTag("external"))

    def __post_init__(self):
        for p in self.points:
            if len(p) != self.dim:
                raise PreconditionError("point dimension mismatch")
            for x in p:
                if not (0.0 <= x < 1.0):
                    raise PreconditionError(f"coordinate {x} outside [0,1)")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def denominator(self) -> int | None:
        return self.source.denominator

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=float).reshape(len(self.points), self.dim)

    def numerators(self) -> np.ndarray | None:
        """Integer coordinates over the common denominator, when one is known."""
        den = self.denominator
        if den is None:
            return None
        nums = np.rint(self.as_array() * den).astype(np.int64)
        return nums


def korobov_pointset(g: Generator, d: int) -> PointSet:
    """The m points ({mu a_1/m}, ..., {mu a_d/m}), mu = 1..m, in that order."""
    if g.dim != d:
        raise PreconditionError(f"generator has {g.dim} components, expected {d}")
    m = g.m
    pts = []
    for mu in range(1, m + 1):
        pts.append(tuple(((mu * aj) % m) / m for aj in g.a))
    tag = SourceTag("korobov", m=m, a=g.a)
    return PointSet(dim=d, points=tuple(pts), source=tag)


def fibonacci_pointset(n: int) -> PointSet:
    """The n-th Fibonacci point set: ((mu/b_n) mod 1, {mu b_{n-1}/b_n}), mu = 1..b_n."""
    g = fibonacci_generator(n)
    ps = korobov_pointset(g, 2)
    return PointSet(dim=2, points=ps.points, source=SourceTag("fibonacci", n=n))


def cubature(f: Callable[[tuple[float, ...]], complex], ps: PointSet) -> complex:
    """Equal-weight average of f over the point set, summed in index order."""
    total = 0
    for p in ps.points:
        total = total + f(p)
    return total / len(ps)


# --- shared CSV point-set format -------------------------------------------
#
# Header line:  # dim=<d> source=<tag>
# Data lines:   d comma-separated fields, 17 significant digits.

def write_pointset_csv(ps: PointSet, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        dump_pointset_csv(ps, fh)


def dump_pointset_csv(ps: PointSet, fh) -> None:
    fh.write(f"# dim={ps.dim} source={ps.source.label}\n")
    for p in ps.points:
        fh.write(",".join(f"{x:.17g}" for x in p) + "\n")


def read_pointset_csv(path: str) -> PointSet:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise PreconditionError("point-set CSV must start with a '# dim=... source=...' header")
    header = lines[0].lstrip("#").strip()
    m = re.fullmatch(r"dim=(\d+)\s+source=(\S+)", header)
    if not m:
        raise PreconditionError(f"malformed point-set header: {header!r}")
    dim = int(m.group(1))
    tag = SourceTag.parse(m.group(2))
    pts = []
    for ln in lines[1:]:
        fields = ln.split(",")
        if len(fields) != dim:
            raise PreconditionError(f"expected {dim} fields, got {len(fields)}: {ln!r}")
        pts.append(tuple(float(t) for t in fields))
    return PointSet(dim=dim, points=tuple(pts), source=tag)
