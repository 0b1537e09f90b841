"""Dual-lattice arithmetic over the hyperbolic cross.

The central objects are the integer dual lattice
L(m,a) = {k : a.k = 0 (mod m)} of a Korobov rule and the hyperbolic cross
Gamma(N,d) = {k : prod_j max(|k_j|,1) <= N}.  A rule integrates every
trigonometric polynomial with frequencies in Gamma(N,d) exactly iff the
cross meets the dual lattice only at the origin.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    GeneratorNotFoundError,
    InconsistencyError,
    PreconditionError,
    ResourceLimitError,
)
from .point_sets import Generator

DEFAULT_ENUM_LIMIT = 10_000_000

# Complete search box: any k with hyperbolic product <= cap satisfies
# max_j |k_j| <= cap, so Gamma(cap, d) contains every candidate.
DEFAULT_CAP_2D = 4096
DEFAULT_CAP_3D = 256


def hyperbolic_product(k: Sequence[int]) -> int:
    hp = 1
    for kj in k:
        hp *= max(abs(kj), 1)
    return hp


def iter_hyperbolic_cross(N: int, d: int) -> Iterator[tuple[int, ...]]:
    """Yield all k with hyperbolic product <= N in lexicographic order."""
    if N < 1 or d < 1:
        raise PreconditionError(f"need N >= 1 and d >= 1, got N={N}, d={d}")

    def rec(prefix: tuple[int, ...], budget: int, axes_left: int):
        if axes_left == 1:
            for k in range(-budget, budget + 1):
                yield prefix + (k,)
            return
        for k in range(-budget, budget + 1):
            yield from rec(prefix + (k,), budget // max(abs(k), 1), axes_left - 1)

    yield from rec((), N, d)


def hyperbolic_cross(N: int, d: int, limit: int = DEFAULT_ENUM_LIMIT) -> list[tuple[int, ...]]:
    """Materialize Gamma(N, d), guarding against oversized enumerations."""
    size = hyperbolic_cross_size(N, d)
    if size > limit:
        raise ResourceLimitError(
            f"|Gamma({N},{d})| = {size} exceeds the enumeration limit {limit}"
        )
    return list(iter_hyperbolic_cross(N, d))


@lru_cache(maxsize=None)
def hyperbolic_cross_size(N: int, d: int) -> int:
    """Exact cardinality of Gamma(N, d) without enumeration."""
    if N < 1 or d < 1:
        raise PreconditionError(f"need N >= 1 and d >= 1, got N={N}, d={d}")
    if d == 1:
        return 2 * N + 1
    total = hyperbolic_cross_size(N, d - 1)  # k_1 = 0
    for k in range(1, N + 1):
        total += 2 * hyperbolic_cross_size(N // k, d - 1)
    return total


def exponential_sum(k: Sequence[int], g: Generator) -> int:
    """1 if k lies in the dual lattice L(m,a), else 0 (exact modular test)."""
    if len(k) != g.dim:
        raise PreconditionError(f"frequency has {len(k)} components, generator {g.dim}")
    dot = 0
    for kj, aj in zip(k, g.a):
        dot = (dot + kj * aj) % g.m
    return 1 if dot == 0 else 0


def exponential_sum_direct(k: Sequence[int], g: Generator) -> complex:
    """Diagnostic path: average of the m roots of unity defining S(k,a).

    Phases are formed from exact integer residues so the only rounding is in
    the final complex summation.
    """
    if len(k) != g.dim:
        raise PreconditionError(f"frequency has {len(k)} components, generator {g.dim}")
    m = g.m
    mus = np.arange(1, m + 1, dtype=np.int64)
    residues = np.zeros(m, dtype=np.int64)
    for kj, aj in zip(k, g.a):
        residues = (residues + (mus * ((kj * aj) % m))) % m
    return complex(np.exp(2j * np.pi * residues / m).sum() / m)


def is_exact(g: Generator, L: int, d: int, limit: int = DEFAULT_ENUM_LIMIT) -> bool:
    """True iff no nonzero k in Gamma(L,d) satisfies a.k = 0 (mod m)."""
    if L < 1:
        raise PreconditionError(f"exactness level must be >= 1, got {L}")
    if g.dim != d:
        raise PreconditionError(f"generator has {g.dim} components, expected {d}")
    size = hyperbolic_cross_size(L, d)
    if size > limit:
        raise ResourceLimitError(
            f"|Gamma({L},{d})| = {size} exceeds the enumeration limit {limit}"
        )
    zero = (0,) * d
    for k in iter_hyperbolic_cross(L, d):
        if k != zero and exponential_sum(k, g):
            return False
    return True


@dataclass(frozen=True)
class MaxExactness:
    """Result of the maximal-exactness search.

    n_max is None when no nonzero dual vector has hyperbolic product <= cap
    (the "exceeds cap" sentinel); otherwise witness attains n_max + 1.
    """

    n_max: int | None
    witness: tuple[int, ...] | None
    cap: int

    @property
    def exceeds_cap(self) -> bool:
        return self.n_max is None


def default_cap(d: int) -> int:
    if d <= 2:
        return DEFAULT_CAP_2D
    return DEFAULT_CAP_3D


def max_exactness(g: Generator, d: int, cap: int | None = None) -> MaxExactness:
    """Largest N with Gamma(N,d) disjoint from L(m,a)\\{0}, searched up to cap.

    The search is complete because hyperbolic_product(k) >= max_j |k_j|,
    so every candidate lies in Gamma(cap, d).
    """
    if g.dim != d:
        raise PreconditionError(f"generator has {g.dim} components, expected {d}")
    if cap is None:
        cap = default_cap(d)
    if cap < 1:
        raise PreconditionError(f"cap must be >= 1, got {cap}")
    found = _min_dual_product(g, cap)
    if found is None:
        return MaxExactness(n_max=None, witness=None, cap=cap)
    hp, witness = found
    assert hyperbolic_product(witness) == hp >= max(abs(x) for x in witness)
    return MaxExactness(n_max=hp - 1, witness=witness, cap=cap)


def _min_dual_product(g: Generator, cap: int) -> tuple[int, tuple[int, ...]] | None:
    """(min hyperbolic product, lexicographically smallest witness) over
    nonzero dual vectors with product <= cap, or None."""
    if math.gcd(g.a[0], g.m) == 1:
        return _min_dual_product_residue(g, cap)
    return _min_dual_product_scan(g, cap)


def _min_dual_product_residue(g: Generator, cap: int) -> tuple[int, tuple[int, ...]] | None:
    m, a, d = g.m, g.a, g.dim
    inv_a1 = pow(a[0], -1, m)
    best: tuple[int, tuple[int, ...]] | None = None

    def consider(hp: int, vec: tuple[int, ...]):
        nonlocal best
        if hp > cap:
            return
        if best is None or hp < best[0] or (hp == best[0] and vec < best[1]):
            best = (hp, vec)

    def rec(j: int, pp: int, dot: int, ks: tuple[int, ...]):
        if j == d:
            r = (-dot * inv_a1) % m
            if r == 0:
                if any(ks):
                    consider(pp, (0,) + ks)
                else:
                    if m <= cap:
                        consider(pp * m, (-m,) + ks)
            else:
                for k1 in (r - m, r):
                    consider(pp * max(abs(k1), 1), (k1,) + ks)
            return
        bound = cap // pp
        if best is not None:
            bound = min(bound, best[0] // pp)
        for k in range(-bound, bound + 1):
            rec(j + 1, pp * max(abs(k), 1), dot + a[j] * k, ks + (k,))

    rec(1, 1, 0, ())
    return best


def _min_dual_product_scan(g: Generator, cap: int) -> tuple[int, tuple[int, ...]] | None:
    zero = (0,) * g.dim
    best: tuple[int, tuple[int, ...]] | None = None
    for k in iter_hyperbolic_cross(cap, g.dim):
        if k == zero or not exponential_sum(k, g):
            continue
        hp = hyperbolic_product(k)
        if best is None or hp < best[0] or (hp == best[0] and k < best[1]):
            best = (hp, k)
    return best


# --- dyadic blocks -----------------------------------------------------------

def block_ranges(s: Sequence[int]) -> list[list[int]]:
    """Per-coordinate candidate values of the dyadic block rho(s), ascending.

    s_j = 0 forces k_j = 0; s_j >= 1 allows 2^{s_j-1} <= |k_j| < 2^{s_j}.
    """
    ranges = []
    for sj in s:
        if sj < 0:
            raise PreconditionError(f"dyadic levels must be >= 0, got {sj}")
        if sj == 0:
            ranges.append([0])
        else:
            lo, hi = 1 << (sj - 1), 1 << sj
            ranges.append(list(range(-hi + 1, -lo + 1)) + list(range(lo, hi)))
    return ranges


def block_size(s: Sequence[int]) -> int:
    return math.prod(1 << sj if sj else 1 for sj in s)


def dual_in_block(
    g: Generator, s: Sequence[int], limit: int = DEFAULT_ENUM_LIMIT
) -> list[tuple[int, ...]]:
    """Enumerate rho(s) intersected with L(m,a), in lexicographic order."""
    if len(s) != g.dim:
        raise PreconditionError(f"level vector has {len(s)} components, generator {g.dim}")
    hits = _dual_in_block_impl(g, s, limit, count_only=False)
    hits.sort()
    return hits


def count_dual_in_block(g: Generator, s: Sequence[int], limit: int = DEFAULT_ENUM_LIMIT) -> int:
    """Cardinality of rho(s) intersected with L(m,a)."""
    if len(s) != g.dim:
        raise PreconditionError(f"level vector has {len(s)} components, generator {g.dim}")
    return _dual_in_block_impl(g, s, limit, count_only=True)


def _dual_in_block_impl(g: Generator, s, limit: int, count_only: bool):
    from itertools import product as iproduct

    m, a = g.m, g.a
    ranges = block_ranges(s)
    sizes = [len(r) for r in ranges]
    solve_axis = None
    for j in sorted(range(len(sizes)), key=lambda j: -sizes[j]):
        if math.gcd(a[j], m) == 1:
            solve_axis = j
            break

    if solve_axis is None:
        if block_size(s) > limit:
            raise ResourceLimitError(f"block rho({tuple(s)}) has {block_size(s)} candidates")
        out = [k for k in iproduct(*ranges) if exponential_sum(k, g)]
        return len(out) if count_only else out

    other_axes = [j for j in range(len(sizes)) if j != solve_axis]
    rest = math.prod(sizes[j] for j in other_axes) if other_axes else 1
    if rest > limit:
        raise ResourceLimitError(f"block rho({tuple(s)}) needs {rest} residue solves")
    inv = pow(a[solve_axis], -1, m)
    sj = s[solve_axis]
    if sj == 0:
        intervals = [(0, 0)]
    else:
        lo, hi = 1 << (sj - 1), (1 << sj) - 1
        intervals = [(-hi, -lo), (lo, hi)]

    total = 0
    hits: list[tuple[int, ...]] = []
    for combo in iproduct(*(ranges[j] for j in other_axes)):
        dot = sum(a[j] * kj for j, kj in zip(other_axes, combo))
        r = (-dot * inv) % m
        for lo, hi in intervals:
            if count_only:
                total += (hi - r) // m - (lo - 1 - r) // m
            else:
                start = lo + ((r - lo) % m)
                for k in range(start, hi + 1, m):
                    vec = [0] * len(sizes)
                    for j, kj in zip(other_axes, combo):
                        vec[j] = kj
                    vec[solve_axis] = k
                    hits.append(tuple(vec))
    return total if count_only else hits


# --- primality ---------------------------------------------------------------

_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic for all 64-bit inputs: trial division below 2^20,
    Miller-Rabin with a fixed witness set above."""
    if n < 2:
        return False
    if n < (1 << 20):
        if n % 2 == 0:
            return n == 2
        f = 3
        while f * f <= n:
            if n % f == 0:
                return False
            f += 2
        return True
    if n % 2 == 0:
        return False
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for w in _MR_WITNESSES:
        x = pow(w, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


# --- generator search (special form) ----------------------------------------

@dataclass(frozen=True)
class SearchResult:
    m: int
    L: int
    d: int
    a: int
    gamma_size: int
    verified: bool
    elapsed_ms: float


def f5_holds(m: int, L: int, d: int) -> bool:
    """The counting condition |Gamma(L,d)| < (m-1)/d guaranteeing a generator."""
    return hyperbolic_cross_size(L, d) * d < m - 1


def max_feasible_level(m: int, d: int) -> int | None:
    """Largest L satisfying the counting condition, or None if even L=1 fails."""
    if not f5_holds(m, 1, d):
        return None
    L = 1
    while f5_holds(m, L + 1, d):
        L += 1
    return L


def search_generator(
    m: int,
    L: int,
    d: int,
    force: bool = False,
    threads: int = 1,
    diagnostics: bool = False,
    limit: int = DEFAULT_ENUM_LIMIT,
) -> SearchResult:
    """Smallest scalar a in [1,m) whose special-form rule is exact on T(L,d).

    Requires m prime.  Without force, the counting precondition
    |Gamma(L,d)| < (m-1)/d must hold (it guarantees existence: each nonzero
    k rules out at most d-1 residues, the roots of a degree-(d-1) polynomial
    over the prime field).
    """
    t0 = time.perf_counter()
    if not is_prime(m):
        raise PreconditionError(f"modulus {m} is not prime")
    if L < 1 or d < 1:
        raise PreconditionError(f"need L >= 1 and d >= 1, got L={L}, d={d}")
    gamma_size = hyperbolic_cross_size(L, d)
    if not f5_holds(m, L, d) and not force:
        raise PreconditionError(
            f"counting condition violated: |Gamma({L},{d})| = {gamma_size} "
            f">= (m-1)/d = {(m - 1) / d:.6g}; pass force=True to search anyway"
        )

    zero = (0,) * d
    kvecs = np.array(
        [k for k in hyperbolic_cross(L, d, limit=limit) if k != zero], dtype=np.int64
    )

    a_hit = _scan_candidates(m, d, kvecs, threads)
    if a_hit is None:
        raise GeneratorNotFoundError(f"no generator in [1,{m}) is exact on T({L},{d})")

    if diagnostics:
        _assert_violation_counts(m, d, kvecs)

    gen = Generator.from_scalar(m, a_hit, d)
    verified = is_exact(gen, L, d, limit=limit)
    if not verified:
        raise InconsistencyError(
            f"candidate a={a_hit} passed the scan but failed exactness re-verification"
        )
    elapsed = (time.perf_counter() - t0) * 1000.0
    return SearchResult(m=m, L=L, d=d, a=a_hit, gamma_size=gamma_size,
                        verified=verified, elapsed_ms=elapsed)


def _scan_candidates(m: int, d: int, kvecs: np.ndarray, threads: int) -> int | None:
    chunk = 4096

    def scan_chunk(start: int) -> int | None:
        stop = min(start + chunk, m)
        avals = np.arange(start, stop, dtype=np.int64)
        pows = np.ones((len(avals), d), dtype=np.int64)
        for j in range(1, d):
            pows[:, j] = (pows[:, j - 1] * avals) % m
        dots = (pows @ kvecs.T) % m
        ok = np.all(dots != 0, axis=1)
        idx = np.flatnonzero(ok)
        return int(avals[idx[0]]) if idx.size else None

    starts = list(range(1, m, chunk))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            for hit in ex.map(scan_chunk, starts):
                if hit is not None:
                    return hit
        return None
    for start in starts:
        hit = scan_chunk(start)
        if hit is not None:
            return hit
    return None


def _assert_violation_counts(m: int, d: int, kvecs: np.ndarray) -> None:
    avals = np.arange(1, m, dtype=np.int64)
    pows = np.ones((m - 1, d), dtype=np.int64)
    for j in range(1, d):
        pows[:, j] = (pows[:, j - 1] * avals) % m
    dots = (pows @ kvecs.T) % m
    per_k = (dots == 0).sum(axis=0)
    worst = int(per_k.max()) if per_k.size else 0
    if worst > d - 1:
        raise InconsistencyError(
            f"some frequency is annihilated by {worst} candidates, expected <= {d - 1}"
        )
