"""Exact largest empty axis-parallel box (dispersion) and the related
congruence-system solver.

Supremum semantics: the supremum of empty-box volume over half-open boxes
is attained in the limit as lower faces approach blocking point
coordinates.  A candidate box (lo, hi) therefore counts as empty when no
point lies strictly inside per axis (lo_j < p_j < hi_j); points sitting on
a lower face do not block.  When a closed-at-lo reading of the witness
would contain a point, the result carries the open-at-lo flag.

For point sets whose coordinates are rationals q/m the whole computation
runs in integer arithmetic over the common denominator, so reported
volumes are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import PreconditionError, ResourceLimitError
from .lattice import is_prime
from .point_sets import Generator, PointSet, korobov_pointset

# Exact-mode point-count limits per dimension (override via the limit
# argument); the candidate sweeps are quadratic per axis pair.
EXACT_LIMITS = {1: 200_000, 2: 20_000, 3: 2_000, 4: 300}

_INT_DENOM_LIMIT = 1_000_000


@dataclass(frozen=True)
class AxisBox:
    """Half-open axis-parallel box [lo, hi)."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or not self.lo:
            raise PreconditionError("corner vectors must have equal positive length")
        for l, h in zip(self.lo, self.hi):
            if not l < h:
                raise PreconditionError(f"need lo < hi per axis, got [{l}, {h})")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return math.prod(h - l for l, h in zip(self.lo, self.hi))


@dataclass(frozen=True)
class DispersionResult:
    volume: float
    volume_exact: Fraction
    witness: AxisBox
    open_at_lo: bool
    method: str

    def __iter__(self):
        yield self.volume
        yield self.witness


def _prepare(ps: PointSet):
    """Coordinate array, cube size, and denominator (None = float mode)."""
    den = ps.denominator
    if den is not None and den <= _INT_DENOM_LIMIT:
        nums = ps.numerators()
        return nums.reshape(len(ps), ps.dim), den, den
    arr = ps.as_array().astype(float)
    return arr, 1.0, None


def _better(cand, best) -> bool:
    """Larger volume wins; ties go to the lexicographically smallest (lo, hi)."""
    if best is None:
        return True
    if cand[0] != best[0]:
        return cand[0] > best[0]
    return (cand[1], cand[2]) < (best[1], best[2])


def _solve_1d(X, UB):
    vals = np.concatenate([[X.dtype.type(0)], np.sort(X[:, 0]), [X.dtype.type(UB)]])
    best = None
    for i in range(len(vals) - 1):
        lo, hi = vals[i], vals[i + 1]
        if hi <= lo:
            continue
        cand = (_scalar(hi - lo), (_scalar(lo),), (_scalar(hi),))
        if _better(cand, best):
            best = cand
    return best


def _scalar(x):
    return int(x) if np.issubdtype(type(x), np.integer) or isinstance(x, (int, np.integer)) else float(x)


def _anchored_pass(xs, ys, UB, emit):
    """Sweep of boxes whose left edge passes through a point.

    For anchor i the shrinking window is tracked by running extrema of the
    slice y-values split at y_i; a point with y equal to y_i pinches the
    window and ends the sweep.  Candidates use the window state from
    strictly smaller x only, so points sharing an x never block each other.
    """
    n = len(xs)
    zero = xs.dtype.type(0)
    ub = xs.dtype.type(UB)
    for i in range(n):
        xi, yi = xs[i], ys[i]
        j0 = int(np.searchsorted(xs, xi, side="right"))
        if j0 == n:
            emit((_scalar((ub - xi) * ub), (_scalar(xi), 0), (_scalar(ub), _scalar(ub))))
            continue
        sx = xs[j0:]
        sy = ys[j0:]
        below = np.where(sy < yi, sy, zero)
        above = np.where(sy > yi, sy, ub)
        cmax = np.maximum.accumulate(below)
        cmin = np.minimum.accumulate(above)
        b_excl = np.empty_like(cmax)
        t_excl = np.empty_like(cmin)
        b_excl[0] = zero
        t_excl[0] = ub
        b_excl[1:] = cmax[:-1]
        t_excl[1:] = cmin[:-1]
        gs = np.searchsorted(sx, sx, side="left")
        bb = b_excl[gs]
        tb = t_excl[gs]

        cut = len(sy)
        pinched = False
        if yi > 0:
            hits = np.flatnonzero(sy == yi)
            if hits.size:
                pinched = True
                cut = int(np.searchsorted(sx, sx[hits[0]], side="right"))

        inside = (bb < sy) & (sy < tb)
        if cut < len(sy):
            inside[cut:] = False
        idxs = np.flatnonzero(inside)
        if idxs.size:
            w = sx[idxs] - xi
            h = tb[idxs] - bb[idxs]
            vols = w * h
            vmax = vols.max()
            for t in np.flatnonzero(vols == vmax):
                j = idxs[t]
                emit((_scalar(vols[t]), (_scalar(xi), _scalar(bb[j])), (_scalar(sx[j]), _scalar(tb[j]))))
        if not pinched:
            emit((
                _scalar((ub - xi) * (cmin[-1] - cmax[-1])),
                (_scalar(xi), _scalar(cmax[-1])),
                (_scalar(ub), _scalar(cmin[-1])),
            ))


def _solve_2d(X, UB):
    order = np.lexsort((X[:, 1], X[:, 0]))
    xs = np.ascontiguousarray(X[order, 0])
    ys = np.ascontiguousarray(X[order, 1])

    best = None

    def consider(cand):
        nonlocal best
        if _better(cand, best):
            best = cand

    # boxes spanning the full x width: y gaps among points with x > 0
    strip = ys[xs > 0]
    vals = np.concatenate([[xs.dtype.type(0)], np.sort(strip), [xs.dtype.type(UB)]])
    for i in range(len(vals) - 1):
        lo, hi = vals[i], vals[i + 1]
        if hi <= lo:
            continue
        consider((_scalar(xs.dtype.type(UB) * (hi - lo)), (0, _scalar(lo)), (_scalar(xs.dtype.type(UB)), _scalar(hi))))

    # boxes with a supporting point on the left edge
    _anchored_pass(xs, ys, UB, consider)

    # boxes with the left edge on the wall and a supporting point on the
    # right edge: mirror the x axis and sweep again
    mx = (xs.dtype.type(UB) - xs)[::-1].copy()
    my = ys[::-1].copy()
    order2 = np.lexsort((my, mx))
    mx = np.ascontiguousarray(mx[order2])
    my = np.ascontiguousarray(my[order2])

    def consider_mirrored(cand):
        vol, lo, hi = cand
        lo1 = _scalar(xs.dtype.type(UB)) - hi[0]
        hi1 = _scalar(xs.dtype.type(UB)) - lo[0]
        consider((vol, (lo1, lo[1]), (hi1, hi[1])))

    _anchored_pass(mx, my, UB, consider_mirrored)
    return best


def _solve(X, UB, d):
    n = len(X)
    if n == 0:
        side = UB
        vol = side
        for _ in range(d - 1):
            vol = vol * side
        return (_scalar(vol), (0,) * d, (_scalar(side),) * d)
    if d == 1:
        return _solve_1d(X, UB)
    if d == 2:
        return _solve_2d(X, UB)
    return _solve_nd(X, UB, d)


def _solve_nd(X, UB, d):
    """Candidate sweep over first-axis pairs with a monotone strip bound.

    The best empty-box volume of a strip can only shrink as the strip
    gains points, so the last solved subproblem bounds every wider strip;
    first-axis pairs whose width times that bound cannot beat the current
    best are skipped without descending.  Skips use strict inequality, so
    volume ties are always fully enumerated.
    """
    cols = tuple(X[:, j] for j in range(d - 1, -1, -1))
    order = np.lexsort(cols)
    xs = np.ascontiguousarray(X[order, 0])
    rest = np.ascontiguousarray(X[order, 1:])
    uniq = np.unique(xs)
    ubv = _scalar(xs.dtype.type(UB))

    # seed with the full-width strip so narrow candidates prune early
    i0 = int(np.searchsorted(xs, 0, side="right"))
    subvol0, slo0, shi0 = _solve(rest[i0:], UB, d - 1)
    best = (ubv * subvol0, (0,) + slo0, (ubv,) + shi0)

    lo_cands = [0] + [_scalar(v) for v in uniq]
    for lo in lo_cands:
        i0 = int(np.searchsorted(xs, lo, side="right"))
        subx = xs[i0:]
        subr = rest[i0:]
        his = [_scalar(v) for v in np.unique(subx)] + [ubv]
        a_ub = None
        for hi in his:
            if hi <= lo:
                continue
            width = hi - lo
            if a_ub is not None and best is not None and width * a_ub < best[0]:
                continue
            cnt = int(np.searchsorted(subx, hi, side="left"))
            subvol, slo, shi = _solve(subr[:cnt], UB, d - 1)
            a_ub = subvol
            cand = (width * subvol, (lo,) + slo, (hi,) + shi)
            if _better(cand, best):
                best = cand
    return best


def _result_from(best, den, d, n_points, X, method) -> DispersionResult:
    vol, lo, hi = best
    if den is not None:
        vol_exact = Fraction(int(vol), den**d)
        lo_f = tuple(v / den for v in lo)
        hi_f = tuple(v / den for v in hi)
    else:
        vol_exact = Fraction(float(vol))
        lo_f = tuple(float(v) for v in lo)
        hi_f = tuple(float(v) for v in hi)
    open_at_lo = False
    if n_points:
        inside_closed = np.ones(len(X), dtype=bool)
        for j in range(d):
            inside_closed &= (X[:, j] >= lo[j]) & (X[:, j] < hi[j])
        open_at_lo = bool(inside_closed.any())
    return DispersionResult(
        volume=float(vol_exact),
        volume_exact=vol_exact,
        witness=AxisBox(lo=lo_f, hi=hi_f),
        open_at_lo=open_at_lo,
        method=method,
    )


def dispersion(
    ps: PointSet,
    limit: int | None = None,
    method: str = "exact",
    grid_resolution: int = 64,
) -> DispersionResult:
    """Exact supremum volume of an empty axis-parallel box, with witness.

    Exact mode covers d <= 4 up to a per-dimension point-count limit.  Grid
    mode snaps coordinates down to a uniform grid and solves that set
    exactly, which approximates the true value within about d/resolution.
    """
    d = ps.dim
    if method == "grid":
        return _dispersion_grid(ps, grid_resolution)
    if method != "exact":
        raise PreconditionError(f"unknown method {method!r}")
    if d > 4:
        raise ResourceLimitError("exact mode supports d <= 4; use the grid method")
    lim = limit if limit is not None else EXACT_LIMITS[d]
    if len(ps) > lim:
        raise ResourceLimitError(
            f"exact mode limited to {lim} points for d={d}, got {len(ps)}"
        )
    X, UB, den = _prepare(ps)
    best = _solve(X, UB, d)
    return _result_from(best, den, d, len(ps), X, "exact")


def _dispersion_grid(ps: PointSet, resolution: int) -> DispersionResult:
    if resolution < 2:
        raise PreconditionError("grid resolution must be >= 2")
    arr = ps.as_array()
    snapped = np.floor(arr * resolution).astype(np.int64)
    best = _solve(snapped, resolution, ps.dim)
    return _result_from(best, resolution, ps.dim, len(ps), snapped, f"grid({resolution})")


def dispersion_bruteforce(ps: PointSet) -> DispersionResult:
    """Exhaustive oracle over all candidate boundary combinations.

    Deliberately straightforward (axis pairs plus gap scans) so it stays an
    independent check of the sweep; sizes are limited accordingly.
    """
    d = ps.dim
    if d > 3:
        raise PreconditionError("the brute-force oracle supports d <= 3")
    if len(ps) > 250:
        raise PreconditionError("the brute-force oracle supports at most 250 points")
    X, UB, den = _prepare(ps)
    best = _brute(X, UB, d)
    return _result_from(best, den, d, len(ps), X, "bruteforce")


def _gap_candidates(vals, zero, ub):
    arr = np.concatenate([[zero], np.sort(np.asarray(vals)), [ub]])
    out = []
    for i in range(len(arr) - 1):
        lo, hi = arr[i], arr[i + 1]
        if hi > lo:
            out.append((_scalar(lo), _scalar(hi)))
    return out


def _brute(X, UB, d):
    zero = X.dtype.type(0) if len(X) else (0 if isinstance(UB, int) else 0.0)
    ub = X.dtype.type(UB) if len(X) else UB
    best = None

    def consider(cand):
        nonlocal best
        if _better(cand, best):
            best = cand

    if len(X) == 0:
        side = _scalar(ub)
        vol = side
        for _ in range(d - 1):
            vol = vol * side
        return (vol, (0,) * d, (side,) * d)

    xs = X[:, 0]
    lo_cands = sorted({0} | {_scalar(v) for v in xs})
    hi_cands = sorted({_scalar(v) for v in xs} | {_scalar(ub)})

    for lo1 in lo_cands:
        for hi1 in hi_cands:
            if hi1 <= lo1:
                continue
            strip = X[(xs > lo1) & (xs < hi1)]
            w = hi1 - lo1
            if d == 1:
                if len(strip) == 0:
                    consider((w, (lo1,), (hi1,)))
                continue
            if d == 2:
                for lo2, hi2 in _gap_candidates(strip[:, 1], zero, ub):
                    consider((w * (hi2 - lo2), (lo1, lo2), (hi1, hi2)))
                continue
            # d == 3: middle-axis pairs, then gap scan on the last axis.
            # Multiply widths right to left so float volumes associate
            # exactly as in the sweep.
            ys = strip[:, 1]
            lo2s = sorted({0} | {_scalar(v) for v in ys})
            hi2s = sorted({_scalar(v) for v in ys} | {_scalar(ub)})
            for lo2 in lo2s:
                for hi2 in hi2s:
                    if hi2 <= lo2:
                        continue
                    strip2 = strip[(ys > lo2) & (ys < hi2)]
                    for lo3, hi3 in _gap_candidates(strip2[:, 2], zero, ub):
                        vol = w * ((hi2 - lo2) * (hi3 - lo3))
                        consider((vol, (lo1, lo2, lo3), (hi1, hi2, hi3)))
    return best


def box_is_empty(ps: PointSet, box: AxisBox) -> bool:
    """Emptiness under the supremum semantics (strict interior blocking)."""
    arr = ps.as_array()
    inside = np.ones(len(ps), dtype=bool)
    for j in range(box.dim):
        inside &= (arr[:, j] > box.lo[j]) & (arr[:, j] < box.hi[j])
    return not bool(inside.any())


# --- congruence systems ------------------------------------------------------

@dataclass(frozen=True)
class IntervalSystem:
    """Residue intervals I_j = [x_j, y_j] within [1, p] for the special-form
    rule with scalar generator a modulo a prime p."""

    p: int
    a: int
    intervals: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.intervals:
            raise PreconditionError("need at least one interval")
        for x, y in self.intervals:
            if not (1 <= x <= y <= self.p):
                raise PreconditionError(f"interval [{x},{y}] not within [1,{self.p}]")

    @property
    def dim(self) -> int:
        return len(self.intervals)

    @property
    def product(self) -> int:
        return math.prod(y - x + 1 for x, y in self.intervals)


def solve_congruence_system(sys: IntervalSystem) -> int | None:
    """Smallest mu in [1, p] with mu * a^{j-1} mod p inside I_j for all j.

    Residue 0 matches the endpoint p (the residues 1..p-1, 0 are read as
    1..p-1, p).  Returns None when no mu works.
    """
    if not is_prime(sys.p):
        raise PreconditionError(f"{sys.p} is not prime")
    if not (1 <= sys.a < sys.p):
        raise PreconditionError(f"generator {sys.a} outside [1, {sys.p})")
    p, a = sys.p, sys.a
    for mu in range(1, p + 1):
        cur = mu % p
        ok = True
        for x, y in sys.intervals:
            rr = p if cur == 0 else cur
            if not (x <= rr <= y):
                ok = False
                break
            cur = (cur * a) % p
        if ok:
            return mu
    return None


def system_box_hit(sys: IntervalSystem) -> int | None:
    """Geometric cross-check: smallest index mu whose Korobov point lies in
    the box with per-axis interval [x/p, (y+1)/p), wrapped when y = p.

    Matches the residue convention of solve_congruence_system exactly: the
    residues x..y correspond to coordinates x/p..y/p, with residue 0 (the
    coordinate 0) standing in for the endpoint p.
    """
    p, a, d = sys.p, sys.a, sys.dim
    ps = korobov_pointset(Generator.from_scalar(p, a, d), d)
    for mu, pt in enumerate(ps.points, start=1):
        ok = True
        for c, (x, y) in zip(pt, sys.intervals):
            if y == p:
                hit = (c >= x / p) or (c < 1.0 / p)
            else:
                hit = (x / p) <= c < ((y + 1) / p)
            if not hit:
                ok = False
                break
        if ok:
            return mu
    return None
