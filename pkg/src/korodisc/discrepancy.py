"""Cubature error functionals over shifted smooth boxes and the grid
searches that estimate the fixed-volume discrepancies.

Sign convention: error values are (point average) - (integral).  The
periodic and non-periodic discrepancies take absolute values of that
quantity, so both searches maximize |E|.

The sup over boxes and the L_p norm in the shift cannot be computed
exactly; the search reports grid lower estimates with the grid recorded in
the result.  Estimates are monotone under nested grid refinement (for the
max norm, refine the midpoint count by an odd factor so grids nest).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InconsistencyError, PreconditionError, ResourceLimitError
from .lattice import dual_in_block
from .point_sets import Generator, PointSet, korobov_pointset
from .smooth_kernels import SmoothBox, hat_eval, hat_fourier, periodized_hat_eval

DEFAULT_FOURIER_CAP = 512

_GRID_ELEMENT_LIMIT = 200_000_000


def _resolve(ps_or_g) -> tuple[PointSet, Generator | None]:
    if isinstance(ps_or_g, Generator):
        return korobov_pointset(ps_or_g, ps_or_g.dim), ps_or_g
    if isinstance(ps_or_g, PointSet):
        src = ps_or_g.source
        g = None
        if src.kind == "korobov":
            g = Generator(src.m, src.a)
        elif src.kind == "fibonacci":
            from .point_sets import fibonacci_generator

            g = fibonacci_generator(src.n)
        return ps_or_g, g
    raise PreconditionError(f"expected a PointSet or Generator, got {type(ps_or_g)!r}")


def box_integral(B: SmoothBox) -> float:
    from .smooth_kernels import box_integral as _bi

    return _bi(B)


def error_direct(ps: PointSet, B: SmoothBox, z_shift: Sequence[float] | None = None) -> float:
    """Average of the periodized box kernel over the points minus its
    integral, with the box center shifted by z_shift.

    The summation uses numpy's fixed pairwise reduction over the mu order,
    so results are reproducible bit for bit.
    """
    if ps.dim != B.dim:
        raise PreconditionError(f"point set is {ps.dim}-dimensional, box is {B.dim}")
    shift = np.zeros(B.dim) if z_shift is None else np.asarray(z_shift, dtype=float)
    if shift.shape != (B.dim,):
        raise PreconditionError("shift dimension mismatch")
    pts = ps.as_array()
    vals = np.ones(len(ps))
    for j in range(B.dim):
        vals *= periodized_hat_eval(B.r, B.u[j], pts[:, j] - B.z[j] - shift[j])
    return float(vals.mean() - box_integral(B))


class FourierError(NamedTuple):
    value: float
    truncation_bound: float


def fourier_tail_bound(B: SmoothBox, cap: int) -> float:
    """Upper bound on sum over ||k||_inf > cap of prod_j min(u_j^r, |k_j|^-r).

    Finite only for r >= 2 (the per-axis series diverges at r = 1, where the
    dual-lattice series converges only conditionally).
    """
    r = B.r
    if r < 2:
        return math.inf
    full = 1.0
    boxed = 1.0
    for uj in B.u:
        K = math.floor(1.0 / uj)
        # integral bound on the zeta tail starting at K+1
        tail = (K + 1.0) ** (-r) + (K + 1.0) ** (1 - r) / (r - 1)
        full *= uj**r * (2 * K + 1) + 2.0 * tail
        ks = np.arange(1, cap + 1, dtype=float)
        boxed *= uj**r + 2.0 * float(np.minimum(uj**r, ks**-r).sum())
    return max(0.0, full - boxed)


def error_fourier(
    g: Generator,
    B: SmoothBox,
    z_shift: Sequence[float] | None = None,
    cap: int = DEFAULT_FOURIER_CAP,
) -> FourierError:
    """Dual-lattice series for the cubature error, truncated to the box
    ||k||_inf <= cap, with an analytic bound on the discarded tail.

    Evaluated through the character-sum identity: restricting the series to
    frequencies with a.k = 0 (mod m) equals averaging the box-truncated
    kernel over the lattice points.  Phases come from exact integer
    residues, so rounding stays at the level of the final summation.
    """
    if g.dim != B.dim:
        raise PreconditionError(f"generator is {g.dim}-dimensional, box is {B.dim}")
    if cap < 1:
        raise PreconditionError(f"cap must be >= 1, got {cap}")
    shift = np.zeros(B.dim) if z_shift is None else np.asarray(z_shift, dtype=float)
    m = g.m
    ks = np.arange(-cap, cap + 1, dtype=np.int64)
    table = np.exp(2j * np.pi * np.arange(m) / m)
    mus = np.arange(1, m + 1, dtype=np.int64)

    gprod = np.ones(m, dtype=complex)
    chunk = max(1, int(2e7) // (2 * cap + 1))
    for j in range(B.dim):
        w = B.z[j] + shift[j]
        weights = hat_fourier(B.r, B.u[j], ks) * np.exp(-2j * np.pi * ks * w)
        q = (mus * g.a[j]) % m
        gj = np.empty(m, dtype=complex)
        for lo in range(0, m, chunk):
            hi = min(lo + chunk, m)
            idx = (q[lo:hi, None] * ks[None, :]) % m
            gj[lo:hi] = table[idx] @ weights
        gprod *= gj
    val = complex(gprod.sum() / m) - math.prod(B.u) ** B.r
    if abs(val.imag) >= 1e-10:
        raise InconsistencyError(
            f"imaginary part {val.imag:.3e} of the truncated error series is not negligible"
        )
    return FourierError(value=float(val.real), truncation_bound=fourier_tail_bound(B, cap))


def block_projection_norms(
    g: Generator, B: SmoothBox, s: Sequence[int]
) -> tuple[float, float]:
    """(L2 norm, L-infinity bound) of the error's projection onto the dyadic
    block at levels s.

    The L2 norm follows from Parseval over the block's dual-lattice
    frequencies; the sup bound is the triangle inequality.  The zero
    frequency never contributes (the error has mean zero).
    """
    vecs = [k for k in dual_in_block(g, s) if any(k)]
    if not vecs:
        return 0.0, 0.0
    sq = 0.0
    ab = 0.0
    for k in vecs:
        c = 1.0
        for kj, uj in zip(k, B.u):
            c *= abs(hat_fourier(B.r, uj, kj))
        sq += c * c
        ab += c
    return math.sqrt(sq), ab


# --- discrepancy search ------------------------------------------------------

@dataclass(frozen=True)
class SearchConfig:
    """Grid resolution of the discrepancy search.

    z_grid      midpoint shifts per axis for the max norm
    u_grid      geometric samples per free axis on the volume surface
    quadrature_refinement   L_p grid density as a multiple of the point count
    """

    z_grid: int = 64
    u_grid: int = 5
    quadrature_refinement: int = 4

    def __post_init__(self):
        if self.z_grid < 2 or self.u_grid < 2:
            raise PreconditionError("grid counts must be >= 2")
        if self.quadrature_refinement < 1:
            raise PreconditionError("quadrature refinement must be >= 1")


@dataclass
class DiscrepancyEstimate:
    kind: str  # "periodic" | "nonperiodic"
    estimate: float
    argmax: SmoothBox
    v: float
    r: int
    p: float | None
    pointset: str
    grid: dict
    warnings: list[str] = field(default_factory=list)
    cross_check_residual: float | None = None
    certified: bool | None = None
    trace: list | None = None

    def to_json_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "estimate": self.estimate,
            "argmax": {"r": self.argmax.r, "z": list(self.argmax.z), "u": list(self.argmax.u)},
            "v": self.v,
            "r": self.r,
            "p": ("inf" if self.p == math.inf else self.p),
            "pointset": self.pointset,
            "grid": self.grid,
            "warnings": self.warnings,
            "cross_check_residual": self.cross_check_residual,
            "certified": self.certified,
        }
        return out


def u_surface_grid(v: float, r: int, d: int, count: int) -> list[tuple[float, ...]]:
    """Scale vectors on the constraint surface prod_j (r u_j) = v.

    The last scale is eliminated; free scales run over a geometric grid
    between the smallest and largest feasible values.
    """
    if not (0.0 < v <= 1.0):
        raise PreconditionError(f"volume must lie in (0, 1], got {v}")
    P = v / r**d  # target prod u_j
    cap = 1.0 / r
    if d == 1:
        return [(v / r,)]
    lo = P * r ** (d - 1)  # keeps the eliminated scale within (0, 1/r]
    grid = np.geomspace(lo, cap, count)
    out = set()
    from itertools import product as iproduct

    for combo in iproduct(grid, repeat=d - 1):
        rest = math.prod(combo)
        ud = P / rest
        if ud <= 0 or ud > cap * (1.0 + 1e-9):
            continue
        out.add(tuple(float(x) for x in combo) + (float(min(ud, cap)),))
    return sorted(out)


def _axis_matrix(r: int, u_j: float, y_axis: np.ndarray, cands: np.ndarray, periodic: bool):
    arg = y_axis[None, :] - cands[:, None]
    if periodic:
        return periodized_hat_eval(r, u_j, arg)
    return hat_eval(r, u_j, arg)


def _error_grid(
    pts: np.ndarray, r: int, u: Sequence[float], cands: list[np.ndarray], periodic: bool
) -> np.ndarray:
    d = len(u)
    if d > 3:
        raise PreconditionError("the grid search supports d <= 3")
    total = math.prod(len(c) for c in cands)
    if total > _GRID_ELEMENT_LIMIT:
        raise ResourceLimitError(f"shift grid has {total} cells")
    m = pts.shape[0]
    I = math.prod(u) ** r
    Hs = [_axis_matrix(r, u[j], pts[:, j], cands[j], periodic) for j in range(d)]
    if d == 1:
        return Hs[0].mean(axis=1) - I
    if d == 2:
        return Hs[0] @ Hs[1].T / m - I
    C3 = len(cands[2])
    E = np.empty((len(cands[0]), len(cands[1]), C3))
    for c3 in range(C3):
        E[:, :, c3] = (Hs[0] * Hs[2][c3][None, :]) @ Hs[1].T / m
    return E - I


def _grid_max(absE: np.ndarray, cands: list[np.ndarray]) -> tuple[float, tuple[float, ...]]:
    flat = int(np.argmax(absE))  # first occurrence = lexicographically smallest shift
    multi = np.unravel_index(flat, absE.shape)
    z = tuple(float(cands[j][multi[j]]) for j in range(len(cands)))
    return float(absE.flat[flat]), z


def periodic_discrepancy(
    ps_or_g,
    v: float,
    r: int,
    p: float,
    cfg: SearchConfig | None = None,
    threads: int = 1,
    collect_trace: bool = False,
) -> DiscrepancyEstimate:
    """Grid lower estimate of the periodic fixed-volume L_p discrepancy.

    Maximizes over scale vectors on the volume surface; for each scale the
    L_p norm in the shift is taken over a midpoint grid (p < inf) or the
    max over midpoints plus the per-axis point coordinates (p = inf).  Ties
    go to the lexicographically smallest (u, z).
    """
    cfg = cfg or SearchConfig()
    ps, g = _resolve(ps_or_g)
    d, m = ps.dim, len(ps)
    p = float(p)
    if p < 1.0:
        raise PreconditionError(f"norm exponent must be >= 1, got {p}")
    pts = ps.as_array()
    warnings: list[str] = []

    if p == math.inf:
        mid = (np.arange(cfg.z_grid) + 0.5) / cfg.z_grid
        cands = [np.unique(np.concatenate([mid, pts[:, j]])) for j in range(d)]
        if cfg.z_grid < m:
            warnings.append(f"z grid ({cfg.z_grid}) is coarser than the point count ({m})")
        grid_desc = {"type": "max", "z_grid": cfg.z_grid, "point_shifts": True}
    else:
        R = cfg.quadrature_refinement
        if d >= 3 and R > 1:
            R = max(1, R // 2)
            warnings.append("quadrature refinement halved for d >= 3")
        G = R * m
        mid = (np.arange(G) + 0.5) / G
        cands = [mid] * d
        grid_desc = {"type": "midpoint", "points_per_axis": G, "refinement": R}

    us = u_surface_grid(v, r, d, cfg.u_grid)

    def eval_u(u: tuple[float, ...]):
        E = _error_grid(pts, r, u, cands, periodic=True)
        absE = np.abs(E)
        peak, zstar = _grid_max(absE, cands)
        if p == math.inf:
            return peak, zstar
        val = float((absE**p).mean() ** (1.0 / p))
        return val, zstar

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(eval_u, us))
    else:
        results = [eval_u(u) for u in us]

    best = None
    trace_rows = [] if collect_trace else None
    for u, (val, zstar) in zip(us, results):
        if collect_trace:
            trace_rows.append({"u": list(u), "z": list(zstar), "value": val})
        if best is None or val > best[0]:
            best = (val, u, zstar)
    est, ubest, zbest = best
    argmax = SmoothBox(r, z=zbest, u=ubest)

    residual = certified = None
    if g is not None:
        B0 = SmoothBox(r, z=(0.0,) * d, u=ubest)
        direct = error_direct(ps, B0, z_shift=zbest)
        fval, ftrunc = error_fourier(g, B0, z_shift=zbest)
        residual = abs(direct - fval)
        certified = residual <= ftrunc + 1e-9
        if not certified:
            warnings.append(
                f"cross-method residual {residual:.3e} exceeds the certificate {ftrunc:.3e}"
            )

    grid_desc["u_grid"] = cfg.u_grid
    return DiscrepancyEstimate(
        kind="periodic",
        estimate=est,
        argmax=argmax,
        v=v,
        r=r,
        p=p,
        pointset=ps.source.label,
        grid=grid_desc,
        warnings=warnings,
        cross_check_residual=residual,
        certified=certified,
        trace=trace_rows,
    )


def nonperiodic_discrepancy(
    ps: PointSet,
    v: float,
    r: int,
    cfg: SearchConfig | None = None,
    collect_trace: bool = False,
) -> DiscrepancyEstimate:
    """Grid lower estimate of the non-periodic fixed-volume discrepancy.

    Boxes are constrained to lie inside the cube: per axis the center must
    keep z_j +- r u_j / 2 within [0, 1].  Center candidates are a uniform
    grid over the feasible interval plus shifts that put a box face on a
    point coordinate.
    """
    cfg = cfg or SearchConfig()
    ps, _ = _resolve(ps)
    d, m = ps.dim, len(ps)
    pts = ps.as_array()
    us = u_surface_grid(v, r, d, cfg.u_grid)

    best = None
    trace_rows = [] if collect_trace else None
    for u in us:
        cands = []
        feasible = True
        for j in range(d):
            half = r * u[j] / 2.0
            lo_f, hi_f = half, 1.0 - half
            if lo_f > hi_f + 1e-15:
                feasible = False
                break
            uniform = np.linspace(lo_f, hi_f, cfg.z_grid)
            faces = np.concatenate([pts[:, j] - half, pts[:, j] + half])
            faces = np.clip(faces, lo_f, hi_f)
            cands.append(np.unique(np.concatenate([uniform, faces])))
        if not feasible:
            continue
        E = _error_grid(pts, r, u, cands, periodic=False)
        val, zstar = _grid_max(np.abs(E), cands)
        if collect_trace:
            trace_rows.append({"u": list(u), "z": list(zstar), "value": val})
        if best is None or val > best[0]:
            best = (val, u, zstar)
    if best is None:
        raise PreconditionError(f"no box of volume {v} fits inside the cube")
    est, ubest, zbest = best
    argmax = SmoothBox(r, z=zbest, u=ubest)
    return DiscrepancyEstimate(
        kind="nonperiodic",
        estimate=est,
        argmax=argmax,
        v=v,
        r=r,
        p=None,
        pointset=ps.source.label,
        grid={"type": "max", "z_grid": cfg.z_grid, "face_shifts": True, "u_grid": cfg.u_grid},
        warnings=[],
        trace=trace_rows,
    )
