"""Smooth hat kernels, their tensor-product box versions, and the dyadic
bound quantities used in the error analysis.

The order-r hat kernel is the r-fold self-convolution of the indicator of
[-u/2, u/2).  It equals a rescaled uniform B-spline of order r, has support
(-ru/2, ru/2), integral u^r, and Fourier transform (sin(pi*y*u)/(pi*y))^r.
The B-spline closed form is what we evaluate; its equivalence with the
literal repeated convolution is covered by tests rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import PreconditionError


def _bspline(order: int, t):
    """Cardinal B-spline of the given order on [0, order), unit integral.

    Order 1 is the half-open indicator of [0, 1); higher orders follow the
    stable two-term recursion on uniform knots.
    """
    if order == 1:
        return ((t >= 0.0) & (t < 1.0)).astype(float)
    a = _bspline(order - 1, t)
    b = _bspline(order - 1, t - 1.0)
    return (t * a + (order - t) * b) / (order - 1)


def hat_eval(r: int, u: float, x):
    """Evaluate the order-r hat kernel of scale u at x (scalar or array)."""
    if r < 1:
        raise PreconditionError(f"order must be >= 1, got {r}")
    if u <= 0:
        raise PreconditionError(f"scale must be positive, got {u}")
    t = np.asarray(x, dtype=float) / u + r / 2.0
    val = u ** (r - 1) * _bspline(r, t)
    if np.ndim(x) == 0:
        return float(val)
    return val


def hat_integral(r: int, u: float) -> float:
    """Integral of the order-r hat kernel: u^r (convolution multiplies integrals)."""
    if r < 1 or u <= 0:
        raise PreconditionError(f"need r >= 1 and u > 0, got r={r}, u={u}")
    return u**r


def hat_fourier(r: int, u: float, k):
    """k-th Fourier coefficient of the periodized order-r hat kernel.

    Equals (sin(pi*k*u)/(pi*k))^r for k != 0 and u^r for k = 0; real because
    the kernel is even.
    """
    if r < 1 or u <= 0:
        raise PreconditionError(f"need r >= 1 and u > 0, got r={r}, u={u}")
    karr = np.asarray(k, dtype=float)
    safe = np.where(karr == 0.0, 1.0, karr)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(
            karr == 0.0, u**r, (np.sin(np.pi * karr * u) / (np.pi * safe)) ** r
        )
    if np.ndim(k) == 0:
        return float(vals)
    return vals


def periodized_hat_eval(r: int, u: float, x):
    """Evaluate the 1-periodization of the order-r hat kernel.

    The argument is reduced mod 1 first; with support width r*u <= 1 only the
    shifts 0 and -1 can then intersect the support, and wider kernels fall
    back to the full shift range.
    """
    xm = np.mod(np.asarray(x, dtype=float), 1.0)
    if r * u <= 1.0:
        val = hat_eval(r, u, xm) + hat_eval(r, u, xm - 1.0)
    else:
        half = int(math.ceil(r * u / 2.0)) + 1
        val = sum(hat_eval(r, u, xm + n) for n in range(-half, half + 1))
    if np.ndim(x) == 0:
        return float(val)
    return val


@dataclass(frozen=True)
class SmoothBox:
    """Order-r box kernel: center z, scale vector u, support widths r*u_j.

    Scales are capped at 1/r per coordinate so the support fits one period
    and the box volume prod_j(r*u_j) lies in (0, 1].
    """

    r: int
    z: tuple[float, ...]
    u: tuple[float, ...]

    def __post_init__(self):
        if self.r < 1:
            raise PreconditionError(f"order must be >= 1, got {self.r}")
        if len(self.z) != len(self.u) or not self.u:
            raise PreconditionError("center and scale vectors must have equal positive length")
        for zj in self.z:
            if not (0.0 <= zj < 1.0):
                raise PreconditionError(f"center coordinate {zj} outside [0,1)")
        cap = 1.0 / self.r
        for uj in self.u:
            if not (0.0 < uj <= cap * (1.0 + 1e-12)):
                raise PreconditionError(f"scale {uj} outside (0, 1/r] for r={self.r}")

    @property
    def dim(self) -> int:
        return len(self.u)

    @property
    def pr(self) -> float:
        """Product of the scales."""
        return math.prod(self.u)

    @property
    def volume(self) -> float:
        """Support volume prod_j (r * u_j) = r^d * pr(u)."""
        return math.prod(self.r * uj for uj in self.u)


def box_eval(B: SmoothBox, x: Sequence[float]) -> float:
    """Tensor-product kernel value at a point of the cube."""
    if len(x) != B.dim:
        raise PreconditionError(f"point has {len(x)} coordinates, box has {B.dim}")
    val = 1.0
    for xj, zj, uj in zip(x, B.z, B.u):
        val *= hat_eval(B.r, uj, xj - zj)
        if val == 0.0:
            return 0.0
    return val


def periodized_box_eval(B: SmoothBox, x: Sequence[float]) -> float:
    """Value of the periodized tensor kernel at a point of the cube."""
    if len(x) != B.dim:
        raise PreconditionError(f"point has {len(x)} coordinates, box has {B.dim}")
    val = 1.0
    for xj, zj, uj in zip(x, B.z, B.u):
        val *= periodized_hat_eval(B.r, uj, xj - zj)
        if val == 0.0:
            return 0.0
    return val


def box_integral(B: SmoothBox) -> float:
    """Exact integral of the box kernel: pr(u)^r = (vol/r^d)^r."""
    return B.pr**B.r


def compositions_colex(t: int, d: int) -> Iterator[tuple[int, ...]]:
    """All ways to write t as d ordered non-negative parts, colexicographic."""
    if t < 0 or d < 1:
        raise PreconditionError(f"need t >= 0 and d >= 1, got t={t}, d={d}")
    if d == 1:
        yield (t,)
        return
    for last in range(t + 1):
        for head in compositions_colex(t - last, d - 1):
            yield head + (last,)


def _min_pm(r: int, w: float) -> float:
    """min(w^{r/2}, w^{-r/2}) for w > 0."""
    p = w ** (r / 2.0)
    return min(p, 1.0 / p)


def H_bound(B: SmoothBox, s: Sequence[int]) -> float:
    """Uniform bound on the periodized-kernel coefficients over the dyadic
    block at levels s:

        (pr(u)/2^{|s|})^{r/2} * prod_j min((2^{s_j} u_j)^{r/2}, (2^{s_j} u_j)^{-r/2})
    """
    if len(s) != B.dim:
        raise PreconditionError(f"level vector has {len(s)} components, box has {B.dim}")
    t = sum(s)
    val = (B.pr / 2.0**t) ** (B.r / 2.0)
    for sj, uj in zip(s, B.u):
        val *= _min_pm(B.r, 2.0**sj * uj)
    return val


def sigma(r: int, u: Sequence[float], t: int) -> float:
    """Sum over all level vectors with |s| = t of
    prod_j min((2^{s_j} u_j)^{r/2}, (2^{s_j} u_j)^{-r/2})."""
    if r < 1:
        raise PreconditionError(f"order must be >= 1, got {r}")
    if any(uj <= 0 for uj in u):
        raise PreconditionError("scales must be positive")
    total = 0.0
    for s in compositions_colex(t, len(u)):
        term = 1.0
        for sj, uj in zip(s, u):
            term *= _min_pm(r, 2.0**sj * uj)
        total += term
    return total
