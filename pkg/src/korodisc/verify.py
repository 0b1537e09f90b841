"""Reproducible verification suite.

Each check pins a numeric gate (tolerance, ratio window, or exact
equality), records the measured values, and passes or fails on those
numbers alone.  Trend checks with no theoretical constant available use
empirical envelopes frozen from reference runs; the envelope value is part
of the recorded gate.
"""

from __future__ import annotations

import math
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .discrepancy import SearchConfig, error_direct, error_fourier, periodic_discrepancy
from .dispersion import (
    IntervalSystem,
    box_is_empty,
    dispersion,
    dispersion_bruteforce,
    solve_congruence_system,
    system_box_hit,
)
from .lattice import (
    exponential_sum,
    exponential_sum_direct,
    max_exactness,
    max_feasible_level,
    search_generator,
)
from .point_sets import (
    Generator,
    PointSet,
    SourceTag,
    fibonacci_generator,
    fibonacci_number,
    fibonacci_pointset,
    korobov_pointset,
)
from .smooth_kernels import SmoothBox, H_bound, compositions_colex, hat_eval, hat_fourier, sigma

# Empirical envelopes frozen from reference runs of this suite (see the
# per-check gates for how they are used).
TREND_BOUNDS = {
    # max of L * dispersion(K_m(a)) over the generator sweep; reference runs
    # measured 0.269, recorded with slack
    "l_times_disp": 1.0,
    # default threshold constant for guaranteed congruence solvability:
    # product >= C * (p * log2(p))^(d-1); reference runs measured minimal
    # constants up to 0.82 for p <= 101
    "congruence_C": 2.0,
}


@dataclass
class CheckResult:
    name: str
    anchor: str
    passed: bool
    gate: str
    measured: dict
    elapsed_ms: float
    notes: list[str] = field(default_factory=list)


@dataclass
class VerificationReport:
    suite: str
    environment: dict
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": "1",
            "suite": self.suite,
            "environment": self.environment,
            "passed": self.passed,
            "checks": [
                {
                    "name": c.name,
                    "anchor": c.anchor,
                    "passed": c.passed,
                    "gate": c.gate,
                    "measured": c.measured,
                    "elapsed_ms": c.elapsed_ms,
                    "notes": c.notes,
                }
                for c in self.checks
            ],
        }

    def summary_lines(self) -> list[str]:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"[{status}] {c.name}  ({c.elapsed_ms:.0f} ms)")
        overall = "PASS" if self.passed else "FAIL"
        lines.append(f"[{overall}] {len(self.checks)} checks")
        return lines


# --- numeric oracles used by the checks --------------------------------------

def convolution_oracle(r: int, u: float, x: float) -> float:
    """Numeric convolution of the order-(r-1) kernel with the order-1 kernel.

    Panels split at the integrand's breakpoints; composite Simpson inside a
    panel is exact for the piecewise-polynomial integrand up to r = 5.
    """
    half = u / 2.0
    knots = [x + (r - 1) * u / 2.0 - j * u for j in range(r)]
    cuts = sorted({-half, half} | {k for k in knots if -half < k < half})
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        nsub = 8
        ys = np.linspace(a, b, 2 * nsub + 1)
        w = np.ones(2 * nsub + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        vals = hat_eval(r - 1, u, x - ys)
        total += (b - a) / (6.0 * nsub) * float(w @ vals)
    return total


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def periodized_fourier_oracle(r: int, u: float, k: int) -> complex:
    """Quadrature of the periodized kernel against e^{-2 pi i k x} on [0,1).

    Gauss-Legendre panels are aligned with the wrapped kernel knots and
    subdivided so each panel sees a bounded phase change.
    """
    from .smooth_kernels import periodized_hat_eval

    knots = sorted({(j * u - r * u / 2.0) % 1.0 for j in range(r + 1)} | {0.0, 1.0})
    total = 0.0 + 0.0j
    for a, b in zip(knots[:-1], knots[1:]):
        if b <= a:
            continue
        nsub = max(1, math.ceil((b - a) * (abs(k) + 1) * 4))
        edges = np.linspace(a, b, nsub + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            mid, hw = (lo + hi) / 2.0, (hi - lo) / 2.0
            xs = mid + hw * _GL_NODES
            vals = periodized_hat_eval(r, u, xs) * np.exp(-2j * np.pi * k * xs)
            total += hw * complex(_GL_WEIGHTS @ vals)
    return total


# --- individual checks --------------------------------------------------------

def _check(name, anchor, gate, fn, ctx):
    t0 = time.perf_counter()
    passed, measured, notes = fn(ctx)
    elapsed = (time.perf_counter() - t0) * 1000.0
    return CheckResult(
        name=name, anchor=anchor, passed=passed, gate=gate,
        measured=measured, elapsed_ms=elapsed, notes=notes,
    )


def _c1_hat_identity(ctx):
    rng = ctx["rng"]
    worst_closed = 0.0
    for _ in range(1000):
        u = float(rng.uniform(0.01, 0.5))
        x = float(rng.uniform(-0.6, 0.6))
        worst_closed = max(worst_closed, abs(hat_eval(2, u, x) - max(u - abs(x), 0.0)))
    worst_conv = 0.0
    for r in (2, 3, 4):
        for u in (0.1, 0.25):
            for x in np.linspace(-0.55 * r * u, 0.55 * r * u, 41):
                ref = convolution_oracle(r, u, float(x))
                worst_conv = max(worst_conv, abs(hat_eval(r, u, float(x)) - ref))
    passed = worst_closed <= 1e-12 and worst_conv <= 1e-8
    return passed, {"max_err_closed_form": worst_closed, "max_err_convolution": worst_conv}, []


def _c2_fourier_formula(ctx):
    worst = 0.0
    cases = [(1, 0.3), (1, 0.77), (2, 0.3), (2, 0.49), (3, 0.21), (3, 1.0 / 3.0)]
    kmax = 8 if ctx["quick"] else 20
    for r, u in cases:
        for k in range(-kmax, kmax + 1):
            ref = periodized_fourier_oracle(r, u, k)
            worst = max(worst, abs(hat_fourier(r, u, k) - ref.real), abs(ref.imag))
    return worst <= 1e-10, {"max_err": worst}, []


def _c3_exponential_sum(ctx):
    rng = ctx["rng"]
    n_cases = 50 if ctx["quick"] else 200
    worst = 0.0
    for _ in range(n_cases):
        d = int(rng.integers(1, 4))
        m = int(rng.integers(1, 10_001))
        a = tuple(int(x) for x in rng.integers(0, m, size=d))
        k = tuple(int(x) for x in rng.integers(-50, 51, size=d))
        g = Generator(m, a)
        modular = exponential_sum(k, g)
        direct = exponential_sum_direct(k, g)
        worst = max(worst, abs(direct - modular))
    return worst <= 1e-10, {"instances": n_cases, "max_disagreement": worst}, []


def _c4_method_agreement(ctx):
    rng = ctx["rng"]
    n_probes = 12 if ctx["quick"] else 50
    worst_slack = -math.inf
    all_ok = True
    for _ in range(n_probes):
        d = int(rng.integers(1, 4))
        m = int(rng.integers(2, 1001))
        a = tuple(int(x) for x in rng.integers(0, m, size=d))
        r = int(rng.integers(2, 4))
        u = tuple(float(x) for x in rng.uniform(0.02, 1.0 / r, size=d))
        z = tuple(float(x) for x in rng.uniform(0.0, 1.0, size=d))
        shift = tuple(float(x) for x in rng.uniform(0.0, 1.0, size=d))
        g = Generator(m, a)
        B = SmoothBox(r, z, u)
        direct = error_direct(korobov_pointset(g, d), B, z_shift=shift)
        fval, tbound = error_fourier(g, B, z_shift=shift, cap=512)
        resid = abs(direct - fval)
        worst_slack = max(worst_slack, resid - tbound)
        if resid > tbound + 1e-9:
            all_ok = False
    return all_ok, {"probes": n_probes, "max_residual_minus_bound": worst_slack}, []


def _c5_fibonacci_exactness(ctx):
    n_hi = 12 if ctx["quick"] else 18
    records = {}
    ratios = []
    ok = True
    for n in range(4, n_hi + 1):
        g = fibonacci_generator(n)
        me = max_exactness(g, 2, cap=4096)
        if me.n_max is None or me.n_max <= 0:
            ok = False
            continue
        bn = fibonacci_number(n)
        ratio = me.n_max / bn
        ratios.append(ratio)
        records[n] = {"n_max": me.n_max, "b_n": bn, "ratio": ratio,
                      "witness": list(me.witness)}
    spread = max(ratios) / min(ratios) if ratios else math.inf
    passed = ok and spread <= 4.0
    return passed, {"per_n": records, "ratio_spread": spread}, []


def _run_generator_sweep(ctx):
    if "generator_sweep" in ctx:
        return ctx["generator_sweep"], ctx["generator_sweep_notes"]
    moduli = [47, 101] if ctx["quick"] else [47, 101, 211, 1009]
    sweep = []
    notes = []
    for m in moduli:
        for d in (2, 3):
            L = max_feasible_level(m, d)
            if L is None:
                notes.append(f"m={m}, d={d}: no level satisfies the counting condition")
                continue
            res = search_generator(m, L, d, threads=ctx["threads"])
            sweep.append({"m": m, "d": d, "L": L, "a": res.a,
                          "gamma_size": res.gamma_size, "verified": res.verified})
    ctx["generator_sweep"] = sweep
    ctx["generator_sweep_notes"] = notes
    return sweep, notes


def _c6_generator_search(ctx):
    sweep, notes = _run_generator_sweep(ctx)
    ok = bool(sweep) and all(rec["verified"] for rec in sweep)
    return ok, {"sweep": sweep}, notes


def _c7_periodic_rate(ctx):
    n_hi = 12 if ctx["quick"] else 16
    ns = list(range(8, n_hi + 1))
    v, r = 0.25, 2
    measured = {}
    slopes = {}
    ok = True
    for p in (math.inf, 2.0):
        ests = []
        for n in ns:
            g = fibonacci_generator(n)
            cfg = SearchConfig(z_grid=g.m, u_grid=5, quadrature_refinement=2)
            est = periodic_discrepancy(g, v, r, p, cfg=cfg, threads=ctx["threads"]).estimate
            ests.append(est)
        logs_b = np.log([fibonacci_number(n) for n in ns])
        slope = float(np.polyfit(logs_b, np.log(ests), 1)[0])
        key = "inf" if p == math.inf else str(int(p))
        measured[key] = {"n": ns, "estimates": ests}
        slopes[key] = slope
        if not (-2.4 <= slope <= -1.6):
            ok = False
    return ok, {"slopes": slopes, "series": measured}, []


def _c8_bound_ratios(ctx):
    rng = ctx["rng"]
    n_samples = 20 if ctx["quick"] else 50
    results = {}
    ok = True
    # block-sum bound for the kernel coefficient envelope
    for d in (2, 3):
        for r in (1, 2):
            ratios = []
            for _ in range(n_samples):
                u = tuple(float(2.0 ** -rng.uniform(1.0, 6.0)) for _ in range(d))
                pr = math.prod(u)
                # one dyadic level above the bare threshold pr >= 2^-t; at the
                # threshold itself the log factor vanishes and the ratio spikes
                t_min = max(1, math.ceil(-math.log2(pr))) + 1
                t = int(t_min + rng.integers(0, 12))
                val = sigma(r, u, t)
                ratio = val * (2.0**t * pr) ** (r / 2.0) / (
                    math.log2(2.0 ** (t + 1) * pr) ** (d - 1)
                )
                ratios.append(ratio)
            spread = max(ratios) / min(ratios)
            results[f"sigma_d{d}_r{r}"] = {"max": max(ratios), "spread": spread}
            if not (math.isfinite(max(ratios)) and spread <= 8.0):
                ok = False
    # squared-sum bound over fixed-weight levels
    for d in (2, 3):
        for r in (1, 2):
            ratios = []
            for _ in range(n_samples):
                lo_exp = math.log2(r) + 0.2
                u = tuple(float(2.0 ** -rng.uniform(lo_exp, 6.0)) for _ in range(d))
                B = SmoothBox(r, (0.0,) * d, u)
                v = B.volume
                t_min = max(1, math.ceil(1.0 - math.log2(B.pr)))
                t = int(t_min + rng.integers(0, 11))
                ssum = 0.0
                for s in compositions_colex(t, d):
                    ssum += H_bound(B, s) ** 2
                ratio = ssum * 2.0 ** (2 * r * t) / (math.log2(2.0**t * v) ** (d - 1))
                ratios.append(ratio)
            spread = max(ratios) / min(ratios)
            results[f"hb_d{d}_r{r}"] = {"max": max(ratios), "spread": spread}
            if not (math.isfinite(max(ratios)) and spread <= 8.0):
                ok = False
    return ok, results, []


def _random_pointset(rng, n, d) -> PointSet:
    pts = rng.random((n, d))
    return PointSet(dim=d, points=tuple(tuple(float(x) for x in row) for row in pts),
                    source=SourceTag("external"))


def _oracle_agrees(ps: PointSet) -> bool:
    a = dispersion(ps)
    b = dispersion_bruteforce(ps)
    if a.volume_exact != b.volume_exact:
        return False
    for res in (a, b):
        if not box_is_empty(ps, res.witness):
            return False
    if ps.dim == 2 and (a.witness.lo != b.witness.lo or a.witness.hi != b.witness.hi):
        return False
    return True


def _c9_dispersion_oracle(ctx):
    rng = ctx["rng"]
    n_sets = 30 if ctx["quick"] else 100
    ok = True
    checked = 0
    for i in range(n_sets):
        d = 2 if i % 5 < 3 else 3
        n = int(rng.integers(0, 31 if d == 2 else 15))
        ps = _random_pointset(rng, n, d)
        if not _oracle_agrees(ps):
            ok = False
        checked += 1
    # duplicated-coordinate fixture
    pts = rng.random((8, 2))
    pts[1, 0] = pts[0, 0]
    pts[3, 1] = pts[2, 1]
    fixture = PointSet(dim=2, points=tuple(tuple(float(x) for x in row) for row in pts),
                       source=SourceTag("external"))
    if not _oracle_agrees(fixture):
        ok = False
    fib_hi = 10 if ctx["quick"] else 12
    for n in range(4, fib_hi + 1):
        if not _oracle_agrees(fibonacci_pointset(n)):
            ok = False
    d4 = dispersion(fibonacci_pointset(4))
    exact_f4 = d4.volume == 0.36
    return ok and exact_f4, {"random_sets": checked, "disp_f4": d4.volume,
                             "disp_f4_exact": exact_f4}, []


def _c10_dispersion_trends(ctx):
    n_hi = 14 if ctx["quick"] else 18
    fib_vals = {}
    scaled = []
    for n in range(4, n_hi + 1):
        res = dispersion(fibonacci_pointset(n))
        bn = fibonacci_number(n)
        fib_vals[n] = {"dispersion": res.volume, "b_n_times_disp": bn * res.volume}
        scaled.append(bn * res.volume)
    spread = max(scaled) / min(scaled)
    ok = spread <= 4.0

    sweep_vals = []
    sweep, _ = _run_generator_sweep(ctx)
    for rec in sweep:
        g = Generator.from_scalar(rec["m"], rec["a"], rec["d"])
        res = dispersion(korobov_pointset(g, rec["d"]))
        sweep_vals.append({"m": rec["m"], "d": rec["d"], "L": rec["L"],
                           "L_times_disp": rec["L"] * res.volume})
    worst = max((x["L_times_disp"] for x in sweep_vals), default=0.0)
    bound = TREND_BOUNDS["l_times_disp"]
    ok = ok and worst <= bound
    return ok, {"fibonacci": fib_vals, "fib_spread": spread,
                "korobov_sweep": sweep_vals, "max_L_times_disp": worst,
                "envelope": bound}, []


def _c11_congruence_bridge(ctx):
    p = 23 if ctx["quick"] else 47
    d = 2
    L = max_feasible_level(p, d)
    a = search_generator(p, L, d).a
    rng = ctx["rng"]

    intervals = [(x, y) for x in range(1, p + 1) for y in range(x, p + 1)]
    mus = np.arange(1, p + 1, dtype=np.int64)
    ok = True

    def residue_mask(power):
        res = (mus * pow(a, power, p)) % p
        rr = np.where(res == 0, p, res)
        lo = np.array([x for x, _ in intervals])[:, None]
        hi = np.array([y for _, y in intervals])[:, None]
        return (rr[None, :] >= lo) & (rr[None, :] <= hi)

    pts = korobov_pointset(Generator.from_scalar(p, a, d), d).as_array()

    def box_mask(axis):
        c = pts[:, axis][None, :]
        lo = np.array([x for x, _ in intervals])[:, None]
        hi = np.array([y for _, y in intervals])[:, None]
        wrapped = hi == p
        plain = (c >= lo / p) & (c < (hi + 1) / p)
        wrap = (c >= lo / p) | (c < 1.0 / p)
        return np.where(wrapped, wrap, plain)

    m1, m2 = residue_mask(0), residue_mask(1)
    b1, b2 = box_mask(0), box_mask(1)
    exists_residue = (m1.astype(np.uint8) @ m2.astype(np.uint8).T) > 0
    exists_box = (b1.astype(np.uint8) @ b2.astype(np.uint8).T) > 0
    if not np.array_equal(exists_residue, exists_box):
        ok = False

    n_samples = 500 if ctx["quick"] else 2000
    mismatches = 0
    for _ in range(n_samples):
        i = int(rng.integers(0, len(intervals)))
        j = int(rng.integers(0, len(intervals)))
        sys = IntervalSystem(p=p, a=a, intervals=(intervals[i], intervals[j]))
        if solve_congruence_system(sys) != system_box_hit(sys):
            mismatches += 1
    ok = ok and mismatches == 0
    return ok, {"p": p, "a": a, "systems": len(intervals) ** 2,
                "sampled_mu_checks": n_samples, "mu_mismatches": mismatches}, []


_CHECKS = [
    ("hat-kernel-identity",
     "h(2,u,x) = max(u-|x|,0); h(r,u) = h(r-1,u) * h(1,u) (convolution)",
     "closed form to 1e-12 at 1000 samples; convolution oracle to 1e-8 for r <= 4",
     _c1_hat_identity),
    ("hat-fourier-formula",
     "coeff_k = (sin(pi k u)/(pi k))^r, u^r at k = 0",
     "quadrature of the periodized kernel to 1e-10 for r <= 3, |k| <= 20",
     _c2_fourier_formula),
    ("eq2.2-exponential-sum",
     "S(k,a) = 1 iff a.k = 0 (mod m), else 0",
     "modular and root-of-unity values agree to 1e-10 on random instances, m <= 1e4",
     _c3_exponential_sum),
    ("method-agreement",
     "error series over the dual lattice equals the direct cubature error",
     "|direct - fourier| <= truncation bound + 1e-9 on random probes",
     _c4_method_agreement),
    ("fibonacci-exactness",
     "max exactness level of the Fibonacci rule grows like b_n",
     "n_max positive for n = 4..18; ratios n_max/b_n within a factor 4",
     _c5_fibonacci_exactness),
    ("generator-search",
     "a counting bound guarantees a scalar generator exact on T(L,d)",
     "search succeeds and re-verifies for the prime sweep at maximal feasible L",
     _c6_generator_search),
    ("periodic-rate",
     "periodic fixed-volume discrepancy decays like L^-r up to log factors",
     "log-log slope vs b_n within [-2.4, -1.6] for p = inf and p = 2 (v=1/4, r=2)",
     _c7_periodic_rate),
    ("kernel-bound-ratios",
     "block sums of coefficient envelopes match their closed-form bounds",
     "fitted constants finite and stable within factor 8",
     _c8_bound_ratios),
    ("dispersion-oracle",
     "largest-empty-box sweep equals exhaustive enumeration",
     "exact equality on random sets and Fibonacci sets; disp(F_4) = 0.36 exactly",
     _c9_dispersion_oracle),
    ("dispersion-trends",
     "b_n*disp(F_n) bounded; L*disp(K_m(a)) bounded over the sweep",
     "Fibonacci spread <= 4 for n = 4..18; sweep maximum within the recorded envelope",
     _c10_dispersion_trends),
    ("congruence-bridge",
     "residue system solvable iff the Korobov set meets the matching box",
     "exact equivalence over the exhaustive interval sweep at p = 47, d = 2",
     _c11_congruence_bridge),
]


def check_names() -> list[str]:
    return [name for name, _, _, _ in _CHECKS]


def run_all(
    quick: bool = False,
    seed: int = 0,
    threads: int = 1,
    only: list[str] | None = None,
) -> VerificationReport:
    """Run the verification suite sequentially (report order is part of the
    determinism contract); individual check failures do not stop the run."""
    ctx = {"quick": quick, "threads": threads}
    checks = []
    for name, anchor, gate, fn in _CHECKS:
        if only and name not in only:
            continue
        # fresh stream per check so skipping checks does not shift the others
        ctx["rng"] = np.random.default_rng([seed, zlib.crc32(name.encode())])
        checks.append(_check(name, anchor, gate, fn, ctx))
    env = {
        "package": "korodisc",
        "version": __version__,
        "numpy": np.__version__,
        "seed": seed,
        "threads": threads,
        "quick": quick,
    }
    return VerificationReport(suite="all", environment=env, checks=checks)
