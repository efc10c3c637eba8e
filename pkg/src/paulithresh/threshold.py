"""Threshold location along noise families.

A threshold is the parameter ``p`` where the average logical entropy of a
code crosses a target (1 bit by default). Exact evaluators are inverted by
bisection (or Brent's method when requested); Monte Carlo evaluators by a
local linear fit through a grid of estimates.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .channel import DomainError, NoiseFamily, PauliChannel, cerf_margin, shannon_entropy
from .concat import CodeStack, McEstimate, exact_n1_in_n2_entropy, exact_stack_entropy, mc_stack_entropy
from .errors import BudgetError, ConvergenceError
from .repetition import (
    BIT,
    RepCodeSpec,
    average_entropy_rep,
    independent_noise_entropy,
    independent_noise_margin,
)

__all__ = [
    "ThresholdResult",
    "FrontierPoint",
    "EXACT",
    "MONTE_CARLO",
    "search_interval",
    "hashing_entropy",
    "rep_entropy_fn",
    "composite_entropy_fn",
    "stack_entropy_fn",
    "solve_threshold_exact",
    "hashing_threshold",
    "sweep_optimal_n2",
    "solve_threshold_mc",
    "best_five_qubit_depth",
    "independent_entropy",
    "independent_margin",
    "trace_independent_frontier",
    "symmetric_threshold",
    "trace_two_pauli_frontier",
    "extrapolate_level_infinity",
    "hashing_surface_scan",
]

log = logging.getLogger(__name__)

EXACT = "exact"
MONTE_CARLO = "mc"
SCAN_POINTS = 32

EntropyFn = Callable[[PauliChannel], float]


@dataclass(frozen=True)
class ThresholdResult:
    p: float
    family: NoiseFamily
    method: str = EXACT
    uncertainty: float = 0.0
    entropy_target: float = 1.0
    evaluations: int = 0
    entropy_at_p: float = math.nan
    code: str = ""

    def __post_init__(self) -> None:
        if not self.uncertainty >= 0.0:
            raise DomainError(f"uncertainty must be >= 0, got {self.uncertainty!r}")

    @property
    def fidelity(self) -> float:
        return self.family(self.p).p_i


@dataclass(frozen=True)
class FrontierPoint:
    q_x: float
    q_z: float
    code: str = ""

    def __post_init__(self) -> None:
        for v in (self.q_x, self.q_z):
            if not -1e-15 <= v <= 0.5 + 1e-15:
                raise DomainError(f"frontier coordinates must lie in [0, 1/2], got {v!r}")


# --------------------------------------------------------------------------
# Evaluators
# --------------------------------------------------------------------------


def search_interval(family: NoiseFamily) -> tuple[float, float]:
    """Part of the family's range where no error is more likely than identity."""
    k = family.kind
    if k == "depolarizing":
        return (0.0, 0.25)
    if k in ("independent-sym", "independent-xz"):
        return (0.0, 0.5)
    if k == "two-pauli":
        return (0.0, 1.0 / (3.0 + family.value))
    if k == "dominated":
        return (0.0, (1.0 - 2.0 * family.value) / 2.0)
    d = family.direction
    total = sum(d)
    if total == 0:
        return family.interval()
    return (0.0, 1.0 / (total + max(d)))


def hashing_entropy(c: PauliChannel) -> float:
    """Entropy with no code at all."""
    return shannon_entropy(c)


def rep_entropy_fn(n: int, orientation: str = BIT) -> EntropyFn:
    spec = RepCodeSpec(n, orientation)
    return lambda c: average_entropy_rep(spec, c)


def _independent_params(c: PauliChannel, tol: float = 1e-13) -> tuple[float, float] | None:
    qx, qz = c.q_x, c.q_z
    if abs(c.p_y - qx * qz) <= tol and abs(c.p_i - (1 - qx) * (1 - qz)) <= tol:
        return qx, qz
    return None


def composite_entropy_fn(n1: int, n2: int, *, budget: float = 1e9, workers: int = 1) -> EntropyFn:
    """Entropy of the ``n1``-in-``n2`` code; independent noise takes the
    closed-form fast path."""

    def fn(c: PauliChannel) -> float:
        if n2 == 1:
            return average_entropy_rep(RepCodeSpec(n1, BIT), c)
        ind = _independent_params(c)
        if ind is not None:
            return independent_noise_entropy(n1, n2, *ind)
        return exact_n1_in_n2_entropy(n1, n2, c, budget=budget, workers=workers)

    return fn


def stack_entropy_fn(stack: CodeStack, **kwargs) -> EntropyFn:
    return lambda c: exact_stack_entropy(stack, c, **kwargs)


# --------------------------------------------------------------------------
# Exact root finding
# --------------------------------------------------------------------------


class _Counted:
    def __init__(self, fn: EntropyFn, family: NoiseFamily, target: float) -> None:
        self.fn, self.family, self.target = fn, family, target
        self.calls = 0

    def __call__(self, p: float) -> float:
        self.calls += 1
        return self.fn(self.family(p)) - self.target


def _scan_bracket(g: _Counted, lo: float, hi: float, points: int) -> tuple[float, float]:
    grid = np.linspace(lo, hi, points)
    vals = np.array([g(float(p)) for p in grid])
    sign = np.sign(vals)
    idx = [i for i in range(points - 1) if sign[i] == 0 or sign[i] * sign[i + 1] < 0]
    if sign[-1] == 0:
        idx.append(points - 1)
    if not idx:
        raise ConvergenceError(
            f"no crossing of the target in [{lo:.6g}, {hi:.6g}] "
            f"(entropy - target from {vals.min():.3g} to {vals.max():.3g})"
        )
    if len(idx) > 1:
        raise ConvergenceError(
            f"non-monotone entropy: {len(idx)} crossings found in [{lo:.6g}, {hi:.6g}]; give a bracket"
        )
    i = idx[0]
    if sign[i] == 0:
        return float(grid[i]), float(grid[i])
    return float(grid[i]), float(grid[i + 1])


def _expand_bracket(g: _Counted, guess: float, width: float, lo: float, hi: float) -> tuple[float, float]:
    a, b = max(lo, guess - width), min(hi, guess + width)
    for _ in range(60):
        ga, gb = g(a), g(b)
        if ga * gb <= 0:
            return a, b
        if a <= lo and b >= hi:
            break
        if ga > 0:
            a = max(lo, a - 2 * (b - a))
        else:
            b = min(hi, b + 2 * (b - a))
    raise ConvergenceError(f"no crossing found near {guess:.6g}")


def solve_threshold_exact(
    entropy_fn: EntropyFn,
    family: NoiseFamily,
    bracket: tuple[float, float] | None = None,
    target: float = 1.0,
    tol: float = 1e-12,
    *,
    method: str = "bisect",
    guess: float | None = None,
    guess_width: float = 2e-4,
    scan_points: int = SCAN_POINTS,
    code: str = "",
) -> ThresholdResult:
    """Parameter where ``entropy_fn(family(p)) == target``.

    Without a ``bracket`` the family's search interval is scanned at
    ``scan_points`` points; a ``guess`` instead grows a bracket around it.
    ``method`` is ``"bisect"`` or ``"brent"``.
    """
    g = _Counted(entropy_fn, family, target)
    lo_dom, hi_dom = family.interval()
    if bracket is not None:
        a, b = (float(v) for v in bracket)
        if not lo_dom - 1e-15 <= a <= b <= hi_dom + 1e-15:
            raise DomainError(f"bracket {bracket!r} outside the family interval")
    elif guess is not None:
        lo, hi = search_interval(family)
        a, b = _expand_bracket(g, guess, guess_width, lo, hi)
    else:
        a, b = _scan_bracket(g, *search_interval(family), scan_points)

    ga, gb = g(a), g(b)
    if ga == 0.0:
        return ThresholdResult(a, family, EXACT, 0.0, target, g.calls, target, code)
    if gb == 0.0:
        return ThresholdResult(b, family, EXACT, 0.0, target, g.calls, target, code)
    if ga * gb > 0:
        raise ConvergenceError(f"bracket [{a!r}, {b!r}] does not straddle the target")
    increasing = ga < 0
    if method == "brent":
        p = brentq(g, a, b, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
        width = tol
    elif method == "bisect":
        lo, hi = (a, b) if increasing else (b, a)
        while abs(hi - lo) > tol:
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            gm = g(mid)
            if gm == 0.0:
                lo = hi = mid
                break
            if gm < 0:
                lo = mid
            else:
                hi = mid
            log.debug("bisect lo=%.15g hi=%.15g g=%.3g", lo, hi, gm)
        p = 0.5 * (lo + hi)
        width = abs(hi - lo) / 2
    else:
        raise DomainError(f"unknown root method {method!r}")
    val = g(p) + target
    return ThresholdResult(float(p), family, EXACT, 0.0 if width <= tol else width, target, g.calls, val, code)


def hashing_threshold(family: NoiseFamily, tol: float = 1e-12) -> ThresholdResult:
    return solve_threshold_exact(hashing_entropy, family, tol=tol, code="none")


def sweep_optimal_n2(
    n1: int,
    family: NoiseFamily,
    n2_range: Iterable[int],
    *,
    tol: float = 1e-12,
    method: str = "brent",
    budget: float = 1e9,
    workers: int = 1,
) -> tuple[int, ThresholdResult, list[ThresholdResult]]:
    """Threshold of the ``n1``-in-``n2`` code for each ``n2``; returns the
    best ``n2``, its result and the full curve in input order."""
    curve: list[ThresholdResult] = []
    prev = None
    for n2 in n2_range:
        fn = composite_entropy_fn(n1, int(n2), budget=budget, workers=workers)
        res = solve_threshold_exact(
            fn, family, tol=tol, method=method, guess=prev, code=f"{n1}in{n2}"
        )
        curve.append(res)
        prev = res.p
    if not curve:
        raise DomainError("empty n2 range")
    best = max(range(len(curve)), key=lambda i: curve[i].p)
    return int(curve[best].code.split("in")[1]), curve[best], curve


# --------------------------------------------------------------------------
# Monte Carlo thresholds
# --------------------------------------------------------------------------


def _fit_crossing(ps: np.ndarray, ys: np.ndarray, target: float) -> float:
    slope, icpt = np.polyfit(ps, ys, 1)
    if slope == 0:
        return math.nan
    return (target - icpt) / slope


def solve_threshold_mc(
    stack: CodeStack,
    family: NoiseFamily,
    grid: Sequence[float],
    samples: int,
    seed: int = 0,
    *,
    target: float = 1.0,
    window: float = 0.003,
    batches: int = 20,
    max_uncertainty: float | None = None,
    refine: int = 2,
    workers: int = 1,
    chunk: int = 256,
) -> ThresholdResult:
    """Crossing of the Monte Carlo entropy curve with ``target``.

    Every grid point reuses the same seed, so the estimates share random
    numbers and their differences are much less noisy than the points.
    A straight line is fitted through the points within ``window`` of the
    crossing; the uncertainty is the spread of the crossing over
    ``batches`` disjoint batches of samples (batch means).
    """
    grid = sorted(float(p) for p in grid)
    if len(grid) < 2:
        raise DomainError("Monte Carlo threshold needs at least two grid points")
    cache: dict[float, McEstimate] = {}

    def est(p: float) -> McEstimate:
        if p not in cache:
            cache[p] = mc_stack_entropy(stack, family(p), samples, seed, workers=workers, chunk=chunk)
        return cache[p]

    for attempt in range(refine + 1):
        means = np.array([est(p).mean for p in grid])
        above = np.flatnonzero(means >= target)
        below = np.flatnonzero(means < target)
        if len(above) == 0 or len(below) == 0:
            raise ConvergenceError(
                f"crossing outside grid: entropies range {means.min():.6g}..{means.max():.6g}"
            )
        i = int(np.argmax(means >= target))
        if i == 0:
            raise ConvergenceError("crossing outside grid: entropy already above target at the first point")
        p0 = float(np.interp(target, means[i - 1 : i + 1], grid[i - 1 : i + 1]))
        sel = [p for p in grid if abs(p - p0) <= window]
        if len(sel) < 2:
            sel = sorted(sorted(grid, key=lambda p: abs(p - p0))[:2])
        ps = np.array(sel)
        ys = np.array([est(p).mean for p in sel])
        ses = np.array([est(p).std_error for p in sel])
        p_hat = _fit_crossing(ps, ys, target)
        if len(sel) > 2 and attempt < refine:
            resid = ys - np.polyval(np.polyfit(ps, ys, 1), ps)
            if np.max(np.abs(resid)) > 2 * np.max(ses):
                step = np.min(np.diff(ps)) / 2
                grid = sorted(set(grid) | set(np.round(np.arange(ps[0], ps[-1] + step / 2, step), 15)))
                continue
        break

    vals = np.stack([est(p).values for p in sel], axis=1)  # (samples, k)
    nb = max(2, min(batches, vals.shape[0] // 10))
    crossings = []
    for part in np.array_split(vals, nb, axis=0):
        crossings.append(_fit_crossing(ps, part.mean(axis=0), target))
    crossings = np.array(crossings)
    crossings = crossings[np.isfinite(crossings)]
    unc = float(np.std(crossings, ddof=1) / math.sqrt(len(crossings))) if len(crossings) > 1 else math.inf
    if max_uncertainty is not None and unc > max_uncertainty:
        raise ConvergenceError(f"threshold uncertainty {unc:.3g} exceeds {max_uncertainty:.3g}")
    return ThresholdResult(
        float(p_hat),
        family,
        MONTE_CARLO,
        unc,
        target,
        len(cache),
        math.nan,
        stack.describe(),
    )


def best_five_qubit_depth(
    base: CodeStack,
    family: NoiseFamily,
    grid: Sequence[float],
    samples: int,
    seed: int = 0,
    *,
    depths: Iterable[int] = range(6, 13),
    workers: int = 1,
) -> tuple[int, ThresholdResult, list[ThresholdResult]]:
    """Number of [[5,1,3]] levels on top of ``base`` whose Monte Carlo
    threshold has the largest lower 1-sigma bound ``p - uncertainty``.

    Returns the chosen depth, its result and the results for every depth.
    """
    results = []
    for j in depths:
        stack = CodeStack(base.levels + tuple(CodeStack.from_string(f"five513x{j}").levels))
        results.append(solve_threshold_mc(stack, family, grid, samples, seed, workers=workers))
    if not results:
        raise DomainError("empty depth range")
    depths = list(depths)
    k = max(range(len(results)), key=lambda i: results[i].p - results[i].uncertainty)
    return depths[k], results[k], results


# --------------------------------------------------------------------------
# Independent-noise frontiers
# --------------------------------------------------------------------------

FRONTIER_CLASSES = ("bit", "phase", "bit-in-phase", "phase-in-bit", "hashing", "cerf")


def _class_args(code_class: str, n1: int, n2: int, q_x: float, q_z: float) -> tuple[int, int, float, float]:
    if code_class == "bit":
        return n1, 1, q_x, q_z
    if code_class == "phase":
        return n1, 1, q_z, q_x
    if code_class == "bit-in-phase":
        return n1, n2, q_x, q_z
    if code_class == "phase-in-bit":
        return n1, n2, q_z, q_x
    raise DomainError(f"unknown code class {code_class!r}")


def independent_entropy(code_class: str, n1: int, n2: int, q_x: float, q_z: float) -> float:
    """Average entropy under independent bit flips ``q_x`` and phase flips ``q_z``.

    ``phase`` and ``phase-in-bit`` are evaluated through the dual code on
    the swapped channel, which makes the dual frontiers exact mirror images.
    """
    if code_class == "hashing":
        return shannon_entropy(PauliChannel.independent(q_x, q_z))
    return independent_noise_entropy(*_class_args(code_class, n1, n2, q_x, q_z))


def independent_margin(code_class: str, n1: int, n2: int, q_x: float, q_z: float) -> float:
    """``independent_entropy - 1`` without cancellation near 1."""
    if code_class == "hashing":
        return shannon_entropy(PauliChannel.independent(q_x, q_z)) - 1.0
    return independent_noise_margin(*_class_args(code_class, n1, n2, q_x, q_z))


def _solve_1d(fn: Callable[[float], float], lo: float, hi: float, tol: float) -> float | None:
    glo, ghi = fn(lo), fn(hi)
    if glo > 0:
        return None
    if ghi < 0:
        return hi
    return float(brentq(fn, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps))


def _class_sizes(code_class: str, n1_values, n2_values) -> list[tuple[int, int]]:
    if code_class in ("bit", "phase"):
        return [(n, 1) for n in n1_values]
    if code_class in ("bit-in-phase", "phase-in-bit"):
        return [(a, b) for a in n1_values for b in n2_values]
    return [(1, 1)]


def trace_independent_frontier(
    code_class: str,
    grid: Sequence[float],
    *,
    axis: str = "q_z",
    n1_values: Sequence[int] = (1, 3, 5, 7),
    n2_values: Sequence[int] = tuple(range(1, 91)),
    tol: float = 1e-12,
) -> list[FrontierPoint]:
    """Threshold frontier of a code class under independent noise.

    For each fixed value on ``axis`` the other rate is solved for, taking
    the best code of the class over the size ranges. ``cerf`` traces the
    known upper bound instead of a code.
    """
    if code_class not in FRONTIER_CLASSES:
        raise DomainError(f"unknown code class {code_class!r}")
    if axis not in ("q_x", "q_z"):
        raise DomainError(f"axis must be q_x or q_z, got {axis!r}")
    out = []
    for fixed in grid:
        fixed = float(fixed)

        def chan(v: float) -> tuple[float, float]:
            return (v, fixed) if axis == "q_z" else (fixed, v)

        best, label = 0.0, ""
        if code_class == "cerf":
            r = _solve_1d(lambda v: -cerf_margin(PauliChannel.independent(*chan(v))), 0.0, 0.5, tol)
            best, label = (r or 0.0), "cerf"
        else:
            for n1, n2 in _class_sizes(code_class, n1_values, n2_values):
                r = _solve_1d(
                    lambda v: independent_margin(code_class, n1, n2, *chan(v)), 0.0, 0.5, tol
                )
                if r is not None and r > best:
                    best, label = r, f"{n1}in{n2}" if n2 > 1 else f"{n1}"
        qx, qz = chan(best)
        out.append(FrontierPoint(qx, qz, label))
    return out


def symmetric_threshold(
    code_class: str,
    n1_values: Sequence[int] = (1, 3, 5, 7),
    n2_values: Sequence[int] = tuple(range(1, 91)),
    tol: float = 1e-12,
) -> tuple[float, str]:
    """Best threshold of a class on the line ``q_x = q_z``, where the
    frontiers of dual classes cross."""
    best, label = 0.0, ""
    for n1, n2 in _class_sizes(code_class, n1_values, n2_values):
        r = _solve_1d(lambda q: independent_margin(code_class, n1, n2, q, q), 0.0, 0.5, tol)
        if r is not None and r > best:
            best, label = r, f"{n1}in{n2}" if n2 > 1 else f"{n1}"
    return best, label


def trace_two_pauli_frontier(
    p2_grid: Sequence[float],
    n1_values: Sequence[int] = tuple(range(2, 31)),
    tol: float = 1e-12,
) -> list[dict]:
    """Thresholds ``p1`` for channels ``(p1, p2, p1)`` at each fixed ``p2``:
    best bit-flip code, hashing bound and the known upper bound.

    Length 1 is the bare channel, already reported as the hashing column,
    so it is dropped from the bit-flip class.
    """
    n1_values = [n for n in n1_values if n > 1]
    rows = []
    for p2 in p2_grid:
        p2 = float(p2)
        hi = (1.0 - p2) / 3.0

        def ch(p1: float) -> PauliChannel:
            return PauliChannel(1.0 - 2 * p1 - p2, p1, p2, p1)

        best, arg = 0.0, 0
        for n in n1_values:
            spec = RepCodeSpec(n, BIT)
            r = _solve_1d(lambda p1: average_entropy_rep(spec, ch(p1)) - 1.0, 0.0, hi, tol)
            if r is not None and r > best:
                best, arg = r, n
        hashing = _solve_1d(lambda p1: shannon_entropy(ch(p1)) - 1.0, 0.0, hi, tol)
        cerf = _solve_1d(lambda p1: -cerf_margin(ch(p1)), 0.0, hi, tol)
        rows.append({"p2": p2, "bit": best, "n1": arg, "hashing": hashing or 0.0, "cerf": cerf or 0.0})
    return rows


# --------------------------------------------------------------------------
# Level extrapolation
# --------------------------------------------------------------------------


def extrapolate_level_infinity(
    stack_for_level: Callable[[int], CodeStack],
    family: NoiseFamily,
    tol: float = 1e-5,
    *,
    start: int = 1,
    level_cap: int = 14,
    samples: int = 20000,
    seed: int = 0,
    grid_halfwidth: float = 3e-4,
    grid_points: int = 7,
    exact_budget: float = 1e8,
    workers: int = 1,
    history: list | None = None,
) -> ThresholdResult:
    """Follow the per-level thresholds until two successive differences
    fall below ``tol``. Levels are solved exactly while within budget and
    by Monte Carlo beyond. The returned uncertainty is the last level
    difference plus the Monte Carlo error."""
    results: list[ThresholdResult] = []
    small = 0
    prev_stack = None
    for level in range(start, level_cap + 1):
        stack = stack_for_level(level)
        if prev_stack is not None and stack == prev_stack:
            last = results[-1]
            return ThresholdResult(last.p, family, last.method, last.uncertainty, last.entropy_target,
                                   sum(r.evaluations for r in results), last.entropy_at_p, last.code)
        prev_stack = stack
        guess = results[-1].p if results else None
        try:
            fn = stack_entropy_fn(stack, budget=exact_budget, kernel_budget=1e9)
            res = solve_threshold_exact(fn, family, guess=guess, method="brent", code=stack.describe())
        except BudgetError:
            if guess is None:
                raise
            grid = np.linspace(guess - grid_halfwidth, guess + grid_halfwidth, grid_points)
            res = solve_threshold_mc(stack, family, grid, samples, seed, workers=workers)
        results.append(res)
        if history is not None:
            history.append(res)
        if len(results) >= 2:
            diff = abs(results[-1].p - results[-2].p)
            small = small + 1 if diff < tol else 0
            if small >= 2:
                last = results[-1]
                return ThresholdResult(last.p, family, last.method, diff + last.uncertainty,
                                       last.entropy_target, sum(r.evaluations for r in results),
                                       last.entropy_at_p, last.code)
    raise ConvergenceError(f"level thresholds did not converge within {level_cap} levels")


# --------------------------------------------------------------------------
# Hashing surface
# --------------------------------------------------------------------------


def hashing_surface_scan(
    entropy_fn: EntropyFn, directions: Iterable[Sequence[float]], tol: float = 1e-13
) -> list[tuple[PauliChannel, float]]:
    """For each error direction ``(d_x, d_y, d_z)`` find the channel on the
    hashing surface along that ray and evaluate ``entropy_fn`` there."""
    out = []
    for d in directions:
        fam = NoiseFamily.custom(d)
        lo, hi = search_interval(fam)
        p = brentq(lambda t: shannon_entropy(fam(t)) - 1.0, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)
        c = fam(p)
        out.append((c, entropy_fn(c)))
    return out
