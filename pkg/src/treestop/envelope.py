"""Piecewise-linear concave value-in-budget functions.

An envelope is a concave, non-decreasing function on [domain_start, inf),
stored as exact rational breakpoints and constant beyond the last one.
The algebra here (pointwise shifts, probability-weighted merging of
marginal slopes, upper concave hulls) is what the scalar-budget backward
induction runs on.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

from .errors import BudgetBelowDomain
from .xreal import Ext, as_fraction


@dataclass(frozen=True)
class ConcaveEnvelope:
    """Breakpoints of a concave non-decreasing piecewise-linear function."""

    xs: Tuple[Fraction, ...]
    vs: Tuple[Fraction, ...]

    def __post_init__(self):
        if not self.xs or len(self.xs) != len(self.vs):
            raise ValueError("need matching, non-empty breakpoint lists")
        for a, b in zip(self.xs, self.xs[1:]):
            if b <= a:
                raise ValueError("breakpoints must increase strictly")
        slopes = self.slopes()
        for s in slopes:
            if s < 0:
                raise ValueError("envelope must be non-decreasing")
        for a, b in zip(slopes, slopes[1:]):
            if b > a:
                raise ValueError("envelope must be concave")

    # -- basic queries -----------------------------------------------------

    @property
    def domain_start(self) -> Fraction:
        return self.xs[0]

    def slopes(self) -> List[Fraction]:
        return [(v1 - v0) / (x1 - x0) for x0, x1, v0, v1 in
                zip(self.xs, self.xs[1:], self.vs, self.vs[1:])]

    def segments(self) -> List[Tuple[Fraction, Fraction]]:
        """(slope, width) pairs of the strictly rising part."""
        return [(s, x1 - x0) for s, x0, x1 in
                zip(self.slopes(), self.xs, self.xs[1:]) if s > 0]

    def value(self, y) -> Fraction:
        """Evaluate at a budget; +inf returns the terminal plateau."""
        y = Ext.parse(y)
        if y.is_pos_inf:
            return self.vs[-1]
        if y.is_neg_inf or y.fraction() < self.xs[0]:
            raise BudgetBelowDomain(
                f"budget {y} below smallest feasible budget {self.xs[0]}")
        yy = y.fraction()
        if yy >= self.xs[-1]:
            return self.vs[-1]
        i = bisect_right(self.xs, yy) - 1
        x0, x1 = self.xs[i], self.xs[i + 1]
        v0, v1 = self.vs[i], self.vs[i + 1]
        return v0 + (v1 - v0) * (yy - x0) / (x1 - x0)

    def shifted(self, dx, dv) -> "ConcaveEnvelope":
        dx, dv = as_fraction(dx), as_fraction(dv)
        return ConcaveEnvelope(xs=tuple(x + dx for x in self.xs),
                               vs=tuple(v + dv for v in self.vs))

    # -- constructors --------------------------------------------------------

    @staticmethod
    def constant(x0, v) -> "ConcaveEnvelope":
        return ConcaveEnvelope(xs=(as_fraction(x0),), vs=(as_fraction(v),))

    @staticmethod
    def from_breakpoints(xs: Sequence, vs: Sequence) -> "ConcaveEnvelope":
        return _canonical(list(map(as_fraction, xs)), list(map(as_fraction, vs)))

    @staticmethod
    def hull_of_points(points: Sequence[Tuple[Fraction, Fraction]]) -> "ConcaveEnvelope":
        """Non-decreasing upper concave hull of finitely many (cost, value) points.

        The hull rises to its peak and stays constant afterwards: spending
        more budget than the best point costs is never forced.
        """
        best: dict = {}
        for x, v in points:
            x, v = as_fraction(x), as_fraction(v)
            if x not in best or v > best[x]:
                best[x] = v
        pts = sorted(best.items())
        hull: List[Tuple[Fraction, Fraction]] = []
        for x, v in pts:
            while len(hull) >= 2:
                (x0, v0), (x1, v1) = hull[-2], hull[-1]
                # keep slopes strictly decreasing along the upper hull
                if (v1 - v0) * (x - x1) <= (v - v1) * (x1 - x0):
                    hull.pop()
                else:
                    break
            hull.append((x, v))
        peak = max(range(len(hull)), key=lambda i: (hull[i][1], -i))
        hull = hull[: peak + 1]
        return _canonical([x for x, _ in hull], [v for _, v in hull])


def _canonical(xs: List[Fraction], vs: List[Fraction]) -> ConcaveEnvelope:
    """Merge collinear pieces and drop the trailing flat segment."""
    keep_x, keep_v = [xs[0]], [vs[0]]
    for x, v in zip(xs[1:], vs[1:]):
        if len(keep_x) >= 2:
            x0, x1 = keep_x[-2], keep_x[-1]
            v0, v1 = keep_v[-2], keep_v[-1]
            if (v1 - v0) * (x - x1) == (v - v1) * (x1 - x0):
                keep_x.pop(), keep_v.pop()
        keep_x.append(x), keep_v.append(v)
    while len(keep_x) >= 2 and keep_v[-1] == keep_v[-2]:
        keep_x.pop(), keep_v.pop()
    return ConcaveEnvelope(xs=tuple(keep_x), vs=tuple(keep_v))


def merged_envelope(children: Sequence[Tuple[Fraction, ConcaveEnvelope]]) -> ConcaveEnvelope:
    """Value of the best budget split across children, as a function of the
    total budget sum p_j * y_j.

    Children's marginal slopes are interleaved in decreasing order; a unit
    of global budget spent on child j advances its local budget by 1/p_j
    and earns its current slope, so the merged function is concave with
    exactly those slopes.
    """
    base_x = sum(p * env.xs[0] for p, env in children)
    base_v = sum(p * env.vs[0] for p, env in children)
    pool = []
    for j, (p, env) in enumerate(children):
        for k, (slope, width) in enumerate(env.segments()):
            pool.append((slope, p * width, j, k))
    pool.sort(key=lambda t: (-t[0], t[2], t[3]))
    xs, vs = [base_x], [base_v]
    for slope, gwidth, _, _ in pool:
        xs.append(xs[-1] + gwidth)
        vs.append(vs[-1] + slope * gwidth)
    return _canonical(xs, vs)


def allocate(children: Sequence[Tuple[Fraction, ConcaveEnvelope]], total):
    """Best value of sum p_j V_j(y_j) subject to sum p_j y_j <= total.

    Greedy on merged marginal slopes; exact.  Returns the value and one
    attaining allocation (per-child budgets).  total may be +inf.
    """
    children = [(as_fraction(p), env) for p, env in children]
    if not children:
        raise ValueError("allocate needs at least one child")
    total = Ext.parse(total)
    base_x = sum(p * env.xs[0] for p, env in children)
    if total.is_neg_inf or (total.is_finite and total.fraction() < base_x):
        raise BudgetBelowDomain(
            f"total {total} below minimal feasible sum {base_x}")
    value = sum(p * env.vs[0] for p, env in children)
    alloc = [env.xs[0] for _, env in children]
    remaining = None if total.is_pos_inf else total.fraction() - base_x
    pool = []
    for j, (p, env) in enumerate(children):
        for k, (slope, width) in enumerate(env.segments()):
            pool.append((slope, p * width, j, k))
    pool.sort(key=lambda t: (-t[0], t[2], t[3]))
    for slope, gwidth, j, _ in pool:
        if remaining is not None:
            if remaining == 0:
                break
            take = min(remaining, gwidth)
            remaining -= take
        else:
            take = gwidth
        value += slope * take
        alloc[j] += take / children[j][0]
    return value, alloc
