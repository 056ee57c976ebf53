"""Membership tests for candidate laws via compensated polynomials.

A candidate law claims per-node stop/continue masses, and possibly its own
state values, over a tree's increment structure.  Membership in the
admissible class is decided by two clauses:

1. for polynomial test functions of the increment/state pair, compensated
   increments weighted by cylinder indicators (boxes on the path, stopped /
   not-stopped flags) must have expectation zero under the candidate, and
2. support conditions: no mass may stop before the start time and the
   pre-start state path must equal the pinned history.

Two compensator modes are provided.  The exact-discrete compensator is the
one-step conditional mean under the tree's own branching and Euler
recursion, which makes the compensated process a true martingale on the
tree: clause-1 statistics vanish exactly for genuine members and any
single corruption of a branch probability or state value shows up in some
degree-<=2 test.  The generator compensator is the drift/second-order form
evaluated along the claimed path; it is a martingale only up to O(dt) per
step, so its statistics are held to a tolerance and shrink linearly under
grid refinement of fixed continuous coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import DegreeTooHigh
from .lattice import ROOT, TreeInstance, Word, _as_matrix, _as_vector
from .measures import StoppingMeasure
from .rules import RandomizedStoppingRule
from .xreal import Ext, as_fraction

MAX_DEGREE = 4


# ---------------------------------------------------------------------------
# polynomial test functions
# ---------------------------------------------------------------------------

class Polynomial:
    """Multivariate polynomial with rational coefficients, evaluated exactly."""

    def __init__(self, nvars: int, coeffs: Dict[Tuple[int, ...], Fraction]):
        self.nvars = nvars
        self.coeffs = {e: as_fraction(c) for e, c in coeffs.items()
                       if as_fraction(c) != 0}

    @staticmethod
    def monomial(nvars: int, exps: Sequence[int], coeff=1) -> "Polynomial":
        return Polynomial(nvars, {tuple(exps): as_fraction(coeff)})

    def degree(self) -> int:
        return max((sum(e) for e in self.coeffs), default=0)

    def eval(self, point: Sequence[Fraction]) -> Fraction:
        total = Fraction(0)
        for exps, c in self.coeffs.items():
            term = c
            for x, e in zip(point, exps):
                if e:
                    term *= x ** e
            total += term
        return total

    def diff(self, i: int) -> "Polynomial":
        out: Dict[Tuple[int, ...], Fraction] = {}
        for exps, c in self.coeffs.items():
            if exps[i]:
                e = list(exps)
                e[i] -= 1
                key = tuple(e)
                out[key] = out.get(key, Fraction(0)) + c * exps[i]
        return Polynomial(self.nvars, out)


def monomial_basis(d: int, l: int, max_degree: int) -> List[Tuple[str, Polynomial]]:
    """Non-constant monomials in (w, x) up to a total degree.

    Testing the monomials suffices for every rational-coefficient
    polynomial of that degree, by linearity of the statistics.
    """
    names = [("w" if d == 1 else f"w{i}") for i in range(d)]
    names += [("x" if l == 1 else f"x{i}") for i in range(l)]
    n = d + l
    out: List[Tuple[str, Polynomial]] = []

    def emit(exps):
        label = "*".join(
            name if e == 1 else f"{name}^{e}"
            for name, e in zip(names, exps) if e)
        out.append((label, Polynomial.monomial(n, exps)))

    for total in range(1, max_degree + 1):
        for exps in _exps_of_total(n, total):
            emit(exps)
    return out


def _exps_of_total(n: int, total: int):
    if n == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _exps_of_total(n - 1, total - first):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# candidate laws
# ---------------------------------------------------------------------------

class CandidateLaw:
    """A claimed joint law of (increment path, state path, stopping node).

    ``s``/``u`` are absolute stop/continue masses per node; their ratios
    define the pre-stop branching of the law, which need not match the
    tree's declared branching (that is exactly what clause 1 detects).
    After stopping, the path keeps evolving with ``post_stop_branching``
    (the tree's branching unless stated otherwise).  ``state_overrides``
    lets the candidate claim state values that break the Euler recursion;
    descendants of an overridden node follow Euler from the claimed prefix.
    """

    def __init__(self, tree: TreeInstance, s: Dict[Word, Fraction],
                 u: Dict[Word, Fraction], state_overrides=None,
                 post_stop_branching=None, pre_t0_stop_mass=0,
                 claimed_history=None):
        self.tree = tree
        self.s = {w: as_fraction(v) for w, v in s.items()}
        self.u = {w: as_fraction(v) for w, v in u.items()}
        self.pre_t0_stop_mass = as_fraction(pre_t0_stop_mass)
        overrides = state_overrides or {}
        self.state_overrides = {w: _as_vector(x, tree.l) for w, x in overrides.items()}
        if post_stop_branching is None:
            self.post_stop = [[p for p, _ in level] for level in tree.branching]
        else:
            self.post_stop = [[as_fraction(p) for p in level]
                              for level in post_stop_branching]
        self.claimed_history = (tree.history if claimed_history is None else
                                tuple(_as_vector(x, tree.l) for x in claimed_history))
        self._states: Dict[Word, tuple] = {}
        self._validate_conservation()

    @staticmethod
    def from_measure(tree: TreeInstance, measure: StoppingMeasure) -> "CandidateLaw":
        return CandidateLaw(tree, s=dict(measure.s), u=dict(measure.u))

    def stop(self, w: Word) -> Fraction:
        return self.s.get(w, Fraction(0))

    def cont(self, w: Word) -> Fraction:
        return self.u.get(w, Fraction(0))

    def reach(self, w: Word) -> Fraction:
        return self.stop(w) + self.cont(w)

    def _validate_conservation(self) -> None:
        tree = self.tree
        if self.pre_t0_stop_mass + self.reach(ROOT) != 1:
            raise ValueError("total mass must be 1")
        for w in tree.nodes():
            if self.stop(w) < 0 or self.cont(w) < 0:
                raise ValueError(f"negative mass at {w}")
            if len(w) < tree.depth:
                flow = sum(self.reach(w + (j,))
                           for j in range(tree.n_branches(len(w))))
                if flow != self.cont(w):
                    raise ValueError(f"mass is not conserved below {w}")

    # -- claimed states ------------------------------------------------------

    def state(self, w: Word) -> tuple:
        got = self._states.get(w)
        if got is not None:
            return got
        if w in self.state_overrides:
            got = self.state_overrides[w]
        elif w == ROOT:
            got = self.claimed_history[-1]
        else:
            got = self.model_children(w[:-1])[w[-1]]
        self._states[w] = got
        return got

    def prefix_for_call(self, w: Word) -> tuple:
        full = list(self.claimed_history[:-1]) + \
            [self.state(w[:k]) for k in range(len(w) + 1)]
        if self.tree.l == 1:
            return tuple(x[0] for x in full)
        return tuple(full)

    def model_children(self, w: Word) -> List[tuple]:
        """Euler-step states of all children, from the claimed prefix."""
        tree = self.tree
        k = len(w)
        t = tree.time(k)
        prefix = self.prefix_for_call(w)
        b = _as_vector(tree._drift(t, prefix), tree.l)
        sig = _as_matrix(tree._diff(t, prefix), tree.l, tree.d)
        x = self.state(w)
        out = []
        for _, inc in tree.branching[k]:
            out.append(tuple(
                x[i] + b[i] * tree.dt + sum(sig[i][j] * inc[j] for j in range(tree.d))
                for i in range(tree.l)))
        return out

    def xi(self, w: Word) -> tuple:
        """Claimed (cumulative increment, state) point in R^{d+l}."""
        return self.tree.increment_sum(w) + self.state(w)


# ---------------------------------------------------------------------------
# compensators
# ---------------------------------------------------------------------------

def _compensator(cand: CandidateLaw, phi: Polynomial, w: Word, mode: str) -> Fraction:
    tree = cand.tree
    k = len(w)
    xi = cand.xi(w)
    if mode == "exact":
        here = phi.eval(xi)
        kids = cand.model_children(w)
        winc = tree.increment_sum(w)
        total = Fraction(0)
        for (p, inc), x_next in zip(tree.branching[k], kids):
            nxt = tuple(a + b for a, b in zip(winc, inc)) + x_next
            total += p * phi.eval(nxt)
        return total - here
    if mode == "generator":
        t = tree.time(k)
        prefix = cand.prefix_for_call(w)
        b = _as_vector(tree._drift(t, prefix), tree.l)
        sig = _as_matrix(tree._diff(t, prefix), tree.l, tree.d)
        d, l = tree.d, tree.l
        bbar = tuple([Fraction(0)] * d) + tuple(b)
        grads = [phi.diff(i) for i in range(d + l)]
        rate = sum(bbar[i] * grads[i].eval(xi) for i in range(d + l) if bbar[i])
        # sigma-bar sigma-bar^T has blocks [[I, sig^T], [sig, sig sig^T]]
        for i in range(d + l):
            gi = grads[i]
            if not gi.coeffs:
                continue
            for j in range(d + l):
                a_ij = _sigbar_entry(sig, d, i, j)
                if a_ij == 0:
                    continue
                second = gi.diff(j).eval(xi)
                if second:
                    rate += Fraction(1, 2) * a_ij * second
        return rate * tree.dt
    raise ValueError(f"unknown compensator mode {mode!r}")


def _sigbar_entry(sig, d: int, i: int, j: int) -> Fraction:
    if i < d and j < d:
        return Fraction(1) if i == j else Fraction(0)
    if i < d:
        return sig[j - d][i]
    if j < d:
        return sig[i - d][j]
    return sum(sig[i - d][k] * sig[j - d][k] for k in range(len(sig[0])))


def compensated_process(tree: TreeInstance, phi: Polynomial,
                        mode: str = "exact") -> Dict[Word, Fraction]:
    """Per-node values of the compensated process along the tree's paths.

    In exact mode the compensator is the one-step conditional mean, making
    this a martingale on the tree by construction; in generator mode it is
    the drift/second-order rate times dt, the literal grid form of the
    continuous compensator.
    """
    cand = CandidateLaw.from_measure(tree, _stop_at_horizon(tree))
    out: Dict[Word, Fraction] = {}
    for w in tree.nodes():
        if w == ROOT:
            out[w] = phi.eval(cand.xi(w))
        else:
            parent = w[:-1]
            out[w] = (out[parent]
                      + phi.eval(cand.xi(w)) - phi.eval(cand.xi(parent))
                      - _compensator(cand, phi, parent, mode))
    return out


def _stop_at_horizon(tree: TreeInstance) -> StoppingMeasure:
    s: Dict[Word, Fraction] = {}
    u: Dict[Word, Fraction] = {}
    for w in tree.nodes():
        p = tree.path_prob(w)
        if len(w) == tree.depth:
            s[w], u[w] = p, Fraction(0)
        else:
            s[w], u[w] = Fraction(0), p
    return StoppingMeasure(s=s, u=u)


# ---------------------------------------------------------------------------
# cylinder weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightFactor:
    """Indicator factor at one time: optional box on the claimed (w, x)
    point and a stopped/not-stopped flag ("any" tests the box alone)."""

    time: int
    box: Optional[Tuple[Tuple[Optional[Fraction], Optional[Fraction]], ...]] = None
    flag: str = "any"  # "stopped" | "open" | "any"

    def box_holds(self, point) -> bool:
        if self.box is None:
            return True
        for c, (lo, hi) in zip(point, self.box):
            if lo is not None and c < lo:
                return False
            if hi is not None and c >= hi:
                return False
        return True


@dataclass(frozen=True)
class CylinderWeight:
    label: str
    factors: Tuple[WeightFactor, ...]


def weight_battery(tree: TreeInstance, cand: CandidateLaw, s: int,
                   budget: int) -> List[CylinderWeight]:
    """Deterministic cylinder-weight family for tests ending at time s.

    Enumerates, in order: the trivial weight; stopped / not-stopped flags
    at each time <= s; path-pinning boxes (built on rational thresholds
    separating the claimed values at each depth) with a flag at the pinned
    node's time.  The enumeration is capped at ``budget`` weights.
    """
    out = [CylinderWeight(label="1", factors=())]
    for time in range(0, s + 1):
        for flag in ("stopped", "open"):
            out.append(CylinderWeight(
                label=f"{flag}@{time}", factors=(WeightFactor(time=time, flag=flag),)))
    # boxes that isolate the claimed path of each node at depth <= s
    eps: Dict[int, Fraction] = {}
    values: Dict[int, list] = {}
    for w in tree.nodes():
        if len(w) > s:
            continue
        values.setdefault(len(w), []).append(cand.xi(w))
    for depth, pts in values.items():
        gaps = []
        for i in range(tree.d + tree.l):
            coords = sorted({pt[i] for pt in pts})
            gaps += [b - a for a, b in zip(coords, coords[1:])]
        eps[depth] = min(gaps) / 2 if gaps else Fraction(1)
    for w in tree.nodes():
        if len(out) >= budget:
            break
        if not 1 <= len(w) <= s:
            continue
        factors = []
        for k in range(1, len(w) + 1):
            pt = cand.xi(w[:k])
            box = tuple((c, c + eps[k]) for c in pt)
            factors.append(WeightFactor(time=k, box=box))
        for flag in ("any", "open", "stopped"):
            pinned = factors[:-1] + [WeightFactor(time=len(w),
                                                  box=factors[-1].box, flag=flag)]
            out.append(CylinderWeight(
                label=f"pin{''.join(map(str, w))}/{flag}",
                factors=tuple(pinned)))
            if len(out) >= budget:
                break
    return out[:budget]


# ---------------------------------------------------------------------------
# the statistic  E[ (M_r - M_s)(phi) * weight ]
# ---------------------------------------------------------------------------

def statistic(cand: CandidateLaw, phi: Polynomial, s: int, r: int,
              weight: CylinderWeight, mode: str = "exact") -> Fraction:
    """Exact expectation of a weighted compensated increment.

    Runs a forward sweep over (node, stopped?) states carrying weighted
    masses; pre-stop flow follows the candidate's own mass ratios, post-stop
    flow its post-stop branching, and indicator factors zero out masses at
    their times.  Cost is O(nodes * branches) per call.
    """
    tree = cand.tree
    if not 0 <= s < r <= tree.depth:
        raise ValueError(f"need 0 <= s < r <= {tree.depth}")
    by_time: Dict[int, List[WeightFactor]] = {}
    for f in weight.factors:
        if f.time > s:
            raise ValueError("weight factors must not look past the start time")
        by_time.setdefault(f.time, []).append(f)

    # after-decision weighted masses per node at the current depth
    open_mass: Dict[Word, Fraction] = {ROOT: cand.cont(ROOT)}
    stop_mass: Dict[Word, Fraction] = {ROOT: cand.stop(ROOT) + cand.pre_t0_stop_mass}
    stat = Fraction(0)
    for k in range(0, r):
        for f in by_time.get(k, ()):
            for masses, here in ((open_mass, "open"), (stop_mass, "stopped")):
                for w in list(masses):
                    ok = f.flag in ("any", here) and f.box_holds(cand.xi(w))
                    if not ok:
                        masses[w] = Fraction(0)
        nxt_open: Dict[Word, Fraction] = {}
        nxt_stop: Dict[Word, Fraction] = {}
        for w in open_mass:
            m_open, m_stop = open_mass[w], stop_mass[w]
            in_window = k >= s
            if in_window and (m_open or m_stop):
                stat -= (m_open + m_stop) * _compensator(cand, phi, w, mode)
            phi_here = phi.eval(cand.xi(w)) if in_window else None
            u_w = cand.cont(w)
            for j in range(tree.n_branches(k)):
                child = w + (j,)
                # pre-stop flow: candidate's own conditional ratios
                flow_open = m_open * cand.reach(child) / u_w if u_w else Fraction(0)
                flow_stop = m_stop * cand.post_stop[k][j]
                if flow_open or flow_stop:
                    if in_window:
                        dphi = phi.eval(cand.xi(child)) - phi_here
                        stat += (flow_open + flow_stop) * dphi
                    nxt_stop[child] = nxt_stop.get(child, Fraction(0)) + \
                        flow_stop + flow_open * (cand.stop(child) / cand.reach(child)
                                                 if cand.reach(child) else Fraction(0))
                    nxt_open[child] = nxt_open.get(child, Fraction(0)) + \
                        flow_open * (cand.cont(child) / cand.reach(child)
                                     if cand.reach(child) else Fraction(0))
                else:
                    nxt_open.setdefault(child, Fraction(0))
                    nxt_stop.setdefault(child, Fraction(0))
        open_mass, stop_mass = nxt_open, nxt_stop
    return stat


# ---------------------------------------------------------------------------
# membership report
# ---------------------------------------------------------------------------

@dataclass
class MembershipReport:
    mode: str
    degree: int
    clause1: List[dict] = field(default_factory=list)
    clause1_pass: bool = True
    clause2_pass: bool = True
    clause2_detail: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.clause1_pass and self.clause2_pass


def check_membership(tree: TreeInstance, candidate, degree: int = 2,
                     mode: str = "exact", tolerance=Fraction(1),
                     weight_budget: int = 16,
                     fail_fast: bool = False) -> MembershipReport:
    """Decide membership of a candidate in the admissible law class.

    Clause 1 runs every monomial up to ``degree`` against all grid time
    pairs and the deterministic cylinder-weight battery: exact mode demands
    statistics identically zero, generator mode bounds them by
    tolerance * dt.  Clause 2 checks the support conditions (no stopping
    before the start, pinned pre-start history).  The overall verdict is
    the conjunction.
    """
    if degree > MAX_DEGREE:
        raise DegreeTooHigh(f"degree {degree} exceeds the cap {MAX_DEGREE}")
    if isinstance(candidate, StoppingMeasure):
        candidate = CandidateLaw.from_measure(tree, candidate)
    report = MembershipReport(mode=mode, degree=degree)

    detail = {}
    if candidate.pre_t0_stop_mass != 0:
        detail["pre_t0_stop_mass"] = candidate.pre_t0_stop_mass
    if candidate.claimed_history != tree.history:
        detail["history"] = {"claimed": candidate.claimed_history,
                             "pinned": tree.history}
    never_stops = sum(candidate.cont(w) for w in tree.leaves())
    if never_stops != 0:
        detail["mass_never_stopping"] = never_stops
    report.clause2_detail = detail
    report.clause2_pass = not detail
    if fail_fast and not report.clause2_pass:
        return report

    basis = monomial_basis(tree.d, tree.l, degree)
    threshold = as_fraction(tolerance) * tree.dt
    done = False
    for s in range(0, tree.depth):
        weights = weight_battery(tree, candidate, s, weight_budget)
        for r in range(s + 1, tree.depth + 1):
            for label, phi in basis:
                for weight in weights:
                    val = statistic(candidate, phi, s, r, weight, mode=mode)
                    ok = val == 0 if mode == "exact" else abs(val) <= threshold
                    report.clause1.append({
                        "phi": label, "s": s, "r": r, "weight": weight.label,
                        "stat": val, "pass": ok,
                    })
                    if not ok:
                        report.clause1_pass = False
                        if fail_fast:
                            done = True
                    if done:
                        break
                if done:
                    break
            if done:
                break
        if done:
            break
    return report


# ---------------------------------------------------------------------------
# corrupt-candidate constructors (negative controls)
# ---------------------------------------------------------------------------

def candidate_with_branch_bias(tree: TreeInstance, rule: RandomizedStoppingRule,
                               biases, j_up: int = 0,
                               j_down: int = 1) -> CandidateLaw:
    """Masses of a rule whose pre-stop flow is biased at the given nodes.

    ``biases`` maps nodes to deltas (a single (node, delta) pair is also
    accepted): at each biased node, branch ``j_up`` gains delta of
    probability and branch ``j_down`` loses it.
    """
    if not isinstance(biases, dict):
        node, delta = biases
        biases = {tuple(node): delta}
    biases = {tuple(w): as_fraction(dv) for w, dv in biases.items()}
    for w in biases:
        tree.check_word(w)
    s: Dict[Word, Fraction] = {}
    u: Dict[Word, Fraction] = {}
    arrive: Dict[Word, Fraction] = {ROOT: Fraction(1)}
    for w in tree.nodes():
        if w != ROOT:
            parent = w[:-1]
            p, _ = tree.branching[len(parent)][w[-1]]
            if parent in biases:
                if w[-1] == j_up:
                    p = p + biases[parent]
                elif w[-1] == j_down:
                    p = p - biases[parent]
            if p < 0 or p > 1:
                raise ValueError("biased probability outside [0, 1]")
            arrive[w] = u[parent] * p
        q = rule.prob(w)
        s[w] = arrive[w] * q
        u[w] = arrive[w] * (1 - q)
    return CandidateLaw(tree, s=s, u=u)


def candidate_with_state_shift(tree: TreeInstance, measure: StoppingMeasure,
                               node: Word, delta) -> CandidateLaw:
    """A candidate claiming a shifted state value at one node."""
    tree.check_word(node)
    if len(node) == 0:
        raise ValueError("shift an interior node; the root state is part of "
                         "the pinned history (a support violation instead)")
    delta = as_fraction(delta)
    base = tree._state(node)
    shifted = (base[0] + delta,) + base[1:]
    return CandidateLaw(tree, s=dict(measure.s), u=dict(measure.u),
                        state_overrides={node: shifted})


def candidate_with_pre_start_mass(tree: TreeInstance, measure: StoppingMeasure,
                                  eps) -> CandidateLaw:
    """A candidate leaking mass to stopping before the start time."""
    eps = as_fraction(eps)
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    scale = 1 - eps
    return CandidateLaw(
        tree,
        s={w: scale * v for w, v in measure.s.items()},
        u={w: scale * v for w, v in measure.u.items()},
        pre_t0_stop_mass=eps)


# ---------------------------------------------------------------------------
# grid-refinement study of the generator gap
# ---------------------------------------------------------------------------

def generator_gap_decay(dts=(Fraction(1), Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)),
                        horizon: Fraction = Fraction(1), drift=1, diffusion=1,
                        x0=0, degree: int = 2) -> dict:
    """Largest generator-mode statistic across grid refinements.

    Builds symmetric binomial trees with increments +-sqrt(dt) (snapped to
    exact binary rationals) for the same constant coefficients, measures
    the maximal absolute clause-1 statistic with the trivial weight over
    the whole horizon, and fits a log-log slope.  The exact compensator
    would give zero; the generator form leaves the Euler gap, which decays
    linearly in dt.
    """
    from .lattice import build_tree  # local import avoids a cycle at load

    stats: List[float] = []
    for dt in dts:
        dt = as_fraction(dt)
        steps = int(horizon / dt)
        w = as_fraction(math.sqrt(float(dt)))
        tree = build_tree(dt=dt, depth=steps,
                          branching=[(Fraction(1, 2), w), (Fraction(1, 2), -w)],
                          x0=x0, drift=drift, diffusion=diffusion)
        cand = CandidateLaw.from_measure(tree, _stop_at_horizon(tree))
        worst = Fraction(0)
        trivial = CylinderWeight(label="1", factors=())
        for _, phi in monomial_basis(1, 1, degree):
            val = abs(statistic(cand, phi, 0, steps, trivial, mode="generator"))
            if val > worst:
                worst = val
        stats.append(float(worst))
    xs = [math.log(float(dt)) for dt in dts]
    ys = [math.log(v) for v in stats]
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / \
        sum((x - mx) ** 2 for x in xs)
    return {"dts": [as_fraction(dt) for dt in dts], "stats": stats, "slope": slope}
