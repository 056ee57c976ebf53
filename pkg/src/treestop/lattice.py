"""Finite problem instances: increment trees with Euler state recursion.

A tree instance fixes a time grid t0, t0+dt, ..., t0+N*dt and a finite
branching law for the driving increments at each step.  Nodes are identified
by increment words (tuples of branch indices); the state path along a word
follows the Euler recursion

    X_{k+1} = X_k + b(t_k, prefix_k) * dt + sigma(t_k, prefix_k) @ w,

where prefix_k is the whole observed state path (pinned history included),
so path-dependent drift and diffusion are supported directly.  Running
reward and constraint integrands accumulate as left-endpoint sums on the
grid; stopping at a node pays the terminal function there on top of the
accumulated running reward.

All probabilities and functional values are exact rationals.  Functions
returning floats are snapped to their exact binary value.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Tuple

from .errors import InvalidBranching, InvalidHorizon, NodeNotInTree, WordTooLong
from .xreal import Ext, as_fraction

Word = Tuple[int, ...]
State = Tuple[Fraction, ...]

ROOT: Word = ()


# ---------------------------------------------------------------------------
# value coercion helpers
# ---------------------------------------------------------------------------

def _as_vector(value, n: int) -> Tuple[Fraction, ...]:
    if isinstance(value, (list, tuple)):
        if len(value) != n:
            raise ValueError(f"expected a vector of length {n}, got {value!r}")
        return tuple(as_fraction(v) for v in value)
    if n != 1:
        raise ValueError(f"expected a vector of length {n}, got scalar {value!r}")
    return (as_fraction(value),)


def _as_matrix(value, rows: int, cols: int) -> Tuple[Tuple[Fraction, ...], ...]:
    if isinstance(value, (list, tuple)) and value and isinstance(value[0], (list, tuple)):
        if len(value) != rows:
            raise ValueError(f"expected {rows} matrix rows, got {len(value)}")
        return tuple(_as_vector(row, cols) for row in value)
    if rows == 1:
        return (_as_vector(value, cols),)
    if cols == 1:
        return tuple((v,) for v in _as_vector(value, rows))
    raise ValueError(f"expected a {rows}x{cols} matrix, got {value!r}")


def _as_ext(value) -> Ext:
    return Ext.parse(value)


def _callable(value) -> Callable:
    """Lift constants to functions of (t, prefix)."""
    if callable(value):
        return value
    return lambda t, prefix, _v=value: _v


def _sup_dist(a: Sequence, b: Sequence) -> Fraction:
    """Sup-norm distance between two equally long state prefixes."""
    out = Fraction(0)
    for xa, xb in zip(a, b):
        if isinstance(xa, tuple):
            d = max(abs(ca - cb) for ca, cb in zip(xa, xb))
        else:
            d = abs(xa - xb)
        if d > out:
            out = d
    return out


def _flat_abs_diff(a, b) -> Fraction:
    """Entrywise absolute difference of two vectors or matrices, summed."""
    if isinstance(a[0], tuple):
        return sum(sum(abs(x - y) for x, y in zip(ra, rb)) for ra, rb in zip(a, b))
    return sum(abs(x - y) for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Coefficients:
    """Drift and diffusion of the state recursion.

    drift(t, prefix) returns a length-l vector, diffusion(t, prefix) an
    l x d matrix (scalars are accepted when l = d = 1).  ``lip`` optionally
    declares a non-decreasing kappa(t) for the sampled Lipschitz audit; the
    audit reports violations but never rejects an instance, since callers
    may deliberately supply non-Lipschitz coefficients.
    """

    drift: Callable = 0
    diffusion: Callable = 1
    lip: Optional[Callable] = None

    def drift_fn(self):
        return _callable(self.drift)

    def diffusion_fn(self):
        return _callable(self.diffusion)


@dataclass(frozen=True)
class ConstraintSpec:
    """Inequality and equality accrual constraints.

    Each inequality pairs an integrand g with a bound y in (-inf, +inf];
    y = +inf makes the constraint vacuous.  Each equality pairs an integrand
    h with a target z in [-inf, +inf]; (h, z) = (0, 0) is the vacuous form.
    """

    inequalities: Tuple[Tuple[Callable, Ext], ...] = ()
    equalities: Tuple[Tuple[Callable, Ext], ...] = ()

    def __post_init__(self):
        ineq = tuple((_callable(g), _as_ext(y)) for g, y in self.inequalities)
        eq = tuple((_callable(h), _as_ext(z)) for h, z in self.equalities)
        for _, y in ineq:
            if y.is_neg_inf:
                raise ValueError("inequality bounds must exceed -inf")
        object.__setattr__(self, "inequalities", ineq)
        object.__setattr__(self, "equalities", eq)

    @property
    def n_ineq(self) -> int:
        return len(self.inequalities)

    @property
    def n_eq(self) -> int:
        return len(self.equalities)


@dataclass(frozen=True)
class BudgetVector:
    """Bounds (y_i) and targets (z_i) for a ConstraintSpec's integrands."""

    ys: Tuple[Ext, ...] = ()
    zs: Tuple[Ext, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ys", tuple(_as_ext(y) for y in self.ys))
        object.__setattr__(self, "zs", tuple(_as_ext(z) for z in self.zs))
        for y in self.ys:
            if y.is_neg_inf:
                raise ValueError("inequality bounds must exceed -inf")

    @staticmethod
    def of(spec: ConstraintSpec) -> "BudgetVector":
        return BudgetVector(
            ys=tuple(y for _, y in spec.inequalities),
            zs=tuple(z for _, z in spec.equalities),
        )


class TreeInstance:
    """Immutable finite-depth increment tree with Euler states.

    Nodes are increment words.  States, path probabilities and cumulative
    functionals are computed lazily and cached; instances are safe to share
    for concurrent reads once constructed (all operations are pure).
    """

    def __init__(self, t0, dt, depth, branching, history, coefficients,
                 reward, terminal, constraints, w_history=(), source=None):
        if depth < 0:
            raise InvalidHorizon(f"depth must be >= 0, got {depth}")
        self.t0 = as_fraction(t0)
        self.dt = as_fraction(dt)
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        self.depth = int(depth)

        per_depth = self._normalize_branching(branching, self.depth)
        self.branching = per_depth
        self.d = len(per_depth[0][0][1]) if per_depth else 1

        hist = tuple(history) if isinstance(history, (list, tuple)) else (history,)
        if not hist:
            raise ValueError("history must contain at least the state at t0")
        first = hist[0]
        self.l = len(first) if isinstance(first, (list, tuple)) else 1
        self.history: Tuple[State, ...] = tuple(_as_vector(x, self.l) for x in hist)

        self.coefficients = coefficients
        self.reward = _callable(reward)
        self.terminal = _callable(terminal)
        self.constraints = constraints
        self.w_history = tuple(w_history)
        self.source = source

        self._drift = coefficients.drift_fn()
        self._diff = coefficients.diffusion_fn()
        self._states: dict = {ROOT: self.history[-1]}
        self._funcs: dict = {}
        self._pathprob: dict = {ROOT: Fraction(1)}

    # -- structure ---------------------------------------------------------

    @staticmethod
    def _normalize_branching(branching, depth):
        if depth == 0:
            return ()
        items = list(branching)
        if items and isinstance(items[0], (list, tuple)) and len(items[0]) == 2 \
                and not isinstance(items[0][0], (list, tuple)):
            items = [items] * depth
        if len(items) != depth:
            raise InvalidBranching(
                f"need branching for {depth} steps, got {len(items)}")
        out = []
        for level in items:
            pairs = []
            for p, w in level:
                p = as_fraction(p)
                if p <= 0:
                    raise InvalidBranching(f"branch probability {p} is not positive")
                w = tuple(as_fraction(c) for c in w) if isinstance(w, (list, tuple)) \
                    else (as_fraction(w),)
                pairs.append((p, w))
            if sum(p for p, _ in pairs) != 1:
                raise InvalidBranching("branch probabilities must sum to 1")
            widths = {len(w) for _, w in pairs}
            if len(widths) != 1:
                raise InvalidBranching("increment dimensions differ within a level")
            out.append(tuple(pairs))
        if len({len(level[0][1]) for level in out}) > 1:
            raise InvalidBranching("increment dimensions differ across levels")
        return tuple(out)

    def n_branches(self, depth_k: int) -> int:
        return len(self.branching[depth_k])

    def check_word(self, word: Word) -> None:
        if len(word) > self.depth:
            raise NodeNotInTree(f"word {word} is longer than depth {self.depth}")
        for k, j in enumerate(word):
            if not 0 <= j < self.n_branches(k):
                raise NodeNotInTree(f"branch {j} out of range at step {k}")

    def nodes(self):
        """All increment words, shallowest first."""
        level = [ROOT]
        yield ROOT
        for k in range(self.depth):
            nxt = []
            for word in level:
                for j in range(self.n_branches(k)):
                    child = word + (j,)
                    nxt.append(child)
                    yield child
            level = nxt

    def leaves(self):
        return (w for w in self.nodes() if len(w) == self.depth)

    def children(self, word: Word):
        if len(word) >= self.depth:
            return ()
        return tuple(word + (j,) for j in range(self.n_branches(len(word))))

    def time(self, depth_k: int) -> Fraction:
        return self.t0 + depth_k * self.dt

    def path_prob(self, word: Word) -> Fraction:
        got = self._pathprob.get(word)
        if got is None:
            p, _ = self.branching[len(word) - 1][word[-1]]
            got = self.path_prob(word[:-1]) * p
            self._pathprob[word] = got
        return got

    # -- states --------------------------------------------------------------

    def _unwrap(self, x: State):
        return x[0] if self.l == 1 else x

    def _prefix_for_call(self, word: Word) -> tuple:
        # history already ends with the root state; append states past it
        full = list(self.history) + [self._state(w) for w in _prefix_words(word)]
        if self.l == 1:
            return tuple(x[0] for x in full)
        return tuple(full)

    def _state(self, word: Word) -> State:
        got = self._states.get(word)
        if got is not None:
            return got
        parent = word[:-1]
        x = self._state(parent)
        k = len(parent)
        t = self.time(k)
        prefix = self._prefix_for_call(parent)
        b = _as_vector(self._drift(t, prefix), self.l)
        sig = _as_matrix(self._diff(t, prefix), self.l, self.d)
        _, w = self.branching[k][word[-1]]
        nxt = tuple(
            x[i] + b[i] * self.dt + sum(sig[i][j] * w[j] for j in range(self.d))
            for i in range(self.l)
        )
        self._states[word] = nxt
        return nxt

    def state(self, word: Word):
        """State at a node (scalar when the state dimension is 1)."""
        self.check_word(word)
        return self._unwrap(self._state(word))

    def increment_sum(self, word: Word) -> Tuple[Fraction, ...]:
        """Cumulative driving increment along a word."""
        total = [Fraction(0)] * self.d
        for k, j in enumerate(word):
            _, w = self.branching[k][j]
            for i in range(self.d):
                total[i] += w[i]
        return tuple(total)

    # -- functionals -----------------------------------------------------------

    def _functionals(self, word: Word):
        got = self._funcs.get(word)
        if got is not None:
            return got
        if word == ROOT:
            zero = Ext(0)
            got = (zero,
                   tuple(zero for _ in self.constraints.inequalities),
                   tuple(zero for _ in self.constraints.equalities))
        else:
            parent = word[:-1]
            F, Gs, Hs = self._functionals(parent)
            t = self.time(len(parent))
            prefix = self._prefix_for_call(parent)
            F = F + _as_ext(self.reward(t, prefix)) * self.dt
            Gs = tuple(G + _as_ext(g(t, prefix)) * self.dt
                       for G, (g, _) in zip(Gs, self.constraints.inequalities))
            Hs = tuple(H + _as_ext(h(t, prefix)) * self.dt
                       for H, (h, _) in zip(Hs, self.constraints.equalities))
            got = (F, Gs, Hs)
        self._funcs[word] = got
        return got

    def terminal_at(self, word: Word) -> Fraction:
        t = self.time(len(word))
        return as_fraction(self.terminal(t, self._prefix_for_call(word)))

    def stop_payoff(self, word: Word) -> Ext:
        """Accrued running reward plus terminal payoff when stopping here."""
        F, _, _ = self._functionals(word)
        return F + Ext(self.terminal_at(word))

    def subtree(self, word: Word) -> "TreeInstance":
        """The instance seen from a node: time and history advance, the
        branching tail and all functionals carry over unchanged."""
        self.check_word(word)
        k = len(word)
        hist = self.history + tuple(self._state(w) for w in _prefix_words(word))
        sub = TreeInstance(
            t0=self.time(k), dt=self.dt, depth=self.depth - k,
            branching=self.branching[k:] if k < self.depth else (),
            history=hist, coefficients=self.coefficients,
            reward=self.reward, terminal=self.terminal,
            constraints=self.constraints, w_history=self.w_history,
        )
        return sub


def _prefix_words(word: Word):
    """Non-root prefixes of a word, shortest first, including the word."""
    return [word[: k + 1] for k in range(len(word))]


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def build_tree(dt, depth, branching, x0=None, history=None, t0=0,
               drift=0, diffusion=1, reward=0, terminal=0,
               inequalities=(), equalities=(), lip=None,
               w_history=(), source=None) -> TreeInstance:
    """Validate an instance description and return a TreeInstance.

    ``branching`` is a list of (p, w) pairs used at every step, or a list of
    such lists with one entry per step.  Exactly one of ``x0`` (state at t0)
    and ``history`` (state path up to and including t0) must be given.
    """
    if depth < 0:
        raise InvalidHorizon(f"depth must be >= 0, got {depth}")
    if history is None:
        if x0 is None:
            raise ValueError("give x0 or history")
        history = (x0,)
    elif x0 is not None:
        raise ValueError("give x0 or history, not both")
    coeffs = Coefficients(drift=drift, diffusion=diffusion, lip=lip)
    spec = ConstraintSpec(inequalities=tuple(inequalities),
                          equalities=tuple(equalities))
    return TreeInstance(t0=t0, dt=dt, depth=depth, branching=branching,
                        history=history, coefficients=coeffs, reward=reward,
                        terminal=terminal, constraints=spec,
                        w_history=w_history, source=source)


def euler_state(tree: TreeInstance, word: Word):
    """History concatenated with the Euler states along a word.

    Deterministic in the word: repeated calls return identical values.
    """
    word = tuple(word)
    if len(word) > tree.depth:
        raise WordTooLong(f"word of length {len(word)} exceeds depth {tree.depth}")
    tree.check_word(word)
    return tree._prefix_for_call(word)


def cumulative_functionals(tree: TreeInstance, word: Word):
    """Accrued (F, (G_i...), (H_i...)) when reaching a node.

    These are left-endpoint sums of reward and constraint integrands over
    the steps strictly before the node, in extended-real arithmetic.
    """
    word = tuple(word)
    tree.check_word(word)
    return tree._functionals(word)


@dataclass
class LipschitzReport:
    checked: int = 0
    violations: list = field(default_factory=list)
    kappa_declared: bool = True

    @property
    def ok(self) -> bool:
        return not self.violations


def sampled_lipschitz_report(tree: TreeInstance, samples: int = 64,
                             seed: int = 0) -> LipschitzReport:
    """Spot-check the declared coefficient modulus on random prefix pairs.

    For pairs of same-depth tree prefixes the report compares
    |b(t,x)-b(t,x')| + |sigma(t,x)-sigma(t,x')| against kappa(t) times the
    sup distance of the prefixes.  Violations are collected, not raised.
    """
    kappa = tree.coefficients.lip
    if kappa is None:
        return LipschitzReport(checked=0, kappa_declared=False)
    rng = random.Random(seed)
    report = LipschitzReport()
    if tree.depth == 0:
        return report
    words = list(tree.nodes())
    by_depth: dict = {}
    for w in words:
        by_depth.setdefault(len(w), []).append(w)
    for _ in range(samples):
        k = rng.randrange(0, tree.depth)
        wa, wb = rng.choice(by_depth[k]), rng.choice(by_depth[k])
        t = tree.time(k)
        pa, pb = euler_state(tree, wa), euler_state(tree, wb)
        if tree.l == 1:
            pa_n, pb_n = [(x,) for x in pa], [(x,) for x in pb]
        else:
            pa_n, pb_n = list(pa), list(pb)
        dist = _sup_dist(pa_n, pb_n)
        b_a = _as_vector(tree._drift(t, pa), tree.l)
        b_b = _as_vector(tree._drift(t, pb), tree.l)
        s_a = _as_matrix(tree._diff(t, pa), tree.l, tree.d)
        s_b = _as_matrix(tree._diff(t, pb), tree.l, tree.d)
        lhs = _flat_abs_diff(b_a, b_b) + _flat_abs_diff(s_a, s_b)
        rhs = as_fraction(kappa(t)) * dist
        report.checked += 1
        if lhs > rhs:
            report.violations.append({"t": t, "a": wa, "b": wb,
                                      "lhs": lhs, "rhs": rhs})
    return report
