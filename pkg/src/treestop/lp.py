"""Exact linear-programming oracle for the weak formulation.

The optimization is over joint laws of (increments, state path, stopping
node), encoded by per-node stop/continue masses with flow conservation.
Flow conservation determines every stop mass from the continue masses, so
the solver works in the continue masses u(v) of interior nodes:

    maximize    sum_v u(v) * [f(v)*dt + E_children pi - pi(v)]  + pi(root)
    subject to  u(root) <= 1,   u(child) <= p_j * u(parent),  u >= 0,
                sum_v u(v) * g_i(v)*dt <= y_i,
                sum_v u(v) * h_i(v)*dt  = z_i,

which is the same polytope expressed in fewer variables; the reported
optimum is returned as a full stop/continue measure.  Everything is exact
rational arithmetic via a Bland-rule simplex, so optimal values and dual
prices are exact.  Bounds y_i = +inf drop their row; equality targets of
+-inf are unsatisfiable on a finite tree and report infeasibility with a
reason code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import simplex
from .errors import EmptyFamily
from .lattice import ROOT, BudgetVector, TreeInstance, Word
from .measures import StoppingMeasure
from .rules import RandomizedStoppingRule
from .xreal import Ext, NEG_INF

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class SolveResult:
    status: str
    value: Optional[Ext] = None
    measure: Optional[StoppingMeasure] = None
    duals_ineq: Tuple[Fraction, ...] = ()
    duals_eq: Tuple[Fraction, ...] = ()
    reason: Optional[str] = None
    certificate: Optional[list] = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _finite(x: Ext, what: str) -> Fraction:
    if not x.is_finite:
        raise ValueError(f"{what} is infinite; the solver needs finite node data")
    return x.fraction()


def _budgets_or_default(tree: TreeInstance, budgets: Optional[BudgetVector]) -> BudgetVector:
    if budgets is None:
        return BudgetVector.of(tree.constraints)
    spec = tree.constraints
    if len(budgets.ys) != spec.n_ineq or len(budgets.zs) != spec.n_eq:
        raise ValueError("budget vector does not match the constraint spec")
    return budgets


def solve_weak(tree: TreeInstance, budgets: Optional[BudgetVector] = None) -> SolveResult:
    """Maximize expected reward over all stopping measures within budgets."""
    budgets = _budgets_or_default(tree, budgets)

    for z in budgets.zs:
        if not z.is_finite:
            return SolveResult(status=INFEASIBLE,
                               reason="equality target is infinite; finite trees "
                                      "accrue only finite integrals")

    interior: List[Word] = [w for w in tree.nodes() if len(w) < tree.depth]
    index = {w: i for i, w in enumerate(interior)}
    n = len(interior)

    # per-node objective and accrual step coefficients
    obj = [Fraction(0)] * n
    g_step = [[Fraction(0)] * n for _ in range(tree.constraints.n_ineq)]
    h_step = [[Fraction(0)] * n for _ in range(tree.constraints.n_eq)]
    for w, i in index.items():
        t = tree.time(len(w))
        prefix = tree._prefix_for_call(w)
        f_val = _finite(Ext.parse(tree.reward(t, prefix)), f"reward at {w}")
        pi_here = tree.terminal_at(w)
        pi_kids = sum(p * tree.terminal_at(w + (j,))
                      for j, (p, _) in enumerate(tree.branching[len(w)]))
        obj[i] = f_val * tree.dt + pi_kids - pi_here
        for k, (g, _) in enumerate(tree.constraints.inequalities):
            g_step[k][i] = _finite(Ext.parse(g(t, prefix)), f"g_{k} at {w}") * tree.dt
        for k, (h, _) in enumerate(tree.constraints.equalities):
            h_step[k][i] = _finite(Ext.parse(h(t, prefix)), f"h_{k} at {w}") * tree.dt

    rows, senses, rhs, row_tag = [], [], [], []
    for w, i in index.items():
        row = [Fraction(0)] * n
        row[i] = Fraction(1)
        if w == ROOT:
            rows.append(row); senses.append("<="); rhs.append(Fraction(1))
        else:
            parent = index[w[:-1]]
            p, _ = tree.branching[len(w) - 1][w[-1]]
            row[parent] = -p
            rows.append(row); senses.append("<="); rhs.append(Fraction(0))
        row_tag.append(("flow", w))
    ineq_rows = []
    for k, y in enumerate(budgets.ys):
        if y.is_pos_inf:
            ineq_rows.append(None)  # vacuous: no constraint at all
            continue
        ineq_rows.append(len(rows))
        rows.append(list(g_step[k])); senses.append("<="); rhs.append(y.fraction())
        row_tag.append(("ineq", k))
    eq_rows = []
    for k, z in enumerate(budgets.zs):
        eq_rows.append(len(rows))
        rows.append(list(h_step[k])); senses.append("="); rhs.append(z.fraction())
        row_tag.append(("eq", k))

    base = Fraction(tree.terminal_at(ROOT))

    if n == 0:
        # depth-0 tree: the only measure stops at the root immediately
        for k, y in enumerate(budgets.ys):
            if not y.is_pos_inf and y.fraction() < 0:
                return SolveResult(status=INFEASIBLE, reason="empty constraint set")
        for z in budgets.zs:
            if z.fraction() != 0:
                return SolveResult(status=INFEASIBLE, reason="empty constraint set")
        measure = StoppingMeasure(s={ROOT: Fraction(1)}, u={ROOT: Fraction(0)})
        return SolveResult(status=OPTIMAL, value=Ext(base), measure=measure,
                           duals_ineq=tuple(Fraction(0) for _ in budgets.ys),
                           duals_eq=tuple(Fraction(0) for _ in budgets.zs))

    res = simplex.solve_lp(obj, rows, senses, rhs, maximize=True)
    if res.status == simplex.INFEASIBLE:
        return SolveResult(status=INFEASIBLE, reason="empty constraint set",
                           certificate=res.certificate)
    assert res.status == simplex.OPTIMAL, \
        "the mass polytope is bounded, so the LP cannot be unbounded"

    u_val = {w: res.x[i] for w, i in index.items()}
    measure = _measure_from_cont(tree, u_val)
    duals_ineq = tuple(
        res.duals[ineq_rows[k]] if ineq_rows[k] is not None else Fraction(0)
        for k in range(len(budgets.ys)))
    duals_eq = tuple(res.duals[eq_rows[k]] for k in range(len(budgets.zs)))
    value = Ext(res.objective + base)
    check = measure.expectations(tree)["value"]
    assert check == value, "objective bookkeeping must match the measure"
    return SolveResult(status=OPTIMAL, value=value, measure=measure,
                       duals_ineq=duals_ineq, duals_eq=duals_eq)


def _measure_from_cont(tree: TreeInstance, u_val: Dict[Word, Fraction]) -> StoppingMeasure:
    s: Dict[Word, Fraction] = {}
    u: Dict[Word, Fraction] = {}
    reach: Dict[Word, Fraction] = {ROOT: Fraction(1)}
    for w in tree.nodes():
        if w != ROOT:
            p, _ = tree.branching[len(w) - 1][w[-1]]
            reach[w] = p * u[w[:-1]]
        uw = u_val.get(w, Fraction(0))
        u[w] = uw
        s[w] = reach[w] - uw
    measure = StoppingMeasure(s=s, u=u)
    measure.validate(tree)
    return measure


def measure_to_rule(tree: TreeInstance, measure: StoppingMeasure) -> RandomizedStoppingRule:
    """Conditional stop probabilities of a measure; q = 1 off the support.

    Round-trips exactly: pushing the rule forward recovers the measure on
    every node (unreachable subtrees carry zero mass on both sides).
    """
    q: Dict[Word, Fraction] = {}
    for w in tree.nodes():
        r = measure.reach(w)
        q[w] = measure.stop(w) / r if r > 0 else Fraction(1)
    rule = RandomizedStoppingRule(q=q)
    rule.validate(tree)
    return rule


def fractional_nodes(tree: TreeInstance, measure: StoppingMeasure) -> List[Word]:
    """Nodes where the measure genuinely randomizes (0 < q < 1)."""
    return [w for w in tree.nodes() if measure.stop(w) > 0 and measure.cont(w) > 0]


def solve_robust(trees: Sequence[TreeInstance],
                 budgets: Optional[BudgetVector] = None) -> Tuple[SolveResult, Optional[int]]:
    """Best value across a finite family of models sharing the functionals.

    Returns the winning solve and its index; infeasible members are
    skipped, and the result is infeasible only if every member is.
    """
    trees = list(trees)
    if not trees:
        raise EmptyFamily("robust solve needs at least one model")
    shapes = {(t.constraints.n_ineq, t.constraints.n_eq) for t in trees}
    if len(shapes) != 1:
        raise ValueError("family members must share the constraint shape")
    best: Optional[SolveResult] = None
    best_idx: Optional[int] = None
    for i, tree in enumerate(trees):
        res = solve_weak(tree, budgets)
        if not res.optimal:
            continue
        if best is None or res.value > best.value:
            best, best_idx = res, i
    if best is None:
        return SolveResult(status=INFEASIBLE, reason="all family members infeasible"), None
    return best, best_idx
