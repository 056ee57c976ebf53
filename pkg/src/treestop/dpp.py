"""Conditioning, pasting, and two-sided verification of the value recursion.

Cutting a solved instance at an intermediate stopping stage splits every
feasible measure into a prefix and, per surviving node, a conditional
measure on the subtree.  Conditioning is budget-stable: each conditional
measure is feasible for the conditional expected remaining accruals
(Y, Z) of its node, exactly.  The verifier exploits both directions:

* sub-solution: replacing each conditional measure by the subtree optimum
  at budgets (Y, Z) can only increase the decomposed value, so the
  decomposition evaluated at the optimal measure is >= the optimal value;
* super-solution: pasting those subtree optima back onto the prefix yields
  a measure that is feasible for the original budgets, so its value is
  <= the optimal value.

Both sides use the same number, hence the reported gap is zero exactly on
rational instances.  The finite node set replaces measurable-selection
epsilon-arguments with exact per-node optima.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple, Union

from .errors import ShapeMismatch, SubproblemInfeasible
from .lattice import ROOT, BudgetVector, TreeInstance, Word
from .lp import SolveResult, solve_weak
from .measures import StoppingMeasure, feasible_for
from .rules import RandomizedStoppingRule
from .xreal import Ext

TauSpec = Union[int, Iterable[Word]]


def normalize_cut(tree: TreeInstance, tau: TauSpec) -> Tuple[Word, ...]:
    """A cut is an antichain of nodes, none at the root, covering all paths.

    An integer k means "all nodes at depth k" (a deterministic stage); a
    collection of words gives a stage that depends on the increment path.
    """
    if isinstance(tau, int):
        if not 1 <= tau <= tree.depth:
            raise ValueError(f"cut depth must be in [1, {tree.depth}], got {tau}")
        cut = tuple(w for w in tree.nodes() if len(w) == tau)
        return cut
    cut = tuple(tuple(w) for w in tau)
    seen = set()
    for w in cut:
        tree.check_word(w)
        if len(w) == 0:
            raise ValueError("the cut must come strictly after the start")
        if w in seen:
            raise ValueError(f"duplicate cut node {w}")
        seen.add(w)
    for w in cut:
        for k in range(len(w)):
            if w[:k] in seen:
                raise ValueError(f"cut nodes {w[:k]} and {w} are nested")
    uncovered = [leaf for leaf in tree.leaves()
                 if not any(leaf[:k] in seen for k in range(len(leaf) + 1))]
    if uncovered:
        raise ValueError(f"cut misses the path to {uncovered[0]}")
    return cut


def first_randomization_cut(tree: TreeInstance, rule: RandomizedStoppingRule) -> Tuple[Word, ...]:
    """Adapted stage heuristic: cut where the rule first genuinely
    randomizes (0 < q < 1), no later than one step before the horizon."""
    cap = max(1, tree.depth - 1)
    cut: List[Word] = []

    def walk(word: Word):
        if len(word) >= 1 and (len(word) == cap or 0 < rule.prob(word) < 1):
            cut.append(word)
            return
        for child in tree.children(word):
            walk(child)

    walk(ROOT)
    return tuple(cut)


@dataclass
class SurvivorData:
    node: Word
    mass: Fraction                      # reach mass at the cut node
    ys: Tuple[Ext, ...]                 # conditional remaining inequality accruals
    zs: Tuple[Ext, ...]                 # conditional remaining equality accruals
    measure: StoppingMeasure            # conditional measure on the subtree
    subtree: TreeInstance


@dataclass
class ConditionalBudgets:
    cut: Tuple[Word, ...]
    survivors: Dict[Word, SurvivorData]
    stopped_before: List[dict]
    zero_survival: List[Word]
    tower_ineq: Tuple[Ext, ...] = ()
    tower_eq: Tuple[Ext, ...] = ()


def condition(tree: TreeInstance, measure: StoppingMeasure, tau: TauSpec) -> ConditionalBudgets:
    """Split a measure at a cut into conditional subtree measures and the
    conditional expected remaining accruals carried by each survivor.

    The conditional measure of a survivor is itself a valid stopping
    measure on the node's subtree and meets its (Y, Z) budgets exactly;
    zero-mass survivors are skipped and reported.
    """
    cut = normalize_cut(tree, tau)
    measure.validate(tree)
    in_cut = set(cut)

    stopped_before: List[dict] = []
    for w in tree.nodes():
        if any(w[:k] in in_cut for k in range(len(w) + 1)):
            continue
        if measure.stop(w) > 0:
            F, Gs, Hs = tree._functionals(w)
            stopped_before.append({
                "node": w, "mass": measure.stop(w),
                "F": F, "G": Gs, "H": Hs,
                "payoff": F + Ext(tree.terminal_at(w)),
            })

    survivors: Dict[Word, SurvivorData] = {}
    zero: List[Word] = []
    n_i, n_e = tree.constraints.n_ineq, tree.constraints.n_eq
    tower_i = [Ext(0)] * n_i
    tower_e = [Ext(0)] * n_e
    for nu in cut:
        r = measure.reach(nu)
        if r == 0:
            zero.append(nu)
            continue
        _, G_nu, H_nu = tree._functionals(nu)
        sub_s: Dict[Word, Fraction] = {}
        sub_u: Dict[Word, Fraction] = {}
        ys = [Ext(0)] * n_i
        zs = [Ext(0)] * n_e
        k = len(nu)
        for w in _subtree_words(tree, nu):
            rel = w[k:]
            sub_s[rel] = measure.stop(w) / r
            sub_u[rel] = measure.cont(w) / r
            if measure.stop(w) > 0:
                _, G_w, H_w = tree._functionals(w)
                for i in range(n_i):
                    ys[i] = ys[i] + (G_w[i] - G_nu[i]) * (measure.stop(w) / r)
                for i in range(n_e):
                    zs[i] = zs[i] + (H_w[i] - H_nu[i]) * (measure.stop(w) / r)
        sub_tree = tree.subtree(nu)
        sub_measure = StoppingMeasure(s=sub_s, u=sub_u)
        sub_measure.validate(sub_tree)
        exp = sub_measure.expectations(sub_tree)
        assert tuple(exp["ineq"]) == tuple(ys) and tuple(exp["eq"]) == tuple(zs), \
            "conditional budgets must equal the conditional measure's accruals"
        for i in range(n_i):
            tower_i[i] = tower_i[i] + ys[i] * r
        for i in range(n_e):
            tower_e[i] = tower_e[i] + zs[i] * r
        survivors[nu] = SurvivorData(node=nu, mass=r, ys=tuple(ys), zs=tuple(zs),
                                     measure=sub_measure, subtree=sub_tree)

    return ConditionalBudgets(cut=cut, survivors=survivors,
                              stopped_before=stopped_before, zero_survival=zero,
                              tower_ineq=tuple(tower_i), tower_eq=tuple(tower_e))


def _subtree_words(tree: TreeInstance, nu: Word):
    k = len(nu)
    for w in tree.nodes():
        if len(w) >= k and w[:k] == nu:
            yield w


def paste(tree: TreeInstance, measure: StoppingMeasure, tau: TauSpec,
          submeasures: Dict[Word, StoppingMeasure]) -> StoppingMeasure:
    """Replace the subtree behavior of a measure past a cut.

    Keeps the prefix of ``measure`` up to the cut; below each cut node with
    positive reach, grafts the supplied subtree measure scaled by the reach
    mass.  Cut nodes without a replacement keep their original subtree.
    The result is validated as a measure on the full tree.
    """
    cut = normalize_cut(tree, tau)
    in_cut = set(cut)
    s: Dict[Word, Fraction] = {}
    u: Dict[Word, Fraction] = {}
    grafted = set()
    for nu in cut:
        sub = submeasures.get(nu)
        if sub is None:
            continue
        r = measure.reach(nu)
        if r == 0 and any(v != 0 for v in list(sub.s.values()) + list(sub.u.values())):
            raise ShapeMismatch(f"submeasure at unreachable node {nu}")
        k = len(nu)
        expected = {w[k:] for w in _subtree_words(tree, nu)}
        given = set(sub.s) | set(sub.u)
        if not given <= expected:
            raise ShapeMismatch(f"submeasure at {nu} has nodes outside the subtree")
        for rel in expected:
            s[nu + rel] = r * sub.stop(rel)
            u[nu + rel] = r * sub.cont(rel)
        grafted.add(nu)
    for w in tree.nodes():
        if any(w[:k] in grafted for k in range(len(w) + 1)):
            continue
        s[w] = measure.stop(w)
        u[w] = measure.cont(w)
    pasted = StoppingMeasure(s=s, u=u)
    pasted.validate(tree)
    return pasted


def verify_dpp(tree: TreeInstance, tau: TauSpec,
               budgets: Optional[BudgetVector] = None,
               tolerance: Fraction = Fraction(0)) -> dict:
    """Check both inequality directions of the value recursion at a cut.

    lhs is the optimal value.  rhs evaluates the decomposition at the
    optimal measure with every conditional measure replaced by its subtree
    optimum at the conditional budgets; pasting those optima back certifies
    rhs <= lhs, replacement itself certifies rhs >= lhs.  The report's gap
    is rhs - lhs and equals zero exactly on all-rational instances.
    """
    base = solve_weak(tree, budgets)
    if not base.optimal:
        raise ValueError(f"base solve is {base.status}: {base.reason}")
    lhs = base.value

    cond = condition(tree, base.measure, tau)
    per_node = []
    rhs = Ext(0)
    for entry in cond.stopped_before:
        rhs = rhs + entry["payoff"] * entry["mass"]
    submeasures: Dict[Word, StoppingMeasure] = {}
    for nu, data in cond.survivors.items():
        sub_budgets = BudgetVector(ys=data.ys, zs=data.zs)
        sub = solve_weak(data.subtree, sub_budgets)
        if not sub.optimal:
            raise SubproblemInfeasible(
                f"subtree at {nu} infeasible for conditional budgets "
                f"(ys={data.ys}, zs={data.zs}); conditioning must preserve "
                f"feasibility, so this is a bug")
        submeasures[nu] = sub.measure
        F_nu, _, _ = tree._functionals(nu)
        rhs = rhs + (F_nu + sub.value) * data.mass
        per_node.append({
            "node": nu, "mass": data.mass,
            "Y": data.ys, "Z": data.zs,
            "subvalue": sub.value,
            "conditional_value": data.measure.expectations(data.subtree)["value"],
        })

    pasted = paste(tree, base.measure, cond.cut, submeasures)
    used = _budgets_or_default_local(tree, budgets)
    pasted_feasible = feasible_for(tree, pasted, used)
    rhs_super = pasted.expectations(tree)["value"]
    assert rhs_super == rhs, "pasted value must equal the decomposed value"
    assert pasted_feasible, \
        "pasting subtree optima at conditional budgets must stay feasible"

    gap = rhs - lhs
    if tolerance == 0:
        ok = gap == Ext(0)
    else:
        ok = abs(float(gap)) <= float(tolerance)
    return {
        "lhs": lhs,
        "rhs_sub": rhs,
        "rhs_super": rhs_super,
        "gap": gap,
        "pass": ok,
        "tau": cond.cut,
        "per_node": per_node,
        "stopped_before": cond.stopped_before,
        "zero_survival": cond.zero_survival,
        "tower_ineq": cond.tower_ineq,
        "tower_eq": cond.tower_eq,
    }


def _budgets_or_default_local(tree: TreeInstance, budgets) -> BudgetVector:
    return budgets if budgets is not None else BudgetVector.of(tree.constraints)
