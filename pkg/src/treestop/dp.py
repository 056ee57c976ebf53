"""Backward induction in the budget variable for one inequality constraint.

The value of a node as a function of the remaining expected budget is a
concave piecewise-linear envelope (LP values are concave in the right-hand
side), so backward induction is exact: merge the children's envelopes by
marginal slope, shift by the step's reward and budget accrual, and take the
non-decreasing concave hull with the stop point.  Mixing the stop point
against the continuation curve is the same two-point randomization that a
basic LP solution uses, so the result agrees with the LP oracle exactly.

Instances with several constraints or any equality constraint are out of
this engine's shape (values are not concave in equality targets) and are
served by the LP oracle instead.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict

from .envelope import ConcaveEnvelope, merged_envelope
from .errors import UnsupportedConstraintShape
from .lattice import ROOT, TreeInstance, Word
from .xreal import Ext


def _require_scalar_shape(tree: TreeInstance) -> None:
    spec = tree.constraints
    if spec.n_ineq != 1 or spec.n_eq != 0:
        raise UnsupportedConstraintShape(
            "the budget engine handles exactly one inequality constraint; "
            "use the LP oracle for general constraint mixes")


def backstep(stop_value, reward_step, budget_step, children) -> ConcaveEnvelope:
    """One backward step: paste the stop point onto the continuation curve.

    children are (probability, envelope) pairs for the successor nodes;
    stopping costs no budget and pays ``stop_value``; continuing accrues
    ``reward_step`` now, consumes ``budget_step`` now, and then allocates
    the remaining budget across the children.
    """
    cont = merged_envelope(children).shifted(budget_step, reward_step)
    points = [(Fraction(0), Fraction(stop_value))]
    points += list(zip(cont.xs, cont.vs))
    return ConcaveEnvelope.hull_of_points(points)


def node_envelopes(tree: TreeInstance) -> Dict[Word, ConcaveEnvelope]:
    """Value-in-budget envelope of every node, leaves upward."""
    _require_scalar_shape(tree)
    g, _ = tree.constraints.inequalities[0]
    env: Dict[Word, ConcaveEnvelope] = {}
    for word in reversed(list(tree.nodes())):
        pi_here = tree.terminal_at(word)
        if len(word) == tree.depth:
            env[word] = ConcaveEnvelope.constant(0, pi_here)
            continue
        t = tree.time(len(word))
        prefix = tree._prefix_for_call(word)
        f_step = Ext.parse(tree.reward(t, prefix)).fraction() * tree.dt
        g_step = Ext.parse(g(t, prefix)).fraction() * tree.dt
        kids = [(p, env[word + (j,)])
                for j, (p, _) in enumerate(tree.branching[len(word)])]
        env[word] = backstep(pi_here, f_step, g_step, kids)
    return env


def root_envelope(tree: TreeInstance) -> ConcaveEnvelope:
    return node_envelopes(tree)[ROOT]


def dp_value(tree: TreeInstance, budget) -> Ext:
    """V(root, budget) by exact backward induction.

    Agrees with the LP oracle exactly; budget may be +inf (no constraint).
    """
    return Ext(root_envelope(tree).value(budget))
