"""Randomized stopping rules and their hitting-time realization.

A randomized rule assigns each node a conditional stop probability q(v).
Its cumulative-stop process theta gives, per increment word, the chance of
having stopped by each step; it is non-decreasing and ends at 1.  Drawing a
single uniform threshold eta and stopping the first time theta exceeds eta
reproduces the rule's joint law exactly, which is what ``equivalence_check``
certifies by integrating eta over the finitely many theta breakpoints.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional

from .errors import EquivalenceViolation, RuleShapeMismatch
from .lattice import ROOT, TreeInstance, Word
from .measures import StoppingMeasure, expectations_from_stop_mass
from .xreal import as_fraction


@dataclass(frozen=True)
class RandomizedStoppingRule:
    """Conditional stop probabilities per node.

    q(v) in [0, 1] everywhere; q = 1 at the horizon (forced terminal stop).
    Adaptedness is structural: q is indexed by increment words.
    """

    q: Dict[Word, Fraction]

    def prob(self, word: Word) -> Fraction:
        return self.q[word]

    def validate(self, tree: TreeInstance) -> None:
        for word in tree.nodes():
            got = self.q.get(word)
            if got is None:
                raise RuleShapeMismatch(f"rule has no entry for node {word}")
            if not 0 <= got <= 1:
                raise RuleShapeMismatch(f"q{word} = {got} outside [0, 1]")
            if len(word) == tree.depth and got != 1:
                raise RuleShapeMismatch(f"q{word} must be 1 at the horizon")


def rule_from_map(tree: TreeInstance, q_map: Dict[Word, object]) -> RandomizedStoppingRule:
    """Build a rule from a possibly partial node map.

    Horizon nodes default to 1; all interior nodes must be present.
    """
    q: Dict[Word, Fraction] = {}
    for word in tree.nodes():
        if word in q_map:
            q[word] = as_fraction(q_map[word])
        elif len(word) == tree.depth:
            q[word] = Fraction(1)
        else:
            raise RuleShapeMismatch(f"rule is missing interior node {word}")
    rule = RandomizedStoppingRule(q=q)
    rule.validate(tree)
    return rule


@dataclass(frozen=True)
class ThetaProcess:
    """Cumulative conditional stop probabilities along each word."""

    theta: Dict[Word, Fraction]

    def at(self, word: Word) -> Fraction:
        return self.theta[word]

    def validate(self, tree: TreeInstance) -> None:
        for word in tree.nodes():
            got = self.theta.get(word)
            if got is None:
                raise RuleShapeMismatch(f"theta has no entry for node {word}")
            if not 0 <= got <= 1:
                raise RuleShapeMismatch(f"theta{word} = {got} outside [0, 1]")
            if len(word) == tree.depth and got != 1:
                raise RuleShapeMismatch(f"theta{word} must equal 1 at the horizon")
            if word != ROOT and got < self.theta[word[:-1]]:
                raise RuleShapeMismatch(f"theta decreases into node {word}")


def theta_of_rule(tree: TreeInstance, rule: RandomizedStoppingRule) -> ThetaProcess:
    """theta_k = 1 - prod_{j<=k} (1 - q) along every word, exactly."""
    rule.validate(tree)
    survival: Dict[Word, Fraction] = {}
    theta: Dict[Word, Fraction] = {}
    for word in tree.nodes():
        before = Fraction(1) if word == ROOT else survival[word[:-1]]
        surv = before * (1 - rule.prob(word))
        survival[word] = surv
        theta[word] = 1 - surv
    return ThetaProcess(theta=theta)


def derandomize(tree: TreeInstance, theta: ThetaProcess, eta) -> Dict[Word, int]:
    """Hitting-time stop depth per full word for a fixed threshold eta.

    tau(word, eta) = min{k : theta_k(word) > eta}; ties at theta = eta
    continue, and theta_N = 1 > eta guarantees a hit for eta in [0, 1).
    """
    eta = as_fraction(eta)
    if not 0 <= eta < 1:
        raise ValueError("eta must lie in [0, 1)")
    theta.validate(tree)
    out: Dict[Word, int] = {}
    for leaf in tree.leaves():
        out[leaf] = _hit_depth(theta, leaf, eta)
    return out


def _hit_depth(theta: ThetaProcess, word: Word, eta: Fraction) -> int:
    for k in range(len(word) + 1):
        if theta.at(word[:k]) > eta:
            return k
    raise AssertionError("theta must reach 1 at the horizon")


def rule_to_measure(tree: TreeInstance, rule: RandomizedStoppingRule) -> StoppingMeasure:
    """Push a rule forward to per-node stop/continue masses."""
    rule.validate(tree)
    s: Dict[Word, Fraction] = {}
    u: Dict[Word, Fraction] = {}
    # arrive(v): path probability times survival strictly before v
    arrive: Dict[Word, Fraction] = {ROOT: Fraction(1)}
    for word in tree.nodes():
        if word != ROOT:
            p, _ = tree.branching[len(word) - 1][word[-1]]
            arrive[word] = u[word[:-1]] * p
        q = rule.prob(word)
        s[word] = arrive[word] * q
        u[word] = arrive[word] * (1 - q)
    return StoppingMeasure(s=s, u=u)


def stop_mass_by_eta_integration(tree: TreeInstance, theta: ThetaProcess) -> Dict[Word, Fraction]:
    """Stop-mass vector obtained by integrating the hitting time over eta.

    For each full word the hitting depth is piecewise constant in eta with
    breakpoints at the theta values, so the integral is a finite exact sum;
    the depth on each piece is found by evaluating the hitting time at the
    piece's midpoint.
    """
    theta.validate(tree)
    mass: Dict[Word, Fraction] = {w: Fraction(0) for w in tree.nodes()}
    for leaf in tree.leaves():
        pathprob = tree.path_prob(leaf)
        cuts = sorted({Fraction(0), *(theta.at(leaf[:k]) for k in range(len(leaf) + 1))})
        for lo, hi in zip(cuts, cuts[1:]):
            depth = _hit_depth(theta, leaf, (lo + hi) / 2)
            mass[leaf[:depth]] += pathprob * (hi - lo)
    return mass


def equivalence_check(tree: TreeInstance, rule: RandomizedStoppingRule,
                      theta: Optional[ThetaProcess] = None) -> dict:
    """Certify that the rule and its hitting-time construction agree.

    Computes stop masses once by the product formula and once by exact eta
    integration of the hitting time, and compares the vectors and all
    objective/constraint expectations exactly.  Disagreement raises
    EquivalenceViolation, since equality is guaranteed; an invalid theta
    (non-monotone, or not ending at 1) raises the same error.
    """
    rule.validate(tree)
    if theta is None:
        theta = theta_of_rule(tree, rule)
    try:
        theta.validate(tree)
        via_eta = stop_mass_by_eta_integration(tree, theta)
    except RuleShapeMismatch as exc:
        raise EquivalenceViolation(f"invalid theta process: {exc}") from exc
    direct = rule_to_measure(tree, rule)
    report = {
        "stop_mass_rule": dict(direct.s),
        "stop_mass_hitting": via_eta,
        "expectations_rule": expectations_from_stop_mass(tree, direct.s),
        "expectations_hitting": expectations_from_stop_mass(tree, via_eta),
        "pass": True,
    }
    for word in tree.nodes():
        if direct.stop(word) != via_eta[word]:
            report["pass"] = False
            raise EquivalenceViolation(
                f"stop masses differ at {word}: "
                f"{direct.stop(word)} vs {via_eta[word]}", report)
    for key in ("value", "ineq", "eq", "mean_stop_time"):
        if report["expectations_rule"][key] != report["expectations_hitting"][key]:
            report["pass"] = False
            raise EquivalenceViolation(f"expectations differ in {key}", report)
    return report


def monte_carlo_value(tree: TreeInstance, rule: RandomizedStoppingRule,
                      paths: int, seed: int = 0) -> dict:
    """Simulate (word, eta) pairs and average reward and accruals.

    Uses the hitting-time realization: each path draws one uniform eta and
    stops the first time the running theta exceeds it.  Returns mean and
    standard error per functional; results are bit-identical for a fixed
    seed (paths are consumed in index order from a single generator).
    """
    if paths < 1:
        raise ValueError("paths must be >= 1")
    rule.validate(tree)

    # flatten the tree into float tables once; the path loop is table-driven
    stop_value: Dict[Word, float] = {}
    q_float: Dict[Word, float] = {}
    accr: Dict[Word, tuple] = {}
    for word in tree.nodes():
        F, Gs, Hs = tree._functionals(word)
        stop_value[word] = float(F + tree.terminal_at(word))
        q_float[word] = float(rule.prob(word))
        accr[word] = tuple(float(G) for G in Gs) + tuple(float(H) for H in Hs)
    thresholds = []
    for level in tree.branching:
        acc, cum = 0.0, []
        for p, _ in level:
            acc += float(p)
            cum.append(acc)
        thresholds.append(cum)

    n_funcs = 1 + tree.constraints.n_ineq + tree.constraints.n_eq
    sums = [0.0] * n_funcs
    sq = [0.0] * n_funcs
    rng = random.Random(seed)
    for _ in range(paths):
        eta = rng.random()
        word: Word = ROOT
        not_stopped = 1.0
        while True:
            theta = 1.0 - not_stopped * (1.0 - q_float[word])
            if theta > eta:
                break
            not_stopped *= 1.0 - q_float[word]
            r = rng.random()
            cum = thresholds[len(word)]
            j = 0
            while j < len(cum) - 1 and cum[j] <= r:
                j += 1
            word = word + (j,)
        draws = (stop_value[word],) + accr[word]
        for i, v in enumerate(draws):
            sums[i] += v
            sq[i] += v * v

    def mean_se(i):
        mean = sums[i] / paths
        if paths == 1:
            return mean, 0.0
        var = max(0.0, (sq[i] - paths * mean * mean) / (paths - 1))
        return mean, math.sqrt(var / paths)

    out = {"paths": paths, "seed": seed, "value": mean_se(0)}
    k = 1
    out["ineq"] = tuple(mean_se(k + i) for i in range(tree.constraints.n_ineq))
    k += tree.constraints.n_ineq
    out["eq"] = tuple(mean_se(k + i) for i in range(tree.constraints.n_eq))
    return out
