"""Independent reference computations used to freeze expected test values.

Everything here deliberately avoids the solver paths under test: values
come from direct enumeration of (word, stop depth) atoms, plain backward
induction, and brute-force grids.
"""

from fractions import Fraction
from itertools import product

from treestop import Ext
from treestop.lattice import ROOT


def straight_line_euler(dt, words_increments, drift_fn, diff_fn, x0):
    """Scalar Euler recursion written as a plain loop (no tree machinery)."""
    xs = [Fraction(x0)]
    t = Fraction(0)
    for w in words_increments:
        b = drift_fn(t, tuple(xs))
        s = diff_fn(t, tuple(xs))
        xs.append(xs[-1] + Fraction(b) * Fraction(dt) + Fraction(s) * Fraction(w))
        t += Fraction(dt)
    return xs


def atom_expectations(tree, q):
    """Objective and accrual expectations of a rule by atom enumeration.

    Enumerates every (full word, stop depth) atom with its probability
    P(word) * prod_{j<k} (1-q) * q(at k) and sums payoffs directly.
    """
    value = Ext(0)
    gs = [Ext(0)] * tree.constraints.n_ineq
    hs = [Ext(0)] * tree.constraints.n_eq
    for leaf in tree.leaves():
        pw = tree.path_prob(leaf)
        for k in range(len(leaf) + 1):
            node = leaf[:k]
            mass = pw
            for j in range(k):
                mass *= 1 - q[leaf[:j]]
            mass *= q[node]
            if mass == 0:
                continue
            # leaves under a stop node split its mass; summing over leaves
            # recovers the node's full stop mass since branch probs sum to 1
            F, Gs, Hs = tree._functionals(node)
            value = value + (F + Ext(tree.terminal_at(node))) * mass
            for i, G in enumerate(Gs):
                gs[i] = gs[i] + G * mass
            for i, H in enumerate(Hs):
                hs[i] = hs[i] + H * mass
    return value, tuple(gs), tuple(hs)


def snell_value(tree):
    """Unconstrained optimal stopping value by plain backward induction."""
    memo = {}
    for word in reversed(list(tree.nodes())):
        stop = tree.stop_payoff(word)
        if len(word) == tree.depth:
            memo[word] = stop
            continue
        # children's payoffs already contain this step's accrued reward
        cont = Ext(0)
        for j, (p, _) in enumerate(tree.branching[len(word)]):
            cont = cont + memo[word + (j,)] * p
        memo[word] = max(stop, cont)
    return memo[ROOT]


def best_rule_value(tree, ys, zs):
    """Exhaustive search over stopping rules with at most one fractional node.

    With c <= 1 active constraints an optimal measure randomizes at no more
    than one node, and with all other nodes deterministic both the value and
    the constraint accrual are affine in that node's stop probability, so
    candidate optima are 0/1 grids plus exact affine boundary solutions.
    Returns -inf when nothing is feasible.
    """
    interior = [w for w in tree.nodes() if len(w) < tree.depth]
    ys = [Ext.parse(y) for y in ys]
    zs = [Ext.parse(z) for z in zs]
    active = [("ineq", i, y) for i, y in enumerate(ys) if y.is_finite]
    active += [("eq", i, z) for i, z in enumerate(zs) if z.is_finite]
    if len(active) > 1:
        raise ValueError("the exhaustive oracle handles at most one constraint")

    def full_q(bits, free_node=None, free_val=None):
        q = {}
        for w in tree.nodes():
            if len(w) == tree.depth:
                q[w] = Fraction(1)
        for w, bit in zip(interior, bits):
            q[w] = Fraction(bit)
        if free_node is not None:
            q[free_node] = free_val
        return q

    def feasible(v_g, v_h):
        for got, y in zip(v_g, ys):
            if not got <= y:
                return False
        for got, z in zip(v_h, zs):
            if got != z:
                return False
        return True

    best = None
    for bits in product((0, 1), repeat=len(interior)):
        candidates = [(None, None)]
        if active:
            kind, idx, bound = active[0]
            for free_i, free_node in enumerate(interior):
                # accrual is affine in this node's q with others fixed
                q0 = full_q(bits, free_node, Fraction(0))
                q1 = full_q(bits, free_node, Fraction(1))
                _, g0, h0 = atom_expectations(tree, q0)
                _, g1, h1 = atom_expectations(tree, q1)
                a0 = (g0[idx] if kind == "ineq" else h0[idx])
                a1 = (g1[idx] if kind == "ineq" else h1[idx])
                if a0 == a1 or not (a0.is_finite and a1.is_finite):
                    continue
                target = bound.fraction()
                qstar = Fraction(target - a0.fraction()) / \
                    (a1.fraction() - a0.fraction())
                if 0 <= qstar <= 1:
                    candidates.append((free_node, qstar))
        for free_node, free_val in candidates:
            q = full_q(bits, free_node, free_val)
            value, v_g, v_h = atom_expectations(tree, q)
            if feasible(v_g, v_h) and (best is None or value > best):
                best = value
    return best if best is not None else Ext(0, sign=-1)


def brute_allocate(children, total, steps=200):
    """Grid search over two-child budget splits (lower bound certificate)."""
    (p1, e1), (p2, e2) = children
    total = Fraction(total)
    best = None
    lo1 = e1.xs[0]
    hi1 = max(e1.xs[-1], lo1)
    for i in range(steps + 1):
        y1 = lo1 + (hi1 - lo1) * Fraction(i, steps)
        rest = (total - p1 * y1) / p2
        if rest < e2.xs[0]:
            continue
        v = p1 * e1.value(y1) + p2 * e2.value(rest)
        if best is None or v > best:
            best = v
    return best
