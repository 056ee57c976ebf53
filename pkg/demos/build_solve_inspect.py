"""Build a small instance, solve it exactly, and inspect the optimum.

The running example is a depth-2 symmetric random walk with quadratic
terminal payoff and a budget on the expected number of steps taken:
maximize E[X_tau^2] subject to E[tau] <= y.  The solver works over joint
stopping laws, so the optimum may genuinely randomize.
"""

from fractions import Fraction

from treestop import (BudgetVector, POS_INF, build_tree, fractional_nodes,
                      measure_to_rule, solve_weak)

HALF = Fraction(1, 2)

tree = build_tree(
    dt=1, depth=2,
    branching=[(HALF, 1), (HALF, -1)],
    x0=0,
    terminal=lambda t, xs: xs[-1] ** 2,
    inequalities=[(1, POS_INF)],          # integrand 1 accrues E[tau]
)

print("Unconstrained problem: stop anywhere, pay X^2 at the stop.")
res = solve_weak(tree)
print(f"  value = {res.value}  (keep going: E[X_2^2] = 2 beats stopping early)")

print("\nNow bound the expected stopping time: E[tau] <= y.")
for y in (0, HALF, 1, Fraction(3, 2), 2):
    res = solve_weak(tree, BudgetVector(ys=(Fraction(y),), zs=()))
    dual = res.duals_ineq[0]
    print(f"  y = {str(y):>4}: value = {str(res.value):>4}, "
          f"shadow price of budget = {dual}")

print("\nThe value is min(y, 2): one unit of budget buys one unit of payoff")
print("until the unconstrained optimum is reached, then the budget is slack.")

y = Fraction(3, 4)
res = solve_weak(tree, BudgetVector(ys=(y,), zs=()))
rule = measure_to_rule(tree, res.measure)
print(f"\nOptimal law at y = {y} as per-node masses and stop probabilities:")
print("  word   stop-mass  continue-mass  q")
for w in tree.nodes():
    name = "".join("+" if j == 0 else "-" for j in w) or "(root)"
    print(f"  {name:<6} {str(res.measure.stop(w)):>9}  "
          f"{str(res.measure.cont(w)):>13}  {rule.prob(w)}")
frac = fractional_nodes(tree, res.measure)
print(f"\nNodes that genuinely randomize (0 < q < 1): {frac}")
print("With one budget constraint there is at most one such node: basic")
print("solutions of the mass LP randomize no more than the constraint count.")
