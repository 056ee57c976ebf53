"""Auditing candidate laws with compensated-polynomial tests.

A law on (increment path, state path, stopping node) belongs to the
admissible class iff weighted compensated increments of polynomial test
functions all have expectation zero (plus the support conditions pinning
the pre-start behavior).  Genuine laws pass with statistics identically
zero; any single corruption of a branch probability or a state value is
caught by a degree-<=2 test, and mass leaking before the start is caught
by the support clause.  The generator-form compensator leaves an O(dt)
Euler gap that shrinks linearly under grid refinement.
"""

from fractions import Fraction

from treestop import (build_tree, candidate_with_branch_bias,
                      candidate_with_pre_start_mass, candidate_with_state_shift,
                      check_membership, generator_gap_decay, rule_from_map,
                      rule_to_measure, solve_weak)

HALF = Fraction(1, 2)

tree = build_tree(dt=1, depth=2, branching=[(HALF, 1), (HALF, -1)], x0=0,
                  terminal=lambda t, xs: xs[-1] ** 2,
                  inequalities=[(1, Fraction(3, 2))])
rule = rule_from_map(tree, {(): 0, (0,): HALF, (1,): HALF})
measure = rule_to_measure(tree, rule)

report = check_membership(tree, solve_weak(tree).measure)
print(f"solver-produced law: pass = {report.ok} "
      f"({len(report.clause1)} statistics, all exactly zero)")

biased = candidate_with_branch_bias(tree, rule, ((), Fraction(1, 10)))
report = check_membership(tree, biased)
first = next(r for r in report.clause1 if not r["pass"])
print(f"\nbiased branch law (0.6/0.4 instead of 1/2,1/2): pass = {report.ok}")
print(f"  first failing test: phi = {first['phi']}, steps {first['s']}->"
      f"{first['r']}, weight {first['weight']}, statistic = {first['stat']}")

shifted = candidate_with_state_shift(tree, measure, (0,), 1)
report = check_membership(tree, shifted)
first = next(r for r in report.clause1 if not r["pass"])
print(f"\nstate shifted by +1 at one node: pass = {report.ok}")
print(f"  first failing test: phi = {first['phi']}, statistic = {first['stat']}")

leaky = candidate_with_pre_start_mass(tree, measure, Fraction(1, 16))
report = check_membership(tree, leaky)
print(f"\nmass stopping before the start: pass = {report.ok}, "
      f"support detail = {report.clause2_detail}")

print("\nEuler gap of the generator-form compensator under refinement:")
study = generator_gap_decay(drift=1, diffusion=1)
for dt, stat in zip(study["dts"], study["stats"]):
    print(f"  dt = {str(dt):<4}: max |statistic| = {stat:.6f}")
print(f"log-log slope = {study['slope']:.3f} (linear decay)")
