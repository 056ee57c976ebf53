"""Exact constrained optimal stopping on finite increment trees.

The library solves optimal stopping problems with inequality- and
equality-type expectation constraints on finite tree discretizations of
(possibly path-dependent) diffusions: an exact rational LP over joint
stopping laws, randomized stopping rules with a uniform-threshold
hitting-time realization, a scalar-budget backward induction, a two-sided
verifier of the value recursion under conditioning and pasting, and
martingale-problem membership tests for candidate laws.
"""

__version__ = "0.1.0"

from .dp import backstep, dp_value, node_envelopes, root_envelope
from .dpp import (ConditionalBudgets, condition, first_randomization_cut,
                  normalize_cut, paste, verify_dpp)
from .envelope import ConcaveEnvelope, allocate, merged_envelope
from .errors import (BudgetBelowDomain, DegreeTooHigh, EmptyFamily,
                     EquivalenceViolation, InvalidBranching, InvalidHorizon,
                     NoInstances, NodeNotInTree, RuleShapeMismatch,
                     ShapeMismatch, ShapeTooLarge, SubproblemInfeasible,
                     TreestopError, UnsupportedConstraintShape, WordTooLong)
from .generate import generate_instance
from .io import (dump_instance, dump_measure, dump_rule, instance_hash,
                 load_budgets, load_instance, load_measure, load_rule,
                 parse_function)
from .lattice import (BudgetVector, Coefficients, ConstraintSpec, TreeInstance,
                      build_tree, cumulative_functionals, euler_state,
                      sampled_lipschitz_report)
from .lp import (SolveResult, fractional_nodes, measure_to_rule, solve_robust,
                 solve_weak)
from .martingale import (CandidateLaw, MembershipReport, Polynomial,
                         candidate_with_branch_bias, candidate_with_pre_start_mass,
                         candidate_with_state_shift, check_membership,
                         compensated_process, generator_gap_decay,
                         monomial_basis, statistic)
from .measures import StoppingMeasure, expectations_from_stop_mass, feasible_for
from .rules import (RandomizedStoppingRule, ThetaProcess, derandomize,
                    equivalence_check, monte_carlo_value, rule_from_map,
                    rule_to_measure, stop_mass_by_eta_integration, theta_of_rule)
from .xreal import Ext, NEG_INF, POS_INF, as_fraction
