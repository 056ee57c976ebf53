"""Exception types shared across the library."""


class TreestopError(Exception):
    """Base class for all library errors."""


class InvalidBranching(TreestopError):
    """Branch probabilities do not sum to 1, or some probability is <= 0."""


class InvalidHorizon(TreestopError):
    """Tree depth is negative."""


class WordTooLong(TreestopError):
    """An increment word is longer than the tree horizon."""


class NodeNotInTree(TreestopError):
    """An increment word does not identify a node of the tree."""


class RuleShapeMismatch(TreestopError):
    """A stopping rule's node set or values do not fit the tree."""


class EquivalenceViolation(TreestopError):
    """The randomized rule and its hitting-time construction disagree.

    Carries the comparison report in ``args[1]`` when available.
    """


class BudgetBelowDomain(TreestopError):
    """A budget lies below the smallest feasible budget of an envelope."""


class UnsupportedConstraintShape(TreestopError):
    """The scalar-budget engine only handles one inequality constraint."""


class SubproblemInfeasible(TreestopError):
    """A conditioned sub-problem is infeasible for its conditional budgets.

    Conditioning preserves feasibility, so this signals an implementation
    bug rather than a property of the instance.
    """


class ShapeMismatch(TreestopError):
    """Pasting received pieces that do not fit the target tree."""


class DegreeTooHigh(TreestopError):
    """Polynomial degree exceeds the combinatorial guard for class tests."""


class ShapeTooLarge(TreestopError):
    """Requested random instance exceeds the generator's size cap."""


class NoInstances(TreestopError):
    """A suite run was pointed at a directory with no instance files."""


class EmptyFamily(TreestopError):
    """The robust solver needs at least one model."""
