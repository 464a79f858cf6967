"""Error taxonomy shared across the library.

Three base categories, matching the CLI exit codes:

* ``ConfigurationError`` (exit 1): bad user input (config files, expressions,
  unsupported parameter combinations).
* ``NumericalError`` (exit 2): a computation failed to converge or degenerated.
* ``AssumptionError`` (exit 3): the mathematical standing assumptions of the
  method could not be verified (or are violated) for the supplied problem.
"""


class StopgameError(Exception):
    """Base class for all library errors."""

    exit_code = 2


class ConfigurationError(StopgameError):
    exit_code = 1


class NumericalError(StopgameError):
    exit_code = 2


class AssumptionError(StopgameError):
    exit_code = 3


# --- diffusion -------------------------------------------------------------

class UnsupportedParameters(ConfigurationError):
    """Catalog closed form does not apply to these parameters."""


class TabulationInvalid(ConfigurationError):
    """Tabulated fundamental solutions violate monotonicity/positivity."""


class IntegrationFailure(NumericalError):
    """ODE integration failed (step-size underflow or non-finite values)."""


class DegenerateSystem(NumericalError):
    """Numeric fundamental solutions are (nearly) linearly dependent."""


class OrderingViolated(ConfigurationError):
    """Exit-time query with thresholds not ordered around the start point."""


# --- scale ------------------------------------------------------------------

class NonMonotoneScale(NumericalError):
    """Computed natural-scale grid is not strictly increasing."""


class OutOfRange(ConfigurationError):
    """Point outside the truncated state interval."""


# --- payoff_expr ------------------------------------------------------------

class ExprError(ConfigurationError):
    """Base class for expression parsing/evaluation errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, position, expected, found=None):
        self.position = position
        self.expected = tuple(expected)
        self.found = found
        msg = "syntax error at position %d: expected %s" % (
            position, " or ".join(self.expected))
        if found is not None:
            msg += ", found %r" % (found,)
        super().__init__(msg)


class UnknownIdentifier(ExprError):
    def __init__(self, name, position):
        self.name = name
        self.position = position
        super().__init__("unknown identifier %r at position %d" % (name, position))


class ArityMismatch(ExprError):
    def __init__(self, function, got, want):
        self.function = function
        self.got = got
        self.want = want
        super().__init__("%s() takes %d argument(s), got %d" % (function, want, got))


class EvalDomainError(StopgameError):
    """Evaluation left the payoff domain (log of nonpositive, 0/0, ...)."""

    exit_code = 2

    def __init__(self, function, argument):
        self.function = function
        self.argument = argument
        super().__init__("domain error in %s(%r)" % (function, argument))


# --- transform / envelope / barrier -----------------------------------------

class GrowthViolation(AssumptionError):
    """Payoff grows at least as fast as psi (phi) at a boundary."""


class ObstacleOrderViolation(ConfigurationError):
    """Upper payoff H fails to dominate G somewhere on the grid."""


class AnchorBelowF(AssumptionError):
    """Envelope anchor lies strictly below the obstacle's boundary limit."""


class EndsNotAnchored(AssumptionError):
    """Obstacle gap does not close at a grid end and no override was given."""


class NoConvergence(NumericalError):
    def __init__(self, max_iter):
        self.max_iter = max_iter
        super().__init__("fixpoint iteration did not converge in %d sweeps" % max_iter)


class GridTooLarge(ConfigurationError):
    """Brute-force oracle invoked beyond its cost-controlled grid size."""


# --- solver / mc / cli --------------------------------------------------------

class NoFiniteValue(AssumptionError):
    """No finite optimal stopping time exists (payoff outgrows psi/phi)."""


class AssumptionUnverified(AssumptionError):
    """Standing assumptions could not be verified numerically."""


class BudgetExceeded(NumericalError):
    """Monte Carlo work paths*horizon/dt exceeds the configured budget."""


class ConfigError(ConfigurationError):
    """Malformed problem configuration file."""
