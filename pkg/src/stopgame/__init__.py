"""stopgame: optimal stopping and two-player stopping games on 1-D diffusions.

The value of a discounted stopping problem is the least concave majorant
of the rescaled payoff in natural scale; the value of a two-player
stopping game is the taut string between the two rescaled payoffs.  This
package computes both, classifies the game equilibria, and verifies the
results with independent brute-force and Monte Carlo oracles.
"""

from . import barrier, diffusion, envelope, mc, payoff_expr, scale, solver, transform
from .diffusion import (BM, GBM, TABULATED, DiffusionSpec, FundamentalSolutions,
                        exit_laplace, fundamental_solutions,
                        fundamental_solutions_numeric)
from .envelope import (FLAT, EnvelopeResult, biconjugate_from_conjugate,
                       concave_conjugate, least_concave_majorant,
                       sup_tangent_construction)
from .errors import *  # noqa: F401,F403
from .mc import McConfig, McEstimate, default_horizon, saddle_check, simulate_R
from .payoff_expr import PayoffExpr, PayoffSpec, evaluate, parse
from .scale import (UNIFORM_X, UNIFORM_Y, USE_PHI, USE_PSI, ScaleTransform,
                    build_scale, from_natural, to_natural)
from .solver import (DEGENERATE, NASH_SADDLE, NO_NASH, STACKELBERG_ONLY,
                     GameSolution, SolveOptions, StoppingSolution,
                     cancellable_put_residual, cancellable_put_threshold,
                     cancellable_put_value, penalty_cap, put_threshold,
                     put_value, smooth_fit_report, solve_game, solve_stopping,
                     solve_stopping_absorbed, threshold_pair)
from .transform import (AssumptionReport, TransformedObstacle,
                        check_assumptions, transform_payoff)

__version__ = "0.1.0"
