"""Tagged error types shared across the package.

Numerical failure modes are never silent: divergence near the nodal set,
chart singularities of the Euler parametrization, under-resolved grids and
non-finite evaluations each carry their own exception class so that callers
(trajectory engine, quadrature, CLI) can react specifically.
"""


class NumericError(ArithmeticError):
    """A field evaluation produced a non-finite value.

    ``node`` carries the offending evaluation point when known.
    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ChartSingularityError(ValueError):
    """Evaluation requested at (or too close to) sin(beta) = 0, where the
    Euler chart and the triad inverse degenerate."""


class NearNodeError(ValueError):
    """Evaluation inside the guard neighborhood of the nodal set (density
    below its floor), where action, velocity and Weyl curvature diverge."""

    def __init__(self, message, rho=None, floor=None):
        super().__init__(message)
        self.rho = rho
        self.floor = floor


class ResolutionError(ValueError):
    """Angular grid too coarse to resolve the half-angle harmonics."""


class TrajectoryAbort(RuntimeError):
    """Raised by the steppers when the velocity field turns non-finite;
    the trajectory layer converts it into a tagged abort status."""


class ContractViolationError(ValueError):
    """An input violated a stated factorization/normalization contract."""
