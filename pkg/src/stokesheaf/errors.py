"""Exception types shared across the package.

Every failure mode that callers are expected to handle gets its own class;
generic ValueError/RuntimeError are reserved for genuine programming errors.
"""


class StokesheafError(Exception):
    """Base class for all package-specific errors."""


class DegenerateInput(StokesheafError):
    """The input is degenerate (e.g. the zero polynomial)."""


class NonConvergence(StokesheafError):
    """An iterative numerical procedure failed to converge."""


class BranchCollision(StokesheafError):
    """A continuation path passes too close to a turning point."""


class QuadratureFailure(StokesheafError):
    """Adaptive quadrature exceeded its refinement budget."""


class StepBudgetExceeded(StokesheafError):
    """A curve trace ran out of steps before terminating."""


class LaunchFailure(StokesheafError):
    """Initial curve directions at a turning point could not be separated."""


class NoAdmissibleAngle(StokesheafError):
    """No scanned angle passes the geometric assumption checks."""


class NonTransversal(StokesheafError):
    """Two curves of the same family cross; the region structure is broken."""


class DepthExhausted(StokesheafError):
    """A query needs data beyond the built truncation depth."""


class InconsistentBranch(StokesheafError):
    """Analytic continuation around a region disagrees with itself."""


class MalformedWord(StokesheafError):
    """A letter sequence violates the alternating handedness pattern."""


class UnsupportedRegion(StokesheafError):
    """An inclusion test was asked over an unsupported region kind."""


class NotCovered(StokesheafError):
    """The truncated complex does not contain a required strip or ray."""


class RegionMismatch(StokesheafError):
    """Two morphism matrices over different regions cannot be composed."""


class SupportViolation(StokesheafError):
    """A matrix entry fails the cone-inclusion support condition."""


class NotLocallyNilpotent(StokesheafError):
    """No power of the perturbation enters the filtration cutoff."""


class NotAdjacent(StokesheafError):
    """A section was propagated across a ray that does not bound its strip."""


class AssumptionViolation(StokesheafError):
    """The standing geometric assumptions fail for the given angle."""


class ParseError(StokesheafError):
    """Malformed textual input (potential string, config, synthetic file)."""


class InvariantFailure(StokesheafError):
    """A structural invariant that should always hold was violated."""
