"""Exception types shared across the package."""


class JunctionFlowError(Exception):
    """Base class for all package errors."""


class DegenerateConfig(JunctionFlowError):
    """Sheets 1 and 2 do not span the frame the analysis needs
    (coincident leading slopes, or an unreachable normalized frame)."""


class NonMonotone(JunctionFlowError):
    """The height difference driving the graph transform is not strictly
    increasing on its domain."""


class InterfaceMismatch(JunctionFlowError):
    """Sheet values disagree at the common interface beyond tolerance."""


class OutOfRange(JunctionFlowError):
    """Requested target grid exceeds the support of the transformed data."""


class BranchFailure(JunctionFlowError):
    """Square-root argument fell on the negative real axis; the principal
    branch has no positive real part there."""


class EmptySamples(JunctionFlowError):
    """No frequency samples supplied to the boundary-system test."""


class NewtonDiverged(JunctionFlowError):
    """Newton iteration failed to meet tolerance within the iteration cap."""


class JunctionEscape(JunctionFlowError):
    """Junction position left the open interval between the outer pins."""


class ShapeMismatch(JunctionFlowError):
    """Polynomial operands have different truncation shapes."""


class RangeError(JunctionFlowError):
    """Combinatorial arguments outside the range the statement covers."""


class SchemaError(JunctionFlowError):
    """Experiment config failed validation (missing/unknown/ill-typed field)."""
