"""Exception types shared across the package."""


class PotapovError(Exception):
    """Base class for all library errors."""


class MalformedInput(PotapovError):
    """Input document violates the network JSON schema."""


class NotUnitary(PotapovError):
    """Stacked scattering matrix fails the energy-conservation check."""


class Unstable(PotapovError):
    """Internal coupling matrix has spectral radius >= 1."""


class NonpositiveDelay(PotapovError):
    """A delay duration is zero or negative."""


class DomainError(PotapovError):
    """Scalar parameter outside its admissible range."""


class NearPole(PotapovError):
    """Linear solve too ill-conditioned; evaluation point is at or near a pole."""


class AtRoot(PotapovError):
    """Logarithmic derivative undefined: evaluation point sits on a root."""


class ContourThroughZero(PotapovError):
    """Contour quadrature failed to converge; a root likely lies on the contour."""


class NoConvergence(PotapovError):
    """Iterative refinement failed to converge."""


class CountMismatch(PotapovError):
    """Polished root count disagrees with the argument-principle count."""


class UnstablePoleFound(PotapovError):
    """A pole with nonnegative real part was found for a supposedly stable network."""


class NotCommensurate(PotapovError):
    """Delays are not integer multiples of the requested base duration."""


class DegenerateLeadingCoefficient(PotapovError):
    """Pole polynomial collapsed to a constant; fall back to contour search."""


class NotIsolated(PotapovError):
    """Residue estimates fail to stabilize; pole is not isolated at this radius."""


class RankTooHigh(PotapovError):
    """Residue matrix is not numerically rank one."""


class DegeneratePole(PotapovError):
    """Pole does not lie strictly in the left half-plane."""


class AtPole(PotapovError):
    """Evaluation requested exactly at a pole."""


class PoleOfMap(PotapovError):
    """Evaluation at the pole of the Cayley map."""


class NotEqualDelays(PotapovError):
    """Separation requires all delays to have equal duration."""


class DeflationStall(PotapovError):
    """Kernel deflation detected a zero eigenvalue but failed to reduce dimension."""


class PortMismatch(PotapovError):
    """Cascaded systems have different port counts."""


class NotRealizable(PotapovError):
    """State-space model violates the passivity structure."""


class NonuniformGrid(PotapovError):
    """Simulation input is not sampled on a uniform time grid."""


class MultiplicityWarning(UserWarning):
    """Roots closer than the resolution tolerance were merged and treated as simple."""
