"""Exception hierarchy for the stability pipeline."""


class PexstabError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(PexstabError):
    """Malformed or semantically invalid experiment configuration."""


class NonInvertible(ConfigError):
    """Generator matrix is not invertible on the carrier."""


class NonAbelian(ConfigError):
    """Generated automorphism group contains a non-trivial commutator."""


class ClosureOverflow(ConfigError):
    """Group closure exceeded the element cap."""


class OutOfCarrier(PexstabError):
    """Dense table lookup outside the carrier enumeration."""


class HypothesisViolated(PexstabError):
    """Measured Pexider defect exceeds the control function somewhere."""


class NotContractive(PexstabError):
    """Measured averaged-control ratio is not below one."""


class ZeroDenominatorViolation(PexstabError):
    """Control vanishes at a pair where the averaged numerator does not."""


class LambdaNotContractive(PexstabError):
    """Full-averaging route requested but its modulus exceeds one."""


class NoFiniteStep(PexstabError):
    """No iterate with a finite successive weighted distance was found."""


class MaxIterations(PexstabError):
    """Iteration did not reach the stopping threshold."""


class ConstraintViolation(ConfigError):
    """Corollary parameter constraint failed; message names the inequality."""


class LawViolation(PexstabError):
    """A claimed exact solution fails its defining functional equation."""


class CertificateImpossible(PexstabError):
    """No control certificate of the requested shape covers the residual."""
