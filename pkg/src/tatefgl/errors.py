"""Exception hierarchy shared by every layer of the engine.

Every error that a caller can provoke with bad input derives from
:class:`TateFglError`; the CLI and the HTTP service map these to exit
code 2 / HTTP 422.  Internal invariant violations raise plain
``AssertionError`` and are bugs.
"""


class TateFglError(Exception):
    """Base class for all user-facing errors."""


class ContextMismatch(TateFglError):
    """Two series with different precision contexts were combined."""


class LaurentTailOverflow(TateFglError):
    """An operation produced an exponent below a strict Laurent tail bound."""


class SubstitutionDiverges(TateFglError):
    """Substituted series has a constant term where none is allowed."""


class NonInvertibleSubstitutionIntoLaurent(TateFglError):
    """Negative powers of a variable require a unit-monomial image."""


class NonzeroConstantTerm(TateFglError):
    """Composition argument has a nonzero constant term."""


class NonUnitLinearCoefficient(TateFglError):
    """Compositional inverse needs a unit linear coefficient."""


class NotAQthPower(TateFglError):
    """q-th root requested of a series outside the image of Frobenius."""


class WrongCharacteristic(TateFglError):
    """Characteristic-p operation invoked over the wrong coefficient domain."""


class IntegralityFailure(TateFglError):
    """A rational coefficient has p in its denominator during reduction."""


class HomogeneityFailure(TateFglError):
    """A construction that must be homogeneous produced mixed degrees."""


class NonConvergence(TateFglError):
    """A fixed-point iteration exceeded its iteration cap."""


class PrecisionExhausted(TateFglError):
    """A ring map needs exponents outside the configured window."""


class NotAUnit(TateFglError):
    """Multiplicative inverse requested of a non-unit at this precision."""


class OddPrimeRequired(TateFglError):
    """The twisted-law / Honda-coordinate pipeline requires p odd."""


class LogDivergence(TateFglError):
    """Logarithm of a series whose linear coefficient is not a unit."""
