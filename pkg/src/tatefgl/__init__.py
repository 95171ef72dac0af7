"""tatefgl: exact coefficient algebra for Tate rings of formal group laws.

Truncated multivariate series over Q, Z/p^N and F_p; p-typical formal
group laws with Araki p-series; normal forms for BP<n>_*((x))/([p](x));
the Honda-coordinate isomorphism of the residue formal group; and the
Lubin-Tate lift criterion.  Everything is computed in exact arithmetic
at a user-chosen finite precision.
"""

from .context import CHARP, RATIONAL, ZMOD, Ideal, PrecisionContext, Variable
from .series import MultiSeries

__all__ = [
    "CHARP",
    "RATIONAL",
    "ZMOD",
    "Ideal",
    "PrecisionContext",
    "Variable",
    "MultiSeries",
]
