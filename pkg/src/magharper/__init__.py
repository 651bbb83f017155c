"""Spectral computations for matrices over twisted group algebras."""

__version__ = "0.1.0"

from .errors import (DomainError, MagHarperError, NotAmenableError, NumericError,  # noqa: E402
                     RelationNotFound, ResourceCapError)
from .groups import (ExtensionModel, FreeGroupModel, HeisenbergModel, LamplighterModel,  # noqa: E402
                     LatticeModel, ball, folner_set)
from .cocycle import (MagneticZ2, Pullback, QuotientTable, SymplecticLattice, Trivial,  # noqa: E402
                      coboundary_twist, inverse_normalize, verify)
from .algebra import AlgebraElement, VectorFS, build_named_operator, lift_to_extension  # noqa: E402
from .spectra import (detect_gaps, exact_moment, quotient_multiplicity, spectral_density,  # noqa: E402
                      truncate)
from .algebraic import HighPrecValue, PolynomialZ, minimal_polynomial, refine_eigenvalue  # noqa: E402

__all__ = [
    "DomainError", "MagHarperError", "NotAmenableError", "NumericError", "RelationNotFound", "ResourceCapError",
    "ExtensionModel", "FreeGroupModel", "HeisenbergModel", "LamplighterModel", "LatticeModel", "ball",
    "folner_set", "MagneticZ2", "Pullback", "QuotientTable", "SymplecticLattice", "Trivial",
    "coboundary_twist", "inverse_normalize", "verify", "AlgebraElement", "VectorFS", "build_named_operator",
    "lift_to_extension", "detect_gaps", "exact_moment", "quotient_multiplicity", "spectral_density",
    "truncate", "HighPrecValue", "PolynomialZ", "minimal_polynomial", "refine_eigenvalue",
]
