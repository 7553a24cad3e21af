"""Exact interval exchange transformations: Rauzy induction, powers, cycle groups mod q, rank-one towers."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import BudgetError, DomainError, IETError, ParseError, TieError, VerificationError
from .iet import IET, Permutation, first_return_map, idoc_check
from .numeric import QuadraticField, QuadraticNumber, format_scalar, parse_scalar
from .powers import power_iet, verify_power_commutation
from .rank_one import TowerCertificate, refinement_check, tower_search, verify_certificate
from .rauzy import rauzy_class, rauzy_iterate
from .skew import find_identity_word, semigroup_closure

__all__ = [
    "BudgetError",
    "DomainError",
    "IET",
    "IETError",
    "ParseError",
    "Permutation",
    "QuadraticField",
    "QuadraticNumber",
    "TieError",
    "TowerCertificate",
    "VerificationError",
    "find_identity_word",
    "first_return_map",
    "format_scalar",
    "idoc_check",
    "parse_scalar",
    "power_iet",
    "rauzy_class",
    "rauzy_iterate",
    "refinement_check",
    "semigroup_closure",
    "tower_search",
    "verify_certificate",
    "verify_power_commutation",
]
