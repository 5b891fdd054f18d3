"""Generalised quadratic forms over totally real number fields: descent, exponential sums,
local densities and exact solution counts."""
__version__ = "0.1.0"

from .errors import BudgetError, InvalidInput, SearchBoundError, UnsupportedPrime
from .field import (FieldElement, NumberField, builtin_field, make_cyclic_cubic, make_field_from_description,
                    make_real_quadratic, parse_element)
from .ideal import Ideal, different_ideal, factor_prime, g_invariant_ideal
from .forms import GQF, dual_form, make_diagonal, make_special, special_shape
from .descent import DescendedSystem, descend, lift

__all__ = [
    "BudgetError", "InvalidInput", "SearchBoundError", "UnsupportedPrime",
    "FieldElement", "NumberField", "builtin_field", "make_cyclic_cubic", "make_field_from_description",
    "make_real_quadratic", "parse_element", "Ideal", "different_ideal", "factor_prime", "g_invariant_ideal",
    "GQF", "dual_form", "make_diagonal", "make_special", "special_shape", "DescendedSystem", "descend", "lift",
]
