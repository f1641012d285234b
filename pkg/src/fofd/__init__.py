"""Model expansion for first-order logic with nested least and greatest
fixpoint definitions."""

from .core import (
    FixpointDefinition,
    Kind,
    Rule,
    Structure,
    Theory,
    Vocabulary,
    defined_predicates,
    merge_rules,
    open_symbols,
    validate,
)
from .parser import parse_structure, parse_theory, print_structure, print_theory

__all__ = [
    "FixpointDefinition",
    "Kind",
    "Rule",
    "Structure",
    "Theory",
    "Vocabulary",
    "defined_predicates",
    "merge_rules",
    "open_symbols",
    "parse_structure",
    "parse_theory",
    "print_structure",
    "print_theory",
    "validate",
]
