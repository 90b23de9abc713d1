"""Exact verification of weight-zero Rota-Baxter operators on matrix algebras."""
from .exactscalar import QQ, QQi, ScalarDomain, parse_domain, parse_scalar, format_scalar
from .polyring import MPoly, PolyRing
from .matop import (AutoDescriptor, LinearOperator, SquareMatrix, conjugate, nilpotency_index,
                    rb_check, rb_residual, unit, unit_image)

__all__ = ["QQ", "QQi", "ScalarDomain", "parse_domain", "parse_scalar", "format_scalar",
           "MPoly", "PolyRing", "AutoDescriptor", "LinearOperator", "SquareMatrix", "conjugate",
           "nilpotency_index", "rb_check", "rb_residual", "unit", "unit_image"]

__version__ = "0.1.0"
