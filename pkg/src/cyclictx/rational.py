"""Exact rational helpers.

Exact values are plain :class:`fractions.Fraction` objects (arbitrary
precision, always reduced, positive denominator). This module only adds the
``"p/q"`` string convention used in JSON documents and reports.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import DocumentError


def format_rational(q: Fraction) -> str:
    """Render a Fraction as ``"p/q"`` (``"p"`` when the denominator is 1)."""
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"`` or a plain integer/decimal string into a Fraction."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise DocumentError(f"not a rational number: {text!r}") from exc
