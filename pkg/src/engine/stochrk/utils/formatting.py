"""Formatting utilities for consistent rendering of rationals and numbers."""

from fractions import Fraction


def format_rational(value: Fraction) -> str:
    """Render a rational the way coefficient files store it: "1/2", "-5", "0"."""
    return str(value)


def format_order(value: Fraction) -> str:
    """Render a convergence order as a short decimal when exact ("1.5", "2.0").

    Orders that have no short decimal form fall back to "p/q".
    """
    scaled = value * 1000
    if scaled.denominator != 1:
        return str(value)
    text = f"{float(value):.3f}".rstrip("0")
    if text.endswith("."):
        text += "0"
    return text


def latex_rational(value: Fraction) -> str:
    """Render a rational as LaTeX, e.g. -1/2 -> "-\\frac{1}{2}"."""
    if value.denominator == 1:
        return str(value.numerator)
    sign = "-" if value < 0 else ""
    return f"{sign}\\frac{{{abs(value.numerator)}}}{{{value.denominator}}}"


def float_literal(value: Fraction) -> str:
    """Shortest repr of the nearest double, used for emitted constants."""
    return repr(float(value))


def format_slope(slope: float, decimals: int = 3) -> str:
    """Format a fitted order for log lines and reports."""
    if slope != slope:
        return "nan"
    return f"{slope:.{decimals}f}"
