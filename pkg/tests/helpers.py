"""Shared helpers for the test suite."""


def sci4(value: float) -> str:
    """Format as the tables print: 4 significant digits, short exponent."""
    mant, ex = f"{value:.3e}".split("e")
    return f"{mant}e{int(ex)}"


def sci(value: float, sig: int) -> str:
    mant, ex = f"{value:.{sig - 1}e}".split("e")
    return f"{mant}e{int(ex)}"
