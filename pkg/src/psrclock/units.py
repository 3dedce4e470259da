"""Engineering-notation parsing and formatting at the I/O boundary.

Everything inside the package is SI base units. Suffixes follow SI case
rules (``m`` is milli, ``M`` is mega); ``meg`` is accepted as a SPICE-style
alias for mega. A trailing unit symbol (H, F, Hz, s, V, A, W, J, Ohm) is
accepted and ignored.
"""

import re

SUFFIXES = {
    "a": 1e-18,
    "f": 1e-15,
    "p": 1e-12,
    "n": 1e-9,
    "u": 1e-6,
    "µ": 1e-6,
    "m": 1e-3,
    "": 1.0,
    "k": 1e3,
    "meg": 1e6,
    "M": 1e6,
    "G": 1e9,
    "T": 1e12,
}

_NUMBER_RE = re.compile(
    r"^(?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-]?inf)"
    r"(?P<suffix>meg|[afpnuµmkMGT]?)"
    r"(?P<unit>H|F|Hz|s|V|A|W|J|Ohm|ohm|Ω)?$"
)


def parse_quantity(text: str) -> float:
    """Parse ``'1.5n'``, ``'2pF'``, ``'5GHz'`` or ``'1e-9'`` into a float.

    Raises ValueError on anything that is not a number with an optional
    engineering suffix.
    """
    s = text.strip()
    m = _NUMBER_RE.match(s)
    if m is None:
        raise ValueError(f"cannot parse quantity {text!r}")
    # '1m' alone would be ambiguous with a unit only for metres, which we
    # never accept, so a bare suffix always scales.
    return float(m.group("num")) * SUFFIXES[m.group("suffix")]


def format_eng(value: float, unit: str = "", digits: int = 4) -> str:
    """Human-readable engineering notation, e.g. ``format_eng(1e-10, 's')``
    gives ``'100 ps'``. Lossy; use ``repr`` for round-trip output."""
    if value == 0 or value != value or value in (float("inf"), float("-inf")):
        return f"{value} {unit}".strip()
    prefixes = [(1e12, "T"), (1e9, "G"), (1e6, "M"), (1e3, "k"), (1.0, ""),
                (1e-3, "m"), (1e-6, "u"), (1e-9, "n"), (1e-12, "p"),
                (1e-15, "f"), (1e-18, "a")]
    mag = abs(value)
    for scale, prefix in prefixes:
        if mag >= scale * 0.9999999:
            break
    return f"{value / scale:.{digits}g} {prefix}{unit}".strip()
