"""Unit-tagged quantity parsing.

Config files carry physical values with explicit unit suffixes
(``velocity = 88 m/day``).  Everything is converted to strict SI
(m, s, kg, Pa) at load time.  Dimensionless quantities may be bare
numbers or carry "-".
"""

from __future__ import annotations

# Multiplicative factor to SI for every accepted unit spelling.
_FACTORS = {
    # length
    "m": 1.0,
    "cm": 1e-2,
    "mm": 1e-3,
    "um": 1e-6,
    "nm": 1e-9,
    # time
    "s": 1.0,
    "min": 60.0,
    "h": 3600.0,
    "hour": 3600.0,
    "day": 86400.0,
    "year": 365.0 * 86400.0,
    # mass
    "kg": 1.0,
    "g": 1e-3,
    # volume
    "m^3": 1.0,
    "L": 1e-3,
    # pressure / viscosity
    "Pa": 1.0,
    "kPa": 1e3,
    "Pa*s": 1.0,
    # temperature / energy
    "K": 1.0,
    "J": 1.0,
    # dimensionless
    "-": 1.0,
}


class UnitError(ValueError):
    """Raised for unknown units or missing units on physical quantities."""


def _unit_factor(unit: str) -> float:
    """SI factor for a possibly compound unit like ``kg/m^2/s`` or ``L/h/m^2``."""
    unit = unit.strip()
    if unit in _FACTORS:
        return _FACTORS[unit]
    # compound: numerator / denom / denom ... each part may carry ^n
    parts = unit.split("/")
    factor = _atom_factor(parts[0])
    for p in parts[1:]:
        factor /= _atom_factor(p)
    return factor


def _atom_factor(atom: str) -> float:
    atom = atom.strip()
    if atom == "1":
        return 1.0
    if atom in _FACTORS:
        return _FACTORS[atom]
    if "^" in atom:
        base, _, exp = atom.partition("^")
        base = base.strip()
        if base in _FACTORS:
            try:
                return _FACTORS[base] ** int(exp)
            except ValueError as err:
                raise UnitError(f"bad exponent in unit {atom!r}") from err
    raise UnitError(f"unknown unit {atom!r}")


def parse_quantity(text: str, *, dimensionless: bool = False) -> float:
    """Parse ``"<number> <unit>"`` into an SI float.

    Physical quantities must carry a unit; pass ``dimensionless=True``
    to accept a bare number (ratios, counts, efficiencies).
    """
    text = text.strip()
    fields = text.split(None, 1)
    if len(fields) == 1:
        if dimensionless:
            return float(fields[0])
        raise UnitError(f"missing unit on physical quantity {text!r}")
    value, unit = fields
    if dimensionless and unit.strip() == "-":
        return float(value)
    return float(value) * _unit_factor(unit)
