"""
Numeric values of the engine: exact rationals or binary floats, one mode per chain.
"""
import math
import re
from enum import Enum
from fractions import Fraction
from typing import Iterable, Union

from app.markov.errors import MixedArithmetic, ModelParseError


FLOAT_ROW_TOLERANCE = 1e-9
FLOAT_RELATIVE_TOLERANCE = 1e-12

Scalar = Union[Fraction, float]

# "16/65024", "-3", "0.01", "1e-3", "2.5E+2"
_LITERAL = re.compile(r"^\s*-?(\d+/\d+|\d+(\.\d*)?([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?)\s*$")
_EXPONENT = re.compile(r"[eE]([+-]?\d+)")
MAX_EXPONENT = 4000


class Arithmetic(str, Enum):
    EXACT = "exact"
    FLOAT = "float"


class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITY"

    def __str__(self) -> str:
        return "inf"

    def __float__(self) -> float:
        return math.inf

    def __eq__(self, other) -> bool:
        return other is self or (isinstance(other, float) and math.isinf(other) and other > 0)

    def __hash__(self) -> int:
        return hash(math.inf)

    def __lt__(self, other) -> bool:
        return False

    def __gt__(self, other) -> bool:
        return other is not self

    def __le__(self, other) -> bool:
        return other is self

    def __ge__(self, other) -> bool:
        return True


INFINITY = _Infinity()

ExtScalar = Union[Fraction, float, _Infinity]


def is_infinite(value) -> bool:
    return value is INFINITY


def parse_scalar(text: Union[str, int, float, Fraction], mode: Arithmetic = Arithmetic.EXACT) -> Scalar:
    """
    Accepts rational strings ("16/65024"), decimal strings ("0.01"), ints,
    Fractions and floats. Decimals are read as exact decimal fractions in
    exact mode.
    """
    if isinstance(text, bool):
        raise ModelParseError(f"boolean {text!r} is not a number")
    if isinstance(text, str):
        if not _LITERAL.match(text):
            raise ModelParseError(f"malformed number {text!r}")
        stripped = text.strip()
        if "/" in stripped and int(stripped.split("/")[1]) == 0:
            raise ModelParseError(f"zero denominator in {text!r}")
        exponent = _EXPONENT.search(stripped)
        if exponent and abs(int(exponent.group(1))) > MAX_EXPONENT:
            raise ModelParseError(f"exponent out of range in {text!r}")
        exact = Fraction(stripped)
        if mode == Arithmetic.EXACT:
            return exact
        try:
            return float(exact)
        except OverflowError:
            raise ModelParseError(f"{text!r} overflows a float") from None
    if isinstance(text, float):
        if not math.isfinite(text):
            raise ModelParseError(f"non-finite number {text!r}")
        return Fraction(repr(text)) if mode == Arithmetic.EXACT else text
    if isinstance(text, (int, Fraction)):
        return Fraction(text) if mode == Arithmetic.EXACT else float(text)
    raise ModelParseError(f"unsupported numeric value {text!r}")


def coerce(value, mode: Arithmetic) -> Scalar:
    """Strict conversion for values handed to a chain: floats never enter exact chains."""
    if isinstance(value, str):
        return parse_scalar(value, mode)
    if isinstance(value, bool):
        raise MixedArithmetic(mode.value, value)
    if mode == Arithmetic.EXACT:
        if isinstance(value, (int, Fraction)):
            return Fraction(value)
        raise MixedArithmetic(mode.value, value)
    if isinstance(value, Fraction):
        raise MixedArithmetic(mode.value, value)
    if isinstance(value, (int, float)):
        result = float(value)
        if not math.isfinite(result):
            raise MixedArithmetic(mode.value, value)
        return result
    raise MixedArithmetic(mode.value, value)


def zero(mode: Arithmetic) -> Scalar:
    return Fraction(0) if mode == Arithmetic.EXACT else 0.0


def one(mode: Arithmetic) -> Scalar:
    return Fraction(1) if mode == Arithmetic.EXACT else 1.0


def total(values: Iterable[Scalar], mode: Arithmetic) -> Scalar:
    if mode == Arithmetic.EXACT:
        return sum(values, Fraction(0))
    return math.fsum(values)


def is_one(value: Scalar, mode: Arithmetic, tolerance: float = FLOAT_RELATIVE_TOLERANCE) -> bool:
    if mode == Arithmetic.EXACT:
        return value == 1
    return abs(value - 1.0) <= tolerance


def is_zero(value: Scalar, mode: Arithmetic, tolerance: float = FLOAT_RELATIVE_TOLERANCE) -> bool:
    if mode == Arithmetic.EXACT:
        return value == 0
    return abs(value) <= tolerance


def mode_of(*values) -> Arithmetic:
    return Arithmetic.FLOAT if any(isinstance(v, float) for v in values) else Arithmetic.EXACT


def to_float(value: ExtScalar) -> float:
    return float(value)


def format_scalar(value: ExtScalar) -> str:
    """Lossless text form: "num/den" for rationals, repr for floats, "inf" for Infinity."""
    if value is INFINITY:
        return "inf"
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return repr(float(value))
