"""
Entropy and mutual information (in bits) of finite discrete distributions.

Rational inputs stay exact through marginals and ratios; only the logarithm
is taken in floating point.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Hashable, Mapping, Tuple

import numpy as np

from app.markov.errors import InvalidDistribution
from app.markov.scalar import FLOAT_ROW_TOLERANCE, Arithmetic, Scalar, mode_of, total


Cell = Tuple[Hashable, Hashable]


@dataclass(frozen=True)
class JointDistribution:
    mass: Mapping[Cell, Scalar]

    def __post_init__(self):
        _check_masses(self.mass.values())

    @property
    def mode(self) -> Arithmetic:
        return mode_of(*self.mass.values())

    def get(self, x, y) -> Scalar:
        return self.mass.get((x, y), 0)


def _check_masses(values) -> None:
    values = list(values)
    if not values:
        raise InvalidDistribution("distribution has no outcomes")
    mode = mode_of(*values)
    for value in values:
        if value < 0:
            raise InvalidDistribution(f"negative mass {value}")
    mass = total(values, mode)
    if mode == Arithmetic.EXACT and mass != 1:
        raise InvalidDistribution(f"total mass {mass} is not 1")
    if mode == Arithmetic.FLOAT and abs(mass - 1.0) > FLOAT_ROW_TOLERANCE:
        raise InvalidDistribution(f"total mass {mass} is not 1")


def marginals(j: JointDistribution) -> Tuple[Dict[Hashable, Scalar], Dict[Hashable, Scalar]]:
    px: Dict[Hashable, Scalar] = {}
    py: Dict[Hashable, Scalar] = {}
    for (x, y), p in j.mass.items():
        px[x] = px.get(x, 0) + p
        py[y] = py.get(y, 0) + p
    return px, py


def transpose(j: JointDistribution) -> JointDistribution:
    return JointDistribution(mass={(y, x): p for (x, y), p in j.mass.items()})


def factorizes(j: JointDistribution, tolerance: float = 1e-12) -> bool:
    """True iff p(x, y) = p(x)·p(y) for every pair of the marginal supports."""
    px, py = marginals(j)
    exact = j.mode == Arithmetic.EXACT
    for x, a in px.items():
        for y, b in py.items():
            joint = j.mass.get((x, y), 0)
            if exact:
                if Fraction(joint) != Fraction(a) * Fraction(b):
                    return False
            elif abs(float(joint) - float(a) * float(b)) > tolerance:
                return False
    return True


def mutual_information(j: JointDistribution) -> float:
    px, py = marginals(j)
    weights = []
    ratios = []
    for (x, y), p in j.mass.items():
        if p == 0:
            continue
        denominator = px[x] * py[y]
        if denominator == 0:
            raise InvalidDistribution(f"positive mass at {(x, y)!r} with a zero marginal")
        weights.append(float(p))
        ratios.append(float(p / denominator))
    mi = float(np.sum(np.asarray(weights) * np.log2(np.asarray(ratios))))
    return max(0.0, mi)


def entropy(marginal: Mapping[Hashable, Scalar]) -> float:
    _check_masses(marginal.values())
    p = np.asarray([float(v) for v in marginal.values() if v > 0], dtype=float)
    return max(0.0, float(-np.sum(p * np.log2(p))))
