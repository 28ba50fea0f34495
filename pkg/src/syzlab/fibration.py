"""The flat model torus fibration over the punctured disc.

Fibers over z are C / Lambda(z) with Lambda(z) spanned by 1 and
(k / 2*pi*i) * log z.  Branch choice enters only through log z; branch 0
uses arg z in [0, 2*pi), which makes the second generator have positive
imaginary part.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ValidationError

TWO_PI = 2.0 * math.pi


def _check_z(z: complex) -> complex:
    z = complex(z)
    if not (0.0 < abs(z) < 1.0):
        raise ValidationError("base point must satisfy 0 < |z| < 1")
    return z


def log_branch(z: complex, branch: int = 0) -> complex:
    """log z with arg z taken in [0, 2*pi) plus 2*pi*branch."""
    z = _check_z(z)
    arg = cmath.phase(z) % TWO_PI
    return complex(math.log(abs(z)), arg + TWO_PI * branch)


@dataclass(frozen=True)
class FiberPoint:
    """A point x in the fiber over z, on the chosen log branch."""

    x: complex
    z: complex
    branch: int = 0

    def __post_init__(self):
        _check_z(self.z)

    @property
    def y(self) -> complex:
        """y = -log z; Re y = ell > 0 near the puncture."""
        return -log_branch(self.z, self.branch)

    @property
    def ell(self) -> float:
        return self.y.real

    @property
    def theta(self) -> float:
        return self.y.imag


def from_ell(x: complex, ell: float, theta: float = 0.0) -> FiberPoint:
    """FiberPoint with y = ell + i*theta."""
    if ell <= 0:
        raise ValidationError("ell must be positive")
    y = complex(ell, theta)
    z = cmath.exp(-y)
    arg = cmath.phase(z) % TWO_PI
    branch = round(((-theta) - arg) / TWO_PI)
    return FiberPoint(x=x, z=z, branch=branch)


def lattice_basis(k: int, z: complex, branch: int = 0) -> tuple[complex, complex]:
    """Generators (1, (k/2*pi*i) log z) of Lambda(z)."""
    if k < 1:
        raise ValidationError("k must be a positive integer")
    g2 = k * log_branch(z, branch) / (2j * math.pi)
    return (1.0 + 0.0j), g2


def reduce_point(k: int, p: FiberPoint) -> FiberPoint:
    """Translate x into the fundamental domain [0,1) x [0,1) of Lambda(z)."""
    g1, g2 = lattice_basis(k, p.z, p.branch)
    # solve x = c1 g1 + c2 g2 over the reals
    mat = np.array([[g1.real, g2.real], [g1.imag, g2.imag]])
    c = np.linalg.solve(mat, np.array([p.x.real, p.x.imag]))
    frac = c - np.floor(c)
    # snap roundoff at the half-open boundary so reduction is idempotent
    frac[frac > 1.0 - 1e-12] = 0.0
    x = frac[0] * g1 + frac[1] * g2
    return FiberPoint(x=x, z=p.z, branch=p.branch)


def lattice_equal(k: int, p: FiberPoint, q: FiberPoint, tol: float = 1e-10) -> bool:
    """Whether two points over the same z agree modulo Lambda(z)."""
    if abs(p.z - q.z) > tol:
        return False
    g1, g2 = lattice_basis(k, p.z, p.branch)
    mat = np.array([[g1.real, g2.real], [g1.imag, g2.imag]])
    d = q.x - p.x
    c = np.linalg.solve(mat, np.array([d.real, d.imag]))
    return bool(np.max(np.abs(c - np.round(c))) <= tol * max(1.0, np.max(np.abs(c))))


@dataclass(frozen=True)
class SectionData:
    """Multivalued section x = h(z) + (a/2*pi*i) log z + (b/(2*pi*i)^2) (log z)^2.

    h is a finite Laurent series given as {power: coefficient}.
    """

    h: dict = field(default_factory=dict)
    a: complex = 0.0
    b: complex = 0.0

    def h_at(self, z: complex) -> complex:
        return sum((complex(c) * complex(z) ** p for p, c in sorted(self.h.items())), 0j)

    def h_prime_at(self, z: complex) -> complex:
        return sum((p * complex(c) * complex(z) ** (p - 1)
                    for p, c in sorted(self.h.items()) if p != 0), 0j)

    def has_pole(self) -> bool:
        return any(p < 0 and c != 0 for p, c in self.h.items())

    def h0(self) -> complex:
        return complex(self.h.get(0, 0.0))


def section_eval(s: SectionData, z: complex, branch: int = 0) -> complex:
    """Value of the section over z on the chosen branch."""
    lg = log_branch(z, branch)
    w = 2j * math.pi
    return s.h_at(z) + complex(s.a) * lg / w + complex(s.b) * lg * lg / (w * w)


def section_eval_y(s: SectionData, y: complex) -> complex:
    """Section value written in the universal-cover coordinate y = -log z."""
    if y.real <= 0:
        raise ValidationError("need Re y > 0")
    w = 2j * math.pi
    return s.h_at(cmath.exp(-y)) - complex(s.a) * y / w + complex(s.b) * y * y / (w * w)


def section_dy(s: SectionData, y: complex) -> complex:
    """d/dy of the section along the universal cover."""
    z = cmath.exp(-y)
    w = 2j * math.pi
    return -z * s.h_prime_at(z) - complex(s.a) / w + 2.0 * complex(s.b) * y / (w * w)


def section_is_single_valued(s: SectionData, k: int, tol: float = 1e-12) -> bool:
    """Single-valued modulo Lambda(z) iff a+b and 2b/k are integers."""
    ab = complex(s.a) + complex(s.b)
    tb = 2.0 * complex(s.b) / k
    return (abs(ab.imag) <= tol and abs(ab.real - round(ab.real)) <= tol
            and abs(tb.imag) <= tol and abs(tb.real - round(tb.real)) <= tol)


@dataclass(frozen=True)
class CycleSpec:
    """Two-cycle class: the fiber, or a (quasi-)bad cycle C_{m1,m2}."""

    m1: int = 0
    m2: int = 0
    fiber: bool = False

    def __post_init__(self):
        if self.fiber:
            if self.m1 or self.m2:
                raise ValidationError("fiber cycle takes no winding numbers")
        else:
            if self.m1 < 1:
                raise ValidationError("need m1 >= 1")
            if math.gcd(self.m1, abs(self.m2)) != 1 and self.m2 != 0:
                raise ValidationError("require gcd(m1, m2) = 1")
            if self.m2 == 0 and self.m1 != 1:
                raise ValidationError("m2 = 0 requires m1 = 1")


FIBER = CycleSpec(fiber=True)


def cycle_point(c: CycleSpec, k: int, level: float, t1: float, t2: float) -> FiberPoint:
    """Point of C_{m1,m2} at |z| = level, parameters (t1, t2).

    t1 in [0,1) runs along Re x, t2 in [0, 2*pi*m1) lifts around the base
    circle; Im x = (m2/m1) * (k/2*pi) * (-log level) * (t2 / 2*pi).
    """
    if c.fiber:
        raise ValidationError("cycle_point parametrizes bad cycles, not the fiber")
    if not (0.0 < level < 1.0):
        raise ValidationError("level must satisfy 0 < level < 1")
    big_l = -math.log(level)
    x2 = (c.m2 / c.m1) * (k / TWO_PI) * big_l * (t2 / TWO_PI)
    branch = math.floor(t2 / TWO_PI)
    z = level * cmath.exp(1j * (t2 - TWO_PI * branch))
    return FiberPoint(x=complex(t1, x2), z=z, branch=branch)


def cycle_decompose(c: CycleSpec) -> tuple[int, int]:
    """Class of C_{m1,m2} as m1 [C_bad] + m2 [F]."""
    if c.fiber:
        return (0, 1)
    return (c.m1, c.m2)


def quasi_bad_section(k: int, m1: int, m2: int) -> SectionData:
    """Translation whose inverse image of C_{1,0} sweeps out a C_{m1,m2} cycle.

    eta(z) = (m2 k / (2 m1)) (log z)^2 / (2*pi*i)^2, so b = m2 k / (2 m1).
    """
    if m1 < 1:
        raise ValidationError("need m1 >= 1")
    return SectionData(h={}, a=0.0, b=Fraction(m2 * k, 2 * m1))
