"""Hyperkahler triple on the Calabi model space and its rotation to a
semi-flat metric.

Coordinates are (ell, psi, xi1, xi2): xi on the elliptic curve C/(Z + tau Z),
psi the S^1 angle of the line bundle fiber, ell the moment-map-like radial
variable.  The connection form is

    theta = d psi + (c^2/2) (xi2 d xi1 - xi1 d xi2),   c^2 = 2 pi k / Im tau,

so d theta = -c^2 d xi1 ^ d xi2.  The triple is

    omega_J = theta ^ d ell + ell c^2 d xi1 ^ d xi2,
    omega_I = c (theta ^ d xi2 + ell d ell ^ d xi1),
    omega_K = c (d xi1 ^ theta + ell d ell ^ d xi2),

and rotation by a_tau omega_I + b_tau omega_K (a = Im tau/|tau|,
b = -Re tau/|tau|) lands on a semi-flat model with

    eps = 2 pi |tau| c,  alpha = sqrt(k pi Im tau)/|tau|,
    b0 = -k Re tau / (2 |tau|^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import semiflat as sfm
from .errors import ValidationError
from .forms import restrict, wedge_11

TWO_PI = 2.0 * math.pi

STANDARD = "standard"
QUASI_REGULAR = "quasi_regular"
IRREGULAR = "irregular"


@dataclass(frozen=True)
class CalabiModel:
    """Calabi model data: degree k and modulus tau in the fundamental domain.

    re_exact / abs2_exact optionally carry exact rational values of Re tau
    and |tau|^2 for exact rationality decisions; ratio_irrational marks
    -Re tau/|tau|^2 as deliberately irrational.
    """

    k: int
    tau: complex
    re_exact: Fraction | None = None
    abs2_exact: Fraction | None = None
    ratio_irrational: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be a positive integer")
        t = complex(self.tau)
        if t.imag <= 0:
            raise ValidationError("need Im tau > 0")
        if abs(t) < 1.0 - 1e-12 or abs(t.real) > 0.5 + 1e-12:
            raise ValidationError("tau must lie in the fundamental domain")
        if self.re_exact is not None and abs(float(self.re_exact) - t.real) > 1e-9:
            raise ValidationError("re_exact disagrees with tau")
        if self.abs2_exact is not None and abs(float(self.abs2_exact) - abs(t) ** 2) > 1e-9:
            raise ValidationError("abs2_exact disagrees with tau")

    @property
    def a_tau(self) -> float:
        return self.tau.imag / abs(self.tau)

    @property
    def b_tau(self) -> float:
        return -self.tau.real / abs(self.tau)

    @property
    def c_tau(self) -> float:
        return math.sqrt(TWO_PI * self.k / self.tau.imag)


@dataclass(frozen=True)
class CalabiPoint:
    ell: float
    psi: float = 0.0
    xi1: float = 0.0
    xi2: float = 0.0

    def __post_init__(self):
        if self.ell <= 0:
            raise ValidationError("ell must be positive")

    def coords(self) -> np.ndarray:
        return np.array([self.ell, self.psi, self.xi1, self.xi2])


def _covectors(m: CalabiModel, q: np.ndarray):
    """(d ell, theta, d xi1, d xi2) in the coordinate coframe (dl, dpsi, dxi1, dxi2)."""
    c2 = m.c_tau ** 2
    dl = np.array([1.0, 0.0, 0.0, 0.0])
    th = np.array([0.0, 1.0, 0.5 * c2 * q[3], -0.5 * c2 * q[2]])
    dx1 = np.array([0.0, 0.0, 1.0, 0.0])
    dx2 = np.array([0.0, 0.0, 0.0, 1.0])
    return dl, th, dx1, dx2


def hk_triple(m: CalabiModel, pt: CalabiPoint) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(omega_I, omega_J, omega_K) as matrices in the coordinate coframe."""
    q = pt.coords()
    dl, th, dx1, dx2 = _covectors(m, q)
    c = m.c_tau
    ell = q[0]
    # the potential V = ell multiplies the base area term (closedness forces it)
    om_j = wedge_11(th, dl) + ell * c * c * wedge_11(dx1, dx2)
    om_i = c * (wedge_11(th, dx2) + ell * wedge_11(dl, dx1))
    om_k = c * (wedge_11(dx1, th) + ell * wedge_11(dl, dx2))
    return om_i.real, om_j.real, om_k.real


def holomorphic_form_j(m: CalabiModel, pt: CalabiPoint) -> np.ndarray:
    """Omega_J = i (taubar/|tau|) c (dphi/2 - ell dl + i dpsi) ^ (dxi1 + i dxi2)."""
    q = pt.coords()
    c2 = m.c_tau ** 2
    u = np.array([-q[0], 1.0j, 0.5 * c2 * q[2], 0.5 * c2 * q[3]], dtype=complex)
    v = np.array([0.0, 0.0, 1.0, 1.0j], dtype=complex)
    phase = 1j * np.conj(complex(m.tau)) / abs(m.tau)
    return phase * m.c_tau * wedge_11(u, v)


def gibbons_hawking_metric(m: CalabiModel, pt: CalabiPoint) -> np.ndarray:
    """Riemannian metric g = omega_J(., J .) in coordinate frame.

    The complex structure J satisfies J dl = theta/ell, J dxi1 = -dxi2.
    The result matches ell (dl^2 + c^2 |dxi|^2) + theta^2/ell.
    """
    q = pt.coords()
    ell = q[0]
    dl, th, dx1, dx2 = _covectors(m, q)
    # J* on the coordinate coframe
    jstar = np.zeros((4, 4))
    jstar[0] = th / ell
    # dpsi = theta - (c^2/2)(xi2 dxi1 - xi1 dxi2); J*theta = -ell*dl
    c2 = m.c_tau ** 2
    jstar[1] = -ell * dl - 0.5 * c2 * (q[3] * (-dx2) - q[2] * dx1)
    jstar[2] = -dx2
    jstar[3] = dx1
    _, om_j, _ = hk_triple(m, pt)
    # J on vectors: (J e_b)^a = (J* e^a)_b
    g = om_j @ jstar
    return 0.5 * (g + g.T)


def gibbons_hawking_closed_form(m: CalabiModel, pt: CalabiPoint) -> np.ndarray:
    q = pt.coords()
    ell = q[0]
    _, th, _, _ = _covectors(m, q)
    c2 = m.c_tau ** 2
    g = np.diag([ell, 0.0, ell * c2, ell * c2])
    return g + np.outer(th, th) / ell


def closedness_defect(m: CalabiModel, pt: CalabiPoint, h: float = 1e-4) -> float:
    """Max finite-difference exterior-derivative coefficient over the triple."""
    q = pt.coords()

    def forms_at(qq):
        p = CalabiPoint(ell=qq[0], psi=qq[1], xi1=qq[2], xi2=qq[3])
        return np.stack(hk_triple(m, p))

    partial = np.empty((4, 3, 4, 4))
    for a in range(4):
        e = np.zeros(4)
        e[a] = h
        partial[a] = (forms_at(q + e) - forms_at(q - e)) / (2.0 * h)
    worst = 0.0
    for a in range(4):
        for b in range(a + 1, 4):
            for c in range(b + 1, 4):
                coeff = partial[a, :, b, c] - partial[b, :, a, c] + partial[c, :, a, b]
                worst = max(worst, float(np.max(np.abs(coeff))))
    return worst


# ---------------------------------------------------------------------------
# rationality classification shared with the mirror module


def classify_ratio(ratio_float: float, ratio_exact: Fraction | None,
                   irrational: bool) -> tuple[str, bool, Fraction | None]:
    """Classify 2*b0/k = -Re tau/|tau|^2: (class, decided exactly, ratio)."""
    if irrational:
        return IRREGULAR, True, None
    if ratio_exact is not None:
        if ratio_exact == 0:
            return STANDARD, True, ratio_exact
        return QUASI_REGULAR, True, ratio_exact
    if ratio_float == 0.0:
        return STANDARD, False, Fraction(0)
    guess = Fraction(ratio_float).limit_denominator(10 ** 6)
    if abs(float(guess) - ratio_float) <= 1e-9 * max(1.0, abs(ratio_float)):
        cls = STANDARD if guess == 0 else QUASI_REGULAR
        return cls, False, guess
    return IRREGULAR, False, None


@dataclass(frozen=True)
class RotationResult:
    """Semi-flat data of the rotated Calabi model.

    alpha and eps are the scale and fiber-area parameters in the convention
    omega_tau = alpha * omega_sf(b0, eps/alpha); params holds the equivalent
    ModelParams for sf_form, whose eps field therefore stores eps/alpha.
    """

    alpha: float
    eps: float
    b0: float
    sf_class: str
    exact: bool
    winding: tuple[int, int] | None
    params: sfm.ModelParams


def rotate(m: CalabiModel) -> RotationResult:
    t = complex(m.tau)
    alpha = math.sqrt(m.k * math.pi * t.imag) / abs(t)
    eps = TWO_PI * abs(t) * m.c_tau
    b0 = -m.k * t.real / (2.0 * abs(t) ** 2)

    ratio_exact = None
    if m.re_exact is not None and m.abs2_exact is not None:
        ratio_exact = -m.re_exact / m.abs2_exact
    cls, exact, ratio = classify_ratio(-t.real / abs(t) ** 2, ratio_exact,
                                       m.ratio_irrational)
    winding = None
    b0_exact = None
    if ratio is not None:
        winding = (ratio.denominator, -ratio.numerator)
        b0_exact = Fraction(m.k) * ratio / 2
        b0 = float(b0_exact)
    params = sfm.ModelParams(k=m.k, eps=eps / alpha, b0=b0, alpha=alpha,
                             b0_exact=b0_exact,
                             b0_irrational=m.ratio_irrational)
    return RotationResult(alpha=alpha, eps=eps, b0=b0, sf_class=cls,
                          exact=exact, winding=winding, params=params)


# ---------------------------------------------------------------------------
# coordinate change to the semi-flat chart


def sf_coordinates(m: CalabiModel, pt: CalabiPoint) -> tuple[np.ndarray, np.ndarray]:
    """Semi-flat chart point (ell_sf, theta_sf, x1, x2) and its Jacobian.

    x = x1 + i x2 is the fiber coordinate normalized so the lattice is
    Lambda(z); x1 comes from the exact antiderivative of J dx2, pinned to
    vanish along the parallel holomorphic section psi = -b ell^2 / (2a),
    xi2 = 0.
    """
    t = complex(m.tau)
    a, b, c = m.a_tau, m.b_tau, m.c_tau
    c2 = c * c
    ell, psi, xi1, xi2 = pt.coords()

    c1 = TWO_PI * abs(t) / (t.imag * c)
    ell_sf = c1 * ell
    th_sf = TWO_PI * xi1 - TWO_PI * (t.real / t.imag) * xi2
    x1 = (a * psi + 0.5 * b * ell ** 2 - 0.5 * a * c2 * xi1 * xi2
          - 0.5 * b * c2 * xi2 ** 2) / (TWO_PI * a)
    x2 = c * ell * xi2 / (TWO_PI * a)
    q_sf = np.array([ell_sf, th_sf, x1, x2])

    jac = np.zeros((4, 4))
    jac[0, 0] = c1
    jac[1, 2] = TWO_PI
    jac[1, 3] = -TWO_PI * t.real / t.imag
    jac[2, 0] = b * ell / (TWO_PI * a)
    jac[2, 1] = 1.0 / TWO_PI
    jac[2, 2] = -c2 * xi2 / (2.0 * TWO_PI)
    jac[2, 3] = (-0.5 * a * c2 * xi1 - b * c2 * xi2) / (TWO_PI * a)
    jac[3, 0] = c * xi2 / (TWO_PI * a)
    jac[3, 3] = c * ell / (TWO_PI * a)
    return q_sf, jac


def omega_tau(m: CalabiModel, pt: CalabiPoint) -> np.ndarray:
    om_i, _, om_k = hk_triple(m, pt)
    return m.a_tau * om_i + m.b_tau * om_k


def verify_rotation(m: CalabiModel, pt: CalabiPoint) -> float:
    """Relative defect between omega_tau pushed to the semi-flat chart and
    the rotated semi-flat form."""
    rot = rotate(m)
    q_sf, jac = sf_coordinates(m, pt)
    jinv = np.linalg.inv(jac)
    pushed = jinv.T @ omega_tau(m, pt) @ jinv
    target = sfm.sf_form_chart(rot.params, q_sf)
    scale = max(np.max(np.abs(target)), 1e-300)
    return float(np.max(np.abs(pushed - target)) / scale)


# ---------------------------------------------------------------------------
# lattice transport checks


def transport(m: CalabiModel, pt: CalabiPoint, gamma: complex) -> CalabiPoint:
    """Deck transport of a point by a lattice element gamma of Z + tau Z.

    The line-bundle cocycle multiplies the fiber coordinate by
    exp((k pi / Im tau)(conj(gamma) xi + |gamma|^2 / 2)); ell is invariant
    and psi shifts by the argument of the cocycle.
    """
    t = complex(m.tau)
    xi = complex(pt.xi1, pt.xi2)
    dpsi = (m.k * math.pi / t.imag) * (np.conj(gamma) * xi).imag
    return CalabiPoint(ell=pt.ell, psi=pt.psi + dpsi,
                       xi1=pt.xi1 + complex(gamma).real,
                       xi2=pt.xi2 + complex(gamma).imag)


def lattice_defects(m: CalabiModel, pt: CalabiPoint) -> dict[str, float]:
    """Residuals of the quotient relations in the semi-flat coordinates.

    psi + 2*pi shifts x by exactly 1; transport by tau shifts x by
    (k/Im tau)(i y1 - y2) with y = |tau| ell / c + i (Im tau xi1 - Re tau xi2);
    transport by 1 fixes x and shifts theta_sf by 2*pi.
    """
    t = complex(m.tau)
    q0, _ = sf_coordinates(m, pt)

    p_psi = CalabiPoint(pt.ell, pt.psi + TWO_PI, pt.xi1, pt.xi2)
    q1, _ = sf_coordinates(m, p_psi)
    d_psi = abs(q1[2] - q0[2] - 1.0) + abs(q1[3] - q0[3]) + abs(q1[0] - q0[0]) + abs(q1[1] - q0[1])

    p_one = transport(m, pt, 1.0)
    q2, _ = sf_coordinates(m, p_one)
    d_one = (abs(q2[2] - q0[2]) + abs(q2[3] - q0[3]) + abs(q2[0] - q0[0])
             + abs(q2[1] - q0[1] - TWO_PI))

    p_tau = transport(m, pt, t)
    q3, _ = sf_coordinates(m, p_tau)
    y1 = abs(t) * pt.ell / m.c_tau
    y2 = t.imag * pt.xi1 - t.real * pt.xi2
    expected = (m.k / t.imag) * complex(-y2, y1)
    d_tau = (abs(q3[2] - q0[2] - expected.real) + abs(q3[3] - q0[3] - expected.imag)
             + abs(q3[0] - q0[0]) + abs(q3[1] - q0[1]))
    return {"psi_period": d_psi, "gamma_one": d_one, "gamma_tau": d_tau}


# ---------------------------------------------------------------------------
# special Lagrangian fibers of the rotated structure


def mck_restriction(m: CalabiModel, c_level: float, big_k: float,
                    n: int = 5, wrong_slice: bool = False) -> tuple[float, float]:
    """(sup |omega_J| restricted, sup |Im Omega_J| restricted) on a fiber.

    The SYZ fibers are M_{c,K} = {Im tau xi1 - Re tau xi2 = c, ell = K};
    wrong_slice instead restricts to {xi2 = c, |w| = const}, which is not
    omega_J-Lagrangian.
    """
    t = complex(m.tau)
    sup_om = 0.0
    sup_im = 0.0
    for s in np.linspace(-0.5, 0.5, n):
        for psi in np.linspace(0.0, TWO_PI, n, endpoint=False):
            if wrong_slice:
                pt = CalabiPoint(big_k, psi, 0.37 + s, c_level)
                q = pt.coords()
                t1v = np.array([0.0, 1.0, 0.0, 0.0])
                # |w| constant: d ell = (c^2 xi1 / (2 ell)) d xi1 along xi1
                t2v = np.array([m.c_tau ** 2 * q[2] / (2.0 * q[0]), 0.0, 1.0, 0.0])
            else:
                xi1 = c_level / t.imag + s * t.real
                xi2 = s * t.imag
                pt = CalabiPoint(big_k, psi, xi1, xi2)
                t1v = np.array([0.0, 1.0, 0.0, 0.0])
                t2v = np.array([0.0, 0.0, t.real, t.imag])
            omega_j_only = hk_triple(m, pt)[1]
            sup_om = max(sup_om, abs(restrict(omega_j_only, t1v, t2v)))
            big_om = holomorphic_form_j(m, pt)
            val = complex(t1v @ big_om @ t2v)
            sup_im = max(sup_im, abs(val.imag))
    return sup_om, sup_im


def reduce_tau(tau: complex, max_iter: int = 200) -> complex:
    """Move tau to the SL(2,Z) fundamental domain."""
    t = complex(tau)
    if t.imag <= 0:
        raise ValidationError("need Im tau > 0")
    for _ in range(max_iter):
        t = complex(t.real - round(t.real), t.imag)
        if abs(t) < 1.0 - 1e-15:
            t = -1.0 / t
        else:
            return t
    raise ValidationError("tau reduction did not converge")
