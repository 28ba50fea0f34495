"""Semi-flat metrics near an I_k fiber, on the universal cover.

Chart order everywhere is (ell, theta, x1, x2) with y = ell + i*theta =
-log z and x = x1 + i*x2 the fiber coordinate.  The base form is

    omega_sf = i (|kappa|^2 / eps) W^{-1} dy ^ dybar
             + (i/2) W eps (dx - Gamma dy) ^ conj(dx - Gamma dy),

with W = 2*pi / (k*ell) and Gamma = i*Im(x)/ell + b0*ell/(2*pi^2).  The
model parameter alpha multiplies the whole form: the returned metric form
is alpha * omega_sf(b0, eps), so de Rham pairings scale linearly in alpha
and omega^2 = alpha^2 * Omega ^ Omegabar holds with Omega = kappa dy ^ dx.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import fibration as fib
from .errors import NumericalError, ValidationError
from .forms import i_half_a_wedge_abar, pullback_2form, restrict, top_coeff, wedge_11
from .numerics import DecayFit, Grid2, fit_decay, quad_periodic

TWO_PI = 2.0 * math.pi

# translation-asymptotics variants
NOT_UNIFORM = "not_uniform"
BOUNDED_DIFFERENCE = "bounded_difference"
POWER_DECAY = "power_decay"
EXP_DECAY = "exp_decay"

_DY = np.array([1.0, 1.0j, 0.0, 0.0])
_DX = np.array([0.0, 0.0, 1.0, 1.0j])

# complex structure on tangent vectors: J d/dell = d/dtheta, J d/dx1 = d/dx2
_J = np.zeros((4, 4))
_J[1, 0] = 1.0
_J[0, 1] = -1.0
_J[3, 2] = 1.0
_J[2, 3] = -1.0


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the (possibly non-standard) semi-flat model.

    kappa is a finite polynomial {power: coeff} with kappa(0) = 1.  b0_exact
    carries an exact rational value of b0 when one is known; b0_irrational
    marks b0 as deliberately irrational for classification purposes.
    """

    k: int
    eps: float = 1.0
    b0: float = 0.0
    alpha: float = 1.0
    kappa: dict = field(default_factory=dict)
    b0_exact: Fraction | None = None
    b0_irrational: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be a positive integer")
        if not (self.eps > 0 and self.alpha > 0):
            raise ValidationError("eps and alpha must be positive")
        if self.kappa and complex(self.kappa.get(0, 0)) != 1.0 + 0.0j:
            raise ValidationError("kappa must satisfy kappa(0) = 1")
        if any(p < 0 for p in self.kappa):
            raise ValidationError("kappa must be polynomial (no poles)")
        if self.b0_exact is not None and self.b0_irrational:
            raise ValidationError("b0 cannot be both exact-rational and irrational")
        if self.b0_exact is not None and abs(float(self.b0_exact) - self.b0) > 1e-12:
            raise ValidationError("b0_exact disagrees with b0")

    def kappa_at(self, z: complex) -> complex:
        if not self.kappa:
            return 1.0 + 0.0j
        return sum((complex(c) * complex(z) ** p for p, c in sorted(self.kappa.items())), 0j)

    def kappa_is_one(self) -> bool:
        return all(c == 0 for p, c in self.kappa.items() if p != 0)


def chart_of(pt: fib.FiberPoint) -> np.ndarray:
    """(ell, theta, x1, x2) coordinates of a fiber point."""
    return np.array([pt.ell, pt.theta, pt.x.real, pt.x.imag])


def w_factor(p: ModelParams, ell: float) -> float:
    return TWO_PI / (p.k * ell)


def gamma(p: ModelParams, x: complex, y: complex) -> complex:
    """Connection coefficient Gamma(x, y) of the non-standard model."""
    return 1j * x.imag / y.real + p.b0 * y.real / (2.0 * math.pi ** 2)


def sf_form_chart(p: ModelParams, q: np.ndarray) -> np.ndarray:
    """Metric 2-form alpha * omega_sf as a 4x4 matrix at chart point q."""
    ell, th, x1, x2 = (float(v) for v in q)
    if ell <= 0:
        raise ValidationError("chart point must have ell > 0")
    z = cmath.exp(-(ell + 1j * th))
    kap2 = abs(p.kappa_at(z)) ** 2
    w = w_factor(p, ell)
    gam = gamma(p, complex(x1, x2), complex(ell, th))
    a_form = _DX - gam * _DY
    m = (2.0 * kap2 / (p.eps * w)) * i_half_a_wedge_abar(_DY)
    m += (w * p.eps) * i_half_a_wedge_abar(a_form)
    return p.alpha * m


def sf_form(p: ModelParams, pt: fib.FiberPoint) -> np.ndarray:
    return sf_form_chart(p, chart_of(pt))


def hermitian_matrix(p: ModelParams, pt: fib.FiberPoint, chart: str = "xy") -> np.ndarray:
    """Hermitian coefficient matrix of the metric form in (x, y) or (x, z)."""
    ell = pt.ell
    z = cmath.exp(-pt.y)
    kap2 = abs(p.kappa_at(z)) ** 2
    w = w_factor(p, ell)
    gam = gamma(p, pt.x, pt.y)
    h_xx = w * p.eps / 2.0
    h_xy = -h_xx * np.conj(gam)
    h_yy = kap2 / (p.eps * w) + h_xx * abs(gam) ** 2
    h = p.alpha * np.array([[h_xx, h_xy], [np.conj(h_xy), h_yy]], dtype=complex)
    if chart == "xy":
        return h
    if chart == "xz":
        jac = np.diag([1.0 + 0.0j, -1.0 / z])
        return jac.conj().T @ h @ jac
    raise ValidationError("chart must be 'xy' or 'xz'")


def holomorphic_volume_top(p: ModelParams, q: np.ndarray) -> float:
    """Chart-volume coefficient of Omega ^ Omegabar, Omega = kappa dy ^ dx."""
    ell, th = float(q[0]), float(q[1])
    z = cmath.exp(-(ell + 1j * th))
    return 4.0 * abs(p.kappa_at(z)) ** 2


def ma_residual(p: ModelParams, pt: fib.FiberPoint) -> tuple[float, float]:
    """(absolute, relative) Monge-Ampere defect omega^2 - alpha^2 Omega^Omegabar."""
    q = chart_of(pt)
    lhs = top_coeff(sf_form_chart(p, q))
    rhs = p.alpha ** 2 * holomorphic_volume_top(p, q)
    return abs(lhs - rhs), abs(lhs - rhs) / abs(rhs)


def riemannian_metric_chart(p: ModelParams, q: np.ndarray) -> np.ndarray:
    """g(u, v) = omega(u, Jv) in the real chart."""
    g = sf_form_chart(p, q) @ _J
    if np.max(np.abs(g - g.T)) > 1e-10 * max(1.0, np.max(np.abs(g))):
        raise NumericalError("metric failed to be symmetric")
    return 0.5 * (g + g.T)


def riemannian_metric(p: ModelParams, pt: fib.FiberPoint) -> np.ndarray:
    return riemannian_metric_chart(p, chart_of(pt))


def two_form_norm(g: np.ndarray, s: np.ndarray) -> float:
    """Pointwise norm |s|_g of a 2-form, |s|^2 = (1/2) s_ab s_cd g^ac g^bd."""
    ginv = np.linalg.inv(g)
    val = 0.5 * np.einsum("ab,cd,ac,bd->", s, s, ginv, ginv)
    if val < -1e-12:
        raise NumericalError("negative squared norm")
    return math.sqrt(max(val, 0.0))


# ---------------------------------------------------------------------------
# translations by sections


def translate_point(s: fib.SectionData, pt: fib.FiberPoint) -> fib.FiberPoint:
    """T_s(x, z) = (x + eta(z), z) on the fixed branch."""
    eta = fib.section_eval_y(s, pt.y)
    return fib.FiberPoint(x=pt.x + eta, z=pt.z, branch=pt.branch)


def translate_pullback(p: ModelParams, s: fib.SectionData, pt: fib.FiberPoint) -> np.ndarray:
    """Pullback T_s^* (alpha * omega_sf) at pt, via the chain rule.

    The map in chart coordinates is (ell, theta, x1, x2) ->
    (ell, theta, x1 + Re eta, x2 + Im eta) with eta a function of
    y = ell + i*theta only.
    """
    eta_y = fib.section_dy(s, pt.y)
    target = translate_point(s, pt)
    jac = np.eye(4)
    jac[2, 0] = eta_y.real
    jac[2, 1] = -eta_y.imag
    jac[3, 0] = eta_y.imag
    jac[3, 1] = eta_y.real
    return pullback_2form(sf_form(p, target), jac)


def translation_defect(p: ModelParams, s: fib.SectionData, pt: fib.FiberPoint) -> float:
    """|T_s^* omega - omega|_g at pt."""
    diff = translate_pullback(p, s, pt) - sf_form(p, pt)
    return two_form_norm(riemannian_metric(p, pt), diff)


def distance_r(p: ModelParams, ell: float) -> float:
    """Leading-order metric distance from the I_k fiber, r ~ c * ell^(3/2)."""
    return (2.0 / 3.0) * math.sqrt(p.alpha * p.k / (math.pi * p.eps)) * ell ** 1.5


@dataclass(frozen=True)
class DecayClass:
    """Classification of |T_s^* omega - omega| as ell -> infinity."""

    variant: str
    fit: DecayFit | None
    bound: float | None
    r: np.ndarray
    values: np.ndarray


def classify_translation(p: ModelParams, s: fib.SectionData,
                         ell_samples: np.ndarray | None = None,
                         x_probe: complex = 0.31 + 0.0j) -> DecayClass:
    """Classify the decay of the translated-metric defect.

    Structural mapping: pole in h -> not uniform; b != 0 -> bounded
    difference; b = 0 with Im h(0) != 0 -> power decay ~ r^(-4/3);
    b = 0 with h(0) real -> stretched-exponential decay.  The numeric
    samples must corroborate the predicted behaviour or a NumericalError
    is raised.
    """
    if ell_samples is None:
        ell_samples = np.linspace(3.0, 14.0, 12)
    ells = np.asarray(ell_samples, dtype=float)
    if ells.size < 3 or np.any(np.diff(ells) <= 0) or ells[0] <= 0:
        raise ValidationError("ell samples must be >= 3, positive, increasing")
    vals = np.array([
        translation_defect(p, s, fib.from_ell(x_probe, ell)) for ell in ells
    ])
    if not np.all(np.isfinite(vals)):
        raise NumericalError("non-finite translation defect")
    r = np.array([distance_r(p, ell) for ell in ells])

    if s.has_pole():
        if vals[-1] <= 2.0 * vals[0]:
            raise NumericalError("expected unbounded growth for a pole section")
        return DecayClass(NOT_UNIFORM, None, None, r, vals)

    if complex(s.b) != 0:
        lo, hi = float(np.min(vals)), float(np.max(vals))
        if hi > 50.0 * max(lo, 1e-300) or hi < 1e-14:
            raise NumericalError("expected a bounded, non-decaying defect")
        return DecayClass(BOUNDED_DIFFERENCE, None, hi, r, vals)

    if abs(s.h0().imag) > 1e-14:
        fit = fit_decay(r, vals, model="power")
        if fit.r_squared < 0.9:
            raise NumericalError("power-law fit inconsistent (r^2 < 0.9)")
        return DecayClass(POWER_DECAY, fit, None, r, vals)

    if np.max(vals) < 1e-14:
        # exact isometry (constant real translation); classify as fast decay
        return DecayClass(EXP_DECAY, None, float(np.max(vals)), r, vals)
    fit = fit_decay(r, vals, model="stretched_exp")
    if fit.r_squared < 0.9 or fit.exponent >= 0:
        raise NumericalError("stretched-exponential fit inconsistent")
    return DecayClass(EXP_DECAY, fit, None, r, vals)


# ---------------------------------------------------------------------------
# pairings with two-cycles


def pair_closed_form(p: ModelParams, c: fib.CycleSpec) -> float:
    """De Rham pairing of the metric class with [F] or [C_{m1,m2}]."""
    if c.fiber:
        return p.eps * p.alpha
    return (c.m1 * 2.0 * p.b0 / p.k + c.m2) * p.eps * p.alpha


def pair_cycle(p: ModelParams, c: fib.CycleSpec, level: float = math.exp(-2.0 * math.pi),
               grid: Grid2 | None = None) -> float:
    """Pairing by quadrature of the restricted form over the cycle."""
    if not (0.0 < level < 1.0):
        raise ValidationError("level must satisfy 0 < level < 1")
    big_l = -math.log(level)
    if c.fiber:
        if grid is None:
            grid = Grid2(64, 64)
        g1, g2 = fib.lattice_basis(p.k, complex(level), 0)
        t_a = np.array([0.0, 0.0, g1.real, g1.imag])
        t_b = np.array([0.0, 0.0, g2.real, g2.imag])

        def integrand(s1, s2):
            x = s1 * g1 + s2 * g2
            q = np.array([big_l, 0.0, x.real, x.imag])
            return restrict(sf_form_chart(p, q), t_a, t_b)

        return float(quad_periodic(integrand, grid).real)

    if grid is None:
        grid = Grid2(64, 64, box2=(0.0, TWO_PI * c.m1))
    else:
        if abs(grid.box2[1] - grid.box2[0] - TWO_PI * c.m1) > 1e-12:
            raise ValidationError("grid box2 must cover [0, 2*pi*m1)")
    dx2_dt2 = (c.m2 / c.m1) * (p.k / TWO_PI) * big_l / TWO_PI
    t_a = np.array([0.0, 0.0, 1.0, 0.0])
    t_b = np.array([0.0, -1.0, 0.0, dx2_dt2])

    def integrand(t1, t2):
        x2 = dx2_dt2 * t2
        q = np.array([big_l, -t2, t1, x2])
        return restrict(sf_form_chart(p, q), t_a, t_b)

    return float(quad_periodic(integrand, grid).real)


def rational_near_infinity(p: ModelParams) -> tuple[int, int] | None:
    """(m1, m2) with 2*b0/k = -m2/m1 in lowest terms, m1 > 0.

    Requires an exact rational b0; returns None in irrational sentinel mode.
    """
    if p.b0_irrational:
        return None
    if p.b0_exact is None:
        raise ValidationError("rationality needs b0_exact or the irrational flag")
    ratio = 2 * p.b0_exact / p.k
    return (ratio.denominator, -ratio.numerator)


def moduli_dims(k: int) -> tuple[int, int, int]:
    """(dim of semi-flat family, dim H^2_dR, dim of hyperkahler family)."""
    if not (1 <= k <= 9):
        raise ValidationError("k must lie in 1..9")
    return (10 - k, 11 - k, 10 - k)


# ---------------------------------------------------------------------------
# curvature by finite differences


def christoffel_fd(gf, q: np.ndarray, h: float) -> np.ndarray:
    """Christoffel symbols of a metric function gf by central differences."""
    n = q.size
    dg = np.empty((n, n, n))
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        dg[a] = (gf(q + e) - gf(q - e)) / (2.0 * h)
    ginv = np.linalg.inv(gf(q))
    # Gamma^a_{bc} = 1/2 g^{ad} (d_b g_{dc} + d_c g_{bd} - d_d g_{bc})
    return 0.5 * np.einsum("ad,bdc->abc", ginv, dg + np.einsum("cbd->bdc", dg) - np.einsum("dbc->bdc", dg))


def riemann_fd(gf, q: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """(R^a_{bcd}, g) of a metric function by nested central differences."""
    n = q.size
    dgam = np.empty((n, n, n, n))
    for c in range(n):
        e = np.zeros(n)
        e[c] = h
        dgam[c] = (christoffel_fd(gf, q + e, h) - christoffel_fd(gf, q - e, h)) / (2.0 * h)
    gam = christoffel_fd(gf, q, h)
    # R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb} + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}
    riem = (np.einsum("cadb->abcd", dgam) - np.einsum("dacb->abcd", dgam)
            + np.einsum("ace,edb->abcd", gam, gam) - np.einsum("ade,ecb->abcd", gam, gam))
    return riem, gf(q)


def curvature_norm(p: ModelParams, pt: fib.FiberPoint, h: float | None = None) -> float:
    """Frobenius norm |Rm|_g of the semi-flat metric by central differences.

    The step is scaled to the local injectivity radius, which shrinks like
    1/ell in the collapsing fiber directions.
    """
    q = chart_of(pt)
    if h is None:
        h = 1e-2 * min(1.0, 10.0 / max(q[0], 1.0))

    def gf(qq):
        return riemannian_metric_chart(p, qq)

    riem, g = riemann_fd(gf, q, h)
    ginv = np.linalg.inv(g)
    low = np.einsum("ae,ebcd->abcd", g, riem)
    val = np.einsum("abcd,efgh,ae,bf,cg,dh->", low, low, ginv, ginv, ginv, ginv)
    if val < -1e-8:
        raise NumericalError("negative |Rm|^2 from finite differences")
    return math.sqrt(max(val, 0.0))


def curvature_decay(p: ModelParams, ell_samples: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, DecayFit]:
    """|Rm| samples against distance r plus a power-law fit."""
    if ell_samples is None:
        ell_samples = np.linspace(5.0, 40.0, 10)
    ells = np.asarray(ell_samples, dtype=float)
    vals = np.array([curvature_norm(p, fib.from_ell(0.0j, ell)) for ell in ells])
    r = np.array([distance_r(p, ell) for ell in ells])
    fit = fit_decay(r, vals, model="power")
    return r, vals, fit
