"""Special Lagrangian fiber geometry of the semi-flat model.

The (quasi-)bad cycle C_{m1,m2} at |z| = e^{-ell} carries the induced flat
metric A dtheta^2 + B dx1^2 with A = alpha*k*ell/(pi*eps) and
B = alpha*2*pi*eps/(k*ell), so A*B = 2*alpha^2 independently of ell.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import fibration as fib
from . import semiflat as sf
from .errors import NumericalError, ValidationError
from .forms import wedge_11
from .numerics import DecayFit, Grid2, fit_decay

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModelFiber:
    """A (quasi-)bad cycle of the model at base radius e^{-ell}."""

    params: sf.ModelParams
    cycle: fib.CycleSpec
    ell: float

    def __post_init__(self):
        if self.ell <= 0:
            raise ValidationError("ell must be positive")
        if self.cycle.fiber:
            raise ValidationError("slag fibers are bad cycles, not torus fibers")

    @property
    def level(self) -> float:
        return math.exp(-self.ell)


@dataclass(frozen=True)
class FiberGeometry:
    """Closed-form flat-torus data of a model slag fiber."""

    a_coef: float
    b_coef: float
    lambda1: float
    volume: float
    diameter: float
    noncollapse_kappa: float
    noncollapse_scale: float


def fiber_geometry(mf: ModelFiber) -> FiberGeometry:
    p = mf.params
    a = p.alpha * p.k * mf.ell / (math.pi * p.eps)
    b = p.alpha * TWO_PI * p.eps / (p.k * mf.ell)
    lam = min(1.0 / a, 4.0 * math.pi ** 2 / b)
    vol = TWO_PI * math.sqrt(a * b) * mf.cycle.m1
    diam = max(math.pi * math.sqrt(a), 0.5 * math.sqrt(b))
    return FiberGeometry(a_coef=a, b_coef=b, lambda1=lam, volume=vol,
                         diameter=diam, noncollapse_kappa=math.sqrt(2.0),
                         noncollapse_scale=math.sqrt(b))


def lambda1_rayleigh(a: float, b: float, n: int = 64) -> float:
    """First nonzero Laplace eigenvalue estimated by a discrete Rayleigh quotient.

    A five-point finite-difference Laplacian on the flat rectangular torus
    with side lengths (2*pi*sqrt(a), sqrt(b)) is applied to the two
    fundamental modes; the smaller quotient estimates lambda_1.
    """
    if a <= 0 or b <= 0 or n < 8:
        raise ValidationError("need positive coefficients and n >= 8")
    best = math.inf
    for length in (TWO_PI * math.sqrt(a), math.sqrt(b)):
        h = length / n
        s = np.arange(n) * h
        u = np.cos(TWO_PI * s / length)
        lap = (np.roll(u, 1) - 2.0 * u + np.roll(u, -1)) / h ** 2
        quot = -(u @ lap) / (u @ u)
        best = min(best, float(quot))
    return best


def _cycle_chart(mf: ModelFiber, t1: float, t2: float,
                 offset: float = 0.0) -> np.ndarray:
    """Chart point of the cycle at parameters (t1, t2), Im x shifted by offset."""
    c = mf.cycle
    dx2 = (c.m2 / c.m1) * (mf.params.k / TWO_PI) * mf.ell / TWO_PI
    return np.array([mf.ell, -t2, t1, dx2 * t2 + offset])


def _cycle_tangents(mf: ModelFiber) -> tuple[np.ndarray, np.ndarray]:
    c = mf.cycle
    dx2 = (c.m2 / c.m1) * (mf.params.k / TWO_PI) * mf.ell / TWO_PI
    return (np.array([0.0, 0.0, 1.0, 0.0]),
            np.array([0.0, -1.0, 0.0, dx2]))


def check_special(mf: ModelFiber, grid: Grid2 | None = None,
                  offset: float = 0.0) -> tuple[float, float]:
    """(sup |omega restriction|, sup calibration-phase defect) over the cycle.

    The phase defect is |Im(e^{-i pi/2} Omega)| restricted, which vanishes
    exactly for kappa = 1; for the Lagrangian condition the cycle must
    satisfy 2*b0/k = -m2/m1.
    """
    if grid is None:
        grid = Grid2(32, 32, box2=(0.0, TWO_PI * mf.cycle.m1))
    p = mf.params
    t_a, t_b = _cycle_tangents(mf)
    sup_omega = 0.0
    sup_phase = 0.0
    for t1 in grid.nodes1():
        for t2 in grid.nodes2():
            q = _cycle_chart(mf, t1, t2, offset)
            m = sf.sf_form_chart(p, q)
            sup_omega = max(sup_omega, abs(float(t_a @ m @ t_b)))
            z = cmath.exp(-(q[0] + 1j * q[1]))
            om = p.kappa_at(z) * wedge_11(sf._DY, sf._DX)
            val = complex(t_a @ om @ t_b)
            sup_phase = max(sup_phase, abs((-1j * val).imag))
    return sup_omega, sup_phase


@dataclass(frozen=True)
class SecondFF:
    """Second-fundamental-form data of the embedded fiber at one point."""

    pi_norm: float
    h_norm: float
    gauss_residual: float


def second_fundamental_form(mf: ModelFiber, t1: float = 0.2, t2: float = 0.7,
                            offset: float = 0.0, h: float | None = None) -> SecondFF:
    """|II|, |H| and a Gauss-equation residual at a point of the cycle.

    Gauss: K_intrinsic = K_ambient(T1,T2) + (<II_11,II_22> - |II_12|^2)
    after normalizing by the induced area element.
    """
    p = mf.params
    q = _cycle_chart(mf, t1, t2, offset)
    if h is None:
        h = 2e-3 * min(1.0, 10.0 / max(mf.ell, 1.0))

    def gf(qq):
        return sf.riemannian_metric_chart(p, qq)

    tan = np.stack(_cycle_tangents(mf), axis=1)  # 4 x 2
    g = gf(q)
    hin = tan.T @ g @ tan
    hinv = np.linalg.inv(hin)
    proj_t = tan @ hinv @ tan.T @ g
    proj_n = np.eye(4) - proj_t

    gam = sf.christoffel_fd(gf, q, h)
    # nabla_{T_i} T_j, coordinate-constant tangent components
    nab = np.einsum("ci,bj,acb->aij", tan, tan, gam)
    second = np.einsum("na,aij->nij", proj_n, nab)

    pi_sq = np.einsum("nij,mkl,ik,jl,nm->", second, second, hinv, hinv, g)
    mean = np.einsum("nij,ij->n", second, hinv)
    h_sq = float(mean @ g @ mean)
    if pi_sq < -1e-10 or h_sq < -1e-10:
        raise NumericalError("negative squared norm in second fundamental form")

    riem, _ = sf.riemann_fd(gf, q, h)
    low = np.einsum("ae,ebcd->abcd", g, riem)
    area_sq = float(np.linalg.det(hin))
    t1v, t2v = tan[:, 0], tan[:, 1]
    k_amb = float(np.einsum("abcd,a,b,c,d->", low, t1v, t2v, t1v, t2v)) / area_sq
    pi_term = (float(second[:, 0, 0] @ g @ second[:, 1, 1])
               - float(second[:, 0, 1] @ g @ second[:, 0, 1])) / area_sq

    def induced(tt):
        qq = _cycle_chart(mf, tt[0], tt[1], offset)
        tanq = np.stack(_cycle_tangents(mf), axis=1)
        return tanq.T @ gf(qq) @ tanq

    riem2, h2 = sf.riemann_fd(induced, np.array([t1, t2]), h)
    low2 = np.einsum("ae,ebcd->abcd", h2, riem2)
    k_int = float(low2[0, 1, 0, 1]) / float(np.linalg.det(h2))

    gauss = abs(k_int - (k_amb + pi_term))
    return SecondFF(pi_norm=math.sqrt(max(pi_sq, 0.0)),
                    h_norm=math.sqrt(max(h_sq, 0.0)),
                    gauss_residual=gauss)


def pi_decay(p: sf.ModelParams, cycle: fib.CycleSpec,
             ell_samples: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, DecayFit]:
    """|II| samples against distance r, with a power-law fit (expect ~ -1)."""
    if ell_samples is None:
        ell_samples = np.linspace(5.0, 40.0, 10)
    ells = np.asarray(ell_samples, dtype=float)
    vals = np.array([
        second_fundamental_form(ModelFiber(p, cycle, ell)).pi_norm for ell in ells
    ])
    r = np.array([sf.distance_r(p, ell) for ell in ells])
    fit = fit_decay(r, vals, model="power")
    return r, vals, fit


def ball_area(l1: float, l2: float, delta: float) -> float:
    """Area of a metric ball in the flat torus with side lengths l1 >= l2.

    Valid while delta <= l1/2, so wrap-around happens at most in the short
    direction.
    """
    if l1 < l2:
        l1, l2 = l2, l1
    if delta <= 0:
        raise ValidationError("delta must be positive")
    if delta > 0.5 * l1:
        raise ValidationError("ball wraps in both directions; shrink delta")
    if delta <= 0.5 * l2:
        return math.pi * delta ** 2
    ustar = math.sqrt(delta ** 2 - 0.25 * l2 ** 2)
    return math.pi * delta ** 2 + ustar * l2 - 2.0 * delta ** 2 * math.asin(ustar / delta)


def noncollapse_check(geom: FiberGeometry, delta: float) -> tuple[float, float, bool]:
    """(ball volume, sqrt(2)*delta^2 bound, bound satisfied) at scale delta.

    The fiber torus is homogeneous, so the base point does not matter.
    Requires delta at most the non-collapsing scale sqrt(B).
    """
    if not (0.0 < delta <= geom.noncollapse_scale):
        raise ValidationError("delta must lie in (0, sqrt(B)]")
    l_theta = TWO_PI * math.sqrt(geom.a_coef)
    l_x = math.sqrt(geom.b_coef)
    vol = ball_area(l_theta, l_x, delta)
    bound = geom.noncollapse_kappa * delta ** 2
    return vol, bound, vol >= bound * (1.0 - 1e-12)
