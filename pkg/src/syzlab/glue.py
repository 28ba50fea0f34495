"""Gluing a rescaled semi-flat end onto a reference metric over a disc.

All corrections here are radial in rho = |z| and enter through the
dz ^ dzbar coefficient only.  The reference form omega_0 is the semi-flat
form itself (alpha = 1) on the modeled annulus; the rescaled end is

    omega_sf(alpha) = omega_0 + (alpha - 1) i ddbar u,
    u = (k / 3 pi eps) (-log rho)^3,

whose square is alpha * Omega ^ Omegabar exactly.  The interpolation uses
a cutoff psi, a positivity reserve t * beta and the harmonic matching of u
on the gluing annulus; the total mass integral is affine in alpha, so the
Calabi-Yau scale is found as the unique sign change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import semiflat as sfm
from .errors import NumericalError, ValidationError
from .numerics import find_root

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Cutoffs:
    """Quintic-smoothstep radial cutoffs for the gluing annulus.

    psi is 1 on rho <= r+s and 0 on rho >= r+2s; beta is supported on
    (r, r+3s) and equals 1 on [r+s, r+2s].
    """

    r: float
    s: float

    def _step(self, rho: float, lo: float, hi: float) -> tuple[float, float, float]:
        """Smoothstep from 1 at rho <= lo to 0 at rho >= hi, with d/drho, d2/drho2."""
        big = -math.log(rho)
        b_lo = -math.log(lo)
        b_hi = -math.log(hi)
        # lam runs 0 -> 1 as big runs b_hi -> b_lo (rho decreasing)
        denom = b_lo - b_hi
        lam = (big - b_hi) / denom
        if lam >= 1.0:
            return 1.0, 0.0, 0.0
        if lam <= 0.0:
            return 0.0, 0.0, 0.0
        val = lam ** 3 * (10.0 - 15.0 * lam + 6.0 * lam ** 2)
        d1 = 30.0 * lam ** 2 * (1.0 - lam) ** 2
        d2 = 60.0 * lam * (1.0 - 3.0 * lam + 2.0 * lam ** 2)
        # chain rule through lam(big(rho)); d big/d rho = -1/rho
        dlam = -1.0 / (denom * rho)
        ddlam = 1.0 / (denom * rho ** 2)
        return val, d1 * dlam, d2 * dlam ** 2 + d1 * ddlam

    def psi(self, rho: float) -> tuple[float, float, float]:
        """(psi, psi', psi'') in rho."""
        return self._step(rho, self.r + self.s, self.r + 2.0 * self.s)

    def beta(self, rho: float) -> float:
        """Scalar coefficient of beta in [0, 1] (times i dz ^ dzbar)."""
        if rho <= self.r or rho >= self.r + 3.0 * self.s:
            return 0.0
        if rho < self.r + self.s:
            # ramp 0 -> 1 as rho goes r -> r+s
            val, _, _ = self._step(rho, self.r, self.r + self.s)
            return 1.0 - val
        down, _, _ = self._step(rho, self.r + 2.0 * self.s, self.r + 3.0 * self.s)
        return down


@dataclass(frozen=True)
class GlueConfig:
    """Gluing data on the annulus rho_min < |z| < rho_max.

    c0 is the derivative-bound constant of the cutoffs, c0_rs the gluing
    constant C(r, s); v0c and vomc are the contributions of
    int omega_0^2 and int Omega ^ Omegabar outside the modeled region.
    The alpha used here squares the main-text scale: pairings of the glued
    family keep the fiber pairing eps fixed for every alpha.
    """

    params: sfm.ModelParams
    r: float
    s: float
    rho_min: float
    rho_max: float
    v0c: float
    vomc: float
    c0: float = 8.0
    c0_rs: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.rho_min < self.r):
            raise ValidationError("need 0 < rho_min < r")
        if self.s <= 0 or not (self.r + 3.0 * self.s < self.rho_max < 1.0):
            raise ValidationError("need r + 3s < rho_max < 1")
        if self.params.alpha != 1.0:
            raise ValidationError("reference params must have alpha = 1")
        if self.v0c <= 0 or self.vomc <= 0:
            raise ValidationError("external volume contributions must be positive")

    @property
    def cutoffs(self) -> Cutoffs:
        return Cutoffs(self.r, self.s)


def potential_u(cfg: GlueConfig, rho: float, allow_ode: bool = False) -> float:
    """Radial potential with i ddbar u equal to the base dz^dzbar term.

    Closed form (k / 3 pi eps)(-log rho)^3 for kappa = 1; a radial ODE
    fallback (|kappa| sampled on the positive real ray) handles other
    kappa when explicitly allowed.
    """
    if not (0.0 < rho < 1.0):
        raise ValidationError("rho must satisfy 0 < rho < 1")
    p = cfg.params
    if p.kappa_is_one():
        return (p.k / (3.0 * math.pi * p.eps)) * (-math.log(rho)) ** 3
    if not allow_ode:
        raise ValidationError("non-trivial kappa needs allow_ode=True")
    return _potential_ode(cfg, rho)


def _potential_ode(cfg: GlueConfig, rho: float) -> float:
    from scipy.integrate import solve_ivp

    p = cfg.params
    l0 = -math.log(cfg.rho_max)
    target = -math.log(rho)

    def rhs(big, y):
        kap2 = abs(p.kappa_at(math.exp(-big))) ** 2
        return [y[1], 2.0 * p.k * big * kap2 / (math.pi * p.eps)]

    u0 = (p.k / (3.0 * math.pi * p.eps)) * l0 ** 3
    du0 = (p.k / (math.pi * p.eps)) * l0 ** 2
    sol = solve_ivp(rhs, (l0, target), [u0, du0], rtol=1e-10, atol=1e-12,
                    dense_output=True)
    if not sol.success:
        raise NumericalError("radial potential ODE failed")
    return float(sol.sol(target)[0])


def u_zz(cfg: GlueConfig, rho: float) -> float:
    """dz dzbar second derivative of the potential, k L / (2 pi eps rho^2)."""
    p = cfg.params
    kap2 = abs(p.kappa_at(rho)) ** 2
    return kap2 * p.k * (-math.log(rho)) / (TWO_PI * p.eps * rho ** 2)


def u_prime(cfg: GlueConfig, rho: float) -> float:
    p = cfg.params
    return -(p.k / (math.pi * p.eps)) * (-math.log(rho)) ** 2 / rho


def sup_u_zz(cfg: GlueConfig) -> float:
    """Sup of u_zzbar over the gluing annulus [r, r+3s] (attained at r)."""
    return u_zz(cfg, cfg.r)


def harmonic_match(cfg: GlueConfig) -> tuple[float, float]:
    """Coefficients (A, B) of the radial harmonic v = A + B*(-log rho)
    matching u at rho = r and rho = r + 3s."""
    l1 = -math.log(cfg.r)
    l2 = -math.log(cfg.r + 3.0 * cfg.s)
    u1 = potential_u(cfg, cfg.r)
    u2 = potential_u(cfg, cfg.r + 3.0 * cfg.s)
    b = (u1 - u2) / (l1 - l2)
    a = u1 - b * l1
    return a, b


def _v_and_prime(cfg: GlueConfig, rho: float) -> tuple[float, float]:
    a, b = harmonic_match(cfg)
    return a + b * (-math.log(rho)), -b / rho


@dataclass(frozen=True)
class Claim2Scan:
    """Fitted gluing constant sup(s^-2|u-v| + s^-1|(u-v)_z|) / sup u_zzbar."""

    lhs_sup: float
    rhs_sup: float
    fitted_c0: float


def claim2_scan(cfg: GlueConfig, n: int = 400) -> Claim2Scan:
    lhs = 0.0
    for rho in np.linspace(cfg.r + cfg.s, cfg.r + 2.0 * cfg.s, n):
        v, vp = _v_and_prime(cfg, rho)
        du = potential_u(cfg, rho) - v
        dup = u_prime(cfg, rho) - vp
        lhs = max(lhs, abs(du) / cfg.s ** 2 + 0.5 * abs(dup) / cfg.s)
    rhs = 0.0
    for rho in np.linspace(cfg.r, cfg.r + 3.0 * cfg.s, n):
        rhs = max(rhs, u_zz(cfg, rho))
    return Claim2Scan(lhs_sup=lhs, rhs_sup=rhs, fitted_c0=lhs / rhs)


def q_coefficient(cfg: GlueConfig, alpha: float, t: float, rho: float) -> float:
    """dz^dzbar coefficient added to omega_0 by the glued family at rho."""
    if not (cfg.rho_min <= rho <= cfg.rho_max):
        raise ValidationError("rho outside the modeled annulus")
    if rho <= cfg.r:
        return (alpha - 1.0) * u_zz(cfg, rho)
    cut = cfg.cutoffs
    psi, psi_p, psi_pp = cut.psi(rho)
    if psi == 0.0:
        return t * cut.beta(rho)
    v, vp = _v_and_prime(cfg, rho)
    du = potential_u(cfg, rho) - v
    dup = u_prime(cfg, rho) - vp
    psi_zz = 0.25 * (psi_pp + psi_p / rho)
    bracket = psi_zz * du + psi * u_zz(cfg, rho) + 0.5 * psi_p * dup
    return t * cut.beta(rho) + (alpha - 1.0) * bracket


def glued_form_chart(cfg: GlueConfig, alpha: float, t: float, q: np.ndarray) -> np.ndarray:
    """Glued 2-form at a chart point (ell, theta, x1, x2)."""
    rho = math.exp(-float(q[0]))
    m = sfm.sf_form_chart(cfg.params, q)
    qc = q_coefficient(cfg, alpha, t, rho)
    # i dz ^ dzbar = 2 |z|^2 dl ^ dtheta
    m = m.copy()
    m[0, 1] += 2.0 * rho ** 2 * qc
    m[1, 0] -= 2.0 * rho ** 2 * qc
    return m


def cutoff_bounds_ok(cfg: GlueConfig, n: int = 400) -> bool:
    """Derivative bounds s|psi_z| + s^2 |psi_zzbar| < c0 along the annulus."""
    cut = cfg.cutoffs
    worst = 0.0
    for rho in np.linspace(cfg.r + cfg.s, cfg.r + 2.0 * cfg.s, n):
        psi, psi_p, psi_pp = cut.psi(rho)
        psi_z = 0.5 * abs(psi_p)
        psi_zz = 0.25 * abs(psi_pp + psi_p / rho)
        worst = max(worst, cfg.s * psi_z + cfg.s ** 2 * psi_zz)
    return worst < cfg.c0


def required_t(cfg: GlueConfig, alpha: float, t_prime: float = 1.0) -> float:
    """Positivity reserve C(r,s) t' + C0 |alpha - 1| sup u_zzbar."""
    return cfg.c0_rs * t_prime + cfg.c0 * abs(alpha - 1.0) * sup_u_zz(cfg)


def positivity_scan(cfg: GlueConfig, alpha: float, t: float,
                    n: int = 200,
                    window: tuple[float, float] | None = None) -> float:
    """Minimum eigenvalue margin of omega_alpha(t) - (omega_0 + psi i ddbar u_alpha)/2.

    window restricts the radial scan (defaults to the whole modeled
    annulus).  Raises a validation error when t is at or below the
    reserve threshold.
    """
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    t_req = required_t(cfg, alpha, 0.0)
    if t <= t_req:
        raise ValidationError(
            f"t = {t} too small for positivity; need t > {t_req:.6g}")
    lo, hi = window if window is not None else (cfg.rho_min, cfg.rho_max)
    if not (cfg.rho_min <= lo < hi <= cfg.rho_max):
        raise ValidationError("window must lie inside the modeled annulus")
    p = cfg.params
    worst = math.inf
    for rho in np.geomspace(lo * 1.0001, hi * 0.9999, n):
        ell = -math.log(rho)
        qc = q_coefficient(cfg, alpha, t, rho)
        psi, _, _ = cfg.cutoffs.psi(rho) if rho > cfg.r else (1.0, 0.0, 0.0)
        half_term = 0.5 * psi * (alpha - 1.0) * u_zz(cfg, rho)
        for x2 in (0.0, 0.35, 0.8):
            cand = 0.5 * _hermitian_xy(p, ell, x2)
            cand[1, 1] += (qc - half_term) * rho ** 2
            eig = np.linalg.eigvalsh(cand)[0]
            worst = min(worst, float(eig))
    return worst


def _hermitian_xy(p: sfm.ModelParams, ell: float, x2: float) -> np.ndarray:
    w = sfm.w_factor(p, ell)
    gam = sfm.gamma(p, complex(0.0, x2), complex(ell, 0.0))
    h_xx = w * p.eps / 2.0
    h_xy = -h_xx * np.conj(gam)
    h_yy = 1.0 / (p.eps * w) + h_xx * abs(gam) ** 2
    return np.array([[h_xx, h_xy], [np.conj(h_xy), h_yy]], dtype=complex)


def mass_integral(cfg: GlueConfig, alpha: float, t: float, n: int = 64) -> float:
    """I(alpha, t) = int omega_alpha(t)^2 - alpha Omega ^ Omegabar.

    The integrand vanishes identically below rho = r where the glued form
    is the exactly-solving rescaled semi-flat metric; the rest is a radial
    integral plus the external constants v0c - alpha * vomc.
    """
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    p = cfg.params
    nodes, weights = np.polynomial.legendre.leggauss(n)
    bounds = sorted({cfg.r, cfg.r + cfg.s, cfg.r + 2.0 * cfg.s,
                     cfg.r + 3.0 * cfg.s, cfg.rho_max})
    total = 0.0
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        # integrate in ell over the segment
        l_lo, l_hi = -math.log(hi), -math.log(lo)
        mid = 0.5 * (l_lo + l_hi)
        half = 0.5 * (l_hi - l_lo)
        for xnode, wt in zip(nodes, weights):
            ell = mid + half * xnode
            rho = math.exp(-ell)
            qc = q_coefficient(cfg, alpha, t, rho)
            w = sfm.w_factor(p, ell)
            c_val = 4.0 * (1.0 - alpha) + 4.0 * rho ** 2 * w * p.eps * qc
            total += wt * half * c_val * p.k * ell
    return total + cfg.v0c - alpha * cfg.vomc


@dataclass(frozen=True)
class AlphaSolve:
    """Root of the mass integral with the alpha-dependent reserve t(alpha)."""

    alpha_star: float
    t_at_root: float
    bracket: tuple[float, float]
    values: tuple[float, float]


def solve_alpha(cfg: GlueConfig, t_prime: float = 1.0, n: int = 64) -> AlphaSolve:
    def t_of(alpha):
        return required_t(cfg, alpha, t_prime)

    def f(alpha):
        return mass_integral(cfg, alpha, t_of(alpha), n=n)

    lo = 1e-3
    f_lo = f(lo)
    if f_lo <= 0:
        raise ValidationError("mass integral not positive at small alpha; "
                              "check v0c/vomc")
    hi = lo
    f_hi = f_lo
    for _ in range(40):
        hi *= 2.0
        f_hi = f(hi)
        if f_hi < 0:
            break
    else:
        raise NumericalError("no sign change found for the mass integral")
    a = hi / 2.0
    fa = f(a)
    if fa <= 0:
        a, fa = lo, f_lo
    root = find_root(f, a, hi)
    return AlphaSolve(alpha_star=root, t_at_root=t_of(root),
                      bracket=(a, hi), values=(fa, f_hi))
