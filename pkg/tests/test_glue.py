import math

import numpy as np
import pytest

from syzlab import glue
from syzlab import semiflat as sfm
from syzlab.errors import NumericalError, ValidationError


def make_cfg(r=0.1, s=0.02, v0c=1.0, vomc=0.2, kappa=None, **kw):
    params = sfm.ModelParams(k=1, eps=1.0, kappa=kappa or {})
    base = dict(params=params, r=r, s=s, rho_min=0.01, rho_max=0.9,
                v0c=v0c, vomc=vomc)
    base.update(kw)
    return glue.GlueConfig(**base)


ROOT_CFG = dict(r=0.2, s=0.1, v0c=40.0, vomc=62.0)


class TestConfig:
    def test_rho_min_must_precede_r(self):
        with pytest.raises(ValidationError):
            make_cfg(rho_min=0.5)

    def test_annulus_must_fit(self):
        with pytest.raises(ValidationError):
            make_cfg(r=0.3, s=0.25)

    def test_reference_alpha_must_be_one(self):
        p = sfm.ModelParams(k=1, alpha=2.0)
        with pytest.raises(ValidationError):
            glue.GlueConfig(params=p, r=0.1, s=0.02, rho_min=0.01,
                            rho_max=0.9, v0c=1.0, vomc=0.2)

    def test_volumes_positive(self):
        with pytest.raises(ValidationError):
            make_cfg(vomc=-1.0)


class TestPotential:
    def test_closed_form_value(self):
        # u(1/e) = 1/(3 pi) for k = 1, eps = 1
        cfg = make_cfg()
        assert glue.potential_u(cfg, math.exp(-1.0)) == pytest.approx(
            1.0 / (3.0 * math.pi), rel=1e-14)

    def test_rho_domain(self):
        cfg = make_cfg()
        for rho in (0.0, 1.0, 1.5, -0.2):
            with pytest.raises(ValidationError):
                glue.potential_u(cfg, rho)

    def test_u_positive_and_growing_inward(self):
        cfg = make_cfg()
        rhos = np.geomspace(0.02, 0.8, 12)
        vals = [glue.potential_u(cfg, r) for r in rhos]
        assert all(v > 0 for v in vals)
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_u_prime_matches_fd(self):
        cfg = make_cfg()
        for rho in (0.05, 0.15, 0.4):
            h = 1e-4 * rho
            fd = (glue.potential_u(cfg, rho + h)
                  - glue.potential_u(cfg, rho - h)) / (2.0 * h)
            assert glue.u_prime(cfg, rho) == pytest.approx(fd, rel=1e-7)

    def test_u_zz_matches_radial_laplacian(self):
        # u_zzbar = (u'' + u'/rho) / 4 for radial u
        cfg = make_cfg()
        for rho in (0.05, 0.15, 0.4):
            h = 1e-3 * rho
            u = [glue.potential_u(cfg, rho + j * h) for j in (-2, -1, 0, 1, 2)]
            upp = (-u[0] + 16 * u[1] - 30 * u[2] + 16 * u[3] - u[4]) / (12 * h * h)
            up = (u[0] - 8 * u[1] + 8 * u[3] - u[4]) / (12 * h)
            lap = 0.25 * (upp + up / rho)
            assert glue.u_zz(cfg, rho) == pytest.approx(lap, rel=1e-8)

    def test_sup_attained_at_inner_radius(self):
        cfg = make_cfg()
        sup = glue.sup_u_zz(cfg)
        for rho in np.linspace(cfg.r, cfg.r + 3 * cfg.s, 50):
            assert glue.u_zz(cfg, rho) <= sup * (1 + 1e-12)

    def test_ode_requires_opt_in(self):
        cfg = make_cfg(kappa={0: 1.0, 1: 0.5})
        with pytest.raises(ValidationError):
            glue.potential_u(cfg, 0.3)

    def test_ode_agrees_with_closed_form(self):
        # a vanishingly small perturbation routes through the ODE solver
        cfg = make_cfg(kappa={0: 1.0, 1: 1e-14})
        ref = make_cfg()
        for rho in (0.1, 0.3):
            assert glue.potential_u(cfg, rho, allow_ode=True) == pytest.approx(
                glue.potential_u(ref, rho), rel=1e-7)

    def test_ode_nontrivial_kappa_larger(self):
        # |1 + rho|^2 > 1 on the positive ray, so the potential grows
        cfg = make_cfg(kappa={0: 1.0, 1: 1.0})
        ref = make_cfg()
        val = glue.potential_u(cfg, 0.3, allow_ode=True)
        assert val > glue.potential_u(ref, 0.3)


class TestCutoffs:
    def test_psi_plateaus(self):
        cut = glue.Cutoffs(r=0.1, s=0.02)
        assert cut.psi(0.11) == (1.0, 0.0, 0.0)
        assert cut.psi(0.15) == (0.0, 0.0, 0.0)
        mid = cut.psi(0.13)[0]
        assert 0.0 < mid < 1.0

    def test_beta_support_and_plateau(self):
        cut = glue.Cutoffs(r=0.1, s=0.02)
        assert cut.beta(0.1) == 0.0
        assert cut.beta(0.161) == 0.0
        assert cut.beta(0.12) == 1.0
        assert cut.beta(0.14) == 1.0
        assert 0.0 < cut.beta(0.11) < 1.0
        assert 0.0 < cut.beta(0.15) < 1.0

    def test_derivative_bounds(self):
        assert glue.cutoff_bounds_ok(make_cfg())
        assert glue.cutoff_bounds_ok(make_cfg(**ROOT_CFG))


class TestHarmonicMatch:
    def test_endpoints_interpolated(self):
        cfg = make_cfg()
        a, b = glue.harmonic_match(cfg)
        for rho in (cfg.r, cfg.r + 3.0 * cfg.s):
            v = a + b * (-math.log(rho))
            assert v == pytest.approx(glue.potential_u(cfg, rho), rel=1e-13)

    def test_slope_positive(self):
        # u increases toward the puncture, so the matching slope does too
        _, b = glue.harmonic_match(make_cfg())
        assert b > 0


class TestClaim2:
    def test_constant_across_scales(self):
        c0s = []
        for r, s in ((0.1, 0.02), (0.05, 0.01), (0.2, 0.04)):
            scan = glue.claim2_scan(make_cfg(r=r, s=s))
            assert scan.lhs_sup > 0 and scan.rhs_sup > 0
            c0s.append(scan.fitted_c0)
        assert max(c0s) / min(c0s) < 2.0


class TestGluedForm:
    def test_q_outside_annulus_rejected(self):
        cfg = make_cfg()
        with pytest.raises(ValidationError):
            glue.q_coefficient(cfg, 1.0, 2.0, 0.005)

    def test_inner_region_is_rescale_correction(self):
        cfg = make_cfg()
        rho = 0.05
        expect = (2.0 - 1.0) * glue.u_zz(cfg, rho)
        assert glue.q_coefficient(cfg, 2.0, 3.0, rho) == pytest.approx(expect)

    def test_outer_region_is_beta_bump(self):
        cfg = make_cfg()
        # psi vanishes past r + 2s, leaving only the beta bump
        rho = 0.145
        expect = 3.0 * cfg.cutoffs.beta(rho)
        assert 0.0 < expect < 3.0
        assert glue.q_coefficient(cfg, 2.0, 3.0, rho) == pytest.approx(expect)
        assert glue.q_coefficient(cfg, 2.0, 3.0, 0.5) == 0.0

    def test_alpha_one_kills_correction(self):
        cfg = make_cfg()
        for rho in (0.05, 0.11, 0.125, 0.145, 0.5):
            beta_only = 3.0 * cfg.cutoffs.beta(rho)
            assert glue.q_coefficient(cfg, 1.0, 3.0, rho) == pytest.approx(
                beta_only)

    def test_chart_form_antisymmetric_and_matches_base(self):
        cfg = make_cfg()
        q = np.array([-math.log(0.5), 0.3, 0.1, 0.7])
        m = glue.glued_form_chart(cfg, 2.0, 3.0, q)
        assert np.allclose(m, -m.T)
        assert np.allclose(m, sfm.sf_form_chart(cfg.params, q))
        q_in = np.array([-math.log(0.05), 0.3, 0.1, 0.7])
        m_in = glue.glued_form_chart(cfg, 2.0, 3.0, q_in)
        base = sfm.sf_form_chart(cfg.params, q_in)
        delta = 2.0 * 0.05 ** 2 * glue.u_zz(cfg, 0.05)
        assert m_in[0, 1] - base[0, 1] == pytest.approx(delta)


class TestPositivity:
    def test_reserve_threshold_enforced(self):
        cfg = make_cfg()
        t_req = glue.required_t(cfg, 2.0, 0.0)
        with pytest.raises(ValidationError, match="need t >"):
            glue.positivity_scan(cfg, 2.0, 0.5 * t_req)

    def test_alpha_must_be_positive(self):
        with pytest.raises(ValidationError):
            glue.positivity_scan(make_cfg(), -1.0, 100.0)

    def test_margin_positive_near_reference(self):
        cfg = make_cfg()
        t = 1.2 * glue.required_t(cfg, 1.1) + 1.0
        assert glue.positivity_scan(cfg, 1.1, t) > 0

    def test_window_validation(self):
        cfg = make_cfg()
        with pytest.raises(ValidationError):
            glue.positivity_scan(cfg, 1.0, 5.0, window=(0.001, 0.5))

    def test_margin_monotone_in_t_on_bump(self):
        cfg = make_cfg()
        t = 1.2 * glue.required_t(cfg, 1.1) + 1.0
        win = (cfg.r + cfg.s, cfg.r + 2.0 * cfg.s)
        m1 = glue.positivity_scan(cfg, 1.1, t, window=win)
        m2 = glue.positivity_scan(cfg, 1.1, 10.0 * t, window=win)
        assert m2 > m1


class TestMassIntegral:
    def test_sign_change_over_alpha(self):
        cfg = make_cfg()
        assert glue.mass_integral(cfg, 0.01, 2.0) > 0
        assert glue.mass_integral(cfg, 1e4, 2.0) < 0

    def test_affine_in_alpha_at_fixed_t(self):
        cfg = make_cfg()
        vals = [glue.mass_integral(cfg, a, 2.0) for a in (1.0, 2.0, 3.0)]
        second = vals[0] - 2.0 * vals[1] + vals[2]
        scale = max(abs(v) for v in vals)
        assert abs(second) <= 1e-9 * scale

    def test_alpha_must_be_positive(self):
        with pytest.raises(ValidationError):
            glue.mass_integral(make_cfg(), 0.0, 2.0)


class TestSolveAlpha:
    def test_root_found_and_bracketed(self):
        cfg = make_cfg(**ROOT_CFG)
        sol = glue.solve_alpha(cfg)
        lo, hi = sol.bracket
        assert lo < sol.alpha_star < hi
        assert sol.values[0] > 0 > sol.values[1]
        residual = glue.mass_integral(cfg, sol.alpha_star, sol.t_at_root)
        assert abs(residual) < 1e-9 * cfg.v0c
        assert sol.t_at_root == pytest.approx(
            glue.required_t(cfg, sol.alpha_star))

    def test_root_stable_under_refinement(self):
        cfg = make_cfg(**ROOT_CFG)
        coarse = glue.solve_alpha(cfg, n=64).alpha_star
        fine = glue.solve_alpha(cfg, n=128).alpha_star
        assert abs(coarse - fine) <= 1e-6

    def test_positivity_at_root(self):
        cfg = make_cfg(**ROOT_CFG)
        sol = glue.solve_alpha(cfg)
        assert glue.positivity_scan(cfg, sol.alpha_star, sol.t_at_root) > 0

    def test_no_root_reported(self):
        # reserve slope keeps the integral positive for all alpha here
        with pytest.raises(NumericalError):
            glue.solve_alpha(make_cfg(v0c=1.0, vomc=0.2, r=0.1, s=0.02))
