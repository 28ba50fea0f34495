import math
from fractions import Fraction

import numpy as np
import pytest

from syzlab import calabi as cal
from syzlab import semiflat as sf
from syzlab.errors import ValidationError
from syzlab.forms import top_coeff, top_coeff_pair

TWO_PI = 2.0 * math.pi

MODELS = [
    cal.CalabiModel(k=1, tau=1j, re_exact=Fraction(0), abs2_exact=Fraction(1)),
    cal.CalabiModel(k=3, tau=complex(-0.5, math.sqrt(3) / 2),
                    re_exact=Fraction(-1, 2), abs2_exact=Fraction(1)),
    cal.CalabiModel(k=2, tau=complex(-0.5, 2.0),
                    re_exact=Fraction(-1, 2), abs2_exact=Fraction(17, 4)),
]


def _random_points(n, seed=11):
    rng = np.random.default_rng(seed)
    return [cal.CalabiPoint(ell=rng.uniform(0.5, 4.0),
                            psi=rng.uniform(0.0, TWO_PI),
                            xi1=rng.uniform(-0.5, 0.5),
                            xi2=rng.uniform(-0.5, 0.5)) for _ in range(n)]


class TestHkTriple:
    @pytest.mark.parametrize("model", MODELS)
    def test_orthogonality_and_squares(self, model):
        for pt in _random_points(20):
            oi, oj, ok = cal.hk_triple(model, pt)
            want = -2.0 * pt.ell * model.c_tau ** 2
            for a, b in ((oi, oj), (oi, ok), (oj, ok)):
                assert abs(top_coeff_pair(a, b)) <= 1e-12
            for om in (oi, oj, ok):
                assert top_coeff(om) == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("model", MODELS)
    def test_omega_j_squared_vs_holomorphic_form(self, model):
        for pt in _random_points(10):
            oj = cal.hk_triple(model, pt)[1]
            omj = cal.holomorphic_form_j(model, pt)
            lhs = top_coeff(oj)
            rhs = 0.5 * top_coeff_pair(omj.real, omj.real) \
                + 0.5 * top_coeff_pair(omj.imag, omj.imag)
            assert lhs == pytest.approx(rhs, rel=1e-12)

    @pytest.mark.parametrize("model", MODELS)
    def test_closedness_second_order(self, model):
        pt = cal.CalabiPoint(ell=1.4, psi=0.7, xi1=0.21, xi2=-0.35)
        d1 = cal.closedness_defect(model, pt, h=1e-3)
        d2 = cal.closedness_defect(model, pt, h=5e-4)
        assert d1 <= 1e-8
        # refinement converges at least quadratically or is at roundoff
        assert d2 <= max(0.3 * d1, 1e-11)


class TestGibbonsHawking:
    @pytest.mark.parametrize("model", MODELS)
    def test_metric_matches_ansatz(self, model):
        for pt in _random_points(10):
            g = cal.gibbons_hawking_metric(model, pt)
            want = cal.gibbons_hawking_closed_form(model, pt)
            assert np.max(np.abs(g - want)) <= 1e-12

    def test_perturbation_detected(self):
        model = MODELS[0]
        pt = cal.CalabiPoint(ell=1.3, psi=0.2, xi1=0.1, xi2=0.4)
        g = cal.gibbons_hawking_metric(model, pt)
        bad = cal.gibbons_hawking_closed_form(model, pt)
        bad = bad + np.diag([0.01, 0, 0, 0])
        assert np.max(np.abs(g - bad)) > 1e-3


class TestRotate:
    def test_square_torus(self):
        rot = cal.rotate(MODELS[0])
        assert rot.alpha == pytest.approx(math.sqrt(math.pi))
        assert rot.eps == pytest.approx(TWO_PI * math.sqrt(TWO_PI))
        assert rot.b0 == 0.0
        assert rot.sf_class == cal.STANDARD

    def test_hexagonal_torus_quasi_regular(self):
        rot = cal.rotate(MODELS[1])
        assert rot.b0 == pytest.approx(3.0 / 4.0)  # k=3: b0 = k/4
        assert rot.sf_class == cal.QUASI_REGULAR
        assert rot.winding == (2, -1)

    def test_irregular_sentinel(self):
        model = cal.CalabiModel(k=2, tau=complex(-0.3, 1.1),
                                ratio_irrational=True)
        rot = cal.rotate(model)
        assert rot.sf_class == cal.IRREGULAR
        assert rot.exact  # the sentinel is an exact declaration

    def test_float_mode_is_heuristic(self):
        # -Re tau/|tau|^2 = 3/13 here; float mode finds it but stays flagged
        rot = cal.rotate(cal.CalabiModel(k=2, tau=complex(-0.3, 1.1)))
        assert rot.sf_class == cal.QUASI_REGULAR
        assert not rot.exact

    def test_alpha_formula_sweep(self):
        for t in (1.0, 4.0, 16.0, 64.0):
            rot = cal.rotate(cal.CalabiModel(k=1, tau=1j * t))
            assert rot.alpha == pytest.approx(math.sqrt(math.pi / t))
            assert rot.eps == pytest.approx(
                TWO_PI * t * math.sqrt(TWO_PI / t))

    def test_fundamental_domain_enforced(self):
        with pytest.raises(ValidationError):
            cal.CalabiModel(k=1, tau=0.7 + 1.0j)
        with pytest.raises(ValidationError):
            cal.CalabiModel(k=1, tau=0.1 + 0.2j)


class TestVerifyRotation:
    def test_single_point_square(self):
        pt = cal.CalabiPoint(ell=2.0, psi=1.0, xi1=0.3, xi2=0.0)
        assert cal.verify_rotation(MODELS[0], pt) <= 1e-8

    def test_grid_hexagonal(self):
        model = cal.CalabiModel(k=1, tau=complex(-0.5, math.sqrt(3) / 2),
                                re_exact=Fraction(-1, 2),
                                abs2_exact=Fraction(1))
        worst = 0.0
        for ell in np.linspace(1.0, 3.0, 5):
            for xi1 in np.linspace(0.0, 0.6, 5):
                pt = cal.CalabiPoint(ell=ell, psi=0.8, xi1=xi1, xi2=0.25)
                worst = max(worst, cal.verify_rotation(model, pt))
        assert worst <= 1e-8

    def test_rotation_params_consistency(self):
        # fiber pairing of the rotated params reproduces the rotation eps
        rot = cal.rotate(MODELS[0])
        import syzlab.fibration as fib
        assert sf.pair_closed_form(rot.params, fib.FIBER) == pytest.approx(
            rot.eps)

    @pytest.mark.parametrize("model", MODELS)
    def test_lattice_relations(self, model):
        pt = cal.CalabiPoint(ell=1.7, psi=0.4, xi1=0.2, xi2=0.3)
        defects = cal.lattice_defects(model, pt)
        assert max(defects.values()) <= 1e-10


class TestMckFibers:
    def test_square_torus_fiber(self):
        sup_om, sup_im = cal.mck_restriction(MODELS[0], 0.0, 1.0)
        assert sup_om <= 1e-10 and sup_im <= 1e-10

    def test_general_fiber(self):
        model = cal.CalabiModel(k=2, tau=complex(-0.5, 1.0),
                                re_exact=Fraction(-1, 2),
                                abs2_exact=Fraction(5, 4))
        sup_om, sup_im = cal.mck_restriction(model, 0.4, 3.0)
        assert sup_om <= 1e-10 and sup_im <= 1e-10

    def test_wrong_slice_detected(self):
        sup_om, _ = cal.mck_restriction(MODELS[0], 0.4, 3.0, wrong_slice=True)
        assert sup_om > 1e-6


class TestReduceTau:
    def test_already_reduced(self):
        assert cal.reduce_tau(1j) == 1j

    def test_translation(self):
        assert cal.reduce_tau(2.3 + 1.5j) == pytest.approx(0.3 + 1.5j)

    def test_inversion(self):
        red = cal.reduce_tau(0.1 + 0.2j)
        assert abs(red) >= 1.0 - 1e-12
        assert -0.5 - 1e-12 <= red.real < 0.5 + 1e-12
