"""Command-line front end: JSON verification reports and CSV decay curves.

Exit codes: 0 all checks pass, 1 validation error, 2 numerical failure,
3 one or more checks failed.  Reports are deterministic for fixed flags;
the timestamp is suppressed with --no-timestamp.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import re
import sys
from fractions import Fraction

import numpy as np

from . import __version__, calabi, fibration as fib, glue, mirror
from . import semiflat as sfm, slag
from .errors import NumericalError, ValidationError

_RATIONAL = re.compile(r"^[+-]?\d+(/\d+)?$")
_COMPLEX = re.compile(r"^(?P<re>[+-]?[^+-]+)(?P<sign>[+-])(?P<im>[^+-]*)i$")


def parse_complex(text: str) -> tuple[complex, tuple[Fraction, Fraction] | None]:
    """Parse `a+bi` with decimal or rational (`p/q`) components.

    Returns (value, exact) where exact carries Fractions when both parts
    are written as integers or ratios (exact rational mode).
    """
    m = _COMPLEX.match(text.strip().replace(" ", ""))
    if not m:
        raise ValidationError(f"cannot parse complex literal {text!r}; use a+bi")
    re_s = m.group("re")
    im_s = m.group("im") or "1"
    if m.group("sign") == "-":
        im_s = "-" + im_s
    try:
        val = complex(float(Fraction(re_s)), float(Fraction(im_s)))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"cannot parse complex literal {text!r}: {exc}")
    exact = None
    if _RATIONAL.match(re_s) and _RATIONAL.match(im_s.lstrip("+-")) or \
            _RATIONAL.match(re_s) and _RATIONAL.match(im_s):
        exact = (Fraction(re_s), Fraction(im_s))
    return val, exact


def parse_rational(text: str) -> tuple[float, Fraction | None]:
    """Parse a real flag, keeping the exact Fraction for `p/q` literals."""
    text = text.strip()
    if _RATIONAL.match(text):
        f = Fraction(text)
        return float(f), f
    return float(text), None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _check(name: str, measured, tolerance, passed: bool) -> dict:
    return {"name": name, "passed": bool(passed),
            "measured": measured, "tolerance": tolerance}


def _tol_check(name: str, measured: float, tolerance: float) -> dict:
    return _check(name, float(measured), float(tolerance),
                  abs(measured) <= tolerance)


def _params_from(args) -> sfm.ModelParams:
    b0, b0_exact = parse_rational(args.b0)
    kappa = {0: 1.0, 1: args.kappa1} if getattr(args, "kappa1", 0.0) else {}
    return sfm.ModelParams(k=args.k, eps=args.eps, b0=b0,
                           alpha=getattr(args, "alpha", 1.0),
                           kappa=kappa, b0_exact=b0_exact)


def _cycle_from(text: str) -> fib.CycleSpec:
    if text.lower() == "fiber":
        return fib.FIBER
    try:
        m1, m2 = (int(v) for v in text.split(","))
    except ValueError:
        raise ValidationError("cycle must be 'fiber' or 'm1,m2'")
    return fib.CycleSpec(m1=m1, m2=m2)


# ---------------------------------------------------------------------------
# command handlers: each returns (results, checks, curve | None)


def _cmd_semiflat_eval(args):
    p = _params_from(args)
    q = np.array([args.ell, args.theta, args.x1, args.x2])
    form = sfm.sf_form_chart(p, q)
    g = sfm.riemannian_metric_chart(p, q)
    eigs = np.linalg.eigvalsh(g)
    pt = fib.from_ell(complex(args.x1, args.x2), args.ell, args.theta)
    _, rel = sfm.ma_residual(p, pt)
    results = {"form": form.tolist(), "metric": g.tolist(),
               "metric_eigenvalues": eigs.tolist()}
    checks = [_tol_check("ma_residual_rel", rel, 1e-10),
              _check("metric_positive", float(eigs[0]), 0.0, eigs[0] > 0)]
    return results, checks, None


def _cmd_semiflat_residual(args):
    p = _params_from(args)
    rng = np.random.default_rng(20260826)
    worst = 0.0
    for _ in range(args.grid ** 2):
        ell = rng.uniform(0.5, 50.0)
        pt = fib.from_ell(complex(rng.uniform(-1, 1), rng.uniform(-1, 1)),
                          ell, rng.uniform(0.0, 2.0 * math.pi))
        _, rel = sfm.ma_residual(p, pt)
        worst = max(worst, rel)
    results = {"max_rel_residual": worst, "samples": args.grid ** 2}
    return results, [_tol_check("monge_ampere_rel", worst, 1e-10)], None


def _cmd_semiflat_pair(args):
    p = _params_from(args)
    c = _cycle_from(args.cycle)
    from .numerics import Grid2
    if c.fiber:
        grid = Grid2(args.grid, args.grid)
    else:
        grid = Grid2(args.grid, args.grid, box2=(0.0, 2.0 * math.pi * c.m1))
    numeric = sfm.pair_cycle(p, c, grid=grid)
    closed = sfm.pair_closed_form(p, c)
    err = abs(numeric - closed) / max(abs(closed), 1.0)
    results = {"pairing": numeric, "closed_form": closed, "cycle": args.cycle}
    return results, [_tol_check("pairing_rel_error", err, 1e-8)], None


def _cmd_semiflat_classify(args):
    p = _params_from(args)
    h: dict = {0: complex(parse_complex(args.h0)[0])} if args.h0 else {0: 1.0}
    if args.pole:
        h[-1] = 0.5
    if args.h1:
        h[1] = complex(parse_complex(args.h1)[0])
    b, b_exact = parse_rational(args.section_b)
    s = fib.SectionData(h=h, b=b_exact if b_exact is not None else b)
    dc = sfm.classify_translation(p, s)
    results = {"variant": dc.variant}
    checks = []
    if dc.fit is not None:
        results["fit"] = {"model": dc.fit.model, "exponent": dc.fit.exponent,
                          "r_squared": dc.fit.r_squared}
        checks.append(_check("fit_r_squared", dc.fit.r_squared, 0.99,
                             dc.fit.r_squared >= 0.99))
    if dc.bound is not None:
        results["bound"] = dc.bound
    checks.append(_check("variant", dc.variant, None, True))
    return results, checks, (dc.r, dc.values)


def _cmd_semiflat_curvature(args):
    p = _params_from(args)
    r, vals, fit = sfm.curvature_decay(p)
    results = {"exponent": fit.exponent, "r_squared": fit.r_squared,
               "samples": int(fit.n_samples)}
    ok = -2.15 <= fit.exponent <= -1.85
    checks = [_check("curvature_exponent", fit.exponent, "[-2.15,-1.85]", ok)]
    return results, checks, (r, vals)


def _cmd_slag_check(args):
    p = _params_from(args)
    mf = slag.ModelFiber(p, _cycle_from(args.cycle), args.ell)
    sup_omega, sup_phase = slag.check_special(mf)
    ff = slag.second_fundamental_form(mf)
    results = {"sup_omega_restriction": sup_omega,
               "sup_phase_defect": sup_phase,
               "second_ff_norm": ff.pi_norm,
               "mean_curvature": ff.h_norm,
               "gauss_residual": ff.gauss_residual}
    checks = [_tol_check("lagrangian", sup_omega, 1e-10),
              _tol_check("gauss_equation", ff.gauss_residual, 1e-6)]
    if p.kappa_is_one():
        checks.append(_tol_check("mean_curvature", ff.h_norm, 1e-8))
    return results, checks, None


def _cmd_slag_geometry(args):
    p = _params_from(args)
    mf = slag.ModelFiber(p, _cycle_from(args.cycle), args.ell)
    geom = slag.fiber_geometry(mf)
    num = slag.lambda1_rayleigh(geom.a_coef, geom.b_coef)
    rel = abs(num - geom.lambda1) / geom.lambda1
    results = {"lambda1": geom.lambda1, "lambda1_numeric": num,
               "volume": geom.volume, "diameter": geom.diameter,
               "noncollapse_scale": geom.noncollapse_scale}
    return results, [_check("lambda1_rel_error", rel, 0.02, rel <= 0.02)], None


def _cmd_slag_pi_decay(args):
    p = _params_from(args)
    r, vals, fit = slag.pi_decay(p, _cycle_from(args.cycle))
    results = {"exponent": fit.exponent, "r_squared": fit.r_squared}
    ok = -1.15 <= fit.exponent <= -0.85
    checks = [_check("pi_exponent", fit.exponent, "[-1.15,-0.85]", ok)]
    return results, checks, (r, vals)


def _cmd_hkrot(args):
    tau, tau_exact = parse_complex(args.tau)
    kwargs = {}
    if tau_exact is not None:
        re, im = tau_exact
        kwargs = {"re_exact": re, "abs2_exact": re * re + im * im}
    model = calabi.CalabiModel(k=args.k, tau=tau, **kwargs)
    rot = calabi.rotate(model)
    n = args.verify_grid
    worst = 0.0
    for ell in np.linspace(1.0, 3.0, n):
        for xi1 in np.linspace(0.0, 0.6, n):
            for psi in (0.0, 1.0, 2.5):
                pt = calabi.CalabiPoint(ell=ell, psi=psi, xi1=xi1, xi2=0.2)
                worst = max(worst, calabi.verify_rotation(model, pt))
    defect = calabi.lattice_defects(model, calabi.CalabiPoint(ell=1.7, psi=0.4,
                                                              xi1=0.2, xi2=0.3))
    results = {"alpha": rot.alpha, "eps": rot.eps, "b0": rot.b0,
               "sf_class": rot.sf_class, "exact": rot.exact,
               "winding": list(rot.winding) if rot.winding else None,
               "max_rotation_residual": worst,
               "lattice_defects": defect}
    checks = [_tol_check("rotation_residual", worst, 1e-8),
              _tol_check("lattice_defect", max(defect.values()), 1e-10)]
    return results, checks, None


def _glue_config(args) -> glue.GlueConfig:
    b0, b0_exact = parse_rational(args.b0)
    p = sfm.ModelParams(k=args.k, eps=args.eps, b0=b0, b0_exact=b0_exact)
    return glue.GlueConfig(params=p, r=args.r, s=args.s,
                           rho_min=args.rho_min, rho_max=args.rho_max,
                           v0c=args.v0c, vomc=args.vomc)


def _cmd_glue_potential(args):
    p = _params_from(args)
    cfg = glue.GlueConfig(params=p, r=0.1, s=0.02, rho_min=1e-4, rho_max=0.9,
                          v0c=1.0, vomc=0.2)
    u = glue.potential_u(cfg, args.rho)
    # fourth-order stencils keep roundoff below the 1e-8 comparison
    h = 1e-3 * args.rho
    um2, um1, up1, up2 = (glue.potential_u(cfg, args.rho + j * h)
                          for j in (-2, -1, 1, 2))
    upp = (-up2 + 16.0 * up1 - 30.0 * u + 16.0 * um1 - um2) / (12.0 * h ** 2)
    up = (-up2 + 8.0 * up1 - 8.0 * um1 + um2) / (12.0 * h)
    fd = 0.25 * (upp + up / args.rho)
    closed = glue.u_zz(cfg, args.rho)
    results = {"u": u, "u_zz": closed, "u_zz_fd": fd}
    err = abs(fd - closed) / abs(closed)
    return results, [_tol_check("u_zz_fd_rel", err, 1e-8)], None


def _cmd_glue_positivity(args):
    cfg = _glue_config(args)
    t_req = glue.required_t(cfg, args.alpha, 0.0)
    t = args.t if args.t is not None else 1.2 * t_req + 1.0
    margin = glue.positivity_scan(cfg, args.alpha, t)
    results = {"margin": margin, "t": t, "required_t": t_req}
    return results, [_check("positivity_margin", margin, 0.0, margin > 0)], None


def _cmd_glue_solve_alpha(args):
    cfg = _glue_config(args)
    sol = glue.solve_alpha(cfg, t_prime=args.tprime)
    fine = glue.solve_alpha(cfg, t_prime=args.tprime, n=128)
    drift = abs(sol.alpha_star - fine.alpha_star) / sol.alpha_star
    results = {"alpha_star": sol.alpha_star, "t_at_root": sol.t_at_root,
               "bracket": list(sol.bracket), "bracket_values": list(sol.values),
               "refined_alpha_star": fine.alpha_star}
    checks = [_check("sign_change", f"{sol.values[0]:+.3e}/{sol.values[1]:+.3e}",
                     None, sol.values[0] > 0 > sol.values[1]),
              _tol_check("refinement_drift", drift, 1e-6)]
    return results, checks, None


def _cmd_mirror(args):
    tau, tau_exact = parse_complex(args.tau)
    data = mirror.mirror_map(args.k, tau, args.m, tau_exact=tau_exact)
    results = {"alpha_q": data.alpha_q, "v_check": data.v_check,
               "v_mirror": data.v_mirror, "product": data.product,
               "sf_class": data.sf_class, "exact": data.exact}
    if data.product_exact is not None:
        results["product_exact"] = str(data.product_exact)
        checks = [_check("volume_product", str(data.product_exact), "1",
                         data.product_exact == 1)]
    else:
        checks = [_tol_check("volume_product_minus_one",
                             data.product - 1.0, 1e-12)]
    return results, checks, None


def _cmd_dims(args):
    dims = sfm.moduli_dims(args.k)
    results = {"semiflat_family": dims[0], "h2_de_rham": dims[1],
               "hyperkahler_family": dims[2]}
    ok = dims == (10 - args.k, 11 - args.k, 10 - args.k)
    return results, [_check("dims", list(dims), None, ok)], None


# ---------------------------------------------------------------------------
# argument grammar


def _add_params(sp, alpha=True):
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--eps", type=float, default=1.0)
    sp.add_argument("--b0", type=str, default="0")
    sp.add_argument("--kappa1", type=float, default=0.0)
    if alpha:
        sp.add_argument("--alpha", type=float, default=1.0)


def _add_glue(sp):
    _add_params(sp, alpha=False)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--rho-min", type=float, default=1e-4)
    sp.add_argument("--rho-max", type=float, default=0.9)
    sp.add_argument("--v0c", type=float, required=True)
    sp.add_argument("--vomc", type=float, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="syzlab", description=__doc__)
    common = _Parser(add_help=False)
    common.add_argument("--csv", type=str, default=None,
                        help="write the decay curve as CSV (columns r,value)")
    common.add_argument("--no-timestamp", action="store_true")
    common.add_argument("--threads", type=int,
                        default=int(os.environ.get("SYZLAB_THREADS", "1")))
    sub = parser.add_subparsers(dest="command", required=True)

    p_sf = sub.add_parser("semiflat")
    sf_sub = p_sf.add_subparsers(dest="subcommand", required=True)

    sp = sf_sub.add_parser("eval", parents=[common])
    _add_params(sp)
    sp.add_argument("--ell", type=float, required=True)
    sp.add_argument("--theta", type=float, default=0.0)
    sp.add_argument("--x1", type=float, default=0.0)
    sp.add_argument("--x2", type=float, default=0.0)
    sp.set_defaults(handler=_cmd_semiflat_eval)

    sp = sf_sub.add_parser("residual", parents=[common])
    _add_params(sp)
    sp.add_argument("--grid", type=int, default=32)
    sp.set_defaults(handler=_cmd_semiflat_residual)

    sp = sf_sub.add_parser("pair", parents=[common])
    _add_params(sp)
    sp.add_argument("--cycle", type=str, default="fiber")
    sp.add_argument("--grid", type=int, default=64)
    sp.set_defaults(handler=_cmd_semiflat_pair)

    sp = sf_sub.add_parser("classify-translation", parents=[common])
    _add_params(sp, alpha=False)
    sp.add_argument("--pole", action="store_true")
    sp.add_argument("--section-b", type=str, default="0")
    sp.add_argument("--h0", type=str, default=None)
    sp.add_argument("--h1", type=str, default=None)
    sp.set_defaults(handler=_cmd_semiflat_classify)

    sp = sf_sub.add_parser("curvature", parents=[common])
    _add_params(sp, alpha=False)
    sp.set_defaults(handler=_cmd_semiflat_curvature)

    p_slag = sub.add_parser("slag")
    slag_sub = p_slag.add_subparsers(dest="subcommand", required=True)
    for name, handler in (("check", _cmd_slag_check),
                          ("geometry", _cmd_slag_geometry),
                          ("pi-decay", _cmd_slag_pi_decay)):
        sp = slag_sub.add_parser(name, parents=[common])
        _add_params(sp, alpha=False)
        sp.add_argument("--cycle", type=str, default="1,0")
        if name != "pi-decay":
            sp.add_argument("--ell", type=float, default=10.0)
        sp.set_defaults(handler=handler)

    sp = sub.add_parser("hkrot", parents=[common])
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--tau", type=str, required=True)
    sp.add_argument("--verify-grid", type=int, default=5)
    sp.set_defaults(handler=_cmd_hkrot)

    p_glue = sub.add_parser("glue")
    glue_sub = p_glue.add_subparsers(dest="subcommand", required=True)

    sp = glue_sub.add_parser("potential", parents=[common])
    _add_params(sp, alpha=False)
    sp.add_argument("--rho", type=float, default=0.3)
    sp.set_defaults(handler=_cmd_glue_potential)

    sp = glue_sub.add_parser("positivity", parents=[common])
    _add_glue(sp)
    sp.add_argument("--alpha", type=float, default=2.0)
    sp.add_argument("--t", type=float, default=None)
    sp.set_defaults(handler=_cmd_glue_positivity)

    sp = glue_sub.add_parser("solve-alpha", parents=[common])
    _add_glue(sp)
    sp.add_argument("--tprime", type=float, default=1.0)
    sp.set_defaults(handler=_cmd_glue_solve_alpha)

    sp = sub.add_parser("mirror", parents=[common])
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--tau", type=str, required=True)
    sp.add_argument("--m", type=int, default=1)
    sp.set_defaults(handler=_cmd_mirror)

    sp = sub.add_parser("dims", parents=[common])
    sp.add_argument("--k", type=int, required=True)
    sp.set_defaults(handler=_cmd_dims)

    return parser


def _echo_inputs(args) -> dict:
    skip = {"handler", "csv", "no_timestamp"}
    out = {}
    for key, val in sorted(vars(args).items()):
        if key in skip:
            continue
        out[key] = val if isinstance(val, (int, float, str, bool, type(None))) else str(val)
    return out


def _write_csv(path: str, curve) -> None:
    r, vals = curve
    with open(path, "w") as fh:
        fh.write("r,value\n")
        for ri, vi in zip(np.asarray(r), np.asarray(vals)):
            fh.write(f"{float(ri)!r},{float(vi)!r}\n")


_VALUE_FLAGS = {"--b0", "--tau", "--h0", "--h1", "--section-b", "--cycle"}


def _join_negative_values(argv: list[str]) -> list[str]:
    """Fold `--tau -1/2+2i` into `--tau=-1/2+2i` so argparse accepts it."""
    out = []
    skip = False
    for i, a in enumerate(argv):
        if skip:
            skip = False
            continue
        if a in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(a + "=" + argv[i + 1])
            skip = True
        else:
            out.append(a)
    return out


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(_join_negative_values(list(argv)))
        results, checks, curve = args.handler(args)
        if args.csv is not None:
            if curve is None:
                raise ValidationError("this command produces no decay curve")
            _write_csv(args.csv, curve)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2

    command = args.command
    if getattr(args, "subcommand", None):
        command += " " + args.subcommand
    report = {"command": command, "inputs": _echo_inputs(args),
              "results": results, "checks": checks, "version": __version__}
    if not args.no_timestamp:
        report["timestamp"] = datetime.datetime.now(
            datetime.timezone.utc).isoformat()
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0 if all(c["passed"] for c in checks) else 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
