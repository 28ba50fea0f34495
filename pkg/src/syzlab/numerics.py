"""Deterministic quadrature, decay fitting, root finding, eigen checks.

Everything here is plain numerics with fixed evaluation order so repeated
runs are bitwise reproducible regardless of how many worker threads the
caller thinks it has.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError

ABS_TOL = 1e-10
REL_TOL = 1e-8


@dataclass(frozen=True)
class Grid2:
    """Uniform tensor grid on [a1,b1) x [a2,b2), periodic by default.

    Periodic directions use the rectangle rule on nodes without the
    duplicated endpoint, which is spectrally accurate for smooth periodic
    integrands and exact for trigonometric polynomials of degree < n.
    """

    n1: int
    n2: int
    box1: tuple[float, float] = (0.0, 1.0)
    box2: tuple[float, float] = (0.0, 1.0)
    periodic1: bool = True
    periodic2: bool = True

    def __post_init__(self):
        if self.n1 < 4 or self.n2 < 4:
            raise ValidationError("grid needs at least 4 nodes per direction")
        if self.box1[1] <= self.box1[0] or self.box2[1] <= self.box2[0]:
            raise ValidationError("grid box must have positive extent")

    def nodes1(self) -> np.ndarray:
        a, b = self.box1
        if self.periodic1:
            return a + (b - a) * np.arange(self.n1) / self.n1
        return np.linspace(a, b, self.n1)

    def nodes2(self) -> np.ndarray:
        a, b = self.box2
        if self.periodic2:
            return a + (b - a) * np.arange(self.n2) / self.n2
        return np.linspace(a, b, self.n2)

    def weights1(self) -> np.ndarray:
        a, b = self.box1
        if self.periodic1:
            return np.full(self.n1, (b - a) / self.n1)
        w = np.full(self.n1, (b - a) / (self.n1 - 1))
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def weights2(self) -> np.ndarray:
        a, b = self.box2
        if self.periodic2:
            return np.full(self.n2, (b - a) / self.n2)
        w = np.full(self.n2, (b - a) / (self.n2 - 1))
        w[0] *= 0.5
        w[-1] *= 0.5
        return w


def pairwise_sum(values: np.ndarray):
    """Fixed-order pairwise reduction, independent of any chunking upstream.

    Repeatedly adds adjacent pairs of the row-major flattened array, so the
    summation tree depends only on the length.
    """
    v = np.asarray(values).ravel()
    if v.size == 0:
        return 0.0
    while v.size > 1:
        if v.size % 2:
            v = np.append(v[:-2], v[-2] + v[-1])
        v = v[0::2] + v[1::2]
    return v[0].item()


def quad_grid(values: np.ndarray, grid: Grid2):
    """Integrate sampled values over the grid with a deterministic reduction."""
    values = np.asarray(values)
    if values.shape != (grid.n1, grid.n2):
        raise ValidationError("values shape must match grid (n1, n2)")
    if not np.all(np.isfinite(np.abs(values))):
        raise NumericalError("non-finite integrand samples")
    w = np.outer(grid.weights1(), grid.weights2())
    return pairwise_sum(values * w)


def quad_periodic(f, grid: Grid2):
    """Integrate f(t1, t2) over the grid.  f may return complex values."""
    t1 = grid.nodes1()
    t2 = grid.nodes2()
    vals = np.array([[f(a, b) for b in t2] for a in t1])
    return quad_grid(vals, grid)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares decay fit summary."""

    model: str
    exponent: float
    amplitude: float
    r_squared: float
    n_samples: int


def fit_decay(r: np.ndarray, values: np.ndarray, model: str = "power",
              drop_fraction: float = 0.2) -> DecayFit:
    """Fit values(r) ~ C * r^exponent, or C * exp(exponent * r^(2/3)).

    The smallest drop_fraction of the r-range is discarded so the fit sees
    the asymptotic regime rather than the near region.
    """
    r = np.asarray(r, dtype=float)
    values = np.asarray(values, dtype=float)
    if r.ndim != 1 or r.shape != values.shape:
        raise ValidationError("r and values must be 1-d arrays of equal length")
    if r.size < 3:
        raise ValidationError("need at least 3 samples")
    if np.any(np.diff(r) <= 0):
        raise ValidationError("r must be strictly increasing")
    if not (0.0 <= drop_fraction < 1.0):
        raise ValidationError("drop_fraction must lie in [0, 1)")
    if np.any(values <= 0):
        raise ValidationError("values must be positive for a log fit")

    n_drop = min(int(np.floor(drop_fraction * r.size)), r.size - 3)
    r = r[n_drop:]
    values = values[n_drop:]

    if model == "power":
        xs = np.log(r)
    elif model == "stretched_exp":
        xs = r ** (2.0 / 3.0)
    else:
        raise ValidationError(f"unknown decay model {model!r}")
    ys = np.log(values)
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise NumericalError("non-finite values in decay fit")

    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = np.sum((ys - np.mean(ys)) ** 2)
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        r2 = 1.0 - np.sum(resid ** 2) / ss_tot
    return DecayFit(model=model, exponent=float(slope),
                    amplitude=float(np.exp(intercept)),
                    r_squared=float(r2), n_samples=int(r.size))


def find_root(f, a: float, b: float, rel_tol: float = 1e-10,
              max_iter: int = 200) -> float:
    """Root of f on a sign-changing bracket [a, b].

    Affine functions are detected from three samples and solved exactly;
    otherwise bisection localizes and a secant pass polishes.
    """
    if not (b > a):
        raise ValidationError("bracket must satisfy a < b")
    fa, fb = f(a), f(b)
    if not (np.isfinite(fa) and np.isfinite(fb)):
        raise NumericalError("non-finite bracket values")
    if fa == 0.0:
        return float(a)
    if fb == 0.0:
        return float(b)
    if fa * fb > 0:
        raise ValidationError("bracket does not change sign")

    mid = 0.5 * (a + b)
    fm = f(mid)
    scale = max(abs(fa), abs(fb), 1e-300)
    if abs(fm - 0.5 * (fa + fb)) <= 1e-12 * scale:
        # affine: interpolate exactly
        return float(a - fa * (b - a) / (fb - fa))

    lo, hi, flo = a, b, fa
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if not np.isfinite(fm):
            raise NumericalError("non-finite value during bisection")
        if fm == 0.0:
            return float(mid)
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
        if hi - lo <= rel_tol * max(abs(lo), abs(hi), 1.0):
            break
    # secant polish inside the final bracket
    x0, x1 = lo, hi
    f0, f1 = f(x0), f(x1)
    for _ in range(60):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not (lo <= x2 <= hi):
            break
        x0, f0, x1, f1 = x1, f1, x2, f(x2)
        if abs(x1 - x0) <= rel_tol * max(abs(x1), 1.0):
            break
    return float(x1)


def sym_min_eig(m: np.ndarray, tol: float = 1e-12) -> float:
    """Smallest eigenvalue of a real symmetric matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("matrix must be square")
    scale = max(1.0, np.max(np.abs(m)))
    if np.max(np.abs(m - m.T)) > tol * scale:
        raise ValidationError("matrix is not symmetric")
    return float(np.linalg.eigvalsh(m)[0])


def herm_pos(h: np.ndarray, tol: float = 1e-12) -> bool:
    """True when a Hermitian matrix is positive definite."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError("matrix must be square")
    scale = max(1.0, np.max(np.abs(h)))
    if np.max(np.abs(h - h.conj().T)) > tol * scale:
        raise ValidationError("matrix is not Hermitian")
    return bool(np.linalg.eigvalsh(h)[0] > 0.0)
