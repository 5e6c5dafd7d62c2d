"""Shared numerics and the problem data model.

The model is the thin-film free boundary problem

    h_t + (h^n h_yyy)_y = 0       on the wetted interval (s-, s+),
    h = 0,  (h_y)^2 = d (+-sdot)^alpha,  h^(n-1) h_yyy = sdot   at s+-,

with mobility exponent n in [1,3), contact-line friction exponent
alpha > 0 and friction strength d > 0.  Two scaling invariances allow
normalizing the mass to 2 and, away from the balanced case
alpha = 4/(n+3), the friction number D to 1.

This module holds the parameter/grid/profile types, the mass/friction
normalization, composite Gauss-Legendre quadrature (with endpoint
singularity handling), and a banded linear solver used by the P1
saddle systems and the third-order stencils elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg


# --------------------------------------------------------------------------
# errors

class SolverError(Exception):
    """Base class for numerical failures in this package."""


class BalancedRegimeError(SolverError):
    """alpha = 4/(n+3): D cannot be scaled out, use it directly."""


class NonIntegrableError(SolverError):
    """Endpoint singularity exponent <= -1."""


class SingularSystemError(SolverError):
    """Banded system is singular to working precision."""


# --------------------------------------------------------------------------
# regimes

STRONG = "strong"
BALANCED = "balanced"
WEAK = "weak"

#: |alpha*(n+3) - 4| below this counts as balanced.  A user-supplied
#: alpha = 4/(n+3) is generally not exact in binary, so the critical
#: case is detected with this explicit tolerance.
BALANCED_TOL = 1e-12


def critical_alpha(n):
    """Friction exponent at which the problem is exactly self-similar."""
    return 4.0 / (n + 3.0)


def classify_regime(n, alpha):
    """Classify (n, alpha) as 'strong', 'balanced' or 'weak' friction.

    Strong means alpha < 4/(n+3) (contact-line dissipation dominates),
    weak means alpha > 4/(n+3).  Total: exactly one label is returned
    for every admissible pair.
    """
    gap = alpha * (n + 3.0) - 4.0
    if abs(gap) < BALANCED_TOL:
        return BALANCED
    return STRONG if gap < 0.0 else WEAK


@dataclass(frozen=True)
class ProblemParams:
    """Full model definition: (n, alpha, friction, mass).

    Friction is given either physically through ``d`` or in normalized
    form through ``D``; exactly one of the two must be set.
    """

    n: float
    alpha: float
    d: float | None = None
    D: float | None = None
    mass: float = 2.0

    def __post_init__(self):
        if not (1.0 <= self.n < 3.0):
            raise ValueError(f"mobility exponent n out of [1,3): {self.n}")
        if not self.alpha > 0.0:
            raise ValueError(f"friction exponent alpha must be > 0: {self.alpha}")
        if (self.d is None) == (self.D is None):
            raise ValueError("exactly one of d (physical) or D (normalized) must be set")
        if self.d is not None and not self.d > 0.0:
            raise ValueError(f"friction strength d must be > 0: {self.d}")
        if self.D is not None and self.D < 0.0:
            raise ValueError(f"normalized friction D must be >= 0: {self.D}")
        if not self.mass > 0.0:
            raise ValueError(f"mass must be > 0: {self.mass}")

    @property
    def regime(self):
        return classify_regime(self.n, self.alpha)

    @property
    def balanced(self):
        return self.regime == BALANCED


@dataclass(frozen=True)
class ScalingFactors:
    """Normalization units (h*, y*, t*) with t* = y*^4 / h*^n."""

    h_star: float
    y_star: float
    t_star: float


def normalize(params: ProblemParams):
    """Map physical (d, M) to the normalized problem with D = 1, mass = 2.

    The units satisfy  t* = y*^4 h*^(-n),  2 h* y* = M  and
    h*^(4 - alpha(n+3)) = d (M/2)^(2-3alpha);  they are only defined away
    from the balanced case.  Returns (normalized params, factors).

    If the problem is balanced but the input already satisfies
    d (M/2)^(2-3alpha) = 1 and M = 2, identity factors are returned;
    any other balanced input raises BalancedRegimeError.
    """
    if params.d is None:
        raise ValueError("normalize expects physical parameters (d set)")
    n, alpha, d, M = params.n, params.alpha, params.d, params.mass
    expo = 4.0 - alpha * (n + 3.0)
    Dsq = d * (M / 2.0) ** (2.0 - 3.0 * alpha)
    if abs(expo) < BALANCED_TOL:
        if abs(Dsq - 1.0) < BALANCED_TOL and abs(M - 2.0) < BALANCED_TOL:
            factors = ScalingFactors(1.0, 1.0, 1.0)
            return replace(params, d=None, D=1.0, mass=2.0), factors
        raise BalancedRegimeError(
            "alpha = 4/(n+3): D cannot be scaled out; use normalize_balanced")
    h_star = Dsq ** (1.0 / expo)
    y_star = (M / 2.0) / h_star
    t_star = y_star ** 4 * h_star ** (-n)
    return replace(params, d=None, D=1.0, mass=2.0), ScalingFactors(h_star, y_star, t_star)


def normalize_balanced(params: ProblemParams):
    """Mass-only normalization for the balanced case.

    D^2 = d (M/2)^(2-3alpha) is scaling invariant when alpha = 4/(n+3),
    so only the mass is brought to 2 (with the unit-height choice h*=1).
    """
    if params.d is None:
        raise ValueError("normalize_balanced expects physical parameters (d set)")
    M = params.mass
    D = math.sqrt(params.d * (M / 2.0) ** (2.0 - 3.0 * params.alpha))
    h_star = 1.0
    y_star = M / 2.0
    t_star = y_star ** 4
    return replace(params, d=None, D=D, mass=2.0), ScalingFactors(h_star, y_star, t_star)


def rescale_back(params: ProblemParams, factors: ScalingFactors):
    """Invert normalize: recover the physical (d, M) from the factors.

    The physical free boundary is s(t) = y* shat(t / t*), so larger d
    (larger h*, smaller y*) yields slower fronts in the strong regime.
    """
    if params.D is None:
        raise ValueError("rescale_back expects normalized parameters (D set)")
    n, alpha = params.n, params.alpha
    M = 2.0 * factors.h_star * factors.y_star
    d = (params.D ** 2) * factors.h_star ** (4.0 - alpha * (n + 3.0)) \
        * (M / 2.0) ** (3.0 * alpha - 2.0)
    return replace(params, d=d, D=None, mass=M)


def rescale_spreading_law(factors: ScalingFactors, coefficient, exponent):
    """Map a normalized law shat(that) = C that^g to physical units."""
    return coefficient * factors.y_star * factors.t_star ** (-exponent), exponent


# --------------------------------------------------------------------------
# grids and profiles

@dataclass(frozen=True)
class Grid1D:
    """Strictly increasing 1D nodes; endpoints are the interval ends."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("grid needs at least two nodes")
        if not np.all(np.diff(nodes) > 0.0):
            raise ValueError("grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @property
    def num(self):
        return self.nodes.size

    @property
    def a(self):
        return float(self.nodes[0])

    @property
    def b(self):
        return float(self.nodes[-1])

    @staticmethod
    def uniform(a=0.0, b=1.0, num=257):
        return Grid1D(np.linspace(a, b, num))

    @staticmethod
    def graded_right(a=0.0, b=1.0, num=257, ratio=4.0):
        """Geometric grading, resolution concentrated near x = b.

        ratio is the largest-to-smallest cell size ratio; all contact-line
        degeneracies of this problem live at the right endpoint.
        """
        q = ratio ** (1.0 / max(num - 2, 1))
        w = q ** np.arange(num - 1)[::-1]       # cell widths, shrinking to the right
        nodes = a + (b - a) * np.concatenate(([0.0], np.cumsum(w))) / w.sum()
        nodes[-1] = b
        return Grid1D(nodes)

    @staticmethod
    def graded_both(a=-1.0, b=1.0, num=257):
        """Cosine grading toward both endpoints (both are contact lines)."""
        t = 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, num)))
        return Grid1D(a + (b - a) * t)


@dataclass
class Profile:
    """Nodal values on a Grid1D, evaluated in between by linear interpolation."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.nodes.shape:
            raise ValueError("values and grid size mismatch")
        if not np.all(np.isfinite(vals)):
            raise ValueError("profile values must be finite")
        self.values = vals

    def __call__(self, x):
        return np.interp(x, self.grid.nodes, self.values)

    def mass(self):
        return float(np.trapezoid(self.values, self.grid.nodes))

    @staticmethod
    def sample(fn, grid: Grid1D):
        return Profile(grid, np.asarray(fn(grid.nodes), dtype=float))


def nodal_gradient(x, v):
    """Second-order nodal derivative on a nonuniform grid.

    Interior nodes use the wide central difference (v[i+1]-v[i-1]) over
    the two-cell width; this is the convention that makes the ALE mass
    budget of the transient solver close exactly.
    """
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    g = np.empty_like(v)
    g[1:-1] = (v[2:] - v[:-2]) / (x[2:] - x[:-2])
    g[0] = (v[1] - v[0]) / (x[1] - x[0])
    g[-1] = (v[-1] - v[-2]) / (x[-1] - x[-2])
    return g


def fd_weights(xs, x0, deriv):
    """Finite-difference weights for d^deriv/dx^deriv at x0 on nodes xs.

    Fornberg's recursion; exact for polynomials up to degree len(xs)-1.
    """
    xs = np.asarray(xs, dtype=float)
    npts = xs.size
    c = np.zeros((npts, deriv + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    x_prev = xs[0] - x0
    for i in range(1, npts):
        c2 = 1.0
        x_i = xs[i] - x0
        mn = min(i, deriv)
        for j in range(i):
            x_j = xs[j] - x0
            dx = x_i - x_j
            c2 *= dx
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - x_prev * c[i - 1, k]) / c2
                c[i, 0] = -c1 * x_prev * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (x_i * c[j, k] - k * c[j, k - 1]) / dx
            c[j, 0] = x_i * c[j, 0] / dx
        c1 = c2
        x_prev = x_i
    return c[:, deriv]


def profile_derivative(profile: Profile, order=1):
    """Centered finite-difference derivative of the nodal values.

    Used for diagnostics (e.g. third derivatives of computed profiles);
    accuracy is that of the stencil on the given grid, not of the P1
    representation.
    """
    x = profile.grid.nodes
    v = profile.values
    npts = min(order + 3, x.size)
    out = np.empty_like(v)
    half = npts // 2
    for i in range(x.size):
        lo = min(max(i - half, 0), x.size - npts)
        sl = slice(lo, lo + npts)
        out[i] = fd_weights(x[sl], x[i], order) @ v[sl]
    return Profile(profile.grid, out)


# --------------------------------------------------------------------------
# quadrature

_GL_CACHE = {}


def _gl_rule(order):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def integrate(f, a, b, singularity_exponent=None, cells=48, order=10,
              grading=0.8, distance_arg=False):
    """Composite Gauss-Legendre integral of f over [a, b].

    f may be a callable or a Profile.  If ``singularity_exponent`` p is
    given, the integrand behaves like (b-x)^p near x = b with p > -1;
    the substitution x = b - t^(1/(1+p)) removes the endpoint power
    exactly, and the cells are graded toward the singular end to mop up
    the remaining fractional-power terms.  Smooth integrands on unit
    intervals integrate to ~1e-14 absolute at the defaults.

    With ``distance_arg=True`` the callable receives the distance b - x
    instead of x.  For strongly singular integrands (p close to -1) the
    quadrature needs points with b - x far below the float spacing of b,
    where forming x itself would round the distance to zero; integrands
    written directly in the distance variable keep full precision there.
    """
    if not b > a:
        raise ValueError("integrate requires a < b")
    fn = f if callable(f) else (lambda x: f(x))  # Profile is callable too
    nodes, weights = _gl_rule(order)

    if singularity_exponent is None:
        edges = np.linspace(a, b, cells + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * np.diff(edges)
        xs = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        ws = (half[:, None] * weights[None, :]).ravel()
        args = (b - xs) if distance_arg else xs
        return float(np.dot(ws, np.asarray(fn(args), dtype=float)))

    p = float(singularity_exponent)
    if p <= -1.0:
        raise NonIntegrableError(f"endpoint exponent p = {p} <= -1 is not integrable")
    q = 1.0 + p
    T = (b - a) ** q
    # geometric cell edges in the substituted variable, graded toward t = 0
    r = grading ** np.arange(cells)
    edges = np.concatenate(([0.0], T * np.cumsum(r[::-1]) / r.sum()))
    edges[-1] = T
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    ts = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    ws = (half[:, None] * weights[None, :]).ravel()
    us = ts ** (1.0 / q)            # distance to the singular endpoint b
    jac = ts ** (1.0 / q - 1.0) / q
    args = us if distance_arg else b - us
    vals = np.asarray(fn(args), dtype=float) * jac
    return float(np.dot(ws, vals))


# --------------------------------------------------------------------------
# banded linear algebra

def band_matvec(lu, ab, x):
    """y = A @ x for A in scipy diagonal-ordered banded storage."""
    nlower, nupper = lu
    ncols = ab.shape[1]
    y = np.zeros(ncols)
    for row, offset in enumerate(range(nupper, -nlower - 1, -1)):
        diag = ab[row]
        if offset >= 0:
            y[: ncols - offset] += diag[offset:] * x[offset:]
        else:
            y[-offset:] += diag[: ncols + offset] * x[: ncols + offset]
    return y


def solve_banded(lu, ab, rhs, rel_tol=1e-10):
    """Solve A x = rhs for a banded A (scipy diagonal-ordered storage).

    The solution is verified a posteriori against
    rel_tol * (||rhs||_inf + || |A| |x| ||_inf); the second term is the
    scale below which cancellation makes a smaller residual meaningless.
    For well-scaled systems this reduces to the plain relative-residual
    bound.  Failure raises SingularSystemError.
    """
    rhs = np.asarray(rhs, dtype=float)
    try:
        x = scipy.linalg.solve_banded(lu, ab, rhs)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("non-finite solution from banded solve")
    scale = np.max(np.abs(rhs)) + np.max(band_matvec(lu, np.abs(ab), np.abs(x)))
    resid = np.max(np.abs(band_matvec(lu, ab, x) - rhs))
    if resid > rel_tol * scale + 1e-250:
        raise SingularSystemError(f"banded solve residual {resid:.3e} exceeds tolerance")
    return x


def dense_from_banded(lu, ab):
    """Expand diagonal-ordered banded storage to a dense matrix (tests)."""
    nlower, nupper = lu
    ncols = ab.shape[1]
    dense = np.zeros((ncols, ncols))
    for row, offset in enumerate(range(nupper, -nlower - 1, -1)):
        for j in range(ncols):
            i = j - offset
            if 0 <= i < ncols:
                dense[i, j] = ab[row, j]
    return dense
