"""Balanced self-similar profiles of the frictional thin-film problem.

For alpha = 4/(n+3) the spreading ansatz H(t,x) = H(x), s(t) =
(B^2 t / gamma)^gamma with gamma = 1/(n+4) reduces the free boundary
problem to the two-point problem on the half-drop

    H^(n-1) H''' = B^2 x   on (0,1),
    H'(0) = 0,  H(1) = 0,  (H'(1))^2 = D^2 B^(2 alpha),  int_0^1 H = 1,

with a single unknown amplitude B > 0.  For n = 1 the problem
integrates in closed form (``explicit_n1``); for n > 1 it is solved by
backward shooting from the contact point, where the solution is started
from a local expansion, combined with an outer scalar root find whose
monotone structure mirrors the uniqueness argument: scaling the
contact-slope parameter up shrinks the mass-normalized support.

All numerics run on the unit-coefficient form w^(n-1) w''' = x with
contact slope thetahat; the solution of the original system is the
rescaling H = w / mu, B = mu^(-n/2) with mu the mass of w.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .core import Grid1D, Profile, SolverError, critical_alpha, integrate

__all__ = [
    "SelfSimilarSolution", "ShootingConfig", "TouchdownSeries",
    "explicit_n1", "local_series", "solve",
    "NegativeDError", "NoConvergenceError", "DegenerateStartError",
    "UnsupportedNError",
]


class NegativeDError(SolverError):
    pass


class NoConvergenceError(SolverError):
    pass


class DegenerateStartError(SolverError):
    """The local contact-point expansion is invalid for these parameters."""


class UnsupportedNError(SolverError):
    """n = 3/2 with zero contact angle: logarithmic touchdown resonance."""


N_RESONANCE_TOL = 1e-9


@dataclass(frozen=True)
class ShootingConfig:
    tol_B: float = 1e-10
    eps_start: float = 1e-6     # offset from x = 1 where integration starts
    series_terms: int = 3
    rtol: float = 1e-12         # ODE integrator relative tolerance
    profile_nodes: int = 513

    def __post_init__(self):
        if not self.tol_B > 0.0:
            raise ValueError("tol_B must be positive")
        if not 0.0 < self.eps_start < 1e-2:
            raise ValueError("eps_start must lie in (0, 1e-2)")
        if self.series_terms < 2:
            raise ValueError("series_terms must be >= 2")


@dataclass
class SelfSimilarSolution:
    """Pair (B, H) solving the balanced problem, plus the induced s(t) law.

    ``profile`` samples H on [0,1]; ``evaluate`` uses the dense solver
    output together with the touchdown expansion near x = 1 and is the
    accurate way to read off pointwise values.  ``s_law`` holds
    (coefficient, exponent) of s(t) = ((n+4) B^2 t)^(1/(n+4)).
    """

    B: float
    profile: Profile
    D: float
    n: float
    gamma: float
    s_law: tuple[float, float]
    series: "TouchdownSeries"
    residuals: dict = field(default_factory=dict)
    _dense: object = None

    def evaluate_u(self, u):
        """H at contact distance u = 1 - x, precise down to tiny u."""
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        out = np.empty_like(u)
        near = u <= self.series.eps_valid
        if np.any(near):
            out[near] = self.series.eval(np.maximum(u[near], 0.0))[0]
        if np.any(~near):
            if self._dense is not None:
                out[~near] = self._dense(u[~near])
            else:
                out[~near] = self.profile(1.0 - u[~near])
        return float(out[0]) if scalar else out

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return self.evaluate_u(1.0 - x)

    def slope_at_contact(self):
        """H'(1); equals -D B^alpha by the contact-line law."""
        return -self.series.theta


def _spreading_law(B, n):
    gamma = 1.0 / (n + 4.0)
    return ((n + 4.0) * B * B) ** gamma, gamma


# --------------------------------------------------------------------------
# explicit n = 1 solution (oracle for the generic solver)

def explicit_n1(D, cfg: ShootingConfig | None = None):
    """Closed-form balanced solution for n = 1 (alpha = 1).

    B = (15/2)(-D + sqrt(4/5 + D^2)) and
    H(x) = (B D / 2)(1 - x^2) + (B^2/24)(1 - x^2)^2.
    D = 0 gives B^2 = 45 and the zero-angle profile (15/8)(1-x^2)^2;
    for large D, B ~ 3/D and H approaches the wedge (3/2)(1-x^2).
    """
    if D < 0.0:
        raise NegativeDError(f"D must be >= 0, got {D}")
    cfg = cfg or ShootingConfig()
    B = 7.5 * (-D + math.sqrt(0.8 + D * D))

    def H_of_u(u):
        one_m = np.asarray(u, dtype=float) * (2.0 - np.asarray(u, dtype=float))
        return (B * D / 2.0) * one_m + (B * B / 24.0) * one_m ** 2

    grid = Grid1D.graded_right(0.0, 1.0, cfg.profile_nodes, ratio=64.0)
    series = local_series(B, D, 1.0)
    series.set_free_parameter(B * B / 6.0 - B * D / 2.0)
    coeff, gamma = _spreading_law(B, 1.0)
    sol = SelfSimilarSolution(
        B=B, profile=Profile(grid, H_of_u(1.0 - grid.nodes)), D=D, n=1.0,
        gamma=gamma, s_law=(coeff, gamma), series=series,
        residuals={"mass": 0.0, "slope_law": 0.0, "symmetry": 0.0},
    )
    sol._dense = H_of_u
    return sol


# --------------------------------------------------------------------------
# touchdown expansions near x = 1

def _indicial_root_gt2(n):
    """Real root m > 2 of m(m-1)(m-2) = (n-1)(3/n)(3/n-1)(2-3/n)."""
    p = 3.0 / n
    K = (n - 1.0) * p * (p - 1.0) * (2.0 - p)
    return brentq(lambda m: m * (m - 1.0) * (m - 2.0) - K, 2.0, 12.0, xtol=1e-14)


class TouchdownSeries:
    """Local solution structure of H^(n-1) H''' = B^2 x near x = 1.

    In u = 1 - x the equation reads H_uuu = -B^2 (1-u) H^(1-n).  Three
    regimes occur:

    * D > 0: H = theta u + c2 u^2 + forced terms, theta = D B^alpha,
      with a (1-x)^(4-n) forced term for n != 2 and a (1-x)^2 log(1-x)
      term for n = 2; c2 is the free shooting parameter.
    * D = 0, n < 3/2: quadratic touchdown H = c2 u^2 + ..., free c2.
    * D = 0, n > 3/2: power touchdown H = C5 B^(2/n) u^(3/n) (1 + ...)
      with C5 = (3/n (3/n - 1)(2 - 3/n))^(-1/n); the free parameter
      rides on the decaying indicial mode u^(m0 - 3/n), m0 > 2.

    n = 3/2 with D = 0 carries a logarithmic resonance and is rejected.
    The ``terms`` knob keeps the leading ``terms`` components
    (2 = bare, 3 = default, 4 adds one more forced order where known).
    """

    def __init__(self, B, D, n, terms=3, alpha=None):
        if B <= 0.0:
            raise DegenerateStartError(f"B must be positive, got {B}")
        if D < 0.0:
            raise NegativeDError(f"D must be >= 0, got {D}")
        self.B, self.D, self.n = float(B), float(D), float(n)
        self.terms = int(terms)
        self.alpha = critical_alpha(n) if alpha is None else alpha
        self.theta = self.D * self.B ** self.alpha
        self.free = None
        self.eps_valid = 1e-4
        if self.theta == 0.0:
            if abs(n - 1.5) < N_RESONANCE_TOL:
                raise UnsupportedNError(
                    "n = 3/2 with D = 0: logarithmic touchdown resonance")
            if n > 1.5:
                p = 3.0 / n
                P = p * (p - 1.0) * (p - 2.0)
                self.amp = self.B ** (2.0 / n) * (-1.0 / P) ** (1.0 / n)
                q3 = (p + 1.0) * p * (p - 1.0)
                self.eta = -P / (q3 + P * (n - 1.0))
                self.sigma = _indicial_root_gt2(n) - p

    def set_free_parameter(self, value):
        self.free = float(value)
        return self

    def _powers(self):
        """(exponent, coefficient) pairs of the expansion, log terms separate."""
        B, n, th, c = self.B, self.n, self.theta, self.free
        Bsq = B * B
        if th > 0.0:
            out = [(1.0, th), (2.0, c)]
            logs = []
            if self.terms >= 3:
                if abs(n - 2.0) > 1e-12:
                    a4 = -Bsq * th ** (1.0 - n) / ((2 - n) * (3 - n) * (4 - n))
                    out.append((4.0 - n, a4))
                    if self.terms >= 4:
                        a5 = -Bsq * th ** (1.0 - n) * ((1 - n) * c / th - 1.0) \
                            / ((3 - n) * (4 - n) * (5 - n))
                        out.append((5.0 - n, a5))
                else:
                    # integrating -B^2/theta * u^(-1) three times gives the
                    # u^2 log u resonance; the pure u^2 part joins c2
                    A2 = -Bsq / th
                    logs.append((2.0, A2 / 2.0))
                    out.append((2.0, -0.75 * A2))
            return out, logs
        if n < 1.5:
            out = [(2.0, c)]
            logs = []
            if self.terms >= 3:
                a5 = -Bsq * c ** (1.0 - n) / ((3 - 2 * n) * (4 - 2 * n) * (5 - 2 * n))
                out.append((5.0 - 2.0 * n, a5))
            if self.terms >= 4:
                a6 = Bsq * c ** (1.0 - n) / ((4 - 2 * n) * (5 - 2 * n) * (6 - 2 * n))
                out.append((6.0 - 2.0 * n, a6))
            return out, logs
        p = 3.0 / n
        out = [(p, self.amp)]
        if self.terms >= 3:
            out.append((p + 1.0, self.amp * self.eta))
        out.append((p + self.sigma, self.amp * c))
        return out, []

    def eval(self, u):
        """Return (H, H_u, H_uu, mass_from_0) at u = 1 - x."""
        if self.free is None:
            raise DegenerateStartError("free series parameter not set")
        u = np.asarray(u, dtype=float)
        at_zero = u == 0.0
        powers, logs = self._powers()
        H = np.zeros_like(u)
        H1 = np.zeros_like(u)
        H2 = np.zeros_like(u)
        m = np.zeros_like(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            for e, cf in powers:
                H += cf * u ** e
                H1 += cf * e * u ** (e - 1.0)
                H2 += cf * e * (e - 1.0) * u ** (e - 2.0)
                m += cf * u ** (e + 1.0) / (e + 1.0)
            if logs:
                lg = np.where(u > 0.0, np.log(np.maximum(u, 1e-300)), 0.0)
                for e, cf in logs:
                    H += cf * u ** e * lg
                    H1 += cf * u ** (e - 1.0) * (e * lg + 1.0)
                    H2 += cf * u ** (e - 2.0) * (e * (e - 1.0) * lg + 2.0 * e - 1.0)
                    m += cf * u ** (e + 1.0) * (lg / (e + 1.0) - 1.0 / (e + 1.0) ** 2)
        if np.any(at_zero):
            # H and the mass vanish at the contact point; the slope limit
            # is theta (zero for D = 0), the curvature may be infinite
            H[at_zero] = 0.0
            m[at_zero] = 0.0
            H1[at_zero] = self.theta
        return H, H1, H2, m


def local_series(B, D, n, terms=3):
    """Touchdown expansion of the balanced profile near x = 1.

    The free parameter (c2, or the indicial-mode amplitude for D = 0
    with n > 3/2) is determined by the global solve; ``solve`` returns
    the series with it filled in.  H'(1) = -D B^alpha always.
    """
    return TouchdownSeries(B, D, n, terms=terms)


# --------------------------------------------------------------------------
# shooting machinery (unit-coefficient form)

_H_FLOOR = 1e-60


def _integrate_w(n, series, cfg, dense=False):
    """Integrate w_uuu = -(1-u) w^(1-n) from eps to 1 with a series start.

    State: (w, w_u, w_uu, int w du).  Returns the solve_ivp result, or
    None if the start value is non-positive.
    """
    eps = cfg.eps_start
    w0, w10, w20, m0 = (float(v) for v in series.eval(np.asarray(eps)))
    if not w0 > 0.0 or not np.isfinite(w0):
        return None
    one_m_n = 1.0 - n

    def rhs(u, y):
        w = y[0] if y[0] > _H_FLOOR else _H_FLOOR
        return (y[1], y[2], -(1.0 - u) * w ** one_m_n, y[0])

    def touchdown(u, y):
        return y[0]
    touchdown.terminal = True
    touchdown.direction = -1

    return solve_ivp(rhs, (eps, 1.0), (w0, w10, w20, m0), method="DOP853",
                     rtol=cfg.rtol, atol=1e-16, events=touchdown,
                     dense_output=dense)


def _make_series_w(n, thetahat, free, cfg):
    """Series for the unit-coefficient problem (B = 1, theta = thetahat)."""
    ser = TouchdownSeries.__new__(TouchdownSeries)
    ser.B, ser.D, ser.n = 1.0, 0.0, float(n)
    ser.terms = cfg.series_terms
    ser.alpha = critical_alpha(n)
    ser.theta = float(thetahat)
    ser.free = None
    ser.eps_valid = cfg.eps_start
    if thetahat == 0.0:
        if abs(n - 1.5) < N_RESONANCE_TOL:
            raise UnsupportedNError("n = 3/2 with D = 0: logarithmic resonance")
        if n > 1.5:
            p = 3.0 / n
            P = p * (p - 1.0) * (p - 2.0)
            ser.amp = (-1.0 / P) ** (1.0 / n)
            q3 = (p + 1.0) * p * (p - 1.0)
            ser.eta = -P / (q3 + P * (n - 1.0))
            ser.sigma = _indicial_root_gt2(n) - p
    ser.set_free_parameter(free)
    return ser


def _shoot(n, thetahat, free, cfg, dense=False):
    return _integrate_w(n, _make_series_w(n, thetahat, free, cfg), cfg, dense)


_CRASH = -1e6


def _center_slope(n, thetahat, free, cfg):
    """dw/du at u = 1 (= -w'(x) at x = 0); crashes count as very negative."""
    sol = _shoot(n, thetahat, free, cfg)
    if sol is None:
        return _CRASH
    if sol.status != 0 or sol.t[-1] < 1.0:
        return _CRASH
    return float(sol.y[1, -1])


def _bracketed_root(fn, x0, step0, max_expand=80):
    """Expand a bracket around x0 until fn changes sign, then brentq."""
    f0 = fn(x0)
    if f0 == 0.0:
        return x0
    lo = hi = x0
    flo = fhi = f0
    step = step0
    for _ in range(max_expand):
        if flo > 0.0:             # need smaller value
            lo, flo = lo - step, fn(lo - step)
        if fhi < 0.0:
            hi, fhi = hi + step, fn(hi + step)
        if flo <= 0.0 <= fhi and lo < hi:
            return brentq(fn, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=200)
        step *= 2.0
    raise NoConvergenceError("could not bracket the shooting parameter")


def _solve_unit(n, thetahat, cfg, guess=None):
    """Inner solve: pick the free parameter so the center slope vanishes.

    Returns (free*, mass of w incl. the series tail, center height w(1)).
    """
    if guess is None:
        if thetahat == 0.0:
            guess = 0.2   # works for both the c2 and the indicial branch
        else:
            guess = (1.0 / 3.0 - thetahat) / 2.0   # exact for n = 1
    fn = lambda c: _center_slope(n, thetahat, c, cfg)
    step0 = 0.25 * max(abs(guess), 0.1)
    free = _bracketed_root(fn, guess, step0)
    sol = _shoot(n, thetahat, free, cfg)
    if sol is None or sol.t[-1] < 1.0:
        raise NoConvergenceError("inner shooting lost the solution after root find")
    mass = float(sol.y[3, -1])
    return free, mass, float(sol.y[0, -1])


def solve(params_or_n, D=None, cfg: ShootingConfig | None = None):
    """Solve the balanced self-similar problem for D >= 0, 1 <= n < 3.

    Accepts either a ProblemParams (with normalized friction D and
    alpha = 4/(n+3)) or the pair (n, D).  The outer root find runs on
    the contact-slope parameter of the unit-coefficient problem; its
    mismatch function is monotone because the contact angle grows and
    the mass-normalized support shrinks as the slope parameter grows,
    which is exactly the monotone structure behind uniqueness.
    """
    if D is None:
        p = params_or_n
        n, D = p.n, p.D
        if D is None:
            raise ValueError("self-similar solve needs normalized friction D")
        if abs(p.alpha - critical_alpha(n)) > 1e-9:
            raise ValueError(
                f"self-similar solutions need alpha = 4/(n+3); got alpha={p.alpha}")
    else:
        n = float(params_or_n)
    if not (1.0 <= n < 3.0):
        raise ValueError(f"n out of [1,3): {n}")
    if D < 0.0:
        raise NegativeDError(f"D must be >= 0, got {D}")
    cfg = cfg or ShootingConfig()
    alpha = critical_alpha(n)

    state = {}

    def inner(thetahat):
        free, mu, wc = _solve_unit(n, thetahat, cfg, state.get("free"))
        state["free"] = free
        state["mu"] = mu
        return free, mu, wc

    if D == 0.0:
        inner(0.0)
        thetahat = 0.0
    else:
        def mismatch(th):
            _, mu, _ = inner(th)
            # slope of the mass-one profile minus the slope the law demands
            return th / mu - D * mu ** (-n * alpha / 2.0)

        lo, glo = 0.0, mismatch(0.0)
        hi = max(1.0, 0.3 * D)
        ghi = mismatch(hi)
        grow = 0
        while ghi < 0.0:
            lo, glo = hi, ghi
            hi *= 4.0
            ghi = mismatch(hi)
            grow += 1
            if grow > 60:
                raise NoConvergenceError("outer bracket on the slope parameter failed")
        thetahat = brentq(mismatch, lo, hi, xtol=cfg.tol_B * 1e-2, rtol=8.9e-16,
                          maxiter=200)
        inner(thetahat)

    free, mu = state["free"], state["mu"]
    sol = _shoot(n, thetahat, free, cfg, dense=True)
    mu = float(sol.y[3, -1])
    B = mu ** (-n / 2.0)

    series = local_series(B, D, n, terms=cfg.series_terms)
    series.eps_valid = cfg.eps_start
    if series.theta > 0.0 or n < 1.5:
        # w-parameters map to H = w/mu under (c2 -> c2/mu)
        series.set_free_parameter(free / mu)
    else:
        # indicial amplitude: w = amp_w u^(3/n)(1 + .. + b u^sigma); both
        # amp and the b-mode scale with 1/mu, so b itself is invariant
        # up to the amp ratio amp_H = B^(2/n) amp_w(B=1) => b unchanged
        series.set_free_parameter(free)

    dense_sol = sol.sol
    grid = Grid1D.graded_right(0.0, 1.0, cfg.profile_nodes, ratio=64.0)

    def H_of_u(u):
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u)
        far = u >= cfg.eps_start
        if np.any(far):
            out[far] = dense_sol(u[far])[0] / mu
        if np.any(~far):
            out[~far] = series.eval(u[~far])[0]
        return out

    values = H_of_u(1.0 - grid.nodes)
    values[-1] = 0.0
    profile = Profile(grid, values)

    slope_target = D * B ** alpha
    slope_have = thetahat / mu
    residuals = {
        "mass": abs(_requadrature(H_of_u) - 1.0),
        "slope_law": abs(slope_have - slope_target),
        "symmetry": abs(float(sol.y[1, -1]) / mu),
    }
    coeff, gamma = _spreading_law(B, n)
    out = SelfSimilarSolution(
        B=B, profile=profile, D=float(D), n=n, gamma=gamma,
        s_law=(coeff, gamma), series=series, residuals=residuals,
    )
    out._dense = H_of_u
    return out


def _requadrature(H_of_u, cells=160, order=10):
    return integrate(lambda x: H_of_u(1.0 - np.asarray(x)), 0.0, 1.0,
                     cells=cells, order=order)
