"""Transient solver for the frictional thin-film free boundary problem.

One implicit-in-structure time step solves the P1 saddle system for the
rate, the dual bulk force and the contact-line forces (hdot, pi, zeta):

    M pi - tau K hdot + S zeta = K h + S (|h_y|/2)        (force identification)
    M hdot + K_m pi            = 0                        (gradient flow, bulk)
    hdot(s+-) + m_cl zeta(s+-) = 0                        (gradient flow, front)

with mass matrix M, stiffness K, mobility-weighted stiffness K_m built
from m(h) = h^n, point-selection S at the two contact nodes, and the
contact-line mobility m_cl(z) = 2 d^(-1/alpha) z^(2/alpha) evaluated
explicitly from the current slope.  The tau-term is the semi-implicit
treatment of the fourth-order operator (gradient of h advanced by
tau * hdot inside the energy derivative); testing the system with the
solution itself shows the discrete energy can only descend, with the
tau-term strengthening the descent.

The moving interval is handled by a linear ALE map: nodes sit at fixed
fractions of [s-, s+], front speeds come from the kinematic identity
hdot + sdot h_y = 0, and nodal heights advance with the material rate
Hdot = hdot + h_y xidot.  The nodal-gradient convention of
``core.nodal_gradient`` makes the trapezoid mass budget of the update
close exactly (to solver residual), so mass is conserved over long runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Profile, Grid1D, SolverError, nodal_gradient, solve_banded

__all__ = [
    "TransientState", "DualForce", "StepConfig", "RunResult",
    "assemble_and_solve_step", "reconstruct_front_velocity", "ale_update",
    "run", "initial_state", "fig1_bump", "corner", "rescaled_profile",
    "ZeroSlopeError", "IntervalCollapseError", "NonPositiveHeightError",
    "StepSizeUnderflowError", "RecedingFrontError",
]


class ZeroSlopeError(SolverError):
    """Front has zero slope but nonzero rate: kinematic identity ill-posed."""


class IntervalCollapseError(SolverError):
    pass


class NonPositiveHeightError(SolverError):
    """Tentative update produced h <= 0 in the interior (reject the step)."""


class StepSizeUnderflowError(SolverError):
    pass


class RecedingFrontError(SolverError):
    """Complete-wetting friction only produces advancing fronts; a receding
    step is flagged and rejected rather than integrated."""


# quadrature for h^n on elements touching h = 0 (integrand is C0, bounded);
# evaluated as midpoint +- offset so a mirrored element produces bitwise
# identical values (reflection symmetry of the assembly)
_GAUSS3_OFF = math.sqrt(0.15)
_GAUSS3_W_END = 5.0 / 18.0
_GAUSS3_W_MID = 8.0 / 18.0


@dataclass(frozen=True)
class StepConfig:
    """Time stepping and mesh controls.

    tau is the (initial) step; on rejection it halves.  tau_growth > 1
    re-grows the step geometrically after accepted steps and
    tau_max_fraction caps it at that fraction of the current time,
    which makes multi-decade runs affordable; both default to the plain
    fixed-step scheme.  front_cfl additionally caps the step at that
    multiple of the front-element crossing time (smallest element over
    front speed), the empirical stability limit of the explicit
    contact-line coupling.  theta_clamp only guards the kinematic
    division by the contact slope, it never injects front motion.
    rescale_period is accepted for interface compatibility: the linear
    map keeps nodes at fixed reference fractions, so there is no element
    distortion to undo in 1D and the remap is the identity.
    """

    tau: float = 1e-5
    mesh_nodes: int = 257
    theta_clamp: float = 1e-12
    rescale_period: int | None = None
    tau_growth: float = 1.0
    tau_max_fraction: float | None = None
    front_cfl: float | None = 0.5

    def __post_init__(self):
        if not self.tau > 0.0:
            raise ValueError("tau must be positive")
        if self.mesh_nodes < 8:
            raise ValueError("mesh_nodes too small")
        if self.theta_clamp < 0.0:
            raise ValueError("theta_clamp must be >= 0")
        if self.tau_growth < 1.0:
            raise ValueError("tau_growth must be >= 1")


@dataclass
class TransientState:
    """Nodal heights on the moving wetted interval [s-, s+] at time t.

    ``offsets`` are the fixed reference coordinates relative to the
    interval midpoint, in [-1/2, 1/2]; the physical nodes are
    c + offsets * (s+ - s-) with c the midpoint.  Storing midpoint
    offsets (built mirror-antisymmetric) keeps symmetric droplets
    bitwise symmetric under the reflection-equivariant stepping.
    Heights vanish exactly at both contact nodes.
    """

    t: float
    s_minus: float
    s_plus: float
    offsets: np.ndarray
    heights: np.ndarray
    s_dot: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=float)
        self.heights = np.asarray(self.heights, dtype=float)
        if not self.s_minus < self.s_plus:
            raise IntervalCollapseError("s- must be < s+")
        if self.heights[0] != 0.0 or self.heights[-1] != 0.0:
            raise ValueError("contact-line heights must be exactly zero")
        if np.any(self.heights[1:-1] <= 0.0):
            raise NonPositiveHeightError("interior heights must be positive")

    @property
    def fractions(self):
        return 0.5 + self.offsets

    @property
    def nodes(self):
        c = 0.5 * (self.s_minus + self.s_plus)
        return c + self.offsets * (self.s_plus - self.s_minus)

    def profile(self):
        return Profile(Grid1D(self.nodes), self.heights)

    def mass(self):
        return float(np.trapezoid(self.heights, self.nodes))

    def energy(self):
        y, h = self.nodes, self.heights
        return 0.5 * float(np.sum(np.diff(h) ** 2 / np.diff(y)))

    def contact_slopes(self):
        """One-sided P1 slopes on the last element at (s-, s+)."""
        y, h = self.nodes, self.heights
        return ((h[1] - h[0]) / (y[1] - y[0]),
                (h[-1] - h[-2]) / (y[-1] - y[-2]))

    def asymmetry(self):
        """Max deviation of the heights from even symmetry (symmetric grid)."""
        return float(np.max(np.abs(self.heights - self.heights[::-1])))


@dataclass
class DualForce:
    """Bulk dual force pi (continuum limit -h_yy) and the contact-line
    forces zeta (continuum limit -|h_y|/2 at each front).  ``frozen``
    marks fronts pinned by the one-sided (advancing only) friction law."""

    pi: Profile
    zeta: tuple[float, float]
    frozen: tuple[bool, bool] = (False, False)


def _friction_strength(params):
    # in normalized variables the law reads (h_y/D)^2 = (sdot)^alpha,
    # i.e. the effective physical coefficient is D^2
    return params.d if params.d is not None else params.D ** 2


def default_cl_mobility(params):
    d_eff = _friction_strength(params)
    alpha = params.alpha

    def m_cl(z):
        return 2.0 * d_eff ** (-1.0 / alpha) * z ** (2.0 / alpha)

    return m_cl


def _build_saddle(y, h, tau, params, bulk_mobility, cl_mobility,
                  mcl_scale=(1.0, 1.0)):
    """Banded storage of the saddle system on nodes y with heights h.

    Unknown ordering [zeta-, (hdot_0, pi_0), ..., (hdot_{N-1}, pi_{N-1}),
    zeta+] interleaves the two P1 fields, which keeps the bandwidth at
    (3, 3).  The matrix is symmetric; every assembly expression is
    arranged so that mirrored input data produce the bitwise-mirrored
    system (commutative pair sums, midpoint +- offset quadrature).
    """
    N = y.size
    ell = np.diff(y)

    Mdiag = np.zeros(N)
    Mdiag[:-1] += ell / 3.0
    Mdiag[1:] += ell / 3.0
    Moff = ell / 6.0
    Kdiag = np.zeros(N)
    Kdiag[:-1] += 1.0 / ell
    Kdiag[1:] += 1.0 / ell
    Koff = -1.0 / ell

    mid = 0.5 * (h[:-1] + h[1:])
    dev = _GAUSS3_OFF * (h[1:] - h[:-1])
    mob = bulk_mobility if bulk_mobility is not None else \
        (lambda v: np.abs(v) ** params.n)
    mbar = _GAUSS3_W_END * (mob(mid - dev) + mob(mid + dev)) \
        + _GAUSS3_W_MID * mob(mid)
    Km_off = -mbar / ell
    Km_diag = np.zeros(N)
    Km_diag[:-1] += mbar / ell
    Km_diag[1:] += mbar / ell

    gm = (h[1] - h[0]) / (y[1] - y[0])
    gp = (h[-1] - h[-2]) / (y[-1] - y[-2])
    m_cl = cl_mobility if cl_mobility is not None else default_cl_mobility(params)
    mcl_m = mcl_scale[0] * m_cl(abs(gm))
    mcl_p = mcl_scale[1] * m_cl(abs(gp))

    size = 2 * N + 2
    ab = np.zeros((7, size))
    rhs = np.zeros(size)

    # force-identification rows (odd rows 1 + 2i)
    ab[2, 2:size - 1:2] = Mdiag                    # pi diagonal
    ab[0, 4:size - 1:2] = Moff                     # pi super
    ab[4, 2:size - 3:2] = Moff                     # pi sub
    ab[3, 1:size - 2:2] = -tau * Kdiag             # hdot diagonal
    ab[1, 3:size - 2:2] = -tau * Koff              # hdot super
    ab[5, 1:size - 4:2] = -tau * Koff              # hdot sub
    ab[4, 0] = 1.0                                 # zeta- in row 1
    ab[1, size - 1] = 1.0                          # zeta+ in row 2N-1
    slope = np.diff(h) / ell
    Kh = np.zeros(N)
    Kh[:-1] -= slope
    Kh[1:] += slope
    rhs[1:size - 2:2] = Kh
    rhs[1] += 0.5 * abs(gm)
    rhs[size - 3] += 0.5 * abs(gp)

    # gradient-flow rows (even rows 2 + 2i)
    ab[4, 1:size - 2:2] = Mdiag                    # hdot diagonal
    ab[2, 3:size - 2:2] = Moff                     # hdot super
    ab[6, 1:size - 4:2] = Moff                     # hdot sub
    ab[3, 2:size - 1:2] = Km_diag                  # pi diagonal
    ab[1, 4:size - 1:2] = Km_off                   # pi super
    ab[5, 2:size - 3:2] = Km_off                   # pi sub

    # contact-line rows (first and last)
    ab[3, 0] = mcl_m
    ab[2, 1] = 1.0                                 # hdot_0
    ab[3, size - 1] = mcl_p
    ab[5, size - 3] = 1.0                          # hdot_{N-1}
    return ab, rhs


def _scaled_solve(ab, rhs):
    """Symmetric Jacobi equilibration, then the verified banded solve.

    Scaling by the inverse square roots of the row inf-norms keeps the
    matrix symmetric and drops its condition number by several orders,
    which keeps pivoting roundoff out of the computed rates.
    """
    size = ab.shape[1]
    row_norm = np.zeros(size)
    for r in range(7):
        off = 3 - r
        j0, j1 = max(0, off), min(size, size + off)
        rows = slice(j0 - off, j1 - off)
        np.maximum(row_norm[rows], np.abs(ab[r, j0:j1]), out=row_norm[rows])
    row_norm[row_norm == 0.0] = 1.0
    s = 1.0 / np.sqrt(row_norm)
    ab_s = np.zeros_like(ab)
    for r in range(7):
        off = 3 - r
        j0, j1 = max(0, off), min(size, size + off)
        ab_s[r, j0:j1] = ab[r, j0:j1] * s[j0:j1] * s[j0 - off:j1 - off]
    x = solve_banded((3, 3), ab_s, rhs * s)
    return x * s


def _reflect_solution(x, N):
    """Reflection i -> N-1-i on the interleaved unknown vector."""
    out = np.empty_like(x)
    out[0] = x[-1]
    out[-1] = x[0]
    out[1:2 * N + 1:2] = x[1:2 * N + 1:2][::-1]
    out[2:2 * N + 1:2] = x[2:2 * N + 1:2][::-1]
    return out


def _is_mirror_symmetric(y, h):
    return np.array_equal(h, h[::-1]) and np.array_equal(y, -y[::-1])


def assemble_and_solve_step(state: TransientState, params, cfg: StepConfig,
                            bulk_mobility=None, cl_mobility=None,
                            enforce_advancing=True):
    """Assemble and solve one saddle system; returns (hdot, DualForce).

    Mobilities are evaluated explicitly from the current state; the
    overrides exist for diagnostics (e.g. frozen bulk m = 0).  For a
    mirror-symmetric state the solution is averaged with its own
    reflection: the system commutes with the reflection, so this removes
    the pivot-order roundoff from the odd subspace and keeps even data
    exactly even for all time.

    In complete wetting the frictional law is one-sided: receding needs
    zero contact angle, so the contact-line mobility only dissipates in
    advance.  If the unconstrained solve returns a positive contact
    force (front rate hdot < 0 at a front, which happens when an element
    under-resolves a vanishing-angle touchdown), the complementarity
    branch pins that front, i.e. the system is re-solved with zero
    contact-line mobility there, giving hdot = 0 and a momentarily
    static front.  Disable with enforce_advancing=False to inspect the
    raw saddle solution.
    """
    y = state.nodes
    h = state.heights
    N = y.size
    mirror = _is_mirror_symmetric(y, h)

    def solve_with(mcl_scale):
        ab, rhs = _build_saddle(y, h, cfg.tau, params, bulk_mobility,
                                cl_mobility, mcl_scale)
        x = _scaled_solve(ab, rhs)
        if mirror and mcl_scale[0] == mcl_scale[1]:
            x = 0.5 * (x + _reflect_solution(x, N))
        return x

    x = solve_with((1.0, 1.0))
    frozen = (False, False)
    if enforce_advancing and (x[0] > 0.0 or x[-1] > 0.0):
        frozen = (x[0] > 0.0, x[-1] > 0.0)
        x = solve_with((0.0 if frozen[0] else 1.0, 0.0 if frozen[1] else 1.0))
    hdot = x[1:2 * N + 1:2]
    pi = x[2:2 * N + 1:2]
    zeta = (float(x[0]), float(x[-1]))
    grid = Grid1D(y)
    force = DualForce(Profile(grid, pi), zeta)
    force.frozen = frozen
    return Profile(grid, hdot), force


def reconstruct_front_velocity(state: TransientState, force: DualForce,
                               hdot, cfg: StepConfig | None = None,
                               params=None):
    """Front speeds from the kinematic identity hdot + sdot h_y = 0.

    Uses the one-sided P1 slope on the last element.  When params is
    given the closed-form law sdot = +-d^(-1/alpha)|h_y|^(2/alpha) is
    evaluated as well and returned for cross-checking.
    """
    cfg = cfg or StepConfig()
    gm, gp = state.contact_slopes()
    hd = hdot.values if isinstance(hdot, Profile) else np.asarray(hdot)
    out = []
    for g, hval in ((gm, hd[0]), (gp, hd[-1])):
        if abs(g) < cfg.theta_clamp:
            if abs(hval) > 1e-14:
                raise ZeroSlopeError(
                    "contact slope below clamp with nonzero rate at the front")
            out.append(0.0)
        else:
            out.append(-hval / g)
    sm, sp = out
    if params is not None:
        d_eff = _friction_strength(params)
        law = (-d_eff ** (-1.0 / params.alpha) * abs(gm) ** (2.0 / params.alpha),
               +d_eff ** (-1.0 / params.alpha) * abs(gp) ** (2.0 / params.alpha))
        return (sm, sp), law
    return (sm, sp)


def is_receding(sdot, tol=1e-9):
    """Advancing fronts have sdot- <= 0 <= sdot+ up to roundoff."""
    sm, sp = sdot
    scale = 1.0 + abs(sm) + abs(sp)
    return sp < -tol * scale or sm > tol * scale


def ale_update(state: TransientState, sdot, hdot, tau):
    """Advance heights and front positions by one linear-ALE step.

    The material rate at each node is Hdot = hdot + h_y * xidot with
    the linear mesh velocity xidot interpolating (sdot-, sdot+); at the
    contact nodes Hdot = 0 exactly by the kinematic construction, so
    the endpoint heights remain exactly zero.

    Heights advance by forward Euler in the conservative variable
    L * H (L = s+ - s-, the reference mass density), i.e.
    H+ = H + tau (L / L+) Hdot.  Together with the nodal-gradient
    convention this makes the trapezoid mass budget close exactly: the
    rate identity L' sum(w H) + L sum(w Hdot) = 0 holds to solver
    residual, and the conservative form has no geometric cross term.
    """
    sm_dot, sp_dot = sdot
    new_sm = state.s_minus + tau * sm_dot
    new_sp = state.s_plus + tau * sp_dot
    if not new_sp > new_sm:
        raise IntervalCollapseError("wetted interval collapsed")
    hd = hdot.values if isinstance(hdot, Profile) else np.asarray(hdot)
    y = state.nodes
    grad = nodal_gradient(y, state.heights)
    cdot = 0.5 * (sm_dot + sp_dot)
    xidot = cdot + state.offsets * (sp_dot - sm_dot)
    Hdot = hd + grad * xidot
    Hdot[0] = 0.0
    Hdot[-1] = 0.0
    stretch = (state.s_plus - state.s_minus) / (new_sp - new_sm)
    new_h = state.heights + (tau * stretch) * Hdot
    new_h[0] = 0.0
    new_h[-1] = 0.0
    if np.any(new_h[1:-1] <= 0.0):
        raise NonPositiveHeightError("height became non-positive in the interior")
    return TransientState(
        t=state.t + tau, s_minus=new_sm, s_plus=new_sp,
        offsets=state.offsets, heights=new_h, s_dot=(sm_dot, sp_dot),
    )


# --------------------------------------------------------------------------
# initial data

def fig1_bump(y):
    """Smooth symmetric bump with mass 2 and support [-1, 1]."""
    y = np.asarray(y, dtype=float)
    return 3.75 * ((1.0 + y) * (1.0 - y) - 0.4 * (1.0 + np.cos(np.pi * y)))


def corner(y):
    """Corner datum 2 (1 - |y|); P1-exact, used without smoothing."""
    y = np.asarray(y, dtype=float)
    return 2.0 * (1.0 - np.abs(y))


PRESETS = {"fig1_bump": fig1_bump, "corner": corner}


def symmetric_offsets(num):
    """Cosine-graded midpoint offsets in [-1/2, 1/2], mirror-antisymmetric
    by construction: offsets[num-1-i] == -offsets[i] bitwise."""
    half = -0.5 * np.cos(np.linspace(0.0, np.pi, num))[:num // 2]
    if num % 2:
        return np.concatenate((half, [0.0], -half[::-1]))
    return np.concatenate((half, -half[::-1]))


def initial_state(datum="fig1_bump", cfg: StepConfig | None = None,
                  s_minus=-1.0, s_plus=1.0):
    """Build a TransientState from a named preset or a callable datum."""
    cfg = cfg or StepConfig()
    fn = PRESETS[datum] if isinstance(datum, str) else datum
    offsets = symmetric_offsets(cfg.mesh_nodes)
    c = 0.5 * (s_minus + s_plus)
    nodes = c + offsets * (s_plus - s_minus)
    h = np.asarray(fn(nodes), dtype=float)
    h[0] = 0.0
    h[-1] = 0.0
    return TransientState(t=0.0, s_minus=s_minus, s_plus=s_plus,
                          offsets=offsets, heights=h)


def rescaled_profile(state: TransientState, x_nodes=None):
    """Self-similar view H(t, x) = s h(t, s x) on x in [0, 1].

    Uses the half-width s = (s+ - s-)/2 around the midpoint, which for
    the symmetric data used here is the front position s(t).
    """
    if x_nodes is None:
        x_nodes = np.linspace(0.0, 1.0, 257)
    x_nodes = np.asarray(x_nodes, dtype=float)
    s = 0.5 * (state.s_plus - state.s_minus)
    c = 0.5 * (state.s_plus + state.s_minus)
    vals = s * np.interp(c + s * x_nodes, state.nodes, state.heights)
    vals[x_nodes >= 1.0] = 0.0
    return Profile(Grid1D(x_nodes), vals)


# --------------------------------------------------------------------------
# time loop

@dataclass
class RunResult:
    times: np.ndarray
    s_minus: np.ndarray
    s_plus: np.ndarray
    mass: np.ndarray
    energy: np.ndarray
    sdot_plus: np.ndarray
    law_gap: np.ndarray
    snapshots: list
    final: TransientState
    stats: dict = field(default_factory=dict)

    @property
    def s(self):
        """Half-width front position for symmetric runs."""
        return 0.5 * (self.s_plus - self.s_minus)


def run(initial: TransientState, params, cfg: StepConfig, t_end,
        snapshot_times=(), observer=None, max_steps=2_000_000):
    """March the gradient-flow scheme to t_end.

    A step is accepted only if the interior stays positive, the front
    does not recede, and the energy does not increase (beyond a 1e-12
    relative slack); otherwise tau halves and the step repeats.  After
    acceptance tau re-grows by cfg.tau_growth, capped at
    cfg.tau_max_fraction * t.  Snapshots store the rescaled profile at
    the first accepted step past each requested time.
    """
    state = initial
    tau = cfg.tau
    snapshot_times = sorted(snapshot_times)
    snap_idx = 0
    rec = {"t": [state.t], "sm": [state.s_minus], "sp": [state.s_plus],
           "mass": [state.mass()], "energy": [state.energy()], "sdp": [0.0],
           "lawgap": [0.0]}
    snapshots = []
    stats = {"accepted": 0, "rejected_energy": 0, "rejected_positivity": 0,
             "rejected_receding": 0, "front_freezes": 0, "energy_violations": 0,
             "max_asymmetry": 0.0, "max_mass_step_change": 0.0,
             "min_tau": tau, "max_law_gap": 0.0}

    energy = state.energy()
    mass0 = state.mass()
    steps = 0
    while state.t < t_end and steps < max_steps:
        steps += 1
        step_tau = min(tau, t_end - state.t)
        if cfg.front_cfl:
            # stability limit of the explicit contact-line coupling:
            # the front may cross at most front_cfl smallest elements
            y = state.nodes
            ell_front = min(y[1] - y[0], y[-1] - y[-2])
            speed = max(abs(state.s_dot[0]), abs(state.s_dot[1]))
            if speed > 0.0:
                step_tau = min(step_tau, cfg.front_cfl * ell_front / speed)
        trial_cfg = replace(cfg, tau=step_tau)
        def reject(kind):
            nonlocal tau
            stats[kind] += 1
            tau = 0.5 * step_tau
            stats["min_tau"] = min(stats["min_tau"], tau)
            if tau < 1e-14 * t_end:
                raise StepSizeUnderflowError(
                    f"step size underflow at t = {state.t:.6g}")

        try:
            hdot, force = assemble_and_solve_step(state, params, trial_cfg)
            if any(force.frozen):
                stats["front_freezes"] += 1
            sdot, law = reconstruct_front_velocity(
                state, force, hdot, trial_cfg, params=params)
            sdot = (sdot[0] if not force.frozen[0] else 0.0,
                    sdot[1] if not force.frozen[1] else 0.0)
            if is_receding(sdot):
                raise RecedingFrontError("receding front step rejected")
            new_state = ale_update(state, sdot, hdot, step_tau)
        except RecedingFrontError:
            reject("rejected_receding")
            continue
        except (NonPositiveHeightError, IntervalCollapseError):
            reject("rejected_positivity")
            continue

        new_energy = new_state.energy()
        if new_energy > energy + 1e-12 * abs(energy):
            reject("rejected_energy")
            continue

        # accepted
        new_mass = new_state.mass()
        stats["max_mass_step_change"] = max(
            stats["max_mass_step_change"], abs(new_mass - rec["mass"][-1]))
        stats["max_asymmetry"] = max(stats["max_asymmetry"], new_state.asymmetry())
        if not any(force.frozen):
            stats["max_law_gap"] = max(
                stats["max_law_gap"],
                abs(sdot[1] - law[1]) / (1.0 + abs(law[1])))
        state, energy = new_state, new_energy
        stats["accepted"] += 1

        rec["t"].append(state.t)
        rec["sm"].append(state.s_minus)
        rec["sp"].append(state.s_plus)
        rec["mass"].append(new_mass)
        rec["energy"].append(new_energy)
        rec["sdp"].append(sdot[1])
        rec["lawgap"].append(abs(sdot[1] - law[1]) if not any(force.frozen)
                             else np.nan)

        while snap_idx < len(snapshot_times) and state.t >= snapshot_times[snap_idx]:
            snapshots.append((state.t, rescaled_profile(state), state.profile()))
            snap_idx += 1
        if observer is not None:
            observer(state, {"hdot": hdot, "force": force, "sdot": sdot})

        tau = tau * cfg.tau_growth
        if cfg.tau_max_fraction:
            tau = min(tau, cfg.tau_max_fraction * max(state.t, cfg.tau))

    if state.t < t_end:
        raise StepSizeUnderflowError(f"step budget exhausted at t = {state.t:.6g}")

    energies = np.array(rec["energy"])
    stats["energy_violations"] = int(np.sum(
        np.diff(energies) > 1e-12 * np.abs(energies[:-1])))
    stats["mass_drift_rel"] = abs(rec["mass"][-1] - mass0) / abs(mass0)
    return RunResult(
        times=np.array(rec["t"]), s_minus=np.array(rec["sm"]),
        s_plus=np.array(rec["sp"]), mass=np.array(rec["mass"]),
        energy=energies, sdot_plus=np.array(rec["sdp"]),
        law_gap=np.array(rec["lawgap"]),
        snapshots=snapshots, final=state, stats=stats,
    )
