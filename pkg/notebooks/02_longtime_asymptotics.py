"""Quasi-self-similar long-time predictions away from the balanced case.

For alpha below 4/(n+3) the contact line dominates: the droplet becomes
a wedge (3/2)(1-x^2) spreading like t^(alpha/(alpha+4)), with a global
correction profile H1 decaying like t^-(1-gamma(n+4)).  Above the
critical exponent the droplet follows the zero-contact-angle profile
with s ~ t^(1/(n+4)); the correction is global for n < 3/2 and reduces
to an inner traveling wave matched to the outer profile for n > 3/2.
"""

import numpy as np

from dropspread import asymptotics as asy
from dropspread.core import ProblemParams

# --- strong friction ---------------------------------------------------------
pred = asy.strong_prediction(ProblemParams(n=1.0, alpha=0.5, D=1.0))
print("strong friction, n = 1, alpha = 1/2:")
print(f"  gamma = {pred.gamma:.6f} (= 1/9), front s0(t) = {pred.s0_prefactor:.6f} t^gamma")
print(f"  C1 = {pred.C1:.12f} (= 1/10)")
print(f"  correction H1(0) = {pred.H1_dense(0.0):.10f} (= 1/120)")
print(f"  modulation omega(t) = {pred.omega_law[0]:.4f} t^{pred.omega_law[1]:.4f}")
print(f"  next-to-leading front correction: {pred.s1_order}")

pred2 = asy.strong_prediction(ProblemParams(n=2.0, alpha=0.5, D=1.0))
print(f"strong friction, n = 2: C1 = {pred2.C1:.12f} (= 5/6 - log 2)")

# --- weak friction, closed-form mobility ------------------------------------
predw = asy.weak_prediction(ProblemParams(n=1.0, alpha=2.0, D=1.0))
print("\nweak friction, n = 1, alpha = 2:")
print(f"  B0^2 = {predw.B0 ** 2:.10f} (= 45), s0(t) = ({predw.s0_prefactor ** 5:.1f} t)^(1/5)")
print(f"  beta = {predw.beta} (= 2/5), H1(0) = {predw.H1_dense(0.0):.6f} (= -3/8)")

# --- weak friction, fractional mobility: quadrature + coercive BVP ----------
predf = asy.weak_prediction(ProblemParams(n=1.25, alpha=2.0, D=1.0))
print("\nweak friction, n = 5/4, alpha = 2 (v/w decomposition):")
print(f"  B0 = {predf.B0:.8f}, C2 = {predf.C2:.8f}, C6 = {predf.parts['C6']:.8f}")
print(f"  contact slope of H1 = {predf.parts['slope_at_contact']:.10f} "
      f"(normalized to -B0^-alpha = {-predf.B0 ** -2.0:.10f})")

# --- weak friction beyond n = 3/2: inner traveling wave ----------------------
tw = asy.inner_traveling_wave(2.0, 2.0, 1.0)
print("\ninner traveling wave, n = 2, unit front speed:")
print(f"  a_in = {tw.a_in:.8f}, curvature at xi_max: {tw.Fpp_at_end:.2e}")
xs = np.geomspace(tw.xi_max / 1000.0, tw.xi_max / 100.0, 50)
slope = np.polyfit(np.log(xs), np.log(tw.dense(xs)[0]), 1)[0]
print(f"  far-field growth exponent {slope:.4f} (3/n = 1.5)")

predn2 = asy.weak_prediction(ProblemParams(n=2.0, alpha=2.0, D=1.0), xi_max=1e5)
x = np.linspace(0.0, 1.0, 9)
vals = asy.matched_composite(predn2, predn2.parts["inner_wave"], 1e6, x)
print("  matched composite at t = 1e6:")
for xi, vi in zip(x, vals):
    print(f"    x={xi:4.2f}  H={vi:.6f}")
