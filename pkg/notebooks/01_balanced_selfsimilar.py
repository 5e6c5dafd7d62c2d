"""Balanced self-similar droplet profiles.

At the critical friction exponent alpha = 4/(n+3) the spreading droplet
has an exact self-similar shape: s(t) = ((n+4) B^2 t)^(1/(n+4)) with a
profile H solving H^(n-1) H''' = B^2 x on the half-drop.  This script
walks through the closed-form n = 1 family, the generic shooting solver,
and the strong-friction wedge limit.
"""

import numpy as np

from dropspread import selfsimilar as ss

# --- the explicit n = 1 family ---------------------------------------------
# D = 0 is the zero-contact-angle source solution (the Smyth-Hill profile),
# large D approaches the wedge (3/2)(1 - x^2) with amplitude B ~ 3/D.
print("explicit n = 1 family:")
for D in (0.0, 0.5, 1.0, 2.0, 10.0):
    sol = ss.explicit_n1(D)
    print(f"  D={D:6.2f}  B={sol.B:12.8f}  H(0)={sol.evaluate(0.0):10.6f}  "
          f"s(t) = ({sol.s_law[0]:.4f} t)^0.2-ish -> coeff {sol.s_law[0]:.6f}")

# --- the generic solver reproduces the oracle ------------------------------
sol = ss.solve(1.0, 1.0)
ref = ss.explicit_n1(1.0)
x = np.linspace(0.0, 1.0, 501)
print(f"\nshooting vs closed form at D=1: |dB| = {abs(sol.B - ref.B):.2e}, "
      f"sup profile error = {np.max(np.abs(sol.evaluate(x) - ref.evaluate(x))):.2e}")

# --- n = 2 has no closed form; the solver still applies --------------------
for D in (0.0, 1.0, 1e3):
    sol2 = ss.solve(2.0, D)
    print(f"n=2, D={D:6g}:  B = {sol2.B:.8f}   H(0) = {sol2.evaluate(0.0):.6f}   "
          f"residuals {sol2.residuals}")

# --- the wedge limit --------------------------------------------------------
# D B_D^alpha -> 3 and H_D -> (3/2)(1 - x^2) as D -> infinity
print("\nwedge limit, n = 2 (alpha = 4/5):")
for D in (1e2, 1e3, 1e4):
    sol2 = ss.solve(2.0, D)
    print(f"  D={D:8.0f}  D B^a = {D * sol2.B ** 0.8:.8f}   "
          f"H(0) - 3/2 = {sol2.evaluate(0.0) - 1.5:+.2e}")

try:
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for D in (0.0, 0.3, 1.0, 3.0, 10.0):
        s = ss.solve(2.0, D)
        ax.plot(x, s.evaluate(x), label=f"D={D:g}")
    ax.plot(x, 1.5 * (1 - x ** 2), "k--", label="wedge limit")
    ax.set(xlabel="x", ylabel="H", title="balanced profiles, n = 2")
    ax.legend()
    fig.tight_layout()
    fig.savefig("balanced_profiles_n2.png", dpi=150)
    print("\nwrote balanced_profiles_n2.png")
except ImportError:
    pass
