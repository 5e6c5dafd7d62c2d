"""dropspread: droplet spreading with contact-line friction.

Solvers for the thin-film free boundary problem h_t + (h^n h_yyy)_y = 0
with the frictional contact-line law (h_y)^2 = d (+-sdot)^alpha in
complete wetting: a transient P1/ALE simulator driven by the problem's
gradient-flow structure, a shooting solver for the balanced
self-similar profiles, quasi-self-similar long-time predictions for
strong and weak friction, and a harness that measures how transient
runs converge to the predicted profiles and spreading laws.
"""

from . import asymptotics, core, harness, selfsimilar, transient
from .core import (
    BALANCED,
    STRONG,
    WEAK,
    Grid1D,
    ProblemParams,
    Profile,
    ScalingFactors,
    classify_regime,
    critical_alpha,
    integrate,
    normalize,
    normalize_balanced,
    rescale_back,
    solve_banded,
)
from .selfsimilar import SelfSimilarSolution, ShootingConfig, explicit_n1

__all__ = [
    "asymptotics", "core", "harness", "selfsimilar", "transient",
    "BALANCED", "STRONG", "WEAK",
    "Grid1D", "ProblemParams", "Profile", "ScalingFactors",
    "classify_regime", "critical_alpha", "integrate", "normalize",
    "normalize_balanced", "rescale_back", "solve_banded",
    "SelfSimilarSolution", "ShootingConfig", "explicit_n1",
]

__version__ = "0.1.0"
