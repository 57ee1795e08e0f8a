"""In d = 3 with 2 <= p < 3 the regular part itself is singular.

The fitted exponent of f = u - q G near the origin is compared with 2 - p and
the start-radius check shows where the one-term local model stops being enough.
"""

from pointnls.model import Params
from pointnls.radial_ode import start_radius_check
from pointnls.shooting import match_decay
from pointnls.verify import weak_singularity_fit

for p in (2.0, 2.25, 2.5):
    params = Params(3, 1, p, 1.0)
    bp = match_decay(params, 1.0)[0]
    fit = weak_singularity_fit(bp.profile, q=1.0)
    exponent = fit.exponent if isinstance(fit.exponent, float) else "log"
    print(f"p={p}: a = {bp.a:.8f}  exponent {exponent}  coefficient {fit.coefficient:.6e} "
          f"(predicted {fit.predicted:.6e})")
    change, ok = start_radius_check(params, 1.0, bp.a)
    print(f"       halving r0 moves f by {change:.2e} -> {'accepted' if ok else 'rejected'}")
