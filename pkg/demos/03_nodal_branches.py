"""Sign-changing singular solutions at alpha = 0, lambda = 1.

Here lambda < lambda_alpha, so no positive solution exists, yet solutions with
one, two and three zeros are found on the line a = beta q.
"""

from pointnls.model import Params, ParameterError, lambda_alpha
from pointnls.shooting import ground_state_shoot, solve_fixed_alpha

params = Params(2, 1, 3.0, 1.0, 0.0)
print(f"lambda = 1, lambda_alpha = {lambda_alpha(params):.10g}")
try:
    ground_state_shoot(params)
except ParameterError as exc:
    print("ground state:", exc)

for k in (1, 2, 3):
    bp = solve_fixed_alpha(params, k)
    print(f"k={k}: q = {bp.q:.10f}  f(0) = {bp.f0:+.10f}  zeros = {bp.zero_count}  "
          f"relation residual = {bp.residuals['relation']:.1e}")
