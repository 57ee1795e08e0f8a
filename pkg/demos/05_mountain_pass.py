"""Mountain-pass geometry of the action along random directions (alpha = 1)."""

from pointnls.model import Params
from pointnls.variational import discretize, mountain_pass_probe, random_directions

params = Params(2, 1, 3.0, 1.0, 1.0)
disc = discretize(params)
dirs = random_directions(disc, 64, seed=0)
rep = mountain_pass_probe(params, dirs, [0.001, 0.01, 0.1, 0.5, 1.0, 2.0], seed=0)
for rho, m in zip(rep.radii, rep.min_action):
    print(f"min S on the sphere of radius {rho:g}: {m:.6g}")
print(f"rho* = {rep.rho_star}; R* ranges over [{min(rep.r_star):.4g}, {max(rep.r_star):.4g}]")
print(f"lowest ray maximum (mountain-pass bound): {rep.mountain_pass_level:.6f}")
