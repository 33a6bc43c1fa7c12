"""Users -> hovering points -> one trajectory per planning method.

    python demos/mission.py [n_hovering_points]
"""

import sys

from swarmcover import (
    A2AParams,
    A2GParams,
    MissionConfig,
    build_grid,
    generate_users,
    plan_mission,
    random_pillars,
    select_hovering_plan,
    swarm_geometry,
)
from swarmcover.planner import METHODS

n = int(sys.argv[1]) if len(sys.argv) > 1 else 4
geo = swarm_geometry(A2AParams(), A2GParams(), altitude_m=150.0)
print(f"swarm radius {geo.swarm_radius_m:.0f} m = A2A {geo.a2a_radius_m:.0f} m + "
      f"T-UAV footprint {geo.tuav_cover_radius_m:.0f} m")

# a smaller area than the default preset keeps this demo fast; scale r_s with it
grid = build_grid((600, 600, 200), 20, (120, 180))
obstacles = random_pillars(grid, 90, (0, 200), seed=1)
users = generate_users(7, (600, 600), count=40)
r_s = geo.swarm_radius_m * 600 / 2000
plan = select_hovering_plan(users, r_s, [n], coverage_threshold=0.9, seed=3)
print(f"{plan.n_points} hovering points cover {plan.coverage_rate:.0%} of {users.count} users (r_s {r_s:.0f} m)")

config = MissionConfig(episodes_per_leg=20000, seed=5)
for method in METHODS:
    mission = plan_mission(grid, obstacles, plan, method=method, config=config)
    status = f"{mission.loss_m:9.0f} m" if mission.feasible else "  infeasible"
    print(f"  {method:14s} {status}  legs {mission.leg_steps}")
